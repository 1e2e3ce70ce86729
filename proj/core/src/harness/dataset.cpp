#include "srtg/harness/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace srtg::harness {

namespace {

static_assert(std::endian::native == std::endian::little, "dataset files are little-endian");

constexpr std::array<char, 8> kMagic{'S', 'R', 'T', 'G', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF64 = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw DatasetError(path.string() + ": truncated header");
  }
  return v;
}

}  // namespace

std::size_t Dataset::clip_size() const {
  return shape.channels * shape.frames * shape.height * shape.width;
}

std::span<const double> Dataset::clip(std::size_t i) const {
  if (i >= size()) throw DatasetError("clip index " + std::to_string(i) + " out of range");
  return std::span<const double>(clips).subspan(i * clip_size(), clip_size());
}

std::span<double> Dataset::clip(std::size_t i) {
  if (i >= size()) throw DatasetError("clip index " + std::to_string(i) + " out of range");
  return std::span<double>(clips).subspan(i * clip_size(), clip_size());
}

void Dataset::validate() const {
  if (clip_size() == 0) throw DatasetError("clip shape has a zero extent");
  if (num_classes == 0) throw DatasetError("dataset needs at least one class");
  if (clips.size() != labels.size() * clip_size()) {
    throw DatasetError("clip data holds " + std::to_string(clips.size()) + " values, expected " +
                       std::to_string(labels.size() * clip_size()));
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
      throw DatasetError("label " + std::to_string(l) + " outside [0, " +
                         std::to_string(num_classes) + ")");
    }
  }
}

std::size_t centered_start(std::size_t source_frames, std::size_t frames) {
  return source_frames > frames ? (source_frames - frames) / 2 : 0;
}

Tensor make_batch(const Dataset& data, std::span<const std::size_t> indices,
                  std::span<const std::size_t> starts, std::size_t frames) {
  if (indices.empty()) throw DatasetError("empty batch");
  if (starts.size() != indices.size()) throw DatasetError("one window start per clip required");
  const auto& s = data.shape;
  if (frames == 0 || frames > s.frames) {
    throw DatasetError("window of " + std::to_string(frames) + " frames from clips of " +
                       std::to_string(s.frames));
  }
  const std::size_t plane = s.height * s.width;
  Tensor batch({indices.size(), s.channels, frames, s.height, s.width});
  auto out = batch.data();
  std::size_t o = 0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (starts[k] + frames > s.frames) throw DatasetError("window runs past the last frame");
    auto clip = data.clip(indices[k]);
    for (std::size_t c = 0; c < s.channels; ++c) {
      const double* src = clip.data() + (c * s.frames + starts[k]) * plane;
      std::copy(src, src + frames * plane, out.data() + o);
      o += frames * plane;
    }
  }
  return batch;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DatasetError("cannot write " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put(os, kVersion);
  put(os, kDtypeF64);
  put<std::uint64_t>(os, data.size());
  put<std::uint64_t>(os, data.shape.channels);
  put<std::uint64_t>(os, data.shape.frames);
  put<std::uint64_t>(os, data.shape.height);
  put<std::uint64_t>(os, data.shape.width);
  put<std::uint64_t>(os, data.num_classes);
  os.write(reinterpret_cast<const char*>(data.clips.data()),
           static_cast<std::streamsize>(data.clips.size() * sizeof(double)));
  for (int l : data.labels) put<std::int32_t>(os, l);
  if (!os) throw DatasetError("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DatasetError("cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DatasetError(path.string() + ": not a dataset file");
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kVersion) {
    throw DatasetError(path.string() + ": unsupported version " + std::to_string(version));
  }
  if (get<std::uint32_t>(is, path) != kDtypeF64) throw DatasetError(path.string() + ": dtype");
  Dataset d;
  const auto count = get<std::uint64_t>(is, path);
  d.shape.channels = get<std::uint64_t>(is, path);
  d.shape.frames = get<std::uint64_t>(is, path);
  d.shape.height = get<std::uint64_t>(is, path);
  d.shape.width = get<std::uint64_t>(is, path);
  d.num_classes = get<std::uint64_t>(is, path);
  if (d.clip_size() == 0) throw DatasetError(path.string() + ": zero clip extent");
  const auto start = is.tellg();
  is.seekg(0, std::ios::end);
  const auto available = static_cast<std::uint64_t>(is.tellg() - start);
  is.seekg(start);
  const std::uint64_t values = count * d.clip_size();
  if (available != values * sizeof(double) + count * sizeof(std::int32_t)) {
    throw DatasetError(path.string() + ": payload size does not match header");
  }
  d.clips.resize(values);
  is.read(reinterpret_cast<char*>(d.clips.data()),
          static_cast<std::streamsize>(values * sizeof(double)));
  d.labels.resize(count);
  for (auto& l : d.labels) l = get<std::int32_t>(is, path);
  d.validate();
  return d;
}

}  // namespace srtg::harness
