#include "srtg/harness/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace srtg::harness {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoints are little-endian");

constexpr std::string_view kMagic = "SRTGCKPT";
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    out_.append(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void u64(std::uint64_t v) { pod(v); }
  void str(std::string_view s) {
    u64(s.size());
    out_.append(s);
  }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  void arrays(const NamedArrays& a) {
    u64(a.size());
    for (const auto& [name, values] : a) {
      str(name);
      doubles(values);
    }
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <typename T>
  T pod() {
    T v{};
    take(&v, sizeof(T));
    return v;
  }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::string str() {
    const auto n = count(1);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<double> doubles() {
    std::vector<double> v(count(sizeof(double)));
    take(v.data(), v.size() * sizeof(double));
    return v;
  }
  NamedArrays arrays() {
    NamedArrays a(count(1));
    for (auto& [name, values] : a) {
      name = str();
      values = doubles();
    }
    return a;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::size_t count(std::size_t unit) {
    const auto n = u64();
    if (n > (in_.size() - pos_) / unit) throw CheckpointError("checkpoint length field overruns");
    return static_cast<std::size_t>(n);
  }
  void take(void* dst, std::size_t n) {
    if (n > in_.size() - pos_) throw CheckpointError("checkpoint ends early");
    std::memcpy(dst, in_.data() + pos_, n);
    pos_ += n;
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::uint32_t checksum(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks to stay portable.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

void copy_into(const std::string& what, std::span<double> dst, const std::vector<double>& src) {
  if (dst.size() != src.size()) {
    throw CheckpointError(what + ": checkpoint holds " + std::to_string(src.size()) +
                          " values, model expects " + std::to_string(dst.size()));
  }
  std::copy(src.begin(), src.end(), dst.begin());
}

}  // namespace

Checkpoint capture(backbone::Network& net, const Sgd* optimizer, const History& history,
                   std::string config) {
  Checkpoint ck;
  ck.config = std::move(config);
  ck.epoch = history.records.size();
  for (auto& [name, p] : net.named_parameters()) {
    ck.params.emplace_back(name, std::vector<double>(p->data().begin(), p->data().end()));
  }
  for (auto& [name, b] : net.named_buffers()) ck.buffers.emplace_back(name, *b);
  if (optimizer) ck.velocity = optimizer->velocity();
  ck.history = history;
  return ck;
}

void restore(const Checkpoint& ck, backbone::Network& net, Sgd* optimizer) {
  auto params = net.named_parameters();
  auto buffers = net.named_buffers();
  if (params.size() != ck.params.size() || buffers.size() != ck.buffers.size()) {
    throw CheckpointError("checkpoint does not match the network layout");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].first != ck.params[i].first) {
      throw CheckpointError("parameter '" + params[i].first + "' missing from checkpoint (found '" +
                            ck.params[i].first + "')");
    }
    copy_into(params[i].first, params[i].second->data(), ck.params[i].second);
  }
  for (std::size_t i = 0; i < buffers.size(); ++i) {
    if (buffers[i].first != ck.buffers[i].first) {
      throw CheckpointError("buffer '" + buffers[i].first + "' missing from checkpoint");
    }
    copy_into(buffers[i].first, *buffers[i].second, ck.buffers[i].second);
  }
  if (optimizer) {
    auto& v = optimizer->velocity();
    if (ck.velocity.empty()) {
      for (auto& row : v) std::fill(row.begin(), row.end(), 0.0);
      return;
    }
    if (v.size() != ck.velocity.size()) throw CheckpointError("momentum layout mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) copy_into("momentum", v[i], ck.velocity[i]);
  }
}

std::string encode(const Checkpoint& ck) {
  Writer w;
  w.bytes().append(kMagic);
  w.pod(kVersion);
  w.str(ck.config);
  w.u64(ck.epoch);
  w.arrays(ck.params);
  w.arrays(ck.buffers);
  w.u64(ck.velocity.size());
  for (const auto& v : ck.velocity) w.doubles(v);
  w.u64(ck.history.gate_layers.size());
  for (const auto& l : ck.history.gate_layers) w.str(l);
  w.u64(ck.history.records.size());
  for (const auto& r : ck.history.records) {
    w.u64(r.epoch);
    for (double v : {r.train_loss, r.train_top1, r.val_loss, r.val_top1, r.val_top5, r.lr}) w.pod(v);
    w.doubles(r.gate_open_rates);
  }
  const std::uint32_t crc = checksum(w.bytes());
  w.pod(crc);
  return std::move(w.bytes());
}

Checkpoint decode(std::string_view bytes) {
  const std::size_t header = kMagic.size() + sizeof(std::uint32_t);
  const std::size_t prefix = std::min(bytes.size(), kMagic.size());
  if (bytes.empty() || bytes.substr(0, prefix) != kMagic.substr(0, prefix)) {
    throw CheckpointError("not a checkpoint file");
  }
  if (bytes.size() < header + sizeof(std::uint32_t)) throw ChecksumError("checkpoint truncated");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + kMagic.size(), sizeof version);
  if (version != kVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) + ", expected " +
                       std::to_string(kVersion));
  }
  const std::string_view body = bytes.substr(0, bytes.size() - sizeof(std::uint32_t));
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof stored);
  if (checksum(body) != stored) throw ChecksumError("checkpoint checksum mismatch");

  Reader r(body.substr(header));
  Checkpoint ck;
  ck.config = r.str();
  ck.epoch = r.u64();
  ck.params = r.arrays();
  ck.buffers = r.arrays();
  ck.velocity.resize(r.u64());
  for (auto& v : ck.velocity) v = r.doubles();
  ck.history.gate_layers.resize(r.u64());
  for (auto& l : ck.history.gate_layers) l = r.str();
  ck.history.records.resize(r.u64());
  for (auto& rec : ck.history.records) {
    rec.epoch = r.u64();
    for (double* v : {&rec.train_loss, &rec.train_top1, &rec.val_loss, &rec.val_top1,
                      &rec.val_top5, &rec.lr}) {
      *v = r.pod<double>();
    }
    rec.gate_open_rates = r.doubles();
  }
  if (!r.done()) throw CheckpointError("trailing bytes in checkpoint");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const std::string bytes = encode(ck);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot write " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw CheckpointError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

}  // namespace srtg::harness
