#include "srtg/harness/synthetic.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace srtg::harness {

namespace {

constexpr std::array<std::pair<long, long>, 8> kDirections{{
    {0, 1}, {1, 0}, {0, -1}, {-1, 0}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

long wrap(long v, std::size_t n) {
  const long m = static_cast<long>(n);
  return ((v % m) + m) % m;
}

}  // namespace

std::string_view to_string(MotionFamily f) {
  switch (f) {
    case MotionFamily::kTranslation: return "translation";
    case MotionFamily::kOscillation: return "oscillation";
    case MotionFamily::kReversed: return "reversed";
  }
  return "?";
}

MotionFamily motion_family_from_string(std::string_view s) {
  if (s == "translation") return MotionFamily::kTranslation;
  if (s == "oscillation") return MotionFamily::kOscillation;
  if (s == "reversed") return MotionFamily::kReversed;
  throw std::invalid_argument("unknown motion family '" + std::string(s) + "'");
}

void SyntheticSpec::validate() const {
  if (clip.channels == 0 || clip.frames == 0 || clip.height == 0 || clip.width == 0) {
    throw std::invalid_argument("synthetic clip shape has a zero extent");
  }
  if (num_classes < 2) throw std::invalid_argument("synthetic data needs at least 2 classes");
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    throw std::invalid_argument("noise must be finite and non-negative");
  }
  if (train_samples == 0 || val_samples == 0) {
    throw std::invalid_argument("both splits need at least one clip");
  }
  const std::size_t limit = family == MotionFamily::kReversed ? 2 * kDirections.size()
                                                              : kDirections.size();
  if (num_classes > limit) {
    throw std::invalid_argument(std::string(to_string(family)) + " supports at most " +
                                std::to_string(limit) + " classes");
  }
  if (family == MotionFamily::kReversed && num_classes % 2 != 0) {
    throw std::invalid_argument("reversed family needs an even class count");
  }
  if (family != MotionFamily::kOscillation && clip.frames < 2) {
    throw std::invalid_argument("motion needs at least 2 frames");
  }
}

std::mt19937_64 clip_rng(std::uint64_t seed, Split split, std::size_t index) {
  const auto idx = static_cast<std::uint64_t>(index);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(split == Split::kTrain ? 0x7121 : 0x7a1),
                    static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
  return std::mt19937_64(seq);
}

std::vector<double> base_frame(const ClipShape& shape, std::mt19937_64& rng) {
  const std::size_t h = shape.height, w = shape.width;
  std::vector<double> frame(shape.channels * h * w);
  std::uniform_real_distribution<double> background(0.0, 0.3);
  for (double& v : frame) v = background(rng);
  const std::size_t max_side = std::max<std::size_t>(1, std::min<std::size_t>({5, h, w}));
  std::uniform_int_distribution<std::size_t> side_dist(std::min<std::size_t>(3, max_side),
                                                       max_side);
  const std::size_t side = side_dist(rng);
  std::uniform_int_distribution<std::size_t> row(0, h - 1), col(0, w - 1);
  const std::size_t r0 = row(rng), c0 = col(rng);
  std::uniform_real_distribution<double> bright(0.7, 1.0);
  for (std::size_t c = 0; c < shape.channels; ++c) {
    const double v = bright(rng);
    for (std::size_t i = 0; i < side; ++i) {
      for (std::size_t j = 0; j < side; ++j) {
        frame[(c * h + (r0 + i) % h) * w + (c0 + j) % w] = v;
      }
    }
  }
  return frame;
}

std::pair<long, long> displacement(const SyntheticSpec& spec, int label, std::size_t t) {
  const long tt = static_cast<long>(t);
  switch (spec.family) {
    case MotionFamily::kTranslation: {
      const auto [dy, dx] = kDirections.at(static_cast<std::size_t>(label));
      return {dy * tt, dx * tt};
    }
    case MotionFamily::kReversed: {
      const auto [dy, dx] = kDirections.at(static_cast<std::size_t>(label / 2));
      return {dy * tt, dx * tt};
    }
    case MotionFamily::kOscillation: {
      const double phase = 2.0 * std::numbers::pi * label / static_cast<double>(spec.num_classes);
      const double arg = 2.0 * std::numbers::pi * static_cast<double>(t) /
                             static_cast<double>(spec.clip.frames) +
                         phase;
      return {0, std::lround(2.0 * std::sin(arg))};
    }
  }
  return {0, 0};
}

void render_clip(const SyntheticSpec& spec, int label, std::span<const double> frame0,
                 std::span<double> out) {
  const auto& s = spec.clip;
  const std::size_t h = s.height, w = s.width;
  for (std::size_t t = 0; t < s.frames; ++t) {
    const auto [dy, dx] = displacement(spec, label, t);
    for (std::size_t c = 0; c < s.channels; ++c) {
      double* dst = out.data() + ((c * s.frames + t) * h) * w;
      const double* src = frame0.data() + c * h * w;
      for (std::size_t i = 0; i < h; ++i) {
        const auto si = static_cast<std::size_t>(wrap(static_cast<long>(i) - dy, h));
        for (std::size_t j = 0; j < w; ++j) {
          dst[i * w + j] = src[si * w + static_cast<std::size_t>(wrap(static_cast<long>(j) - dx, w))];
        }
      }
    }
  }
}

void reverse_frames(const ClipShape& shape, std::span<double> clip) {
  const std::size_t plane = shape.height * shape.width;
  for (std::size_t c = 0; c < shape.channels; ++c) {
    double* base = clip.data() + c * shape.frames * plane;
    for (std::size_t a = 0, b = shape.frames - 1; a < b; ++a, --b) {
      std::swap_ranges(base + a * plane, base + (a + 1) * plane, base + b * plane);
    }
  }
}

Dataset generate_split(const SyntheticSpec& spec, Split split) {
  spec.validate();
  Dataset d;
  d.shape = spec.clip;
  d.num_classes = spec.num_classes;
  const std::size_t count = split == Split::kTrain ? spec.train_samples : spec.val_samples;
  d.labels.resize(count);
  d.clips.resize(count * d.clip_size());
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % spec.num_classes);
    d.labels[i] = label;
    auto rng = clip_rng(spec.seed, split, i);
    const auto frame0 = base_frame(spec.clip, rng);
    auto out = d.clip(i);
    render_clip(spec, label, frame0, out);
    if (spec.noise > 0.0) {
      std::normal_distribution<double> noise(0.0, spec.noise);
      for (double& v : out) v += noise(rng);
    }
    if (spec.family == MotionFamily::kReversed && label % 2 == 1) {
      reverse_frames(spec.clip, out);
    }
  }
  return d;
}

SyntheticData generate(const SyntheticSpec& spec) {
  return {generate_split(spec, Split::kTrain), generate_split(spec, Split::kVal)};
}

}  // namespace srtg::harness
