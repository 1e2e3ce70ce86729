#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "srtg/harness/dataset.hpp"

namespace srtg::harness {

/// How classes differ. All three are purely temporal: a class is fixed by
/// how frame 0 moves, never by what it shows.
enum class MotionFamily {
  kTranslation,  // class k drifts with velocity k of a fixed direction table
  kOscillation,  // horizontal sinusoid, class k has phase 2*pi*k/K
  kReversed,     // pair j drifts along direction j; class 2j+1 plays it backwards
};

std::string_view to_string(MotionFamily f);
MotionFamily motion_family_from_string(std::string_view s);

enum class Split { kTrain, kVal };

struct SyntheticSpec {
  std::size_t num_classes = 2;
  ClipShape clip{1, 8, 16, 16};
  MotionFamily family = MotionFamily::kReversed;
  double noise = 0.05;
  std::size_t train_samples = 400;
  std::size_t val_samples = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  Dataset train;
  Dataset val;
};

/// Clip i of a split gets label i % num_classes and its own RNG stream, so
/// generation order and sharding never change the result.
std::mt19937_64 clip_rng(std::uint64_t seed, Split split, std::size_t index);

/// Frame 0 texture for one clip: low-amplitude background plus a bright patch.
std::vector<double> base_frame(const ClipShape& shape, std::mt19937_64& rng);

/// Integer (dy, dx) displacement of frame t for a class.
std::pair<long, long> displacement(const SyntheticSpec& spec, int label, std::size_t t);

/// Renders one clip (before noise) into `out` of size C*T*H*W. For the
/// reversed family an odd label renders its even partner.
void render_clip(const SyntheticSpec& spec, int label, std::span<const double> frame0,
                 std::span<double> out);

/// Reverses the frame order of a (C, T, H, W) clip in place.
void reverse_frames(const ClipShape& shape, std::span<double> clip);

Dataset generate_split(const SyntheticSpec& spec, Split split);
SyntheticData generate(const SyntheticSpec& spec);

}  // namespace srtg::harness
