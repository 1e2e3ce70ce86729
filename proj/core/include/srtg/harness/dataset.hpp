#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "srtg/backbone/spec.hpp"
#include "srtg/tensor/tensor.hpp"

namespace srtg::harness {

using backbone::ClipShape;
using tensor::Tensor;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Labeled clips stored back to back, each (C, T, H, W) row-major.
struct Dataset {
  ClipShape shape;
  std::size_t num_classes = 0;
  std::vector<double> clips;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t clip_size() const;
  std::span<const double> clip(std::size_t i) const;
  std::span<double> clip(std::size_t i);
  /// Throws DatasetError when lengths, labels or shape disagree.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Stacks clips into an (N, C, frames, H, W) batch, taking `frames`
/// consecutive frames of clip indices[k] from starts[k].
Tensor make_batch(const Dataset& data, std::span<const std::size_t> indices,
                  std::span<const std::size_t> starts, std::size_t frames);

/// First frame of the centered window.
std::size_t centered_start(std::size_t source_frames, std::size_t frames);

/// Binary layout, little-endian:
///   "SRTGDATA" u32 version u32 dtype(1 = f64) u64 count u64 C T H W
///   u64 num_classes, f64 clips[count*C*T*H*W], i32 labels[count]
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace srtg::harness
