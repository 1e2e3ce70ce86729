#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srtg/backbone/block.hpp"

namespace srtg::backbone {

/// Stem, residual stages, global average pool and a linear classifier.
class Network {
 public:
  explicit Network(NetworkSpec spec);

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;

  /// Deterministic initialization from a seed (parameters visited in
  /// declaration order).
  void initialize(std::uint64_t seed);

  /// (N,C,T,H,W) clips -> (N, num_classes) logits.
  Var forward(Var clips, ForwardContext& ctx);

  const NetworkSpec& spec() const { return spec_; }
  std::vector<ResidualBlock>& blocks() { return blocks_; }
  std::vector<std::string> srtg_layer_names() const;

  NamedParams named_parameters();
  NamedBuffers named_buffers();
  std::vector<Tensor*> parameters();

 private:
  NetworkSpec spec_;
  ConvUnit stem_;
  BatchNorm3d stem_norm_;
  std::vector<ResidualBlock> blocks_;
  Tensor head_weight_;
  Tensor head_bias_;
};

}  // namespace srtg::backbone
