#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "srtg/backbone/spec.hpp"
#include "srtg/tensor/graph.hpp"
#include "srtg/tensor/ops.hpp"

namespace srtg::backbone {

using tensor::Graph;
using tensor::Tensor;
using tensor::Var;

using NamedParams = std::vector<std::pair<std::string, Tensor*>>;
using NamedBuffers = std::vector<std::pair<std::string, std::vector<double>*>>;

/// Bias-free zero-padded convolution; a following BatchNorm3d supplies the shift.
class Conv3dLayer {
 public:
  Conv3dLayer(std::size_t in_channels, std::size_t out_channels, Extent3 kernel, Extent3 stride,
              Extent3 padding);

  /// Kaiming-uniform: U(-sqrt(6/fan_in), sqrt(6/fan_in)).
  void initialize(std::mt19937_64& rng);
  Var forward(Var x);

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  Extent3 kernel() const { return kernel_; }
  Extent3 stride() const { return stride_; }
  Extent3 padding() const { return padding_; }
  Tensor& weight() { return weight_; }

  void collect(const std::string& name, NamedParams& out) { out.emplace_back(name, &weight_); }

 private:
  std::size_t in_, out_;
  Extent3 kernel_, stride_, padding_;
  Tensor weight_;
};

class BatchNorm3d {
 public:
  explicit BatchNorm3d(std::size_t channels);

  Var forward(Var x, bool training);

  void collect(const std::string& name, NamedParams& params, NamedBuffers& buffers);
  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }

 private:
  Tensor gamma_, beta_;
  tensor::BatchNormState state_;
};

/// A k×k×k convolution, or its (2+1)D factorization: a 1×k×k spatial conv,
/// batch norm and ReLU, then a k×1×1 temporal conv. The intermediate width
/// equals the output width.
class ConvUnit {
 public:
  ConvUnit(ConvKind kind, std::size_t in_channels, std::size_t out_channels, Extent3 kernel,
           Extent3 stride);

  void initialize(std::mt19937_64& rng);
  Var forward(Var x, bool training);
  void collect(const std::string& name, NamedParams& params, NamedBuffers& buffers);

 private:
  ConvKind kind_;
  std::vector<Conv3dLayer> convs_;
  std::vector<BatchNorm3d> mid_norm_;  // only for (2+1)D
};

/// k/2 per axis; keeps extents at unit stride for odd kernels.
Extent3 same_padding(Extent3 kernel);

}  // namespace srtg::backbone
