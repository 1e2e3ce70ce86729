#pragma once

#include <optional>
#include <span>
#include <vector>

#include "srtg/tensor/graph.hpp"

namespace srtg::tensor {

// Elementwise. Binary ops require identical shapes.
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

/// x + bias, with bias broadcast along the last axis of x.
Var add_bias(Var x, Var bias);

/// (M,K)·(K,N) -> (M,N).
Var matmul(Var a, Var b);
/// (M,K)·(N,K)ᵀ -> (M,N).
Var matmul_transposed(Var a, Var b);
/// Concatenates two matrices along the column axis: [a | b].
Var concat_columns(Var a, Var b);

Var sum(Var a);
Var mean(Var a);
/// Σ x_i·w_i against fixed weights; returns a scalar.
Var weighted_sum(Var x, std::span<const double> weights);

/// Softmax over the last axis, computed with max subtraction.
Var softmax_last(Var a);
/// Mean negative log-likelihood of `labels` under softmax(logits), logits (N,K).
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

Var reshape(Var a, Shape shape);

/// (N,T,C) -> (N,C) slice at time t.
Var time_step(Var sequence, std::size_t t);
/// T slices of (N,C) -> (N,T,C).
Var stack_steps(std::span<const Var> steps);

struct Conv3dOptions {
  Extent3 stride{1, 1, 1};
  Extent3 padding{0, 0, 0};
};

/// Zero-padded 3D convolution of an (N,Cin,T,H,W) volume with an
/// (Cout,Cin,kT,kH,kW) kernel. Output extents are floor((e + 2p - k)/s) + 1.
Var conv3d(Var input, Var weights, std::optional<Var> bias, const Conv3dOptions& options);

/// Output extent of a strided window; throws ShapeError when not positive.
std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride,
                               std::size_t padding, const char* axis_name);

/// Max pooling with zero-padding excluded from the window; ties resolve to
/// the first maximum in scan order.
Var max_pool3d(Var input, Extent3 kernel, Extent3 stride, Extent3 padding);

/// (N,C,T,H,W) -> (N,T,C): mean over H and W per frame and channel.
Var spatial_avg_pool(Var volume);
/// (N,C,T,H,W) -> (N,C).
Var global_avg_pool(Var volume);

struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormState(std::size_t channels = 0)
      : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

/// Per-channel batch normalization of an (N,C,...) tensor. In training mode
/// batch statistics are used and the running estimates are updated.
Var batch_norm(Var x, Var gamma, Var beta, BatchNormState& state, bool training);

}  // namespace srtg::tensor
