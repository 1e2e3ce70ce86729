#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "srtg/tensor/graph.hpp"

namespace srtg::temporal {

using tensor::Graph;
using tensor::Tensor;
using tensor::Var;

/// Gate weights of one LSTM layer. Every matrix is (hidden, hidden + input)
/// and acts on the concatenation [h_(t-1), x_t].
struct LstmLayerParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Tensor forget_w, input_w, candidate_w, output_w;
  Tensor forget_b, input_b, candidate_b, output_b;

  LstmLayerParams(std::size_t input, std::size_t hidden);
};

/// Stacked LSTM whose hidden size equals the squeezed channel count C.
class LstmParams {
 public:
  LstmParams(std::size_t channels, std::size_t num_layers = 2);

  /// Weights uniform in [-1/sqrt(C), 1/sqrt(C)], biases zero, forget bias +1.
  void initialize(std::mt19937_64& rng);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  LstmLayerParams& layer(std::size_t i) { return layers_.at(i); }
  const LstmLayerParams& layer(std::size_t i) const { return layers_.at(i); }

  std::vector<std::pair<std::string, Tensor*>> named_parameters(const std::string& prefix);

 private:
  std::size_t channels_;
  std::vector<LstmLayerParams> layers_;
};

/// An LstmLayerParams bound to one graph.
struct BoundLstmLayer {
  Var forget_w, input_w, candidate_w, output_w;
  Var forget_b, input_b, candidate_b, output_b;
};

BoundLstmLayer bind(Graph& graph, LstmLayerParams& params);

struct LstmStep {
  Var hidden;
  Var cell;
};

/// One step on a batch: x_t (N, C_in), h_prev and c_prev (N, C).
///   f = σ(W_f[h,x] + b_f)   i = σ(W_i[h,x] + b_i)   C̃ = tanh(W_C[h,x] + b_C)
///   c = f ⊙ c_prev + i ⊙ C̃  o = σ(W_a[h,x] + b_a)   h = o ⊙ tanh(c)
LstmStep lstm_cell_step(Var x_t, Var h_prev, Var c_prev, const BoundLstmLayer& layer);

/// Runs every layer over t = 1..T from a zero state, feeding each layer's
/// hidden sequence to the next. (N, T, C) in, (N, T, C) out.
Var recursion(Var embedding, LstmParams& params);

}  // namespace srtg::temporal
