#pragma once

#include <vector>

#include "srtg/tensor/tensor.hpp"

namespace srtg::harness {

using tensor::Tensor;

struct SgdOptions {
  double momentum = 0.9;
  double weight_decay = 1e-6;
};

/// SGD with heavy-ball momentum and decoupled weight decay:
///   v <- momentum * v + g
///   p <- p - lr * v - lr * weight_decay * p
class Sgd {
 public:
  Sgd(std::vector<Tensor*> params, SgdOptions options);

  /// Applies one update from the accumulated gradients, then clears them.
  /// Parameters that received no gradient still decay.
  void step(double lr);
  void zero_grad();

  const SgdOptions& options() const { return options_; }
  std::vector<std::vector<double>>& velocity() { return velocity_; }
  const std::vector<std::vector<double>>& velocity() const { return velocity_; }

 private:
  std::vector<Tensor*> params_;
  SgdOptions options_;
  std::vector<std::vector<double>> velocity_;
};

}  // namespace srtg::harness
