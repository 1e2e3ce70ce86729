#pragma once

#include <functional>
#include <span>
#include <stdexcept>

#include "srtg/tensor/graph.hpp"

namespace srtg::tensor {

class NonDeterministicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GradCheckReport {
  double max_error = 0.0;       // max |analytic - numeric| / max(1, |analytic|)
  std::size_t worst_param = 0;  // index into the params span
  std::size_t worst_element = 0;
  std::size_t checked = 0;      // number of scalar entries compared
};

/// Builds a scalar loss on a fresh graph from the current parameter values.
using LossBuilder = std::function<Var(Graph&)>;

/// Compares reverse-mode gradients with central differences of step `eps`
/// for every element of every parameter. Parameters are restored afterwards.
/// Throws NonDeterministicError when two evaluations at the same point
/// disagree bitwise, std::invalid_argument when eps lies outside [1e-7, 1e-3].
GradCheckReport grad_check(const LossBuilder& build, std::span<Tensor* const> params,
                           double eps = 1e-5);

}  // namespace srtg::tensor
