#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srtg/backbone/spec.hpp"
#include "srtg/tensor/grad_check.hpp"

namespace srtg::harness {

/// One LSTM layer, T=3, C=2, batch of 2; checks weights, biases and input.
tensor::GradCheckReport grad_check_lstm_layer(std::uint64_t seed, double eps = 1e-5);

/// Full SRTG unit on a (2, 3, 4, 2, 2) volume. With an active gate the input
/// is redrawn until every clip is Open, so the check covers the fused path.
tensor::GradCheckReport grad_check_srtg_unit(temporal::FusionMode fusion, bool gate_active,
                                             std::uint64_t seed, double eps = 1e-5);

/// One residual block in training mode on a (2, C, 4, 3, 3) volume, SRTG
/// gate inactive so the loss is smooth in every parameter.
tensor::GradCheckReport grad_check_block(backbone::DepthKind depth, backbone::ConvKind conv,
                                         backbone::Placement placement, std::uint64_t seed,
                                         double eps = 1e-5);

struct GradCaseResult {
  std::string name;
  tensor::GradCheckReport report;
};

/// LSTM layer, SRTG unit in both fusion modes (gate active and inactive),
/// Simple and Bottleneck blocks with placement Final.
std::vector<GradCaseResult> run_grad_suite(std::uint64_t seed, double eps = 1e-5);

}  // namespace srtg::harness
