#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "srtg/backbone/network.hpp"
#include "srtg/harness/dataset.hpp"

namespace srtg::harness {

/// True when `label` is among the k largest entries of `logits`, ranking by
/// value descending and then by class index ascending.
bool in_top_k(std::span<const double> logits, int label, std::size_t k);

/// Fraction of rows of an (N, K) logit matrix whose label is in the top k.
double top_k_accuracy(std::span<const double> logits, std::size_t num_classes,
                      std::span<const int> labels, std::size_t k);

struct Metrics {
  double loss = 0.0;
  double top1 = 0.0;
  double top5 = 0.0;
  std::size_t count = 0;
  /// Fused fraction per SRTG layer; 1 when the gate is inactive.
  std::map<std::string, double> gate_open_rate;
};

struct EvalOptions {
  std::size_t batch_size = 16;
  std::size_t frames = 16;  // centered window when clips are longer
};

/// Inference-mode pass over a split. Appends every gate verdict to
/// `gate_log` when given.
Metrics evaluate(backbone::Network& net, const Dataset& data, const EvalOptions& options,
                 std::vector<temporal::GateRecord>* gate_log = nullptr);

}  // namespace srtg::harness
