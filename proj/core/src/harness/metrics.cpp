#include "srtg/harness/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace srtg::harness {

bool in_top_k(std::span<const double> logits, int label, std::size_t k) {
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw std::invalid_argument("label outside the logit row");
  }
  const double v = logits[static_cast<std::size_t>(label)];
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i] > v || (logits[i] == v && i < static_cast<std::size_t>(label))) ++ahead;
  }
  return ahead < k;
}

double top_k_accuracy(std::span<const double> logits, std::size_t num_classes,
                      std::span<const int> labels, std::size_t k) {
  if (labels.empty()) throw std::invalid_argument("top-k over an empty set");
  if (logits.size() != labels.size() * num_classes) {
    throw std::invalid_argument("logits do not match labels x classes");
  }
  std::size_t hits = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (in_top_k(logits.subspan(n * num_classes, num_classes), labels[n], k)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Metrics evaluate(backbone::Network& net, const Dataset& data, const EvalOptions& options,
                 std::vector<temporal::GateRecord>* gate_log) {
  if (data.size() == 0) throw DatasetError("cannot evaluate an empty split");
  if (options.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  const std::size_t frames = std::min(options.frames, data.shape.frames);
  const std::size_t start = centered_start(data.shape.frames, frames);
  const std::size_t k = net.spec().num_classes;
  if (k != data.num_classes) {
    throw std::invalid_argument("network has " + std::to_string(k) + " classes, data has " +
                                std::to_string(data.num_classes));
  }

  std::vector<temporal::GateRecord> local;
  std::vector<temporal::GateRecord>& log = gate_log ? *gate_log : local;
  const std::size_t first_record = log.size();

  Metrics m;
  m.count = data.size();
  double loss_sum = 0.0;
  std::size_t top1 = 0, top5 = 0;
  for (std::size_t b = 0; b < data.size(); b += options.batch_size) {
    const std::size_t n = std::min(options.batch_size, data.size() - b);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), b);
    const std::vector<std::size_t> starts(n, start);
    tensor::Graph g;
    tensor::Var x = g.constant(make_batch(data, idx, starts, frames));
    backbone::ForwardContext ctx{false, &log, b};
    tensor::Var logits = net.forward(x, ctx);
    std::span<const int> labels(data.labels.data() + b, n);
    loss_sum += tensor::softmax_cross_entropy(logits, labels).item() * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = logits.value().subspan(i * k, k);
      top1 += in_top_k(row, labels[i], 1);
      top5 += in_top_k(row, labels[i], 5);
    }
  }
  const double count = static_cast<double>(data.size());
  m.loss = loss_sum / count;
  m.top1 = static_cast<double>(top1) / count;
  m.top5 = static_cast<double>(top5) / count;
  m.gate_open_rate = temporal::open_rates(
      std::span<const temporal::GateRecord>(log).subspan(first_record));
  return m;
}

}  // namespace srtg::harness
