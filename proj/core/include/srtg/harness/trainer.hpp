#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "srtg/harness/metrics.hpp"
#include "srtg/harness/optimizer.hpp"

namespace srtg::harness {

struct TrainConfig {
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-6;
  double lr_gamma = 0.1;
  /// Fractions of `epochs` at which the rate is multiplied by lr_gamma.
  std::vector<double> milestones{0.5, 0.75};
  std::size_t batch_size = 16;
  std::size_t epochs = 30;
  std::size_t frames = 16;
  std::uint64_t seed = 0;

  void validate() const;
  /// Step schedule: lr0 * lr_gamma^(milestones passed by 0-based `epoch`).
  double lr_at(std::size_t epoch) const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_top1 = 0.0;
  double val_loss = 0.0;
  double val_top1 = 0.0;
  double val_top5 = 0.0;
  double lr = 0.0;
  std::vector<double> gate_open_rates;  // aligned with History::gate_layers

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct History {
  std::vector<std::string> gate_layers;
  std::vector<EpochRecord> records;

  /// Header plus one row per epoch; doubles in shortest round-trip form.
  std::string to_csv() const;
  friend bool operator==(const History&, const History&) = default;
};

/// Non-finite training loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, double loss);
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Per-epoch order of training clips; depends only on (seed, epoch).
std::vector<std::size_t> epoch_permutation(std::uint64_t seed, std::size_t epoch, std::size_t n);

/// Mini-batch SGD with cross-entropy loss. Every random choice is drawn from
/// streams keyed by (seed, epoch), so stopping after any epoch and resuming
/// from a checkpoint replays the uninterrupted run exactly.
class Trainer {
 public:
  Trainer(backbone::Network& net, TrainConfig config);

  /// Trains one epoch (number history().records.size() + 1) and evaluates.
  const EpochRecord& run_epoch(const Dataset& train, const Dataset& val);
  /// Runs epochs until `last_epoch` (1-based, capped at config().epochs).
  void fit(const Dataset& train, const Dataset& val, std::size_t last_epoch,
           const std::function<void(const EpochRecord&)>& after_epoch = {});

  const TrainConfig& config() const { return config_; }
  History& history() { return history_; }
  Sgd& optimizer() { return optimizer_; }
  std::size_t epochs_done() const { return history_.records.size(); }

 private:
  backbone::Network& net_;
  TrainConfig config_;
  Sgd optimizer_;
  History history_;
};

}  // namespace srtg::harness
