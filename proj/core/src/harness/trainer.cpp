#include "srtg/harness/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

namespace srtg::harness {

namespace {

std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch, std::uint32_t stream) {
  const auto e = static_cast<std::uint64_t>(epoch);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(e >> 32), stream};
  return std::mt19937_64(seq);
}

void append(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw std::invalid_argument("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum in [0, 1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be >= 0");
  if (!(lr_gamma > 0.0 && lr_gamma <= 1.0)) throw std::invalid_argument("lr gamma in (0, 1]");
  for (double m : milestones) {
    if (!(m > 0.0 && m <= 1.0)) throw std::invalid_argument("milestones are fractions in (0, 1]");
  }
  if (batch_size == 0 || epochs == 0 || frames == 0) {
    throw std::invalid_argument("batch size, epochs and frames must be positive");
  }
}

double TrainConfig::lr_at(std::size_t epoch) const {
  double lr = lr0;
  for (double m : milestones) {
    const auto at = static_cast<std::size_t>(std::floor(m * static_cast<double>(epochs)));
    if (epoch >= at) lr *= lr_gamma;
  }
  return lr;
}

std::string History::to_csv() const {
  std::string out = "epoch,train_loss,train_top1,val_loss,val_top1,val_top5,lr";
  for (const auto& l : gate_layers) out += ",gate_open_rate:" + l;
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.epoch);
    for (double v : {r.train_loss, r.train_top1, r.val_loss, r.val_top1, r.val_top5, r.lr}) {
      out += ',';
      append(out, v);
    }
    for (double v : r.gate_open_rates) {
      out += ',';
      append(out, v);
    }
    out += '\n';
  }
  return out;
}

DivergenceError::DivergenceError(std::size_t epoch, double loss)
    : std::runtime_error("training diverged in epoch " + std::to_string(epoch) + " (loss " +
                         std::to_string(loss) + ")"),
      epoch_(epoch) {}

std::vector<std::size_t> epoch_permutation(std::uint64_t seed, std::size_t epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = epoch_rng(seed, epoch, 0x5f1e);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Trainer::Trainer(backbone::Network& net, TrainConfig config)
    : net_(net),
      config_(std::move(config)),
      optimizer_((config_.validate(), net.parameters()),
                 SgdOptions{config_.momentum, config_.weight_decay}) {
  history_.gate_layers = net_.srtg_layer_names();
}

const EpochRecord& Trainer::run_epoch(const Dataset& train, const Dataset& val) {
  if (train.size() == 0) throw DatasetError("empty training split");
  const std::size_t epoch = epochs_done();
  const std::size_t k = net_.spec().num_classes;
  if (train.num_classes != k) throw std::invalid_argument("class count mismatch with network");
  const std::size_t frames = std::min(config_.frames, train.shape.frames);
  const double lr = config_.lr_at(epoch);

  const auto order = epoch_permutation(config_.seed, epoch, train.size());
  auto crop_rng = epoch_rng(config_.seed, epoch, 0xc409);
  std::uniform_int_distribution<std::size_t> crop(0, train.shape.frames - frames);

  double loss_sum = 0.0;
  std::size_t hits = 0;
  optimizer_.zero_grad();
  for (std::size_t b = 0; b < order.size(); b += config_.batch_size) {
    const std::size_t n = std::min(config_.batch_size, order.size() - b);
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(b),
                                 order.begin() + static_cast<std::ptrdiff_t>(b + n));
    std::vector<std::size_t> starts(n);
    for (auto& s : starts) s = crop(crop_rng);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = train.labels[idx[i]];

    tensor::Graph g;
    tensor::Var x = g.constant(make_batch(train, idx, starts, frames));
    backbone::ForwardContext ctx{true, nullptr, 0};
    tensor::Var logits = net_.forward(x, ctx);
    tensor::Var loss = tensor::softmax_cross_entropy(logits, labels);
    const double value = loss.item();
    if (!std::isfinite(value)) throw DivergenceError(epoch + 1, value);
    g.backward(loss);
    optimizer_.step(lr);

    loss_sum += value * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      hits += in_top_k(logits.value().subspan(i * k, k), labels[i], 1);
    }
  }

  const Metrics m = evaluate(net_, val, EvalOptions{config_.batch_size, config_.frames});
  EpochRecord r;
  r.epoch = epoch + 1;
  r.train_loss = loss_sum / static_cast<double>(train.size());
  r.train_top1 = static_cast<double>(hits) / static_cast<double>(train.size());
  r.val_loss = m.loss;
  r.val_top1 = m.top1;
  r.val_top5 = m.top5;
  r.lr = lr;
  for (const auto& layer : history_.gate_layers) {
    auto it = m.gate_open_rate.find(layer);
    r.gate_open_rates.push_back(it == m.gate_open_rate.end() ? 1.0 : it->second);
  }
  history_.records.push_back(std::move(r));
  return history_.records.back();
}

void Trainer::fit(const Dataset& train, const Dataset& val, std::size_t last_epoch,
                  const std::function<void(const EpochRecord&)>& after_epoch) {
  last_epoch = std::min(last_epoch, config_.epochs);
  while (epochs_done() < last_epoch) {
    const EpochRecord& r = run_epoch(train, val);
    if (after_epoch) after_epoch(r);
  }
}

}  // namespace srtg::harness
