#include "srtg/harness/grad_suite.hpp"

#include <random>

#include "srtg/backbone/block.hpp"
#include "srtg/temporal/unit.hpp"
#include "srtg/tensor/ops.hpp"

namespace srtg::harness {

namespace {

using tensor::Graph;
using tensor::Tensor;
using tensor::Var;

Tensor random_tensor(tensor::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.data()) v = dist(rng);
  t.set_requires_grad(true);
  return t;
}

std::vector<double> random_weights(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> w(n);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : w) v = dist(rng);
  return w;
}

std::vector<Tensor*> lstm_tensors(temporal::LstmParams& p) {
  std::vector<Tensor*> out;
  for (auto& [name, t] : p.named_parameters("")) out.push_back(t);
  return out;
}

// Input gate open, forget gate mostly shut, candidate ~ x: the recurrent
// output roughly tracks its input, which is what an open gate needs.
void near_identity(temporal::LstmParams& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    auto& layer = p.layer(l);
    const std::size_t h = layer.hidden_size, cols = layer.hidden_size + layer.input_size;
    for (Tensor* w : {&layer.forget_w, &layer.input_w, &layer.candidate_w, &layer.output_w}) {
      for (double& v : w->data()) v = jitter(rng);
    }
    for (std::size_t i = 0; i < h; ++i) layer.candidate_w.data()[i * cols + h + i] += 3.0;
    for (double& v : layer.forget_b.data()) v = -3.0 + jitter(rng);
    for (double& v : layer.input_b.data()) v = 3.0 + jitter(rng);
    for (double& v : layer.candidate_b.data()) v = jitter(rng);
    for (double& v : layer.output_b.data()) v = 3.0 + jitter(rng);
  }
}

// Each frame's spatial mean sits near a random corner of [-1, 1]^C. The soft
// match has unit temperature, so frames need O(1) separation to resolve.
Tensor corner_frames(const tensor::Shape& shape, std::mt19937_64& rng) {
  const std::size_t n = shape[0], c = shape[1], frames = shape[2], plane = shape[3] * shape[4];
  Tensor t(shape);
  std::bernoulli_distribution coin;
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double corner = coin(rng) ? 1.0 : -1.0;
        double* p = t.data().data() + ((b * c + ch) * frames + f) * plane;
        for (std::size_t i = 0; i < plane; ++i) p[i] = corner + jitter(rng);
      }
    }
  }
  t.set_requires_grad(true);
  return t;
}

}  // namespace

tensor::GradCheckReport grad_check_lstm_layer(std::uint64_t seed, double eps) {
  constexpr std::size_t kBatch = 2, kFrames = 3, kChannels = 2;
  std::mt19937_64 rng(seed);
  temporal::LstmParams params(kChannels, 1);
  params.initialize(rng);
  Tensor input = random_tensor({kBatch, kFrames, kChannels}, rng);
  const auto w = random_weights(kBatch * kFrames * kChannels, rng);

  auto build = [&](Graph& g) {
    Var x = g.param(input);
    const auto layer = temporal::bind(g, params.layer(0));
    Var h = g.constant(Tensor({kBatch, kChannels}));
    Var c = g.constant(Tensor({kBatch, kChannels}));
    std::vector<Var> steps;
    for (std::size_t t = 0; t < kFrames; ++t) {
      auto s = temporal::lstm_cell_step(tensor::time_step(x, t), h, c, layer);
      h = s.hidden;
      c = s.cell;
      steps.push_back(h);
    }
    return tensor::weighted_sum(tensor::stack_steps(steps), w);
  };
  auto tensors = lstm_tensors(params);
  tensors.push_back(&input);
  return tensor::grad_check(build, tensors, eps);
}

tensor::GradCheckReport grad_check_srtg_unit(temporal::FusionMode fusion, bool gate_active,
                                             std::uint64_t seed, double eps) {
  constexpr std::size_t kBatch = 2, kChannels = 3, kFrames = 4, kSide = 2;
  std::mt19937_64 rng(seed);
  temporal::LstmParams params(kChannels);
  params.initialize(rng);
  const temporal::SrtgOptions options{gate_active, fusion};
  const auto w = random_weights(kBatch * kChannels * kFrames * kSide * kSide, rng);

  Tensor input = random_tensor({kBatch, kChannels, kFrames, kSide, kSide}, rng);
  if (gate_active) {
    near_identity(params, rng);
    input = corner_frames(input.shape(), rng);
    for (int attempt = 0;; ++attempt) {
      if (attempt == 10000) throw std::runtime_error("no all-open input found for the gate check");
      Graph g;
      auto out = temporal::srtg_unit(g.constant(input), params, options);
      bool all_open = true;
      for (const auto& d : out.decisions) all_open &= d.verdict == temporal::Verdict::kOpen;
      if (all_open) break;
      near_identity(params, rng);
      input = corner_frames(input.shape(), rng);
    }
  }

  auto build = [&](Graph& g) {
    auto out = temporal::srtg_unit(g.param(input), params, options);
    return tensor::weighted_sum(out.output, w);
  };
  auto tensors = lstm_tensors(params);
  tensors.push_back(&input);
  return tensor::grad_check(build, tensors, eps);
}

tensor::GradCheckReport grad_check_block(backbone::DepthKind depth, backbone::ConvKind conv,
                                         backbone::Placement placement, std::uint64_t seed,
                                         double eps) {
  constexpr std::size_t kBatch = 2, kFrames = 4, kSide = 3;
  backbone::BlockSpec spec;
  spec.depth = depth;
  spec.conv = conv;
  spec.placement = placement;
  spec.gate_active = false;
  spec.in_channels = depth == backbone::DepthKind::kSimple ? 3 : 8;
  spec.out_channels = spec.in_channels;
  backbone::ResidualBlock block(spec);
  std::mt19937_64 rng(seed);
  block.initialize(rng);

  Tensor input = random_tensor({kBatch, spec.in_channels, kFrames, kSide, kSide}, rng);
  const auto w = random_weights(input.size(), rng);
  auto build = [&](Graph& g) {
    backbone::ForwardContext ctx{true, nullptr, 0};
    return tensor::weighted_sum(block.forward(g.param(input), ctx), w);
  };
  backbone::NamedParams named;
  backbone::NamedBuffers buffers;
  block.collect(named, buffers);
  std::vector<Tensor*> tensors;
  for (auto& [name, t] : named) tensors.push_back(t);
  tensors.push_back(&input);
  return tensor::grad_check(build, tensors, eps);
}

std::vector<GradCaseResult> run_grad_suite(std::uint64_t seed, double eps) {
  using temporal::FusionMode;
  std::vector<GradCaseResult> out;
  out.push_back({"lstm_layer T=3 C=2", grad_check_lstm_layer(seed, eps)});
  for (FusionMode mode : {FusionMode::kMultiplicative, FusionMode::kAdditive}) {
    for (bool active : {false, true}) {
      out.push_back({"srtg_unit T=4 C=3 H=W=2 " + std::string(to_string(mode)) +
                         (active ? " gate=open" : " gate=inactive"),
                     grad_check_srtg_unit(mode, active, seed, eps)});
    }
  }
  for (auto depth : {backbone::DepthKind::kSimple, backbone::DepthKind::kBottleneck}) {
    out.push_back({std::string(to_string(depth)) + " block placement=final",
                   grad_check_block(depth, backbone::ConvKind::kFull3d, backbone::Placement::kFinal,
                                    seed, eps)});
  }
  return out;
}

}  // namespace srtg::harness
