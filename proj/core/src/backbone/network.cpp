#include "srtg/backbone/network.hpp"

#include <cmath>
#include <random>

namespace srtg::backbone {

namespace {

const NetworkSpec& validated(const NetworkSpec& spec) {
  spec.validate();
  return spec;
}

}  // namespace

Network::Network(NetworkSpec spec)
    : spec_(std::move(spec)),
      stem_(validated(spec_).conv, spec_.in_channels, spec_.stem.channels, spec_.stem.kernel,
            spec_.stem.stride),
      stem_norm_(spec_.stem.channels),
      head_weight_({spec_.num_classes, spec_.feature_channels()}),
      head_bias_({spec_.num_classes}) {
  head_weight_.set_requires_grad(true);
  head_bias_.set_requires_grad(true);
  const auto specs = spec_.block_specs();
  blocks_.reserve(specs.size());
  std::size_t stage = 0, index = 0, remaining = spec_.stages[0].blocks;
  for (const auto& b : specs) {
    if (remaining == 0) {
      ++stage;
      index = 0;
      remaining = spec_.stages[stage].blocks;
    }
    blocks_.emplace_back(b, "stage" + std::to_string(stage + 1) + ".block" + std::to_string(index));
    ++index;
    --remaining;
  }
}

void Network::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  stem_.initialize(rng);
  for (auto& b : blocks_) b.initialize(rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(spec_.feature_channels()));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : head_weight_.data()) v = dist(rng);
  for (double& v : head_bias_.data()) v = 0.0;
}

Var Network::forward(Var clips, ForwardContext& ctx) {
  const auto& s = clips.shape();
  if (s.size() != 5) throw tensor::ShapeError("network input must be (N,C,T,H,W)");
  if (s[1] != spec_.in_channels) {
    throw tensor::ShapeError("network input channels (dim 1) = " + std::to_string(s[1]) +
                             " but the stem expects " + std::to_string(spec_.in_channels));
  }
  Var x = tensor::relu(stem_norm_.forward(stem_.forward(clips, ctx.training), ctx.training));
  if (spec_.stem.pool) {
    const PoolSpec& p = *spec_.stem.pool;
    x = tensor::max_pool3d(x, p.kernel, p.stride, p.padding);
  }
  for (auto& b : blocks_) x = b.forward(x, ctx);
  Graph& g = clips.graph();
  Var features = tensor::global_avg_pool(x);
  return tensor::add_bias(tensor::matmul_transposed(features, g.param(head_weight_)),
                          g.param(head_bias_));
}

std::vector<std::string> Network::srtg_layer_names() const {
  std::vector<std::string> names;
  for (const auto& b : blocks_) {
    if (b.has_srtg()) names.push_back(b.srtg_layer_name());
  }
  return names;
}

NamedParams Network::named_parameters() {
  NamedParams params;
  NamedBuffers buffers;
  stem_.collect("stem.conv", params, buffers);
  stem_norm_.collect("stem.bn", params, buffers);
  for (auto& b : blocks_) b.collect(params, buffers);
  params.emplace_back("head.weight", &head_weight_);
  params.emplace_back("head.bias", &head_bias_);
  return params;
}

NamedBuffers Network::named_buffers() {
  NamedParams params;
  NamedBuffers buffers;
  stem_.collect("stem.conv", params, buffers);
  stem_norm_.collect("stem.bn", params, buffers);
  for (auto& b : blocks_) b.collect(params, buffers);
  return buffers;
}

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> out;
  for (auto& [name, p] : named_parameters()) out.push_back(p);
  return out;
}

}  // namespace srtg::backbone
