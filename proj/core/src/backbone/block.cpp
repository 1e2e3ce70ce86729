#include "srtg/backbone/block.hpp"

#include "srtg/temporal/unit.hpp"

namespace srtg::backbone {

namespace {

constexpr Extent3 kPointwise{1, 1, 1};
constexpr Extent3 kCube{3, 3, 3};

}  // namespace

ResidualBlock::ResidualBlock(const BlockSpec& spec, std::string name)
    : spec_(spec), name_(std::move(name)) {
  spec_.validate();
  const std::size_t in = spec_.in_channels;
  const std::size_t out = spec_.out_channels;
  if (spec_.depth == DepthKind::kSimple) {
    convs_.emplace_back(spec_.conv, in, out, kCube, spec_.stride);
    norms_.emplace_back(out);
    convs_.emplace_back(spec_.conv, out, out, kCube, kPointwise);
    norms_.emplace_back(out);
  } else {
    const std::size_t inner = spec_.inner_channels();
    convs_.emplace_back(spec_.conv, in, inner, kPointwise, kPointwise);
    norms_.emplace_back(inner);
    convs_.emplace_back(spec_.conv, inner, inner, kCube, spec_.stride);
    norms_.emplace_back(inner);
    convs_.emplace_back(spec_.conv, inner, out, kPointwise, kPointwise);
    norms_.emplace_back(out);
  }
  if (spec_.has_projection()) {
    projection_.emplace(in, out, kPointwise, spec_.stride, Extent3{0, 0, 0});
    projection_norm_.emplace(out);
  }
  if (spec_.placement != Placement::kNone) {
    srtg_.emplace(spec_.srtg_channels(), spec_.lstm_layers);
  }
}

void ResidualBlock::initialize(std::mt19937_64& rng) {
  for (auto& c : convs_) c.initialize(rng);
  if (projection_) projection_->initialize(rng);
  if (srtg_) srtg_->initialize(rng);
}

Var ResidualBlock::apply_srtg(Var x, Placement at, ForwardContext& ctx) {
  if (!srtg_ || spec_.placement != at) return x;
  temporal::SrtgOptions options{spec_.gate_active, spec_.fusion};
  temporal::SrtgOutput result = temporal::srtg_unit(x, *srtg_, options);
  if (ctx.gate_log != nullptr) {
    for (std::size_t clip = 0; clip < result.decisions.size(); ++clip) {
      ctx.gate_log->push_back(
          {srtg_layer_name(), ctx.clip_offset + clip, std::move(result.decisions[clip])});
    }
  }
  return result.output;
}

Var ResidualBlock::forward(Var x, ForwardContext& ctx) {
  const bool train = ctx.training;
  x = apply_srtg(x, Placement::kStart, ctx);

  Var y;
  if (spec_.depth == DepthKind::kSimple) {
    y = tensor::relu(norms_[0].forward(convs_[0].forward(x, train), train));
    y = apply_srtg(y, Placement::kMid, ctx);
    y = norms_[1].forward(convs_[1].forward(y, train), train);
  } else {
    y = tensor::relu(norms_[0].forward(convs_[0].forward(x, train), train));
    y = apply_srtg(y, Placement::kTop, ctx);
    y = tensor::relu(norms_[1].forward(convs_[1].forward(y, train), train));
    y = apply_srtg(y, Placement::kMid, ctx);
    y = norms_[2].forward(convs_[2].forward(y, train), train);
    y = apply_srtg(y, Placement::kEnd, ctx);
  }

  Var skip = x;
  if (projection_) skip = projection_norm_->forward(projection_->forward(x), train);
  skip = apply_srtg(skip, Placement::kRes, ctx);

  Var out = tensor::relu(tensor::add(y, skip));
  return apply_srtg(out, Placement::kFinal, ctx);
}

void ResidualBlock::collect(NamedParams& params, NamedBuffers& buffers) {
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].collect(name_ + ".conv" + std::to_string(i + 1), params, buffers);
    norms_[i].collect(name_ + ".bn" + std::to_string(i + 1), params, buffers);
  }
  if (projection_) {
    projection_->collect(name_ + ".downsample.weight", params);
    projection_norm_->collect(name_ + ".downsample.bn", params, buffers);
  }
  if (srtg_) {
    for (auto& p : srtg_->named_parameters(name_ + ".srtg.")) params.push_back(p);
  }
}

}  // namespace srtg::backbone
