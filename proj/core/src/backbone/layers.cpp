#include "srtg/backbone/layers.hpp"

#include <cmath>

namespace srtg::backbone {

Extent3 same_padding(Extent3 kernel) { return {kernel.t / 2, kernel.h / 2, kernel.w / 2}; }

Conv3dLayer::Conv3dLayer(std::size_t in_channels, std::size_t out_channels, Extent3 kernel,
                         Extent3 stride, Extent3 padding)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      weight_({out_channels, in_channels, kernel.t, kernel.h, kernel.w}) {
  weight_.set_requires_grad(true);
}

void Conv3dLayer::initialize(std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(in_ * kernel_.t * kernel_.h * kernel_.w);
  const double bound = std::sqrt(6.0 / fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : weight_.data()) v = dist(rng);
}

Var Conv3dLayer::forward(Var x) {
  Var w = x.graph().param(weight_);
  return tensor::conv3d(x, w, std::nullopt, {stride_, padding_});
}

BatchNorm3d::BatchNorm3d(std::size_t channels)
    : gamma_({channels}, 1.0), beta_({channels}, 0.0), state_(channels) {
  gamma_.set_requires_grad(true);
  beta_.set_requires_grad(true);
}

Var BatchNorm3d::forward(Var x, bool training) {
  Graph& g = x.graph();
  return tensor::batch_norm(x, g.param(gamma_), g.param(beta_), state_, training);
}

void BatchNorm3d::collect(const std::string& name, NamedParams& params, NamedBuffers& buffers) {
  params.emplace_back(name + ".gamma", &gamma_);
  params.emplace_back(name + ".beta", &beta_);
  buffers.emplace_back(name + ".running_mean", &state_.running_mean);
  buffers.emplace_back(name + ".running_var", &state_.running_var);
}

ConvUnit::ConvUnit(ConvKind kind, std::size_t in_channels, std::size_t out_channels,
                   Extent3 kernel, Extent3 stride)
    : kind_(kind) {
  const bool factorize = kind == ConvKind::kTwoPlusOneD && kernel.t > 1 &&
                         (kernel.h > 1 || kernel.w > 1);
  if (!factorize) {
    convs_.emplace_back(in_channels, out_channels, kernel, stride, same_padding(kernel));
    return;
  }
  const Extent3 spatial{1, kernel.h, kernel.w};
  const Extent3 temporal{kernel.t, 1, 1};
  convs_.emplace_back(in_channels, out_channels, spatial, Extent3{1, stride.h, stride.w},
                      same_padding(spatial));
  mid_norm_.emplace_back(out_channels);
  convs_.emplace_back(out_channels, out_channels, temporal, Extent3{stride.t, 1, 1},
                      same_padding(temporal));
}

void ConvUnit::initialize(std::mt19937_64& rng) {
  for (auto& c : convs_) c.initialize(rng);
}

Var ConvUnit::forward(Var x, bool training) {
  Var y = convs_[0].forward(x);
  if (convs_.size() == 2) {
    y = tensor::relu(mid_norm_[0].forward(y, training));
    y = convs_[1].forward(y);
  }
  return y;
}

void ConvUnit::collect(const std::string& name, NamedParams& params, NamedBuffers& buffers) {
  if (convs_.size() == 1) {
    convs_[0].collect(name + ".weight", params);
    return;
  }
  convs_[0].collect(name + ".spatial.weight", params);
  mid_norm_[0].collect(name + ".mid_bn", params, buffers);
  convs_[1].collect(name + ".temporal.weight", params);
}

}  // namespace srtg::backbone
