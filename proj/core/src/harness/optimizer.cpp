#include "srtg/harness/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace srtg::harness {

Sgd::Sgd(std::vector<Tensor*> params, SgdOptions options)
    : params_(std::move(params)), options_(options) {
  if (!(options_.momentum >= 0.0 && options_.momentum < 1.0)) {
    throw std::invalid_argument("momentum must lie in [0, 1)");
  }
  if (!(options_.weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be >= 0");
  velocity_.reserve(params_.size());
  for (Tensor* p : params_) velocity_.emplace_back(p->size(), 0.0);
}

void Sgd::step(double lr) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be >= 0");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = *params_[i];
    auto value = p.data();
    auto& v = velocity_[i];
    if (p.has_grad()) {
      auto g = p.grad();
      for (std::size_t j = 0; j < v.size(); ++j) v[j] = options_.momentum * v[j] + g[j];
    } else {
      for (double& x : v) x *= options_.momentum;
    }
    for (std::size_t j = 0; j < v.size(); ++j) {
      value[j] -= lr * v[j] + lr * options_.weight_decay * value[j];
    }
  }
  zero_grad();
}

void Sgd::zero_grad() {
  for (Tensor* p : params_) p->zero_grad();
}

}  // namespace srtg::harness
