#include "srtg/tensor/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace srtg::tensor {
namespace {

double evaluate(const LossBuilder& build) {
  Graph g;
  return build(g).item();
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& build, std::span<Tensor* const> params,
                           double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw std::invalid_argument("grad_check: step must lie in [1e-7, 1e-3]");
  }
  for (Tensor* p : params) {
    p->set_requires_grad(true);
    p->zero_grad();
  }
  double base = 0.0;
  {
    Graph g;
    Var loss = build(g);
    base = loss.item();
    g.backward(loss);
  }
  if (evaluate(build) != base) {
    throw NonDeterministicError("grad_check: loss differs between identical evaluations");
  }

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (Tensor* p : params) {
    auto g = p->grad();
    analytic.emplace_back(g.begin(), g.end());
  }

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + eps;
      const double up = evaluate(build);
      p[i] = saved - eps;
      const double down = evaluate(build);
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      if (err > report.max_error) {
        report.max_error = err;
        report.worst_param = pi;
        report.worst_element = i;
      }
      ++report.checked;
    }
  }
  return report;
}

}  // namespace srtg::tensor
