#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "srtg/tensor/ops.hpp"

namespace srtg::tensor {
namespace {

void require_same_graph(const char* op, Var a, Var b) {
  if (&a.graph() != &b.graph()) {
    throw std::invalid_argument(std::string(op) + ": operands belong to different graphs");
  }
}

void require_same_shape(const char* op, Var a, Var b) {
  require_same_graph(op, a, b);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size()) {
    throw ShapeError(std::string(op) + ": rank mismatch " + shape_string(sa) + " vs " +
                     shape_string(sb));
  }
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa[i] != sb[i]) {
      throw ShapeError(std::string(op) + ": dimension " + std::to_string(i) + " differs (" +
                       std::to_string(sa[i]) + " vs " + std::to_string(sb[i]) + ")");
    }
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  auto av = a.value();
  auto bv = b.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return a.graph().record("add", a.shape(), std::move(out), {a, b},
                          [a, b](Graph& g, std::span<const double> go, std::span<const double>) {
                            for (Var in : {a, b}) {
                              if (!g.needs_grad(in)) continue;
                              auto gi = g.grad(in);
                              for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i];
                            }
                          });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  auto av = a.value();
  auto bv = b.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.graph().record("mul", a.shape(), std::move(out), {a, b},
                          [a, b](Graph& g, std::span<const double> go, std::span<const double>) {
                            auto av = g.value(a);
                            auto bv = g.value(b);
                            if (g.needs_grad(a)) {
                              auto ga = g.grad(a);
                              for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
                            }
                            if (g.needs_grad(b)) {
                              auto gb = g.grad(b);
                              for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
                            }
                          });
}

Var scale(Var a, double factor) {
  auto av = a.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  return a.graph().record("scale", a.shape(), std::move(out), {a},
                          [a, factor](Graph& g, std::span<const double> go,
                                      std::span<const double>) {
                            auto ga = g.grad(a);
                            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * factor;
                          });
}

Var sigmoid(Var a) {
  auto av = a.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(av[i]);
  return a.graph().record("sigmoid", a.shape(), std::move(out), {a},
                          [a](Graph& g, std::span<const double> go, std::span<const double> y) {
                            auto ga = g.grad(a);
                            for (std::size_t i = 0; i < go.size(); ++i) {
                              ga[i] += go[i] * y[i] * (1.0 - y[i]);
                            }
                          });
}

Var tanh(Var a) {
  auto av = a.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  return a.graph().record("tanh", a.shape(), std::move(out), {a},
                          [a](Graph& g, std::span<const double> go, std::span<const double> y) {
                            auto ga = g.grad(a);
                            for (std::size_t i = 0; i < go.size(); ++i) {
                              ga[i] += go[i] * (1.0 - y[i] * y[i]);
                            }
                          });
}

Var relu(Var a) {
  auto av = a.value();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  return a.graph().record("relu", a.shape(), std::move(out), {a},
                          [a](Graph& g, std::span<const double> go, std::span<const double>) {
                            auto av = g.value(a);
                            auto ga = g.grad(a);
                            for (std::size_t i = 0; i < go.size(); ++i) {
                              if (av[i] > 0.0) ga[i] += go[i];
                            }
                          });
}

Var add_bias(Var x, Var bias) {
  require_same_graph("add_bias", x, bias);
  const std::size_t cols = x.shape().back();
  if (bias.shape().size() != 1 || bias.dim(0) != cols) {
    throw ShapeError("add_bias: bias " + shape_string(bias.shape()) +
                     " does not match last dimension " + std::to_string(cols));
  }
  auto xv = x.value();
  auto bv = bias.value();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] + bv[i % cols];
  return x.graph().record(
      "add_bias", x.shape(), std::move(out), {x, bias},
      [x, bias, cols](Graph& g, std::span<const double> go, std::span<const double>) {
        if (g.needs_grad(x)) {
          auto gx = g.grad(x);
          for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
        }
        if (g.needs_grad(bias)) {
          auto gb = g.grad(bias);
          for (std::size_t i = 0; i < go.size(); ++i) gb[i % cols] += go[i];
        }
      });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value()) s += v;
  return a.graph().record("sum", {1}, {s}, {a},
                          [a](Graph& g, std::span<const double> go, std::span<const double>) {
                            auto ga = g.grad(a);
                            for (double& v : ga) v += go[0];
                          });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Var weighted_sum(Var x, std::span<const double> weights) {
  if (weights.size() != x.size()) {
    throw ShapeError("weighted_sum: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(x.size()) + " elements");
  }
  auto xv = x.value();
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i] * weights[i];
  std::vector<double> w(weights.begin(), weights.end());
  return x.graph().record("weighted_sum", {1}, {s}, {x},
                          [x, w = std::move(w)](Graph& g, std::span<const double> go,
                                                std::span<const double>) {
                            auto gx = g.grad(x);
                            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[0] * w[i];
                          });
}

Var softmax_last(Var a) {
  const std::size_t cols = a.shape().back();
  auto av = a.value();
  std::vector<double> out(av.size());
  for (std::size_t row = 0; row < av.size() / cols; ++row) {
    const double* in = av.data() + row * cols;
    double* o = out.data() + row * cols;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j) peak = std::max(peak, in[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - peak);
      z += o[j];
    }
    for (std::size_t j = 0; j < cols; ++j) o[j] /= z;
  }
  return a.graph().record("softmax_last", a.shape(), std::move(out), {a},
                          [a, cols](Graph& g, std::span<const double> go,
                                    std::span<const double> y) {
                            auto ga = g.grad(a);
                            for (std::size_t row = 0; row < y.size() / cols; ++row) {
                              const std::size_t base = row * cols;
                              double dot = 0.0;
                              for (std::size_t j = 0; j < cols; ++j) dot += go[base + j] * y[base + j];
                              for (std::size_t j = 0; j < cols; ++j) {
                                ga[base + j] += y[base + j] * (go[base + j] - dot);
                              }
                            }
                          });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Shape& s = logits.shape();
  if (s.size() != 2) throw ShapeError("softmax_cross_entropy: logits must be (N,K)");
  const std::size_t n = s[0];
  const std::size_t k = s[1];
  if (labels.size() != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for batch dimension " + std::to_string(n));
  }
  auto lv = logits.value();
  std::vector<double> probs(lv.size());
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= k) {
      throw std::out_of_range("softmax_cross_entropy: label out of range");
    }
    const double* row = lv.data() + r * k;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) peak = std::max(peak, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      probs[r * k + j] = std::exp(row[j] - peak);
      z += probs[r * k + j];
    }
    for (std::size_t j = 0; j < k; ++j) probs[r * k + j] /= z;
    loss += -(row[labels[r]] - peak - std::log(z));
  }
  loss /= static_cast<double>(n);
  std::vector<int> targets(labels.begin(), labels.end());
  return logits.graph().record(
      "softmax_cross_entropy", {1}, {loss}, {logits},
      [logits, probs = std::move(probs), targets = std::move(targets), n, k](
          Graph& g, std::span<const double> go, std::span<const double>) {
        auto gl = g.grad(logits);
        const double inv_n = go[0] / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
          for (std::size_t j = 0; j < k; ++j) {
            const double onehot = static_cast<int>(j) == targets[r] ? 1.0 : 0.0;
            gl[r * k + j] += (probs[r * k + j] - onehot) * inv_n;
          }
        }
      });
}

Var reshape(Var a, Shape shape) {
  if (element_count(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(a.shape()) + " as " +
                     shape_string(shape));
  }
  auto av = a.value();
  return a.graph().record("reshape", std::move(shape), std::vector<double>(av.begin(), av.end()),
                          {a}, [a](Graph& g, std::span<const double> go, std::span<const double>) {
                            auto ga = g.grad(a);
                            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
                          });
}

Var time_step(Var sequence, std::size_t t) {
  const Shape& s = sequence.shape();
  if (s.size() != 3) throw ShapeError("time_step: expected (N,T,C), got " + shape_string(s));
  if (t >= s[1]) throw ShapeError("time_step: frame index out of range");
  const std::size_t n = s[0];
  const std::size_t steps = s[1];
  const std::size_t c = s[2];
  auto sv = sequence.value();
  std::vector<double> out(n * c);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(sv.data() + (i * steps + t) * c, c, out.data() + i * c);
  }
  return sequence.graph().record(
      "time_step", {n, c}, std::move(out), {sequence},
      [sequence, n, steps, c, t](Graph& g, std::span<const double> go, std::span<const double>) {
        auto gs = g.grad(sequence);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < c; ++j) gs[(i * steps + t) * c + j] += go[i * c + j];
        }
      });
}

Var stack_steps(std::span<const Var> steps) {
  if (steps.empty()) throw ShapeError("stack_steps: no steps");
  const Shape& s0 = steps.front().shape();
  if (s0.size() != 2) throw ShapeError("stack_steps: steps must be (N,C)");
  const std::size_t n = s0[0];
  const std::size_t c = s0[1];
  const std::size_t count = steps.size();
  std::vector<double> out(n * count * c);
  for (std::size_t t = 0; t < count; ++t) {
    require_same_shape("stack_steps", steps.front(), steps[t]);
    auto v = steps[t].value();
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(v.data() + i * c, c, out.data() + (i * count + t) * c);
    }
  }
  std::vector<Var> inputs(steps.begin(), steps.end());
  return steps.front().graph().record(
      "stack_steps", {n, count, c}, std::move(out), inputs,
      [inputs, n, count, c](Graph& g, std::span<const double> go, std::span<const double>) {
        for (std::size_t t = 0; t < count; ++t) {
          if (!g.needs_grad(inputs[t])) continue;
          auto gi = g.grad(inputs[t]);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) gi[i * c + j] += go[(i * count + t) * c + j];
          }
        }
      });
}

}  // namespace srtg::tensor
