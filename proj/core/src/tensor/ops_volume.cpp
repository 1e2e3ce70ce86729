#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "srtg/tensor/ops.hpp"

namespace srtg::tensor {
namespace {

struct Volume {
  std::size_t n, c, t, h, w;
  std::size_t frame() const { return h * w; }
  std::size_t channel() const { return t * h * w; }
};

Volume volume_of(const char* op, Var v) {
  const Shape& s = v.shape();
  if (s.size() != 5) {
    throw ShapeError(std::string(op) + ": expected (N,C,T,H,W), got " + shape_string(s));
  }
  return {s[0], s[1], s[2], s[3], s[4]};
}

// Range [lo, hi) of output positions whose input tap o*stride + k - pad lies
// inside [0, extent).
struct TapRange {
  std::size_t lo, hi;
};

TapRange valid_outputs(std::size_t out_extent, std::size_t in_extent, std::size_t k,
                       std::size_t stride, std::size_t pad) {
  // o*stride + k >= pad  and  o*stride + k - pad <= in_extent - 1
  std::size_t lo = 0;
  if (pad > k) lo = (pad - k + stride - 1) / stride;
  std::size_t hi = 0;
  if (in_extent + pad > k) hi = (in_extent - 1 + pad - k) / stride + 1;
  hi = std::min(hi, out_extent);
  if (lo > hi) lo = hi;
  return {lo, hi};
}

}  // namespace

std::size_t conv_output_extent(std::size_t extent, std::size_t kernel, std::size_t stride,
                               std::size_t padding, const char* axis_name) {
  if (stride == 0) throw ShapeError(std::string("stride along ") + axis_name + " must be positive");
  if (kernel == 0) throw ShapeError(std::string("kernel along ") + axis_name + " must be positive");
  if (extent + 2 * padding < kernel) {
    throw ShapeError(std::string("non-positive output extent along ") + axis_name + ": padded " +
                     std::to_string(extent + 2 * padding) + " < kernel " + std::to_string(kernel));
  }
  return (extent + 2 * padding - kernel) / stride + 1;
}

Var conv3d(Var input, Var weights, std::optional<Var> bias, const Conv3dOptions& options) {
  const Volume in = volume_of("conv3d", input);
  const Shape& ws = weights.shape();
  if (ws.size() != 5) {
    throw ShapeError("conv3d: kernel must be (Cout,Cin,kT,kH,kW), got " + shape_string(ws));
  }
  if (ws[1] != in.c) {
    throw ShapeError("conv3d: input channels (dim 1) = " + std::to_string(in.c) +
                     " but kernel expects " + std::to_string(ws[1]));
  }
  const std::size_t cout = ws[0];
  const Extent3 k{ws[2], ws[3], ws[4]};
  const Extent3 s = options.stride;
  const Extent3 p = options.padding;
  if (bias && (bias->shape().size() != 1 || bias->dim(0) != cout)) {
    throw ShapeError("conv3d: bias must have " + std::to_string(cout) + " elements");
  }
  const std::size_t ot = conv_output_extent(in.t, k.t, s.t, p.t, "T (dim 2)");
  const std::size_t oh = conv_output_extent(in.h, k.h, s.h, p.h, "H (dim 3)");
  const std::size_t ow = conv_output_extent(in.w, k.w, s.w, p.w, "W (dim 4)");
  const std::size_t out_channel = ot * oh * ow;

  auto iv = input.value();
  auto wv = weights.value();
  std::vector<double> out(in.n * cout * out_channel, 0.0);

  // Visits every (output, input, weight) triple in a fixed order; `fn`
  // receives row pointers for one (co, ci, kt, kh, kw, ot, oh) combination.
  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t n = 0; n < in.n; ++n) {
      for (std::size_t co = 0; co < cout; ++co) {
        for (std::size_t ci = 0; ci < in.c; ++ci) {
          for (std::size_t kt = 0; kt < k.t; ++kt) {
            const TapRange rt = valid_outputs(ot, in.t, kt, s.t, p.t);
            for (std::size_t kh = 0; kh < k.h; ++kh) {
              const TapRange rh = valid_outputs(oh, in.h, kh, s.h, p.h);
              for (std::size_t kw = 0; kw < k.w; ++kw) {
                const TapRange rw = valid_outputs(ow, in.w, kw, s.w, p.w);
                const std::size_t widx = (((co * in.c + ci) * k.t + kt) * k.h + kh) * k.w + kw;
                for (std::size_t o_t = rt.lo; o_t < rt.hi; ++o_t) {
                  const std::size_t it = o_t * s.t + kt - p.t;
                  for (std::size_t o_h = rh.lo; o_h < rh.hi; ++o_h) {
                    const std::size_t ih = o_h * s.h + kh - p.h;
                    // May be negative; only taps j in [rw.lo, rw.hi) are read.
                    const std::ptrdiff_t in_row =
                        static_cast<std::ptrdiff_t>((n * in.c + ci) * in.channel() +
                                                    it * in.frame() + ih * in.w + kw) -
                        static_cast<std::ptrdiff_t>(p.w);
                    const std::size_t out_row =
                        (n * cout + co) * out_channel + (o_t * oh + o_h) * ow;
                    fn(widx, in_row, out_row, rw);
                  }
                }
              }
            }
          }
        }
      }
    }
  };

  if (bias) {
    auto bv = bias->value();
    for (std::size_t n = 0; n < in.n; ++n) {
      for (std::size_t co = 0; co < cout; ++co) {
        std::fill_n(out.begin() + (n * cout + co) * out_channel, out_channel, bv[co]);
      }
    }
  }
  {
    double* o = out.data();
    const double* x = iv.data();
    const double* wp = wv.data();
    const std::size_t sw = s.w;
    for_each_tap([&](std::size_t widx, std::ptrdiff_t in_row, std::size_t out_row, TapRange rw) {
      const double wgt = wp[widx];
      double* orow = o + out_row;
      for (std::size_t j = rw.lo; j < rw.hi; ++j) {
        orow[j] += wgt * x[in_row + static_cast<std::ptrdiff_t>(j * sw)];
      }
    });
  }

  std::vector<Var> inputs{input, weights};
  if (bias) inputs.push_back(*bias);
  const std::size_t n_batch = in.n;
  return input.graph().record(
      "conv3d", {in.n, cout, ot, oh, ow}, std::move(out), inputs,
      [input, weights, bias, for_each_tap, s, n_batch, cout, out_channel](
          Graph& g, std::span<const double> go, std::span<const double>) {
        const bool need_x = g.needs_grad(input);
        const bool need_w = g.needs_grad(weights);
        const double* x = g.value(input).data();
        const double* wp = g.value(weights).data();
        double* gx = need_x ? g.grad(input).data() : nullptr;
        double* gw = need_w ? g.grad(weights).data() : nullptr;
        const std::size_t sw = s.w;
        for_each_tap([&](std::size_t widx, std::ptrdiff_t in_row, std::size_t out_row,
                         TapRange rw) {
          const double* grow = go.data() + out_row;
          if (need_w) {
            double acc = 0.0;
            for (std::size_t j = rw.lo; j < rw.hi; ++j) {
              acc += grow[j] * x[in_row + static_cast<std::ptrdiff_t>(j * sw)];
            }
            gw[widx] += acc;
          }
          if (need_x) {
            const double wgt = wp[widx];
            for (std::size_t j = rw.lo; j < rw.hi; ++j) {
              gx[in_row + static_cast<std::ptrdiff_t>(j * sw)] += wgt * grow[j];
            }
          }
        });
        if (bias && g.needs_grad(*bias)) {
          auto gb = g.grad(*bias);
          for (std::size_t n = 0; n < n_batch; ++n) {
            for (std::size_t co = 0; co < cout; ++co) {
              const double* grow = go.data() + (n * cout + co) * out_channel;
              double acc = 0.0;
              for (std::size_t i = 0; i < out_channel; ++i) acc += grow[i];
              gb[co] += acc;
            }
          }
        }
      });
}

Var max_pool3d(Var input, Extent3 kernel, Extent3 stride, Extent3 padding) {
  const Volume in = volume_of("max_pool3d", input);
  const std::size_t ot = conv_output_extent(in.t, kernel.t, stride.t, padding.t, "T (dim 2)");
  const std::size_t oh = conv_output_extent(in.h, kernel.h, stride.h, padding.h, "H (dim 3)");
  const std::size_t ow = conv_output_extent(in.w, kernel.w, stride.w, padding.w, "W (dim 4)");
  auto iv = input.value();
  std::vector<double> out(in.n * in.c * ot * oh * ow);
  std::vector<std::size_t> argmax(out.size());
  std::size_t idx = 0;
  for (std::size_t nc = 0; nc < in.n * in.c; ++nc) {
    const std::size_t base = nc * in.channel();
    for (std::size_t a = 0; a < ot; ++a) {
      for (std::size_t b = 0; b < oh; ++b) {
        for (std::size_t c = 0; c < ow; ++c, ++idx) {
          bool found = false;
          double best = 0.0;
          std::size_t best_at = 0;
          for (std::size_t kt = 0; kt < kernel.t; ++kt) {
            const std::size_t it = a * stride.t + kt;
            if (it < padding.t || it - padding.t >= in.t) continue;
            for (std::size_t kh = 0; kh < kernel.h; ++kh) {
              const std::size_t ih = b * stride.h + kh;
              if (ih < padding.h || ih - padding.h >= in.h) continue;
              for (std::size_t kw = 0; kw < kernel.w; ++kw) {
                const std::size_t iw = c * stride.w + kw;
                if (iw < padding.w || iw - padding.w >= in.w) continue;
                const std::size_t at = base + (it - padding.t) * in.frame() +
                                       (ih - padding.h) * in.w + (iw - padding.w);
                if (!found || iv[at] > best) {
                  best = iv[at];
                  best_at = at;
                  found = true;
                }
              }
            }
          }
          if (!found) throw ShapeError("max_pool3d: window lies entirely in padding");
          out[idx] = best;
          argmax[idx] = best_at;
        }
      }
    }
  }
  return input.graph().record(
      "max_pool3d", {in.n, in.c, ot, oh, ow}, std::move(out), {input},
      [input, argmax = std::move(argmax)](Graph& g, std::span<const double> go,
                                          std::span<const double>) {
        auto gi = g.grad(input);
        for (std::size_t i = 0; i < go.size(); ++i) gi[argmax[i]] += go[i];
      });
}

Var spatial_avg_pool(Var volume) {
  const Volume in = volume_of("spatial_avg_pool", volume);
  auto v = volume.value();
  const double inv = 1.0 / static_cast<double>(in.frame());
  std::vector<double> out(in.n * in.t * in.c);
  for (std::size_t n = 0; n < in.n; ++n) {
    for (std::size_t c = 0; c < in.c; ++c) {
      for (std::size_t t = 0; t < in.t; ++t) {
        const double* f = v.data() + (n * in.c + c) * in.channel() + t * in.frame();
        double s = 0.0;
        for (std::size_t i = 0; i < in.frame(); ++i) s += f[i];
        out[(n * in.t + t) * in.c + c] = s * inv;
      }
    }
  }
  return volume.graph().record(
      "spatial_avg_pool", {in.n, in.t, in.c}, std::move(out), {volume},
      [volume, in, inv](Graph& g, std::span<const double> go, std::span<const double>) {
        auto gv = g.grad(volume);
        for (std::size_t n = 0; n < in.n; ++n) {
          for (std::size_t c = 0; c < in.c; ++c) {
            for (std::size_t t = 0; t < in.t; ++t) {
              const double d = go[(n * in.t + t) * in.c + c] * inv;
              double* f = gv.data() + (n * in.c + c) * in.channel() + t * in.frame();
              for (std::size_t i = 0; i < in.frame(); ++i) f[i] += d;
            }
          }
        }
      });
}

Var global_avg_pool(Var volume) {
  const Volume in = volume_of("global_avg_pool", volume);
  auto v = volume.value();
  const double inv = 1.0 / static_cast<double>(in.channel());
  std::vector<double> out(in.n * in.c);
  for (std::size_t nc = 0; nc < in.n * in.c; ++nc) {
    const double* f = v.data() + nc * in.channel();
    double s = 0.0;
    for (std::size_t i = 0; i < in.channel(); ++i) s += f[i];
    out[nc] = s * inv;
  }
  return volume.graph().record(
      "global_avg_pool", {in.n, in.c}, std::move(out), {volume},
      [volume, in, inv](Graph& g, std::span<const double> go, std::span<const double>) {
        auto gv = g.grad(volume);
        for (std::size_t nc = 0; nc < in.n * in.c; ++nc) {
          double* f = gv.data() + nc * in.channel();
          const double d = go[nc] * inv;
          for (std::size_t i = 0; i < in.channel(); ++i) f[i] += d;
        }
      });
}

Var batch_norm(Var x, Var gamma, Var beta, BatchNormState& state, bool training) {
  const Shape& s = x.shape();
  if (s.size() < 2) throw ShapeError("batch_norm: expected (N,C,...)");
  const std::size_t batch = s[0];
  const std::size_t channels = s[1];
  const std::size_t inner = x.size() / (batch * channels);
  if (gamma.size() != channels || beta.size() != channels) {
    throw ShapeError("batch_norm: affine parameters must have " + std::to_string(channels) +
                     " elements (dim 1)");
  }
  if (state.running_mean.size() != channels || state.running_var.size() != channels) {
    throw ShapeError("batch_norm: running statistics sized for a different channel count");
  }
  const std::size_t count = batch * inner;
  auto xv = x.value();
  auto gv = gamma.value();
  auto bv = beta.value();
  std::vector<double> mean(channels), inv_std(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    if (training) {
      double m = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double* row = xv.data() + (n * channels + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) m += row[i];
      }
      m /= static_cast<double>(count);
      double var = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double* row = xv.data() + (n * channels + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) var += (row[i] - m) * (row[i] - m);
      }
      const double biased = var / static_cast<double>(count);
      const double unbiased = count > 1 ? var / static_cast<double>(count - 1) : biased;
      state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * m;
      state.running_var[c] =
          (1.0 - state.momentum) * state.running_var[c] + state.momentum * unbiased;
      mean[c] = m;
      inv_std[c] = 1.0 / std::sqrt(biased + state.eps);
    } else {
      mean[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.eps);
    }
  }
  std::vector<double> xhat(xv.size());
  std::vector<double> out(xv.size());
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t base = (n * channels + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        xhat[base + i] = (xv[base + i] - mean[c]) * inv_std[c];
        out[base + i] = gv[c] * xhat[base + i] + bv[c];
      }
    }
  }
  return x.graph().record(
      "batch_norm", s, std::move(out), {x, gamma, beta},
      [x, gamma, beta, training, batch, channels, inner, count, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Graph& g, std::span<const double> go,
                                     std::span<const double>) {
        auto gam = g.value(gamma);
        std::vector<double> sum_dy(channels, 0.0), sum_dy_xhat(channels, 0.0);
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t base = (n * channels + c) * inner;
            for (std::size_t i = 0; i < inner; ++i) {
              sum_dy[c] += go[base + i];
              sum_dy_xhat[c] += go[base + i] * xhat[base + i];
            }
          }
        }
        if (g.needs_grad(gamma)) {
          auto gg = g.grad(gamma);
          for (std::size_t c = 0; c < channels; ++c) gg[c] += sum_dy_xhat[c];
        }
        if (g.needs_grad(beta)) {
          auto gb = g.grad(beta);
          for (std::size_t c = 0; c < channels; ++c) gb[c] += sum_dy[c];
        }
        if (!g.needs_grad(x)) return;
        auto gx = g.grad(x);
        const double m = static_cast<double>(count);
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t base = (n * channels + c) * inner;
            const double k = gam[c] * inv_std[c];
            if (training) {
              const double mean_dy = sum_dy[c] / m;
              const double mean_dy_xhat = sum_dy_xhat[c] / m;
              for (std::size_t i = 0; i < inner; ++i) {
                gx[base + i] += k * (go[base + i] - mean_dy - xhat[base + i] * mean_dy_xhat);
              }
            } else {
              for (std::size_t i = 0; i < inner; ++i) gx[base + i] += k * go[base + i];
            }
          }
        }
      });
}

}  // namespace srtg::tensor
