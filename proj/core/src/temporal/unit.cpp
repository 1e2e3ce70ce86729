#include "srtg/temporal/unit.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "srtg/tensor/ops.hpp"

namespace srtg::temporal {

namespace t = srtg::tensor;

std::string_view to_string(FusionMode mode) {
  return mode == FusionMode::kAdditive ? "additive" : "multiplicative";
}

FusionMode fusion_mode_from_string(std::string_view s) {
  if (s == "multiplicative") return FusionMode::kMultiplicative;
  if (s == "additive") return FusionMode::kAdditive;
  throw std::invalid_argument("unknown fusion mode '" + std::string(s) + "'");
}

Var squeeze(Var volume) { return t::spatial_avg_pool(volume); }

TemporalEmbedding clip_embedding(Var sequence, std::size_t clip) {
  const t::Shape& s = sequence.shape();
  if (s.size() != 3) throw t::ShapeError("clip_embedding: expected (N,T,C)");
  if (clip >= s[0]) throw std::out_of_range("clip_embedding: clip index out of range");
  const std::size_t stride = s[1] * s[2];
  auto v = sequence.value().subspan(clip * stride, stride);
  return {s[1], s[2], std::vector<double>(v.begin(), v.end())};
}

Var fuse(Var main, Var recurrent, FusionMode mode, const std::vector<bool>& fused_clips) {
  const t::Shape& ms = main.shape();
  const t::Shape& rs = recurrent.shape();
  if (ms.size() != 5) throw t::ShapeError("fuse: main stream must be (N,C,T,H,W)");
  if (rs.size() != 3) throw t::ShapeError("fuse: recurrent stream must be (N,T,C)");
  const std::size_t n = ms[0], c = ms[1], frames = ms[2], plane = ms[3] * ms[4];
  if (rs[0] != n) throw t::ShapeError("fuse: batch (dim 0) differs");
  if (rs[1] != frames) {
    throw t::ShapeError("fuse: recurrent T (dim 1) = " + std::to_string(rs[1]) +
                        " but main T = " + std::to_string(frames));
  }
  if (rs[2] != c) {
    throw t::ShapeError("fuse: recurrent C (dim 2) = " + std::to_string(rs[2]) +
                        " but main C = " + std::to_string(c));
  }
  std::vector<bool> mask = fused_clips.empty() ? std::vector<bool>(n, true) : fused_clips;
  if (mask.size() != n) throw t::ShapeError("fuse: clip mask length differs from batch");

  auto mv = main.value();
  auto rv = recurrent.value();
  // Per (n, t, c) factor or offset, precomputed once.
  std::vector<double> coeff(rv.size());
  for (std::size_t i = 0; i < rv.size(); ++i) {
    if (mode == FusionMode::kMultiplicative) {
      coeff[i] = rv[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-rv[i]))
                              : std::exp(rv[i]) / (1.0 + std::exp(rv[i]));
    } else {
      coeff[i] = rv[i];
    }
  }
  std::vector<double> out(mv.begin(), mv.end());
  for (std::size_t b = 0; b < n; ++b) {
    if (!mask[b]) continue;
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t f = 0; f < frames; ++f) {
        const double k = coeff[(b * frames + f) * c + ch];
        double* o = out.data() + ((b * c + ch) * frames + f) * plane;
        if (mode == FusionMode::kMultiplicative) {
          for (std::size_t i = 0; i < plane; ++i) o[i] *= k;
        } else {
          for (std::size_t i = 0; i < plane; ++i) o[i] += k;
        }
      }
    }
  }
  return main.graph().record(
      "fuse", ms, std::move(out), {main, recurrent},
      [main, recurrent, mode, mask = std::move(mask), coeff = std::move(coeff), n, c, frames,
       plane](t::Graph& g, std::span<const double> go, std::span<const double>) {
        const bool need_main = g.needs_grad(main);
        const bool need_rec = g.needs_grad(recurrent);
        double* gm = need_main ? g.grad(main).data() : nullptr;
        double* gr = need_rec ? g.grad(recurrent).data() : nullptr;
        auto mv = g.value(main);
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t f = 0; f < frames; ++f) {
              const std::size_t ri = (b * frames + f) * c + ch;
              const std::size_t base = ((b * c + ch) * frames + f) * plane;
              if (!mask[b]) {
                if (need_main) {
                  for (std::size_t i = 0; i < plane; ++i) gm[base + i] += go[base + i];
                }
                continue;
              }
              if (mode == FusionMode::kMultiplicative) {
                const double k = coeff[ri];
                double dk = 0.0;
                for (std::size_t i = 0; i < plane; ++i) {
                  if (need_main) gm[base + i] += go[base + i] * k;
                  dk += go[base + i] * mv[base + i];
                }
                if (need_rec) gr[ri] += dk * k * (1.0 - k);
              } else {
                double dk = 0.0;
                for (std::size_t i = 0; i < plane; ++i) {
                  if (need_main) gm[base + i] += go[base + i];
                  dk += go[base + i];
                }
                if (need_rec) gr[ri] += dk;
              }
            }
          }
        }
      });
}

SrtgOutput srtg_unit(Var input, LstmParams& params, const SrtgOptions& options) {
  const t::Shape& s = input.shape();
  if (s.size() != 5) throw t::ShapeError("srtg_unit: expected (N,C,T,H,W)");
  if (s[1] != params.channels()) {
    throw t::ShapeError("srtg_unit: input channels (dim 1) = " + std::to_string(s[1]) +
                        " but the LSTM hidden size is " + std::to_string(params.channels()));
  }
  Var pooled = squeeze(input);
  Var filtered = recursion(pooled, params);

  SrtgOutput result;
  const std::size_t batch = s[0];
  result.decisions.reserve(batch);
  std::vector<bool> fused(batch, true);
  for (std::size_t b = 0; b < batch; ++b) {
    if (!options.gate_active) {
      GateDecision d;
      d.verdict = Verdict::kInactiveFused;
      result.decisions.push_back(std::move(d));
      continue;
    }
    GateDecision d = cycle_consistent(clip_embedding(pooled, b), clip_embedding(filtered, b));
    fused[b] = d.verdict == Verdict::kOpen;
    result.decisions.push_back(std::move(d));
  }
  result.output = fuse(input, filtered, options.fusion, fused);
  return result;
}

}  // namespace srtg::temporal
