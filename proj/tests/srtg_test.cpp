#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "srtg/temporal/gate_log.hpp"
#include "srtg/temporal/unit.hpp"
#include "srtg/tensor/ops.hpp"
#include "support/oracles.hpp"

using namespace srtg::temporal;
using srtg::tensor::Shape;

namespace {

oracle::LstmLayer to_oracle(const LstmLayerParams& p) {
  auto v = [](const Tensor& t) { return t.values(); };
  return {p.input_size,    p.hidden_size,   v(p.forget_w), v(p.input_w),
          v(p.candidate_w), v(p.output_w),   v(p.forget_b), v(p.input_b),
          v(p.candidate_b), v(p.output_b)};
}

void randomize(LstmParams& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto& [name, t] : p.named_parameters("")) {
    for (double& v : t->data()) v = d(rng);
  }
}

oracle::Frames frames_of(const TemporalEmbedding& e) {
  oracle::Frames f;
  for (std::size_t t = 0; t < e.frames(); ++t) f.emplace_back(e.frame(t).begin(), e.frame(t).end());
  return f;
}

TemporalEmbedding random_embedding(std::size_t frames, std::size_t channels, double scale,
                                   std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(frames * channels);
  for (double& x : v) x = d(rng);
  return {frames, channels, std::move(v)};
}

double min_pairwise_distance(const TemporalEmbedding& e) {
  double best = INFINITY;
  for (std::size_t i = 0; i < e.frames(); ++i)
    for (std::size_t j = i + 1; j < e.frames(); ++j)
      best = std::min(best, std::sqrt(squared_distance(e.frame(i), e.frame(j))));
  return best;
}

Tensor random_volume(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = d(rng);
  return t;
}

}  // namespace

TEST(Squeeze, ConstantPerFrame) {
  Graph g;
  Tensor x({1, 2, 3, 2, 2});
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t i = 0; i < 4; ++i) x[(c * 3 + t) * 4 + i] = 10.0 * c + t;
  Var e = squeeze(g.constant(x));
  ASSERT_EQ(e.shape(), (Shape{1, 3, 2}));
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_DOUBLE_EQ(e.value()[t * 2 + c], 10.0 * c + t);
}

TEST(Squeeze, MatchesAveragingOracle) {
  std::mt19937_64 rng(20);
  Tensor x = random_volume({2, 3, 4, 5, 3}, rng);
  const auto expect = oracle::spatial_mean(x.values(), {2, 3, 4, 5, 3});
  Graph g;
  Var e = squeeze(g.constant(x));
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(e.value()[i], expect[i], 1e-12);
}

TEST(LstmCell, ZeroParamsGiveZeroHidden) {
  LstmParams p(3, 1);
  for (auto& [n, t] : p.named_parameters("")) std::fill(t->data().begin(), t->data().end(), 0.0);
  Graph g;
  auto layer = bind(g, p.layer(0));
  auto s = lstm_cell_step(g.constant({1, 3}, {0.3, -2.0, 5.0}), g.constant(Tensor({1, 3})),
                          g.constant(Tensor({1, 3})), layer);
  for (double v : s.hidden.value()) EXPECT_DOUBLE_EQ(v, 0.0);
  for (double v : s.cell.value()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(LstmCell, SaturatedForgetKeepsCell) {
  LstmParams p(2, 1);
  for (auto& [n, t] : p.named_parameters("")) std::fill(t->data().begin(), t->data().end(), 0.0);
  std::fill(p.layer(0).forget_b.data().begin(), p.layer(0).forget_b.data().end(), 50.0);
  Graph g;
  auto layer = bind(g, p.layer(0));
  auto s = lstm_cell_step(g.constant({1, 2}, {0.7, 0.1}), g.constant(Tensor({1, 2})),
                          g.constant({1, 2}, {1.25, -0.5}), layer);
  EXPECT_NEAR(s.cell.value()[0], 1.25, 1e-12);
  EXPECT_NEAR(s.cell.value()[1], -0.5, 1e-12);
}

TEST(LstmCell, DimensionMismatch) {
  LstmParams p(2, 1);
  Graph g;
  auto layer = bind(g, p.layer(0));
  EXPECT_THROW(lstm_cell_step(g.constant(Tensor({1, 3})), g.constant(Tensor({1, 2})),
                              g.constant(Tensor({1, 2})), layer),
               srtg::tensor::ShapeError);
}

TEST(LstmCell, ScalarOracleT3C2) {
  std::mt19937_64 rng(21);
  LstmParams p(2, 1);
  randomize(p, rng);
  Tensor x = random_volume({1, 3, 2}, rng);
  Graph g;
  Var seq = g.constant(x);
  auto layer = bind(g, p.layer(0));
  Var h = g.constant(Tensor({1, 2})), c = g.constant(Tensor({1, 2}));
  std::vector<double> oh(2, 0.0), oc(2, 0.0);
  const auto o = to_oracle(p.layer(0));
  for (std::size_t t = 0; t < 3; ++t) {
    auto s = lstm_cell_step(srtg::tensor::time_step(seq, t), h, c, layer);
    h = s.hidden;
    c = s.cell;
    oracle::lstm_step(o, {x[t * 2], x[t * 2 + 1]}, oh, oc);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(h.value()[i], oh[i], 1e-12);
      EXPECT_NEAR(c.value()[i], oc[i], 1e-12);
    }
  }
}

TEST(Recursion, ZeroParamsGiveZeroSequence) {
  LstmParams p(3);
  for (auto& [n, t] : p.named_parameters("")) std::fill(t->data().begin(), t->data().end(), 0.0);
  std::mt19937_64 rng(22);
  Graph g;
  Var out = recursion(g.constant(random_volume({2, 5, 3}, rng)), p);
  for (double v : out.value()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Recursion, SingleFrameIsOneStepPerLayer) {
  std::mt19937_64 rng(23);
  LstmParams p(3);
  randomize(p, rng);
  Tensor x = random_volume({1, 1, 3}, rng);
  Graph g;
  Var out = recursion(g.constant(x), p);
  Var h = g.constant({1, 3}, x.values());
  for (std::size_t l = 0; l < 2; ++l) {
    h = lstm_cell_step(h, g.constant(Tensor({1, 3})), g.constant(Tensor({1, 3})), bind(g, p.layer(l))).hidden;
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out.value()[i], h.value()[i]);
}

TEST(Recursion, TwoLayerOracleT4C3) {
  std::mt19937_64 rng(24);
  LstmParams p(3);
  randomize(p, rng);
  Tensor x = random_volume({2, 4, 3}, rng);
  Graph g;
  Var out = recursion(g.constant(x), p);
  const std::vector<oracle::LstmLayer> layers{to_oracle(p.layer(0)), to_oracle(p.layer(1))};
  for (std::size_t n = 0; n < 2; ++n) {
    oracle::Frames seq;
    for (std::size_t t = 0; t < 4; ++t)
      seq.push_back({x[(n * 4 + t) * 3], x[(n * 4 + t) * 3 + 1], x[(n * 4 + t) * 3 + 2]});
    const auto expect = oracle::lstm_sequence(layers, seq);
    for (std::size_t t = 0; t < 4; ++t)
      for (std::size_t c = 0; c < 3; ++c)
        EXPECT_NEAR(out.value()[(n * 4 + t) * 3 + c], expect[t][c], 1e-12);
  }
}

TEST(LstmInit, RangesAndForgetBias) {
  std::mt19937_64 rng(25);
  LstmParams p(4);
  p.initialize(rng);
  for (std::size_t l = 0; l < 2; ++l) {
    for (double v : p.layer(l).candidate_w.data()) EXPECT_LE(std::abs(v), 0.5);
    for (double v : p.layer(l).forget_b.data()) EXPECT_EQ(v, 1.0);
    for (double v : p.layer(l).input_b.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(SoftNearestNeighbor, DominantWeight) {
  const TemporalEmbedding b{{0.0}, {10.0}};
  const std::vector<double> q{0.0};
  EXPECT_NEAR(soft_nearest_neighbor(q, b)[0], 0.0, 1e-12);
}

TEST(SoftNearestNeighbor, HandEvaluatedFixture) {
  const TemporalEmbedding b{{0.0}, {1.0}};
  const std::vector<double> q{0.0};
  const auto z = soft_match_weights(q, b);
  EXPECT_NEAR(z[0], 0.73106, 1e-5);
  EXPECT_NEAR(z[1], 0.26894, 1e-5);
  const auto a = soft_nearest_neighbor(q, b);
  EXPECT_NEAR(a[0], 0.26894, 1e-5);
  EXPECT_EQ(nearest_frame_index(a, b), 0u);
  EXPECT_NEAR(squared_distance(a, b.frame(0)), 0.0723, 1e-4);
  EXPECT_NEAR(squared_distance(a, b.frame(1)), 0.5345, 1e-4);
}

TEST(SoftNearestNeighbor, IdenticalFramesGiveUniformWeights) {
  const TemporalEmbedding b{{0.5, -1.0}, {0.5, -1.0}, {0.5, -1.0}};
  const std::vector<double> q{0.5, -1.0};
  for (double z : soft_match_weights(q, b)) EXPECT_DOUBLE_EQ(z, 1.0 / 3.0);
  const auto a = soft_nearest_neighbor(q, b);
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  EXPECT_DOUBLE_EQ(a[1], -1.0);
}

TEST(NearestFrameIndex, ExactAndTie) {
  const TemporalEmbedding b{{0.0}, {2.0}, {5.0}};
  const std::vector<double> at2{5.0};
  EXPECT_EQ(nearest_frame_index(at2, b), 2u);
  const std::vector<double> mid{1.0};
  EXPECT_EQ(nearest_frame_index(mid, b), 0u);
}

TEST(CycleConsistent, SelfWithDistinctFrames) {
  const TemporalEmbedding a{{0.0, 0.0}, {3.0, 0.0}, {0.0, 3.0}};
  const auto d = cycle_consistent(a, a);
  EXPECT_EQ(d.verdict, Verdict::kOpen);
  EXPECT_EQ(d.forward_matches, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(d.backward_matches, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(CycleConsistent, ReversalCloses) {
  const TemporalEmbedding a{{0.0}, {10.0}};
  const TemporalEmbedding b{{10.0}, {0.0}};
  const auto d = cycle_consistent(a, b);
  EXPECT_EQ(d.verdict, Verdict::kClosed);
  EXPECT_EQ(d.forward_matches, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(d.backward_matches, (std::vector<std::size_t>{1, 0}));
}

TEST(CycleConsistent, SingleFrameAlwaysOpen) {
  std::mt19937_64 rng(26);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(cycle_consistent(random_embedding(1, 4, 1.0, rng), random_embedding(1, 4, 5.0, rng)).verdict,
              Verdict::kOpen);
  }
}

TEST(CycleConsistent, CloselySpacedFramesAreNotSelfConsistent) {
  // Unit-temperature soft matching pulls every query toward the centroid.
  const TemporalEmbedding e{{0.0}, {0.1}, {0.2}};
  const auto d = cycle_consistent(e, e);
  EXPECT_EQ(d.verdict, Verdict::kClosed);
  EXPECT_EQ(d.forward_matches[0], 1u);
}

TEST(CycleConsistent, ShapeMismatch) {
  const TemporalEmbedding a{{0.0}, {1.0}};
  const TemporalEmbedding b{{0.0}, {1.0}, {2.0}};
  const TemporalEmbedding c{{0.0, 1.0}, {1.0, 0.0}};
  EXPECT_THROW(cycle_consistent(a, b), srtg::tensor::ShapeError);
  EXPECT_THROW(cycle_consistent(a, c), srtg::tensor::ShapeError);
}

TEST(CycleConsistent, MatchesBruteForceOracle) {
  std::mt19937_64 rng(27);
  std::uniform_int_distribution<std::size_t> frames(1, 8), channels(1, 16), kind(0, 3);
  const double scales[] = {0.3, 1.0, 2.0, 4.0};
  int open = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t t = frames(rng), c = channels(rng);
    const double s = scales[kind(rng)];
    const auto a = random_embedding(t, c, s, rng);
    TemporalEmbedding b = a;
    switch (kind(rng)) {
      case 0: b = random_embedding(t, c, s, rng); break;
      case 1: {
        const auto noise = random_embedding(t, c, 0.2 * s, rng);
        std::vector<double> v(a.values().begin(), a.values().end());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += noise.values()[i];
        b = TemporalEmbedding(t, c, v);
        break;
      }
      case 2: {
        std::vector<std::size_t> order(t);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        b = a.permuted(order);
        break;
      }
      default: break;
    }
    const auto d = cycle_consistent(a, b);
    const auto o = oracle::gate(frames_of(a), frames_of(b));
    ASSERT_EQ(d.verdict == Verdict::kOpen, o.open) << "trial " << trial;
    ASSERT_EQ(d.forward_matches, o.fwd) << "trial " << trial;
    ASSERT_EQ(d.backward_matches, o.bwd) << "trial " << trial;
    open += o.open;
  }
  EXPECT_GT(open, 50);
  EXPECT_LT(open, 450);
}

TEST(GateProperties, Symmetry) {
  std::mt19937_64 rng(28);
  std::uniform_int_distribution<std::size_t> frames(1, 8), channels(1, 16);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = frames(rng), c = channels(rng);
    const auto a = random_embedding(t, c, 1.5, rng);
    auto b = a;
    if (trial % 2) b = random_embedding(t, c, 1.5, rng);
    EXPECT_EQ(cycle_consistent(a, b).verdict, cycle_consistent(b, a).verdict);
  }
}

TEST(GateProperties, SelfConsistentWhenWellSeparated) {
  // Min pairwise distance >= 2 bounds every soft match within 0.26 of its
  // query for T <= 8, closer than half the gap to any other frame.
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<std::size_t> frames(2, 8), channels(1, 16);
  int trials = 0;
  while (trials < 200) {
    const auto e = random_embedding(frames(rng), channels(rng), 4.0, rng);
    if (min_pairwise_distance(e) < 2.0) continue;
    ++trials;
    const auto d = cycle_consistent(e, e);
    ASSERT_EQ(d.verdict, Verdict::kOpen);
  }
}

TEST(GateProperties, PermutationDetected) {
  std::mt19937_64 rng(30);
  std::uniform_int_distribution<std::size_t> frames(2, 8), channels(1, 16);
  const double scales[] = {0.01, 0.3, 1.0, 3.0};
  for (int trial = 0; trial < 400; ++trial) {
    const auto e = random_embedding(frames(rng), channels(rng), scales[trial % 4], rng);
    if (min_pairwise_distance(e) <= 1e-3) continue;
    std::vector<std::size_t> order(e.frames());
    std::iota(order.begin(), order.end(), 0);
    do std::shuffle(order.begin(), order.end(), rng);
    while (std::is_sorted(order.begin(), order.end()));
    EXPECT_EQ(cycle_consistent(e, e.permuted(order)).verdict, Verdict::kClosed);
  }
}

TEST(GateProperties, TranslationInvariantWeights) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::size_t> frames(1, 8), channels(1, 16);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = frames(rng), c = channels(rng);
    const auto a = random_embedding(t, c, 1.0, rng), b = random_embedding(t, c, 1.0, rng);
    std::vector<double> k(c);
    for (double& v : k) v = shift(rng);
    const auto at = a.translated(k), bt = b.translated(k);
    for (std::size_t f = 0; f < t; ++f) {
      const auto z = soft_match_weights(a.frame(f), b);
      const auto zt = soft_match_weights(at.frame(f), bt);
      for (std::size_t i = 0; i < t; ++i) EXPECT_NEAR(z[i], zt[i], 1e-12);
    }
  }
}

TEST(Fuse, MultiplicativeZeroHalves) {
  std::mt19937_64 rng(32);
  Tensor m = random_volume({1, 2, 3, 2, 2}, rng);
  Graph g;
  Var out = fuse(g.constant(m), g.constant(Tensor({1, 3, 2})), FusionMode::kMultiplicative);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_DOUBLE_EQ(out.value()[i], 0.5 * m[i]);
}

TEST(Fuse, AdditiveZeroIsIdentity) {
  std::mt19937_64 rng(33);
  Tensor m = random_volume({1, 2, 3, 2, 2}, rng);
  Graph g;
  Var out = fuse(g.constant(m), g.constant(Tensor({1, 3, 2})), FusionMode::kAdditive);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(out.value()[i], m[i]);
}

TEST(Fuse, MatchesBroadcastLoop) {
  std::mt19937_64 rng(34);
  const std::size_t n = 2, c = 3, t = 4, hw = 6;
  Tensor m = random_volume({n, c, t, 2, 3}, rng), r = random_volume({n, t, c}, rng);
  Graph g;
  Var mul = fuse(g.constant(m), g.constant(r), FusionMode::kMultiplicative);
  Var add = fuse(g.constant(m), g.constant(r), FusionMode::kAdditive);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t f = 0; f < t; ++f)
        for (std::size_t i = 0; i < hw; ++i) {
          const std::size_t idx = ((b * c + ch) * t + f) * hw + i;
          const double rv = r[(b * t + f) * c + ch];
          EXPECT_NEAR(mul.value()[idx], m[idx] * oracle::sig(rv), 1e-15);
          EXPECT_NEAR(add.value()[idx], m[idx] + rv, 1e-15);
        }
}

TEST(Fuse, ShapeMismatch) {
  Graph g;
  EXPECT_THROW(fuse(g.constant(Tensor({1, 2, 3, 2, 2})), g.constant(Tensor({1, 4, 2})),
                    FusionMode::kAdditive),
               srtg::tensor::ShapeError);
  EXPECT_THROW(fuse(g.constant(Tensor({1, 2, 3, 2, 2})), g.constant(Tensor({1, 3, 3})),
                    FusionMode::kAdditive),
               srtg::tensor::ShapeError);
}

TEST(SrtgUnit, ZeroWeightLstmClosesGate) {
  std::mt19937_64 rng(35);
  LstmParams p(3);
  for (auto& [n, t] : p.named_parameters("")) std::fill(t->data().begin(), t->data().end(), 0.0);
  Tensor x = random_volume({2, 3, 4, 2, 2}, rng, -3.0, 3.0);
  Graph g;
  auto out = srtg_unit(g.constant(x), p, {true, FusionMode::kMultiplicative});
  for (const auto& d : out.decisions) {
    EXPECT_EQ(d.verdict, Verdict::kClosed);
    EXPECT_EQ(d.backward_matches, (std::vector<std::size_t>(4, d.backward_matches[0])));
  }
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(out.output.value()[i], x[i]);
}

TEST(SrtgUnit, InactiveAdditiveZeroIsIdentity) {
  std::mt19937_64 rng(36);
  LstmParams p(3);
  for (auto& [n, t] : p.named_parameters("")) std::fill(t->data().begin(), t->data().end(), 0.0);
  Tensor x = random_volume({2, 3, 4, 2, 2}, rng);
  Graph g;
  auto out = srtg_unit(g.constant(x), p, {false, FusionMode::kAdditive});
  for (const auto& d : out.decisions) EXPECT_EQ(d.verdict, Verdict::kInactiveFused);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(out.output.value()[i], x[i]);
}

TEST(SrtgUnit, SingleFrameAlwaysFuses) {
  std::mt19937_64 rng(37);
  LstmParams p(2);
  p.initialize(rng);
  Tensor x = random_volume({3, 2, 1, 3, 3}, rng);
  Graph g;
  auto gated = srtg_unit(g.constant(x), p, {true, FusionMode::kMultiplicative});
  auto always = srtg_unit(g.constant(x), p, {false, FusionMode::kMultiplicative});
  for (const auto& d : gated.decisions) EXPECT_EQ(d.verdict, Verdict::kOpen);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_EQ(gated.output.value()[i], always.output.value()[i]);
}

TEST(SrtgUnit, ClosedClipIsBitIdenticalPerClip) {
  std::mt19937_64 rng(38);
  int closed_seen = 0;
  for (int trial = 0; trial < 100; ++trial) {
    LstmParams p(3);
    p.initialize(rng);
    Tensor x = random_volume({3, 3, 4, 2, 2}, rng, -2.0, 2.0);
    Graph g;
    auto out = srtg_unit(g.constant(x), p, {true, FusionMode::kMultiplicative});
    const std::size_t per_clip = x.size() / 3;
    for (std::size_t b = 0; b < 3; ++b) {
      if (out.decisions[b].verdict != Verdict::kClosed) continue;
      ++closed_seen;
      for (std::size_t i = b * per_clip; i < (b + 1) * per_clip; ++i)
        ASSERT_EQ(out.output.value()[i], x[i]);
    }
  }
  EXPECT_GT(closed_seen, 0);
}

TEST(SrtgUnit, ChannelMismatch) {
  LstmParams p(4);
  Graph g;
  EXPECT_THROW(srtg_unit(g.constant(Tensor({1, 3, 2, 2, 2})), p, {}), srtg::tensor::ShapeError);
}

TEST(GateLog, JsonRoundTripAndRates) {
  GateDecision open{Verdict::kOpen, true, true, {0, 1}, {0, 1}};
  GateDecision closed{Verdict::kClosed, false, true, {1, 1}, {0, 1}};
  GateDecision inactive{Verdict::kInactiveFused, false, false, {}, {}};
  std::vector<GateRecord> records{{"a.srtg", 0, open}, {"a.srtg", 1, closed}, {"b.srtg", 0, inactive}};
  const std::string line = to_json_line(records[1]);
  EXPECT_EQ(line,
            R"({"layer":"a.srtg","clip_id":1,"verdict":"closed","match_indices_fwd":[1,1],"match_indices_bwd":[0,1]})");
  std::stringstream ss;
  write_json_lines(ss, records);
  const auto back = read_json_lines(ss);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].decision.verdict, Verdict::kOpen);
  EXPECT_EQ(back[1], records[1]);
  const auto rates = open_rates(records);
  EXPECT_DOUBLE_EQ(rates.at("a.srtg"), 0.5);
  EXPECT_DOUBLE_EQ(rates.at("b.srtg"), 1.0);
}
