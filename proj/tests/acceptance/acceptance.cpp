// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any line fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cli.hpp"
#include "srtg/backbone/network.hpp"
#include "srtg/harness/config.hpp"
#include "srtg/harness/grad_suite.hpp"
#include "srtg/harness/synthetic.hpp"
#include "srtg/harness/trainer.hpp"
#include "srtg/temporal/embedding.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace srtg;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances.
constexpr double kGmacsTarget = 110.48;
constexpr double kGmacsRelTol = 0.02;
constexpr double kOverheadLo = 0.0005, kOverheadHi = 0.004;
constexpr double kCountSeconds = 5.0;
constexpr double kFixtureValue = 0.26894, kFixtureTol = 1e-5;
constexpr std::size_t kOraclePairs = 500;
constexpr double kGradTol = 1e-4;
constexpr std::size_t kPropertyTrials = 100;
constexpr double kDistinctDelta = 1e-3;
constexpr double kShiftTol = 1e-12;
constexpr double kToyTop1 = 0.90;
constexpr std::size_t kToyEpochs = 30;
constexpr double kToySeconds = 15 * 60;

int failures = 0;

void report(bool pass, const std::string& id, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::fprintf(stderr, "srtg %s: %s", args[0].c_str(), err.str().c_str());
  return code;
}

temporal::TemporalEmbedding gaussian(std::size_t t, std::size_t c, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(t * c);
  for (double& x : v) x = d(rng);
  return {t, c, std::move(v)};
}

double min_distance(const temporal::TemporalEmbedding& e) {
  double best = INFINITY;
  for (std::size_t i = 0; i < e.frames(); ++i)
    for (std::size_t j = i + 1; j < e.frames(); ++j)
      best = std::min(best, std::sqrt(temporal::squared_distance(e.frame(i), e.frame(j))));
  return best;
}

oracle::Frames frames_of(const temporal::TemporalEmbedding& e) {
  oracle::Frames f;
  for (std::size_t t = 0; t < e.frames(); ++t) f.emplace_back(e.frame(t).begin(), e.frame(t).end());
  return f;
}

void criterion_op_count() {
  const fs::path dir = fs::temp_directory_path() / "srtg_accept_ops";
  const auto t0 = Clock::now();
  const int code = cli({"count-ops", "--net", std::string(SRTG_CONFIG_DIR) + "/r3d34_srtg.cfg",
                        "--input", "3x16x224x224", "--out", dir.string()});
  const double secs = seconds_since(t0);
  if (code != 0) return report(false, "1 count-ops", "command failed");
  const auto j = nlohmann::json::parse(slurp(dir / "op_count.json"));
  const double gmacs = j["totals"]["gmacs"];
  const double ratio = j["srtg_overhead_ratio"];
  const double rel = std::abs(gmacs - kGmacsTarget) / kGmacsTarget;
  report(rel <= kGmacsRelTol && ratio >= kOverheadLo && ratio <= kOverheadHi && secs < kCountSeconds,
         "1 count-ops r3d34 3x16x224x224",
         fmt("%.3f GMACs (target %.2f, off %.2f%%, tol %.0f%%), srtg overhead %.3f%% (range "
             "[%.2f%%, %.2f%%]), %.3f s",
             gmacs, kGmacsTarget, 100 * rel, 100 * kGmacsRelTol, 100 * ratio, 100 * kOverheadLo,
             100 * kOverheadHi, secs));
}

void criterion_gate() {
  const temporal::TemporalEmbedding b{{0.0}, {1.0}};
  const std::vector<double> q{0.0};
  const auto a = temporal::soft_nearest_neighbor(q, b);
  const auto idx = temporal::nearest_frame_index(a, b);
  report(std::abs(a[0] - kFixtureValue) <= kFixtureTol && idx == 0, "2a soft nearest neighbor fixture",
         fmt("a = %.6f (expect %.5f +- %.0e), nearest index %zu", a[0], kFixtureValue, kFixtureTol, idx));

  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> frames(1, 8), channels(1, 16), kind(0, 3);
  const double scales[] = {0.3, 1.0, 2.0, 4.0};
  std::size_t agree = 0, open = 0;
  for (std::size_t trial = 0; trial < kOraclePairs; ++trial) {
    const std::size_t t = frames(rng), c = channels(rng);
    const double s = scales[kind(rng)];
    const auto x = gaussian(t, c, s, rng);
    temporal::TemporalEmbedding y = x;
    switch (kind(rng)) {
      case 0: y = gaussian(t, c, s, rng); break;
      case 1: {
        const auto noise = gaussian(t, c, 0.2 * s, rng);
        std::vector<double> v(x.values().begin(), x.values().end());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += noise.values()[i];
        y = temporal::TemporalEmbedding(t, c, v);
        break;
      }
      case 2: {
        std::vector<std::size_t> order(t);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        y = x.permuted(order);
        break;
      }
      default: break;
    }
    const auto d = temporal::cycle_consistent(x, y);
    const auto o = oracle::gate(frames_of(x), frames_of(y));
    agree += (d.verdict == temporal::Verdict::kOpen) == o.open && d.forward_matches == o.fwd &&
             d.backward_matches == o.bwd;
    open += o.open;
  }
  report(agree == kOraclePairs, "2b cycle_consistent vs brute-force oracle",
         fmt("%zu/%zu pairs agree (T<=8, C<=16, %zu open)", agree, kOraclePairs, open));
}

void criterion_grad() {
  for (const auto& c : harness::run_grad_suite(7)) {
    report(c.report.max_error <= kGradTol, "3 grad_check " + c.name,
           fmt("max rel error %.2e over %zu entries (tol %.0e)", c.report.max_error, c.report.checked,
               kGradTol));
  }
}

void criterion_properties() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> frames(2, 8), channels(1, 16);

  // Literal reading: any pairwise-distinct frames, standard normal entries.
  std::size_t trials = 0, open = 0;
  std::string example;
  while (trials < kPropertyTrials) {
    const auto e = gaussian(frames(rng), channels(rng), 1.0, rng);
    if (min_distance(e) <= kDistinctDelta) continue;
    ++trials;
    const auto d = temporal::cycle_consistent(e, e);
    std::vector<std::size_t> id(e.frames());
    std::iota(id.begin(), id.end(), 0);
    if (d.verdict == temporal::Verdict::kOpen && d.forward_matches == id) {
      ++open;
    } else if (example.empty()) {
      example = fmt(" first miss T=%zu C=%zu min gap %.3f", e.frames(), e.channels(), min_distance(e));
    }
  }
  const auto tight = temporal::cycle_consistent({{0.0}, {0.1}, {0.2}}, {{0.0}, {0.1}, {0.2}});
  report(open == trials, "4a self-consistency, distinct N(0,1) frames",
         fmt("%zu/%zu open;%s; E=[[0],[0.1],[0.2]] gives %s with forward matches [%zu,%zu,%zu]", open,
             trials, example.c_str(), std::string(temporal::to_string(tight.verdict)).c_str(),
             tight.forward_matches[0], tight.forward_matches[1], tight.forward_matches[2]));

  trials = open = 0;
  while (trials < kPropertyTrials) {
    const auto e = gaussian(frames(rng), channels(rng), 4.0, rng);
    if (min_distance(e) < 2.0) continue;
    ++trials;
    open += temporal::cycle_consistent(e, e).verdict == temporal::Verdict::kOpen;
  }
  report(open == trials, "4a' self-consistency, frames at least 2 apart",
         fmt("%zu/%zu open", open, trials));

  const double scales[] = {0.01, 0.3, 1.0, 3.0};
  std::size_t closed = 0;
  trials = 0;
  while (trials < 4 * kPropertyTrials) {
    const auto e = gaussian(frames(rng), channels(rng), scales[trials % 4], rng);
    if (min_distance(e) <= kDistinctDelta) continue;
    std::vector<std::size_t> order(e.frames());
    std::iota(order.begin(), order.end(), 0);
    do std::shuffle(order.begin(), order.end(), rng);
    while (std::is_sorted(order.begin(), order.end()));
    ++trials;
    closed += temporal::cycle_consistent(e, e.permuted(order)).verdict == temporal::Verdict::kClosed;
  }
  report(closed == trials, "4b permutation detection",
         fmt("%zu/%zu closed (gaps > %.0e, scales 0.01..3)", closed, trials, kDistinctDelta));

  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  double worst = 0.0;
  for (std::size_t trial = 0; trial < kPropertyTrials; ++trial) {
    const std::size_t t = frames(rng), c = channels(rng);
    const auto a = gaussian(t, c, 1.0, rng), b = gaussian(t, c, 1.0, rng);
    std::vector<double> k(c);
    for (double& v : k) v = shift(rng);
    const auto at = a.translated(k), bt = b.translated(k);
    for (std::size_t f = 0; f < t; ++f) {
      const auto z = temporal::soft_match_weights(a.frame(f), b);
      const auto zt = temporal::soft_match_weights(at.frame(f), bt);
      for (std::size_t i = 0; i < t; ++i) worst = std::max(worst, std::abs(z[i] - zt[i]));
    }
  }
  report(worst <= kShiftTol, "4c translation invariance of z",
         fmt("max |dz| = %.2e over %zu trials (tol %.0e)", worst, kPropertyTrials, kShiftTol));

  std::size_t checked = 0, exact = 0, trial = 0;
  while (checked < kPropertyTrials) {
    backbone::BlockSpec spec;
    spec.in_channels = spec.out_channels = 3;
    backbone::BlockSpec plain_spec = spec;
    spec.placement = backbone::Placement::kFinal;
    backbone::ResidualBlock plain(plain_spec), gated(spec);
    std::mt19937_64 r1(trial), r2(trial);
    plain.initialize(r1);
    gated.initialize(r2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    tensor::Tensor x({4, 3, 4, 3, 3});
    for (double& v : x.data()) v = u(rng);
    tensor::Graph g;
    std::vector<temporal::GateRecord> log;
    backbone::ForwardContext pc, gc{false, &log, 0};
    const auto a = plain.forward(g.constant(x), pc);
    const auto b = gated.forward(g.constant(x), gc);
    const std::size_t per = a.size() / 4;
    for (std::size_t n = 0; n < 4; ++n) {
      if (log[n].decision.verdict != temporal::Verdict::kClosed) continue;
      ++checked;
      exact += std::equal(a.value().begin() + n * per, a.value().begin() + (n + 1) * per,
                          b.value().begin() + n * per);
    }
    ++trial;
  }
  report(exact == checked, "4d closed gate is bit-exact identity",
         fmt("%zu/%zu closed clips equal the plain block output bitwise (%zu blocks)", exact, checked,
             trial));
}

void criterion_sweep() {
  std::size_t ok = 0, total = 0;
  std::string bad;
  for (auto depth : {backbone::DepthKind::kSimple, backbone::DepthKind::kBottleneck}) {
    for (auto placement : {backbone::Placement::kNone, backbone::Placement::kStart,
                           backbone::Placement::kTop, backbone::Placement::kMid,
                           backbone::Placement::kEnd, backbone::Placement::kRes,
                           backbone::Placement::kFinal}) {
      if (!backbone::placement_allowed(depth, placement)) continue;
      for (auto conv : {backbone::ConvKind::kFull3d, backbone::ConvKind::kTwoPlusOneD}) {
        ++total;
        const std::size_t c = depth == backbone::DepthKind::kSimple ? 4 : 8;
        backbone::BlockSpec spec;
        spec.depth = depth;
        spec.conv = conv;
        spec.placement = placement;
        spec.in_channels = spec.out_channels = c;
        const std::string name = fmt("%s/%s/%s", std::string(backbone::to_string(depth)).c_str(),
                                     std::string(backbone::to_string(placement)).c_str(),
                                     std::string(backbone::to_string(conv)).c_str());
        try {
          backbone::ResidualBlock block(spec);
          std::mt19937_64 rng(total);
          block.initialize(rng);
          tensor::Tensor x({2, c, 4, 4, 4});
          std::uniform_real_distribution<double> u(-1.0, 1.0);
          for (double& v : x.data()) v = u(rng);
          tensor::Graph g;
          backbone::ForwardContext ctx{true, nullptr, 0};
          auto y = block.forward(g.constant(x), ctx);
          g.backward(tensor::sum(y));
          backbone::NamedParams params;
          backbone::NamedBuffers buffers;
          block.collect(params, buffers);
          const bool grads = std::all_of(params.begin(), params.end(),
                                         [](auto& p) { return p.second->has_grad(); });
          if (y.shape() == x.shape() && grads) {
            ++ok;
          } else {
            bad += " " + name;
          }
        } catch (const std::exception& e) {
          bad += " " + name + "(" + e.what() + ")";
        }
      }
    }
  }
  report(ok == total && total == 24, "5 block sweep",
         fmt("%zu/%zu configurations (5x2 Simple, 7x2 Bottleneck) build, run forward and backward, "
             "keep shape%s",
             ok, total, bad.c_str()));
}

struct ToyRun {
  double best = 0.0, final = 0.0, secs = 0.0;
  std::size_t first_epoch = 0;
};

ToyRun train_toy(bool with_srtg) {
  harness::Config cfg;
  if (!with_srtg) cfg.set("network.placement=none");
  const auto t0 = Clock::now();
  const auto data = harness::generate(cfg.data());
  backbone::Network net(cfg.network());
  const auto tc = cfg.train();
  net.initialize(tc.seed);
  harness::Trainer trainer(net, tc);
  ToyRun r;
  trainer.fit(data.train, data.val, kToyEpochs, [&](const harness::EpochRecord& e) {
    if (e.val_top1 >= kToyTop1 && r.first_epoch == 0) r.first_epoch = e.epoch;
    r.best = std::max(r.best, e.val_top1);
    r.final = e.val_top1;
  });
  r.secs = seconds_since(t0);
  return r;
}

void criterion_toy() {
  const ToyRun with = train_toy(true);
  const ToyRun without = train_toy(false);
  report(with.best >= kToyTop1 && with.secs < kToySeconds, "6 toy reversed-motion task",
         fmt("SRTG net val top-1 %.2f (best %.2f, first >= %.2f at epoch %zu) in %.1f s; "
             "no-SRTG net val top-1 %.2f (best %.2f) in %.1f s",
             with.final, with.best, kToyTop1, with.first_epoch, with.secs, without.final, without.best,
             without.secs));
}

void criterion_determinism() {
  const fs::path root = fs::temp_directory_path() / "srtg_accept_runs";
  fs::remove_all(root);
  const std::vector<std::string> toy = {"--config", std::string(SRTG_CONFIG_DIR) + "/toy.cfg",
                                        "--set", "train.epochs=4", "--seed", "11"};
  auto train = [&](const std::string& name, std::vector<std::string> extra) {
    std::vector<std::string> args{"train"};
    args.insert(args.end(), toy.begin(), toy.end());
    args.insert(args.end(), extra.begin(), extra.end());
    args.push_back("--out");
    args.push_back((root / name).string());
    return cli(args);
  };
  bool ok = train("a", {}) == 0 && train("b", {}) == 0;
  const std::string a = slurp(root / "a" / "metrics.csv");
  ok = ok && !a.empty() && a == slurp(root / "b" / "metrics.csv");
  report(ok, "7a seeded runs give byte-identical CSVs",
         fmt("two 4-epoch toy runs, %zu-byte metrics.csv %s", a.size(), ok ? "identical" : "differ"));

  bool resumed = train("c", {"--stop-after", "2"}) == 0 &&
                 cli({"train", "--resume", (root / "c" / "checkpoint.bin").string(), "--out",
                      (root / "c").string()}) == 0;
  resumed = resumed && slurp(root / "c" / "metrics.csv") == a &&
            slurp(root / "c" / "checkpoint.bin") == slurp(root / "a" / "checkpoint.bin");
  report(resumed, "7b stop after epoch 2 and resume is bit-exact",
         "metrics.csv and final checkpoint compared byte for byte");
}

}  // namespace

int main() {
  criterion_op_count();
  criterion_gate();
  criterion_grad();
  criterion_properties();
  criterion_sweep();
  criterion_determinism();
  criterion_toy();
  std::printf("%s: %d failing line(s)\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
