#include <benchmark/benchmark.h>

#include <random>

#include "srtg/backbone/network.hpp"
#include "srtg/backbone/op_count.hpp"
#include "srtg/temporal/unit.hpp"

using namespace srtg;

namespace {

tensor::Tensor random_tensor(tensor::Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  tensor::Tensor t(std::move(shape));
  for (double& v : t.data()) v = d(rng);
  return t;
}

void BM_Conv3d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({2, c, 8, 16, 16}, 1);
  auto w = random_tensor({c, c, 3, 3, 3}, 2);
  w.set_requires_grad(true);
  for (auto _ : state) {
    tensor::Graph g;
    auto y = tensor::conv3d(g.constant(x), g.param(w), std::nullopt, {{1, 1, 1}, {1, 1, 1}});
    g.backward(tensor::sum(y));
    benchmark::DoNotOptimize(w.grad().data());
    w.zero_grad();
  }
}
BENCHMARK(BM_Conv3d)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_SrtgUnit(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  temporal::LstmParams p(c);
  std::mt19937_64 rng(3);
  p.initialize(rng);
  const auto x = random_tensor({4, c, 8, 8, 8}, 4);
  for (auto _ : state) {
    tensor::Graph g;
    auto out = temporal::srtg_unit(g.constant(x), p, {});
    benchmark::DoNotOptimize(out.output.value().data());
  }
}
BENCHMARK(BM_SrtgUnit)->Arg(8)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_CycleConsistent(benchmark::State& state) {
  const auto t = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor({t, 64}, 5), b = random_tensor({t, 64}, 6);
  const temporal::TemporalEmbedding ea(t, 64, a.values()), eb(t, 64, b.values());
  for (auto _ : state) benchmark::DoNotOptimize(temporal::cycle_consistent(ea, eb));
}
BENCHMARK(BM_CycleConsistent)->Arg(4)->Arg(8)->Arg(16)->Arg(32);

void BM_CountMacs(benchmark::State& state) {
  const auto spec = state.range(0) == 34 ? backbone::r3d34_spec() : backbone::r3d50_spec();
  for (auto _ : state) {
    benchmark::DoNotOptimize(backbone::count_macs(spec, {3, 16, 224, 224}).total());
  }
}
BENCHMARK(BM_CountMacs)->Arg(34)->Arg(50);

void BM_ToyTrainStep(benchmark::State& state) {
  backbone::NetworkSpec spec;
  spec.in_channels = 1;
  spec.stem.channels = 8;
  spec.stem.kernel = {3, 3, 3};
  spec.stem.stride = {1, 2, 2};
  spec.stages = {{1, 8, {1, 1, 1}}, {1, 16, {2, 2, 2}}};
  backbone::Network net(spec);
  net.initialize(7);
  const auto x = random_tensor({16, 1, 8, 16, 16}, 8);
  const std::vector<int> labels(16, 1);
  for (auto _ : state) {
    tensor::Graph g;
    backbone::ForwardContext ctx{true, nullptr, 0};
    g.backward(tensor::softmax_cross_entropy(net.forward(g.constant(x), ctx), labels));
    for (auto* p : net.parameters()) p->zero_grad();
  }
}
BENCHMARK(BM_ToyTrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
