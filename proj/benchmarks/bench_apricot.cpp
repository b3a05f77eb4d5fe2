#include <benchmark/benchmark.h>

#include "../tests/support/corpus.hpp"
#include "../tests/support/models.hpp"
#include "apricot/sim/simulator.hpp"

using namespace apricot;

namespace {

eval::ExternalRegistry& resiliency() {
  static eval::ExternalRegistry ext;
  if (!ext.find("Resiliency")) testing::bind_resiliency(ext);
  return ext;
}

void BM_Parse(benchmark::State& state) {
  const auto src = testing::read_model("bouncing_ball.apr");
  for (auto _ : state) benchmark::DoNotOptimize(parse::parse_source(src));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_Parse);

void BM_CheckAndFlatten(benchmark::State& state) {
  const auto src = testing::read_model("bouncing_ball.apr");
  for (auto _ : state) benchmark::DoNotOptimize(testing::build_model(src, &resiliency()));
}
BENCHMARK(BM_CheckAndFlatten);

void BM_SimulateBouncingBall(benchmark::State& state) {
  auto m = testing::build_model(testing::read_model("bouncing_ball_plant.apr"));
  sim::SimConfig c;
  c.t_end = 6;
  c.dt = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sim::Simulator(*m, c).simulate());
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) * 6 * state.range(0));
}
BENCHMARK(BM_SimulateBouncingBall)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Rk4Step(benchmark::State& state) {
  auto m = testing::build_model(testing::drag_model());
  sim::SimConfig c;
  c.t_end = 1e9;
  sim::Simulator s(*m, c);
  auto st = s.initial_state();
  for (auto _ : state) {
    s.integrate_step(st, 1e-6);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_Rk4Step);

void BM_ExploreTwoGuards(benchmark::State& state) {
  auto m = testing::build_model(testing::two_guard_model());
  sim::SimConfig c;
  c.t_end = 12;
  c.dt = 1e-2;
  c.policy = sim::Policy::Explore;
  c.max_branches = static_cast<int>(state.range(0));
  c.max_jumps = 64;
  for (auto _ : state) benchmark::DoNotOptimize(sim::Simulator(*m, c).explore());
}
BENCHMARK(BM_ExploreTwoGuards)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
