// Throughput comparison of the OpenMP kernels against their serial
// reference implementations.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <limits>
#include <vector>

#include "lawn/aero.hpp"
#include "lawn/conic.hpp"
#include "lawn/control.hpp"
#include "lawn/formation.hpp"
#include "lawn/rng.hpp"

namespace {

using namespace lawn;

std::vector<aero::Vec2> random_layout(int m, uint64_t seed) {
  const CounterRng rng(seed);
  std::vector<aero::Vec2> pos;
  for (int i = 0; i < m; ++i)
    pos.emplace_back(rng.uniform(-8.0, 8.0, 0, i),
                     rng.uniform(0.0, 16.0, 1, i));
  return pos;
}

void BM_UpwashMapSerial(benchmark::State& state) {
  const aero::AeroParams p;
  const int n = static_cast<int>(state.range(0));
  const aero::GridSpec g{-2.0, 2.0, n, -2.0, 2.0, n};
  for (auto _ : state)
    benchmark::DoNotOptimize(aero::avg_upwash_map_serial(p, g));
}
BENCHMARK(BM_UpwashMapSerial)->Arg(200)->Arg(400);

void BM_UpwashMapParallel(benchmark::State& state) {
  const aero::AeroParams p;
  const int n = static_cast<int>(state.range(0));
  const aero::GridSpec g{-2.0, 2.0, n, -2.0, 2.0, n};
  for (auto _ : state) benchmark::DoNotOptimize(aero::avg_upwash_map(p, g));
}
BENCHMARK(BM_UpwashMapParallel)->Arg(200)->Arg(400);

void BM_TotalUpwashSerial(benchmark::State& state) {
  const aero::AeroParams p;
  const auto pos = random_layout(static_cast<int>(state.range(0)), 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(aero::total_upwash_all_serial(pos, p));
}
BENCHMARK(BM_TotalUpwashSerial)->Arg(19)->Arg(128);

void BM_TotalUpwashParallel(benchmark::State& state) {
  const aero::AeroParams p;
  const auto pos = random_layout(static_cast<int>(state.range(0)), 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(aero::total_upwash_all(pos, p));
}
BENCHMARK(BM_TotalUpwashParallel)->Arg(19)->Arg(128);

void run_formation_bench(benchmark::State& state, bool parallel) {
  const aero::AeroParams p;
  formation::FormationConfig cfg;
  cfg.m = static_cast<int>(state.range(0));
  cfg.center = {20.0, 50.0};
  const auto init = formation::init_formation(cfg, p, 7);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        formation::run_formation(cfg, p, init, 50, 7, parallel));
}

void BM_FormationSerial(benchmark::State& state) {
  run_formation_bench(state, false);
}
BENCHMARK(BM_FormationSerial)->Arg(19)->Arg(64);

void BM_FormationParallel(benchmark::State& state) {
  run_formation_bench(state, true);
}
BENCHMARK(BM_FormationParallel)->Arg(19)->Arg(64);

void BM_ClosedLoopSerial(benchmark::State& state) {
  const auto model = control::ControlModel::identity_model(50);
  for (auto _ : state)
    benchmark::DoNotOptimize(control::simulate_closed_loop(
        model, std::numeric_limits<double>::infinity(), 400, 16, 5, false));
}
BENCHMARK(BM_ClosedLoopSerial);

void BM_ClosedLoopParallel(benchmark::State& state) {
  const auto model = control::ControlModel::identity_model(50);
  for (auto _ : state)
    benchmark::DoNotOptimize(control::simulate_closed_loop(
        model, std::numeric_limits<double>::infinity(), 400, 16, 5, true));
}
BENCHMARK(BM_ClosedLoopParallel);

// interior-point solve; the Schur assembly parallelizes over blocks, so
// the thread count is the comparison axis
void BM_ConicSolve(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const CounterRng rng(11);
  conic::ConicProblem p;
  std::vector<int> blocks;
  for (int b = 0; b < 8; ++b) blocks.push_back(p.add_block(24));
  for (int b = 0; b < 8; ++b) {
    conic::Mat c(24, 24);
    for (int i = 0; i < 24; ++i)
      for (int j = 0; j <= i; ++j) {
        c(i, j) = rng.normal(0, b, i, j);
        c(j, i) = c(i, j);
      }
    const int dc = p.add_matrix(blocks[b], c);
    const int di = p.add_matrix(blocks[b], conic::Mat::Identity(24, 24));
    p.objective.blocks.push_back({blocks[b], dc, 1.0});
    conic::Constraint tr1;
    tr1.lhs.blocks.push_back({blocks[b], di, 1.0});
    tr1.rel = conic::Relation::eq;
    tr1.rhs = 1.0;
    p.constraints.push_back(tr1);
  }
  for (auto _ : state) benchmark::DoNotOptimize(conic::solve(p));
  omp_set_num_threads(omp_get_num_procs());
}
BENCHMARK(BM_ConicSolve)->Arg(1)->Arg(2);

}  // namespace

BENCHMARK_MAIN();
