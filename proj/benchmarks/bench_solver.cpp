#include <benchmark/benchmark.h>

#include "qsolver/batch.hpp"
#include "qsolver/branching.hpp"
#include "qsolver/busy_cycle.hpp"
#include "qsolver/numerics.hpp"
#include "qsolver/sim.hpp"
#include "qsolver/vacation.hpp"

using namespace qsolver;

namespace {

ModelParams model_for_rho(double rho) {
  return ModelParams(rho, DistSpec::exponential(1.0), DistSpec::exponential(1.0));
}

void BM_EllEZero(benchmark::State& state) {
  ModelParams m = model_for_rho(state.range(0) / 100.0);
  // near saturation the double-precision fixed point sits around 1e-14, so
  // the extreme-utilization case runs at a matching tolerance
  TruncationPolicy t(state.range(0) >= 99 ? 1e-12 : 1e-14, 1'000'000);
  for (auto _ : state) {
    EllESolver s(m, t);
    benchmark::DoNotOptimize(s.ell_e0());
  }
}
BENCHMARK(BM_EllEZero)->Arg(50)->Arg(90)->Arg(99);

void BM_EllEComplex(benchmark::State& state) {
  ModelParams m = model_for_rho(state.range(0) / 100.0);
  EllESolver s(m);
  std::complex<double> z = std::polar(0.9, 1.3);
  for (auto _ : state) benchmark::DoNotOptimize(s.ell_e(z));
}
BENCHMARK(BM_EllEComplex)->Arg(50)->Arg(90);

void BM_QueuePmf(benchmark::State& state) {
  VacationSolver vs(model_for_rho(0.5));
  for (auto _ : state) benchmark::DoNotOptimize(vs.queue_pmf(state.range(0)));
}
BENCHMARK(BM_QueuePmf)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_ThetaStarNearCorner(benchmark::State& state) {
  BusyCycleSolver bc(model_for_rho(0.9));
  for (auto _ : state) benchmark::DoNotOptimize(bc.theta_star(1.0 - 1e-4, 0.0));
}
BENCHMARK(BM_ThetaStarNearCorner);

void BM_CycleMeans(benchmark::State& state) {
  BusyCycleSolver bc(model_for_rho(0.5));
  for (auto _ : state) {
    auto cm = bc.cycle_means();
    benchmark::DoNotOptimize(cm.t_mean);
  }
}
BENCHMARK(BM_CycleMeans)->Unit(benchmark::kMillisecond);

void BM_FactorialMoments(benchmark::State& state) {
  VacationSolver vs(model_for_rho(0.9));
  for (auto _ : state) benchmark::DoNotOptimize(vs.factorial_moments(4));
}
BENCHMARK(BM_FactorialMoments)->Unit(benchmark::kMillisecond);

void BM_SimulateSingleVacation(benchmark::State& state) {
  SimConfig cfg(SimKind::single_vacation_gated, model_for_rho(0.5));
  cfg.horizon = 100'000;
  cfg.warmup = 10'000;
  cfg.replications = 10;
  cfg.seed = 7;
  for (auto _ : state) {
    SimStats st = run(cfg);
    benchmark::DoNotOptimize(st.time_avg_queue.value);
  }
  state.SetItemsProcessed(state.iterations() * cfg.horizon * cfg.replications);
}
BENCHMARK(BM_SimulateSingleVacation)->Unit(benchmark::kMillisecond);

void BM_TransientRunner(benchmark::State& state) {
  ModelParams m = model_for_rho(0.5);
  InitialState init = InitialState::point_mass(2);
  for (auto _ : state) {
    TransientStats ts = run_transient(m, init, 3, 10'000, 11, {0.5});
    benchmark::DoNotOptimize(ts.mean.value);
  }
}
BENCHMARK(BM_TransientRunner)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
