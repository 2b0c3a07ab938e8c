#include <benchmark/benchmark.h>

#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include "tdqmc/config.hpp"
#include "tdqmc/experiments.hpp"
#include "tdqmc/potentials.hpp"
#include "tdqmc/propagator.hpp"

namespace {

using namespace tdqmc;

SimConfig config_from(const std::string& text) {
  std::istringstream in(text);
  return make_config(ConfigFile::parse(in));
}

void BM_CrankNicolsonStep(benchmark::State& state) {
  const Grid grid(-10.0, 10.0, static_cast<std::size_t>(state.range(0)));
  auto wave = GuideWave::sample(grid, [](double x) { return std::complex<double>(std::exp(-x * x), 0.0); });
  const auto v = soft_coulomb_field(grid);
  StepWorkspace ws;
  const StepParams p{0.05, 1.0, TimeMode::real_time};
  for (auto _ : state) {
    step_in_place(wave, v, p, ws);
    benchmark::DoNotOptimize(wave);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CrankNicolsonStep)->Arg(201)->Arg(401)->Arg(801);

void BM_EffectivePotentials(benchmark::State& state) {
  const Grid grid(-10.0, 10.0, 401);
  const auto m = static_cast<std::size_t>(state.range(0));
  std::vector<double> walkers(m);
  for (std::size_t k = 0; k < m; ++k) walkers[k] = -3.0 + 6.0 * static_cast<double>(k) / static_cast<double>(m);
  for (auto _ : state) {
    auto v = effective_potentials(grid, walkers, 1.0, {});
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EffectivePotentials)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

// Full real-time step with a thermal per-walker bath; items are walker-steps.
void BM_RealStepWithBath(benchmark::State& state) {
  const auto L = state.range(0);
  const auto cfg = config_from("walkers = 200\nbath.enabled = true\nbath.L = " + std::to_string(L) +
                               "\nbath.coupling_scale = 0.075\nbeta = 10\n");
  PreparedState st = initial_state(cfg);
  Simulation sim(cfg, st);
  double t = 0.0;
  for (auto _ : state) {
    sim.real_step(t);
    t += cfg.dt_real;
  }
  state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_RealStepWithBath)->Arg(64)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ImaginaryStep(benchmark::State& state) {
  const auto m = state.range(0);
  const auto cfg = config_from("walkers = " + std::to_string(m) + "\n");
  PreparedState st = initial_state(cfg);
  Simulation sim(cfg, st);
  for (auto _ : state) sim.imaginary_step(true);
  state.SetItemsProcessed(state.iterations() * m);
}
BENCHMARK(BM_ImaginaryStep)->Arg(250)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
