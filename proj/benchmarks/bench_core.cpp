#include <benchmark/benchmark.h>

#include "qrm/compare.hpp"
#include "qrm/dynamics.hpp"
#include "qrm/lattice.hpp"
#include "qrm/models.hpp"

using namespace qrm;

namespace {

LatticeConfig config_a(double ratio) {
  LatticeConfig c;
  c.species = SpeciesRegistry::builtin().get("Rb87", Spin::from_value(1));
  c.lambda_t = c.lambda_c = 787e-9;
  c.V0 = 1e5;
  c.Bx = ratio > 0 ? amplitude_for_target_ratio(c, ratio) : 0.0;
  return c;
}

void BM_QrmDense(benchmark::State& state) {
  ModelParams p;
  p.g = 1.5;
  p.omega0 = 1.0;
  p.F = Spin::from_value(1);
  p.fock_cutoff = static_cast<int>(state.range(0));
  const OperatorMatrix h = build_generalized(p);
  for (auto _ : state) benchmark::DoNotOptimize(hermitian_eigensolve(h, Index{36}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_QrmDense)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond);

void BM_LatticeSolve(benchmark::State& state) {
  const LatticeConfig c = config_a(2.0);
  const Grid g = Grid::site(c, static_cast<int>(state.range(0)));
  const auto method = state.range(1) ? SolverMethod::Partial : SolverMethod::Dense;
  for (auto _ : state) benchmark::DoNotOptimize(lattice_spectrum(c, g, 36, method));
}
BENCHMARK(BM_LatticeSolve)
    ->ArgsProduct({{256, 512, 1024, 2048}, {1}})
    ->Args({512, 0})
    ->Args({1024, 0})
    ->Unit(benchmark::kMillisecond);

void BM_Extraction(benchmark::State& state) {
  const LatticeConfig c = config_a(3.0);
  for (auto _ : state) benchmark::DoNotOptimize(extract_effective_params(c));
}
BENCHMARK(BM_Extraction)->Unit(benchmark::kMicrosecond);

void BM_AmplitudeSolve(benchmark::State& state) {
  const LatticeConfig c = config_a(0.0);
  for (auto _ : state) benchmark::DoNotOptimize(amplitude_for_target_ratio(c, 2.0));
}
BENCHMARK(BM_AmplitudeSolve)->Unit(benchmark::kMillisecond);

void BM_ComparePoint(benchmark::State& state) {
  const LatticeConfig base = config_a(static_cast<double>(state.range(0)));
  LatticeConfig c = base;
  c.Bz = field_for_tls_frequency(extract_effective_params(c).omega_eff, c.species.gF);
  for (auto _ : state) benchmark::DoNotOptimize(compare_point(c));
}
BENCHMARK(BM_ComparePoint)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_Evolve(benchmark::State& state) {
  ModelParams p;
  p.g = 2.0;
  p.F = Spin::from_value(0.5);
  p.fock_cutoff = static_cast<int>(state.range(0));
  const OperatorMatrix h = build_generalized(p);
  const Eigen::VectorXcd psi0 = prepare_state(FockSpinState{0, 1}, h.basis());
  std::vector<double> t(101);
  for (int k = 0; k <= 100; ++k) t[k] = 0.0628 * k;
  for (auto _ : state) benchmark::DoNotOptimize(evolve_constant(h, psi0, t));
}
BENCHMARK(BM_Evolve)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
