#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "qwg/asymptotics.hpp"
#include "qwg/direct.hpp"
#include "qwg/lattice.hpp"
#include "qwg/spectral.hpp"
#include "qwg/voxel.hpp"

using namespace qwg;

namespace {

WaveguideSpec wide_neck() {
  WaveguideSpec s;
  s.narrows[0].tip_x = -1.25;
  s.narrows[1].tip_x = 1.25;
  s.epsilon = 0.5;
  return s;
}

void BM_CapSpectrum(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(cap_spectrum(std::numbers::pi / 3).mu1);
}
BENCHMARK(BM_CapSpectrum)->Unit(benchmark::kMillisecond);

void BM_MatchingSolve(benchmark::State& st) {
  AsymptoticModel m;
  m.mu1 = 1.7772882702;
  m.mu2 = 3.1956911510;
  m.alpha = 0.1856;
  m.beta = 0.0029;
  m.A = {2.498, -1.373};
  m.a = {1.167, std::norm(m.A)};
  m.lambda1_sq = 5.783;
  m.d = 2.5;
  m.channel.k0_sq = 8.534;
  m.channel.b = {cplx(3.743, 0), cplx(3.743, 0)};
  double k2 = 8.51;
  for (auto _ : st) benchmark::DoNotOptimize(matching_solve(m, k2, 0.3).s12);
}
BENCHMARK(BM_MatchingSolve);

void BM_MagneticOperator(benchmark::State& st) {
  const double h = 1.0 / static_cast<double>(st.range(0));
  auto s = wide_neck();
  auto grid = voxelize_domain(s, Domain::resonator, h, {0, 0}, {false, false});
  SolenoidSpec sol;
  sol.radius = 0.3;
  sol.profile = {0.5};
  LatticeField f;
  f.potential = [&](const Point3& p) { return vector_potential(sol, p); };
  for (auto _ : st) benchmark::DoNotOptimize(magnetic_operator(grid, f).nonZeros());
  st.counters["unknowns"] = static_cast<double>(grid.size());
}
BENCHMARK(BM_MagneticOperator)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_DirectSolve(benchmark::State& st) {
  DirectOptions o;
  o.h = 0.125;
  ScatteringProblem p(wide_neck(), Spin::plus, o);
  for (auto _ : st) benchmark::DoNotOptimize(p.solve(std::sqrt(8.3)).T);
  st.counters["unknowns"] = static_cast<double>(p.grid().size());
}
BENCHMARK(BM_DirectSolve)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
