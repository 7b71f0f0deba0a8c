// Serial vs OpenMP timings for the embarrassingly parallel kernels.  Both
// paths write into preallocated per-index slots and reduce serially, so
// outputs are bit-identical; these benchmarks measure the speed difference
// only.  Run with --benchmark_filter=... to narrow; OMP_NUM_THREADS controls
// the parallel path's team size.

#include <benchmark/benchmark.h>

#include "gsmp/analysis.hpp"
#include "gsmp/fiber.hpp"
#include "gsmp/iso.hpp"
#include "gsmp/potential.hpp"
#include "gsmp/resolvent.hpp"
#include "gsmp/window.hpp"

namespace {

using namespace gsmp;

struct Fixture {
  IntervalSystem E;
  PotentialV V;
  IsoPoint pt;
  GsmpWindow w;
  SpectralData sd;

  Fixture()
      : E{-2.0, 2.0, {{-1.0, 1.0}}},
        V(solve_potential(E).V),
        pt(solve_iso_point(V, anchor_pair(V))),
        w(build_periodic(pt, 128)) {
    PerturbationSpec spec;
    spec.family = PerturbationSpec::Family::PowerDecay;
    spec.amplitude = 0.02;
    spec.exponent = 1.0;
    spec.seed = 7;
    w = apply_perturbation(w, spec);
    sd = spectral_data(w, 256);
  }
};

const Fixture& fx() {
  static Fixture f;
  return f;
}

Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? Exec::Serial : Exec::OpenMP;
}

void args(benchmark::internal::Benchmark* b) {
  b->ArgName("omp")->Arg(0)->Arg(1);
}

void BM_verify_potential(benchmark::State& state) {
  const Fixture& f = fx();
  for (auto _ : state)
    benchmark::DoNotOptimize(verify_potential(f.V, f.E, 4097, exec_of(state)));
}
BENCHMARK(BM_verify_potential)->Apply(args);

void BM_fiber_sweep(benchmark::State& state) {
  const Fixture& f = fx();
  for (auto _ : state)
    benchmark::DoNotOptimize(fiber_sweep(f.pt.pair, f.V.c, 2048, exec_of(state)));
}
BENCHMARK(BM_fiber_sweep)->Apply(args);

void BM_assemble_v_blocks(benchmark::State& state) {
  const Fixture& f = fx();
  for (auto _ : state)
    benchmark::DoNotOptimize(assemble_v_blocks(f.w, f.V, -120, 120, exec_of(state)));
}
BENCHMARK(BM_assemble_v_blocks)->Apply(args);

void BM_spectral_side(benchmark::State& state) {
  const Fixture& f = fx();
  KsSpectralOptions opts;
  opts.nodes_per_band = 401;  // quadrature construction is cubic in this
  opts.exec = exec_of(state);
  for (auto _ : state)
    benchmark::DoNotOptimize(ks_spectral_side(f.sd, f.E, opts));
}
BENCHMARK(BM_spectral_side)->Apply(args);

void BM_sample_torus(benchmark::State& state) {
  const Fixture& f = fx();
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_torus(f.V, 32, exec_of(state)));
}
BENCHMARK(BM_sample_torus)->Apply(args);

}  // namespace

BENCHMARK_MAIN();
