// Parallel vs serial kernels: Schur-complement assembly and the Monte Carlo
// trial loop.

#include <map>

#include <benchmark/benchmark.h>

#include "ddlqr/experiment.hpp"
#include "ddlqr/schur_complement.hpp"
#include "ddlqr/synthesis.hpp"

using namespace ddlqr;

namespace {

// Soft program for a random system with T samples, plus PD block iterates.
struct Fixture {
  SynthesisProgram prog;
  std::vector<Matrix> X, Zinv;

  explicit Fixture(int T) {
    Rng rng(11, 0, "bench");
    const DiscreteLtiSystem sys(rng.normal_matrix(3, 3), rng.normal_matrix(3, 1));
    const Trajectory traj =
        simulate(sys, rng.normal_vector(3), rng.normal_matrix(1, T), NoiseSpec::wgn(0.1), T, rng);
    prog = build_soft(build_data_matrices(traj), 1.0);
    for (const auto& b : prog.sdp.blocks()) {
      const Matrix G = rng.normal_matrix(b.size, b.size);
      X.push_back(G * G.transpose() + Matrix::Identity(b.size, b.size));
      const Matrix H = rng.normal_matrix(b.size, b.size);
      Zinv.push_back(H * H.transpose() + Matrix::Identity(b.size, b.size));
    }
  }
};

const Fixture& fixture(int T) {
  static std::map<int, Fixture> cache;
  auto it = cache.find(T);
  if (it == cache.end()) it = cache.emplace(T, Fixture(T)).first;
  return it->second;
}

void BM_SchurReference(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(schur_complement_reference(f.prog.sdp, f.X, f.Zinv));
  }
}

void BM_SchurSerial(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)));
  const SchurPlan plan(f.prog.sdp);
  for (auto _ : state) benchmark::DoNotOptimize(plan.assemble(f.X, f.Zinv, false));
}

void BM_SchurParallel(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)));
  const SchurPlan plan(f.prog.sdp);
  for (auto _ : state) benchmark::DoNotOptimize(plan.assemble(f.X, f.Zinv, true));
}

void trial_loop(benchmark::State& state, int jobs) {
  ExperimentConfig cfg;
  cfg.num_systems = static_cast<int>(state.range(0));
  cfg.jobs = jobs;
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(cfg, NoiseSpec::wgn(0.1)));
}

void BM_TrialLoopSerial(benchmark::State& state) { trial_loop(state, 1); }
void BM_TrialLoopParallel(benchmark::State& state) { trial_loop(state, 0); }

}  // namespace

BENCHMARK(BM_SchurReference)->Arg(20)->Arg(60)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SchurSerial)->Arg(20)->Arg(60)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SchurParallel)->Arg(20)->Arg(60)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TrialLoopSerial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialLoopParallel)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
