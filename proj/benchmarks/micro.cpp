// Per-operation costs of the pieces every solver loop is made of: component
// and full gradient oracles, one estimator update of each kind, one
// descent-ascent iteration, and the unbilled primal-gap metric.  Problem
// sizes match the experiment configurations (n = 256 and n = 1024 components
// in 10 + 10 dimensions).

#include <benchmark/benchmark.h>

#include <cstdint>

#include "plmm/estimators.hpp"
#include "plmm/plgame.hpp"
#include "plmm/problem.hpp"
#include "plmm/rng.hpp"
#include "plmm/solvers.hpp"

namespace {

using namespace plmm;

const PLGameInstance& instance_for(std::int64_t n) {
  static const PLGameInstance small = [] {
    GeneratorConfig cfg;
    cfg.n = 256;
    cfg.d = 10;
    cfg.r = 5;
    cfg.mu = 1e-3;
    cfg.seed = 612;
    return PLGameInstance::generate(cfg);
  }();
  static const PLGameInstance large = [] {
    GeneratorConfig cfg;
    cfg.n = 1024;
    cfg.d = 10;
    cfg.r = 5;
    cfg.mu = 1e-3;
    cfg.seed = 612;
    return PLGameInstance::generate(cfg);
  }();
  return n == 256 ? small : large;
}

Point probe_point(std::int64_t dx, std::int64_t dy) {
  SplitMix64 rng(7);
  Point p;
  p.x = Eigen::VectorXd(dx);
  for (Eigen::Index i = 0; i < dx; ++i) p.x(i) = rng.next_gaussian();
  p.y = Eigen::VectorXd(dy);
  for (Eigen::Index i = 0; i < dy; ++i) p.y(i) = rng.next_gaussian();
  return p;
}

void BM_ComponentGrad(benchmark::State& state) {
  const PLGameProblem problem(instance_for(state.range(0)));
  const Point p = probe_point(problem.dim_x(), problem.dim_y());
  OracleCounters counters;
  std::int64_t i = 0;
  for (auto _ : state) {
    GradPair g = component_grad(problem, i, p, counters);
    benchmark::DoNotOptimize(g.gx.data());
    benchmark::DoNotOptimize(g.gy.data());
    i = (i + 1) % problem.component_count();
  }
}
BENCHMARK(BM_ComponentGrad)->Arg(256)->Arg(1024);

void BM_FullGrad(benchmark::State& state) {
  const PLGameProblem problem(instance_for(state.range(0)));
  const Point p = probe_point(problem.dim_x(), problem.dim_y());
  OracleCounters counters;
  for (auto _ : state) {
    GradPair g = full_grad(problem, p, counters);
    benchmark::DoNotOptimize(g.gx.data());
    benchmark::DoNotOptimize(g.gy.data());
  }
  state.SetItemsProcessed(state.iterations() * problem.component_count());
}
BENCHMARK(BM_FullGrad)->Arg(256)->Arg(1024);

// One recursive estimator update at batch size 1 (the refresh runs outside
// the timed region and is re-armed whenever the epoch is exhausted).
void BM_SpiderStep(benchmark::State& state) {
  const PLGameProblem problem(instance_for(state.range(0)));
  const Point cur = probe_point(problem.dim_x(), problem.dim_y());
  Point prev = cur;
  prev.x.array() += 1e-3;
  SpiderEstimator est(problem.component_count(), 1);
  SplitMix64 rng(11);
  OracleCounters counters;
  est.refresh(problem, prev, counters);
  for (auto _ : state) {
    if (est.steps_since_refresh() + 1 >= est.epoch_len()) {
      state.PauseTiming();
      est.refresh(problem, prev, counters);
      state.ResumeTiming();
    }
    const GradPair& g = est.step(problem, cur, prev, rng, counters);
    benchmark::DoNotOptimize(g.gx.data());
  }
}
BENCHMARK(BM_SpiderStep)->Arg(256)->Arg(1024);

// One anchored estimator update at batch size 1 against a fixed anchor.
void BM_SvrgStep(benchmark::State& state) {
  const PLGameProblem problem(instance_for(state.range(0)));
  const Point anchor = probe_point(problem.dim_x(), problem.dim_y());
  Point cur = anchor;
  cur.y.array() -= 1e-3;
  SvrgEstimator est(1);
  SplitMix64 rng(13);
  OracleCounters counters;
  est.anchor(problem, anchor, counters);
  for (auto _ : state) {
    GradPair g = est.step(problem, cur, rng, counters);
    benchmark::DoNotOptimize(g.gx.data());
    benchmark::DoNotOptimize(g.gy.data());
  }
}
BENCHMARK(BM_SvrgStep)->Arg(256)->Arg(1024);

// A single simultaneous descent-ascent iteration, i.e. one full pass plus
// the two vector updates, including the run scaffolding around it.
void BM_GdaIteration(benchmark::State& state) {
  const PLGameProblem problem(instance_for(state.range(0)));
  const Point init = probe_point(problem.dim_x(), problem.dim_y());
  const StepSizes steps{1e-2, 1e-2, 0.0};
  SplitMix64 rng(17);
  for (auto _ : state) {
    OracleCounters counters;
    RunResult res = gda_run(problem, init, 1, steps, PLMode::kTwoSided, rng, counters);
    benchmark::DoNotOptimize(res.output.x.data());
  }
}
BENCHMARK(BM_GdaIteration)->Arg(256)->Arg(1024);

// The unbilled metric behind every trace row: inner argmax solve plus the
// value difference against the reference.
void BM_PrimalGap(benchmark::State& state) {
  const PLGameInstance& inst = instance_for(state.range(0));
  const ReferenceSolution ref = reference_saddle(inst);
  const Point p = probe_point(inst.d(), inst.d());
  for (auto _ : state) {
    const double gap = primal_gap(inst, ref, p.x);
    benchmark::DoNotOptimize(gap);
  }
}
BENCHMARK(BM_PrimalGap)->Arg(256)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
