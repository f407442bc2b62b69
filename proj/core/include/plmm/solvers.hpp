#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "plmm/estimators.hpp"
#include "plmm/plgame.hpp"
#include "plmm/problem.hpp"
#include "plmm/rng.hpp"
#include "plmm/schedules.hpp"

namespace plmm {

// Called after every solver step with the freshly updated iterate, the
// global step index (1-based) and the current oracle counters.  Returning
// false stops the run gracefully; observers must not mutate anything the
// solver reads, so a run's iterates are identical with and without one.
using StepObserver =
    std::function<bool(const Point& current, std::int64_t step, const OracleCounters& counters)>;

struct RunResult {
  Point output;                               // final or uniformly selected point
  Point last_iterate;                         // live final iterate, before any selection
  std::vector<Point> restart_points;          // point carried out of each restart
  std::vector<std::int64_t> selected_indices; // uniform index drawn per restart
  std::vector<double> delta_history;          // accelerated runs: per-outer delta_k
  std::int64_t steps = 0;                     // solver steps actually taken
  bool stopped_early = false;                 // observer said stop
  OracleCounters counters;                    // snapshot at return
};

// Simultaneous gradient descent ascent: one full gradient per iteration
// (n SFO), x and y updated from the same gradient.  In the one-sided mode
// the returned point is a uniformly drawn iterate (index chosen from `rng`
// before the loop); the two-sided mode is fully deterministic and does not
// touch `rng`.
RunResult gda_run(const FiniteSumProblem& problem, const Point& init,
                  std::int64_t iters, const StepSizes& steps, PLMode mode,
                  SplitMix64& rng, OracleCounters& counters,
                  const StepObserver& observer = {});

// Alternating variant: y is updated with the gradient at the new x, which
// costs a second full pass (2n SFO per iteration).
RunResult agda_run(const FiniteSumProblem& problem, const Point& init,
                   std::int64_t iters, const StepSizes& steps, PLMode mode,
                   SplitMix64& rng, OracleCounters& counters,
                   const StepObserver& observer = {});

// Restarted recursive-estimator descent ascent.  Per restart: refresh the
// estimator whenever k % M == 0, recursive steps otherwise, and carry a
// uniformly chosen pre-update iterate into the next restart (the selection
// index is drawn before the loop, which distributes identically to keeping
// all K candidates).  Output: the point selected after the last restart.
RunResult spider_gda_run(const FiniteSumProblem& problem, const Point& init,
                         const LoopPlan& plan, const StepSizes& steps,
                         SplitMix64& rng, OracleCounters& counters,
                         const StepObserver& observer = {},
                         BatchSampling sampling = BatchSampling::kIidWithReplacement);

// Restarted anchored-estimator descent ascent: per restart, S anchor rounds
// of M steps each (anchor costs n, steps 2B), restart point selected
// uniformly from all S*M pre-update iterates.
RunResult svrg_gda_run(const FiniteSumProblem& problem, const Point& init,
                       const LoopPlan& plan, const StepSizes& steps,
                       SplitMix64& rng, OracleCounters& counters,
                       const StepObserver& observer = {},
                       BatchSampling sampling = BatchSampling::kIidWithReplacement);

// Inexact proximal-point acceleration around the recursive-estimator solver.
// Outer iteration k solves the regularized problem f + (beta/2)||x - u_k||^2
// through its role-swapped form and extrapolates the prox center:
// u_{k+1} = x_{k+1} + gamma (x_{k+1} - x_k).
struct CatalystPlan {
  double beta = 0.0;
  double gamma = 0.0;
  std::int64_t outer_iters = 1;

  // theory = true derives the sub-solver from (L, mu_y, n, delta schedule):
  // the swapped problem is solved with tau = 1/(15 L) on its min variable,
  // lambda = 288, tau/(24*288) on its max variable, M = B = ceil(sqrt(n)),
  // K = ceil(2/(mu_y tau_max)) and T_k = max(1, ceil(log(1/delta_k))).
  bool theory = true;
  double delta = 0.0;     // global sub-solver accuracy (delta_target)
  double L = 0.0;
  double mu_y = 0.0;
  double kappa_y = 0.0;
  double g0_gap = 0.0;    // measured (or bounded) initial primal gap

  // theory = false uses these directly; step sizes are stated in the
  // original problem's coordinates and mapped onto the swapped sub-problem
  // internally (sub min-variable = original y).
  StepSizes sub_steps;
  LoopPlan sub_plan;

  PLMode mode = PLMode::kTwoSided;  // one-sided: output a uniform outer iterate
};

RunResult acc_spider_run(const FiniteSumProblem& problem, const Point& init,
                         const CatalystPlan& plan, SplitMix64& rng,
                         OracleCounters& counters, const StepObserver& observer = {});

// Lyapunov value V = A + (lambda tau_x / tau_y) B with A = g(x) - g* and
// B = g(x) - f(x, y); both parts are nonnegative up to metric tolerance.
struct LyapunovParts {
  double value = 0.0;
  double primal_gap = 0.0;   // A
  double inner_gap = 0.0;    // B
};

LyapunovParts lyapunov(const PLGameInstance& instance, const ReferenceSolution& ref,
                       const Point& p, const StepSizes& steps);

}  // namespace plmm
