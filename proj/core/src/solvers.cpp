#include "plmm/solvers.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <string>

namespace plmm {

namespace {

void check_init(const FiniteSumProblem& problem, const Point& init, const char* who) {
  if (init.x.size() != problem.dim_x() || init.y.size() != problem.dim_y()) {
    throw std::invalid_argument(std::string(who) + ": init dimensions (" +
                                std::to_string(init.x.size()) + ", " +
                                std::to_string(init.y.size()) + ") do not match problem (" +
                                std::to_string(problem.dim_x()) + ", " +
                                std::to_string(problem.dim_y()) + ")");
  }
}

void check_steps(const StepSizes& steps, const char* who) {
  if (!(steps.tau_x > 0.0) || !(steps.tau_y > 0.0)) {
    throw std::invalid_argument(std::string(who) + ": step sizes must be positive");
  }
}

void check_finite(const Point& p, std::int64_t step, const char* who) {
  if (!p.x.allFinite() || !p.y.allFinite()) {
    throw SolverAbort(std::string(who) + ": non-finite iterate at step " +
                      std::to_string(step), step);
  }
}

RunResult gda_impl(const FiniteSumProblem& problem, const Point& init,
                   std::int64_t iters, const StepSizes& steps, PLMode mode,
                   SplitMix64& rng, OracleCounters& counters,
                   const StepObserver& observer, bool alternating, const char* who) {
  check_init(problem, init, who);
  check_steps(steps, who);
  if (iters < 1) throw std::invalid_argument(std::string(who) + ": iters must be >= 1");

  RunResult res;
  Point cur = init;
  // Uniform output draw happens up front; the two-sided path stays
  // deterministic and leaves the stream untouched.
  const std::int64_t pick =
      mode == PLMode::kOneSided ? static_cast<std::int64_t>(rng.next_below(
                                      static_cast<std::uint64_t>(iters)))
                                : -1;
  Point picked;
  bool have_pick = false;

  for (std::int64_t k = 0; k < iters; ++k) {
    if (k == pick) {
      picked = cur;
      have_pick = true;
    }
    const GradPair g = full_grad(problem, cur, counters);
    if (alternating) {
      cur.x -= steps.tau_x * g.gx;
      const GradPair gy = full_grad(problem, cur, counters);
      cur.y += steps.tau_y * gy.gy;
    } else {
      cur.x -= steps.tau_x * g.gx;
      cur.y += steps.tau_y * g.gy;
    }
    ++res.steps;
    check_finite(cur, res.steps, who);
    if (observer && !observer(cur, res.steps, counters)) {
      res.stopped_early = true;
      break;
    }
  }

  res.last_iterate = cur;
  res.output = (mode == PLMode::kOneSided && have_pick) ? picked : cur;
  if (pick >= 0) res.selected_indices.push_back(pick);
  res.counters = counters;
  return res;
}

}  // namespace

RunResult gda_run(const FiniteSumProblem& problem, const Point& init,
                  std::int64_t iters, const StepSizes& steps, PLMode mode,
                  SplitMix64& rng, OracleCounters& counters, const StepObserver& observer) {
  return gda_impl(problem, init, iters, steps, mode, rng, counters, observer,
                  /*alternating=*/false, "gda_run");
}

RunResult agda_run(const FiniteSumProblem& problem, const Point& init,
                   std::int64_t iters, const StepSizes& steps, PLMode mode,
                   SplitMix64& rng, OracleCounters& counters, const StepObserver& observer) {
  return gda_impl(problem, init, iters, steps, mode, rng, counters, observer,
                  /*alternating=*/true, "agda_run");
}

namespace {

void check_plan(const LoopPlan& plan, const char* who) {
  if (plan.restarts < 1) throw std::invalid_argument(std::string(who) + ": restarts must be >= 1");
  if (plan.inner_iters < 1) {
    throw std::invalid_argument(std::string(who) + ": inner_iters must be >= 1");
  }
  if (plan.epoch_len < 1) throw std::invalid_argument(std::string(who) + ": epoch_len must be >= 1");
  if (plan.batch_size < 1) {
    throw std::invalid_argument(std::string(who) + ": batch_size must be >= 1");
  }
}

}  // namespace

RunResult spider_gda_run(const FiniteSumProblem& problem, const Point& init,
                         const LoopPlan& plan, const StepSizes& steps,
                         SplitMix64& rng, OracleCounters& counters,
                         const StepObserver& observer, BatchSampling sampling) {
  const char* who = "spider_gda_run";
  check_init(problem, init, who);
  check_steps(steps, who);
  check_plan(plan, who);

  RunResult res;
  SpiderEstimator est(plan.epoch_len, plan.batch_size, sampling);
  Point cur = init;
  Point prev = init;

  for (std::int64_t t = 0; t < plan.restarts && !res.stopped_early; ++t) {
    // Selection index for this restart, drawn before the loop; identical in
    // law to selecting uniformly among the K pre-update iterates afterwards.
    const std::int64_t pick = static_cast<std::int64_t>(
        rng.next_below(static_cast<std::uint64_t>(plan.inner_iters)));
    Point picked;
    bool have_pick = false;

    for (std::int64_t k = 0; k < plan.inner_iters; ++k) {
      const GradPair* g = nullptr;
      if (k % plan.epoch_len == 0) {
        g = &est.refresh(problem, cur, counters);
      } else {
        g = &est.step(problem, cur, prev, rng, counters);
      }
      if (k == pick) {
        picked = cur;
        have_pick = true;
      }
      prev = cur;
      cur.x -= steps.tau_x * g->gx;
      cur.y += steps.tau_y * g->gy;
      ++res.steps;
      check_finite(cur, res.steps, who);
      if (observer && !observer(cur, res.steps, counters)) {
        res.stopped_early = true;
        break;
      }
    }

    res.last_iterate = cur;
    if (have_pick) cur = picked;
    res.restart_points.push_back(cur);
    res.selected_indices.push_back(pick);
  }

  res.output = cur;
  res.counters = counters;
  return res;
}

RunResult svrg_gda_run(const FiniteSumProblem& problem, const Point& init,
                       const LoopPlan& plan, const StepSizes& steps,
                       SplitMix64& rng, OracleCounters& counters,
                       const StepObserver& observer, BatchSampling sampling) {
  const char* who = "svrg_gda_run";
  check_init(problem, init, who);
  check_steps(steps, who);
  check_plan(plan, who);
  if (plan.anchor_rounds < 1) {
    throw std::invalid_argument(std::string(who) + ": anchor_rounds must be >= 1");
  }

  RunResult res;
  SvrgEstimator est(plan.batch_size, sampling);
  Point cur = init;
  const std::int64_t per_restart = plan.anchor_rounds * plan.epoch_len;

  for (std::int64_t t = 0; t < plan.restarts && !res.stopped_early; ++t) {
    const std::int64_t pick = static_cast<std::int64_t>(
        rng.next_below(static_cast<std::uint64_t>(per_restart)));
    Point picked;
    bool have_pick = false;
    std::int64_t idx = 0;

    for (std::int64_t s = 0; s < plan.anchor_rounds && !res.stopped_early; ++s) {
      est.anchor(problem, cur, counters);
      for (std::int64_t k = 0; k < plan.epoch_len; ++k) {
        if (idx == pick) {
          picked = cur;
          have_pick = true;
        }
        ++idx;
        const GradPair g = est.step(problem, cur, rng, counters);
        cur.x -= steps.tau_x * g.gx;
        cur.y += steps.tau_y * g.gy;
        ++res.steps;
        check_finite(cur, res.steps, who);
        if (observer && !observer(cur, res.steps, counters)) {
          res.stopped_early = true;
          break;
        }
      }
    }

    res.last_iterate = cur;
    if (have_pick) cur = picked;
    res.restart_points.push_back(cur);
    res.selected_indices.push_back(pick);
  }

  res.output = cur;
  res.counters = counters;
  return res;
}

namespace {

std::int64_t ceil_positive(double v) {
  const double r = std::nearbyint(v);
  if (std::abs(v - r) <= 32.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(v))) {
    return static_cast<std::int64_t>(r);
  }
  return static_cast<std::int64_t>(std::ceil(v));
}

}  // namespace

RunResult acc_spider_run(const FiniteSumProblem& problem, const Point& init,
                         const CatalystPlan& plan, SplitMix64& rng,
                         OracleCounters& counters, const StepObserver& observer) {
  const char* who = "acc_spider_run";
  check_init(problem, init, who);
  if (!(plan.beta > 0.0)) throw std::invalid_argument("acc_spider_run: beta must be positive");
  if (!(plan.gamma >= 0.0)) {
    throw std::invalid_argument("acc_spider_run: gamma must be >= 0");
  }
  if (plan.outer_iters < 1) {
    throw std::invalid_argument("acc_spider_run: outer_iters must be >= 1");
  }
  if (plan.theory) {
    if (!(plan.L > 0.0) || !(plan.mu_y > 0.0) || !(plan.kappa_y > 0.0) || !(plan.delta > 0.0)) {
      throw std::invalid_argument(
          "acc_spider_run: theory mode needs positive L, mu_y, kappa_y and delta");
    }
    if (!(plan.beta > plan.L)) {
      throw std::invalid_argument("acc_spider_run: theory mode needs beta > L");
    }
  } else {
    check_steps(plan.sub_steps, who);
    check_plan(plan.sub_plan, who);
  }

  RunResult res;
  Point cur = init;
  Eigen::VectorXd center = init.x;
  double step_sq = 0.0;

  const std::int64_t pick =
      plan.mode == PLMode::kOneSided
          ? static_cast<std::int64_t>(
                rng.next_below(static_cast<std::uint64_t>(plan.outer_iters)))
          : -1;
  Point picked;
  bool have_pick = false;

  for (std::int64_t k = 0; k < plan.outer_iters && !res.stopped_early; ++k) {
    if (k == pick) {
      picked = cur;
      have_pick = true;
    }

    StepSizes sub_steps;
    LoopPlan sub_plan;
    if (plan.theory) {
      double dk = delta_k(k, step_sq, plan.delta, plan.kappa_y, plan.beta, plan.L,
                          plan.mu_y, plan.g0_gap);
      if (dk < 1e-300) {
        std::cerr << "acc_spider_run: delta_" << k << " underflowed; clamped to 1e-300\n";
        dk = 1e-300;
      }
      res.delta_history.push_back(dk);

      // Sub-solver in swapped coordinates: its min variable is the original
      // y and gets the fast step 1/(15 L); the original x rides the slow
      // timescale tau/(24*288).
      sub_steps.tau_x = 1.0 / (15.0 * plan.L);
      sub_steps.lambda = 288.0;
      sub_steps.tau_y = sub_steps.tau_x / (24.0 * sub_steps.lambda);
      const std::int64_t root_n =
          ceil_positive(std::sqrt(static_cast<double>(problem.component_count())));
      sub_plan.epoch_len = root_n;
      sub_plan.batch_size = root_n;
      sub_plan.inner_iters = ceil_positive(2.0 / (plan.mu_y * sub_steps.tau_y));
      sub_plan.restarts = std::max<std::int64_t>(1, ceil_positive(std::log(1.0 / dk)));
      sub_plan.mode = PLMode::kTwoSided;
    } else {
      // Manual step sizes arrive in original coordinates; swap them along
      // with the variables.
      sub_steps.tau_x = plan.sub_steps.tau_y;
      sub_steps.tau_y = plan.sub_steps.tau_x;
      sub_steps.lambda = plan.sub_steps.lambda;
      sub_plan = plan.sub_plan;
      sub_plan.mode = PLMode::kTwoSided;
    }

    const ProxRegularizedProblem reg = prox_regularize(problem, plan.beta, center);
    const RoleSwappedProblem sub = swap_negate(reg);
    const Point warm{cur.y, cur.x};

    StepObserver sub_observer;
    if (observer) {
      const std::int64_t base = res.steps;
      sub_observer = [&observer, base](const Point& q, std::int64_t step,
                                       const OracleCounters& c) {
        return observer(Point{q.y, q.x}, base + step, c);
      };
    }

    const RunResult sub_res = spider_gda_run(sub, warm, sub_plan, sub_steps, rng,
                                             counters, sub_observer);
    res.steps += sub_res.steps;
    res.stopped_early = sub_res.stopped_early;

    // Theory mode advances from the sub-solver's formal output (the uniform
    // pick the analysis is stated for); practical mode keeps the live final
    // iterate, since extrapolating from a mid-epoch pick throws progress away.
    const Point& carry = plan.theory ? sub_res.output : sub_res.last_iterate;
    const Point next{carry.y, carry.x};
    center = next.x + plan.gamma * (next.x - cur.x);
    step_sq = (next.x - cur.x).squaredNorm();
    cur = next;
    res.restart_points.push_back(cur);
  }

  res.last_iterate = cur;
  res.output = (plan.mode == PLMode::kOneSided && have_pick) ? picked : cur;
  if (pick >= 0) res.selected_indices.push_back(pick);
  res.counters = counters;
  return res;
}

LyapunovParts lyapunov(const PLGameInstance& instance, const ReferenceSolution& ref,
                       const Point& p, const StepSizes& steps) {
  check_steps(steps, "lyapunov");
  LyapunovParts parts;
  const double g = primal_value(instance, ref, p.x);
  parts.primal_gap = g - ref.g_star;
  parts.inner_gap = g - instance.value(p);
  parts.value = parts.primal_gap + steps.lambda * steps.tau_x / steps.tau_y * parts.inner_gap;
  return parts;
}

}  // namespace plmm
