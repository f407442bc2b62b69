#pragma once

#include <cstdint>

namespace plmm {

// Whether a run targets the two-sided regime (both players' objectives are
// PL; output is the last restart point) or the one-sided regime (only the
// inner maximization is PL; output is a uniformly selected iterate and the
// quality measure is stationarity of g(x) = max_y f(x, y)).
enum class PLMode { kTwoSided, kOneSided };

struct StepSizes {
  double tau_x = 0.0;
  double tau_y = 0.0;
  double lambda = 0.0;  // timescale ratio the Lyapunov function weighs B by
};

// Loop geometry for the variance-reduced solvers.
struct LoopPlan {
  std::int64_t restarts = 1;       // outer repetitions (T)
  std::int64_t inner_iters = 1;    // steps per restart (K)
  std::int64_t epoch_len = 1;      // steps between full refreshes (M)
  std::int64_t batch_size = 1;     // component draws per block batch (B)
  std::int64_t anchor_rounds = 0;  // anchor updates per restart (S; anchored estimator only)
  PLMode mode = PLMode::kTwoSided;
};

struct SpiderSchedule {
  StepSizes steps;
  LoopPlan plan;
};

// Recursive-estimator schedule for the two-sided regime:
//   tau_y = 1/(5L), lambda = 32 L^2 / mu_y^2, tau_x = tau_y / (24 lambda),
//   K = ceil(2 / (mu_x tau_x)), M = B = ceil(sqrt(n)),
//   T = max(1, ceil(log(1/eps)))  (natural log).
SpiderSchedule params_two_sided_spider(double L, double mu_x, double mu_y,
                                       std::int64_t n, double eps);

// One-sided regime: same step sizes and epoch geometry, a single restart,
// K = ceil(64 / (tau_x eps^2)), uniformly selected output.
SpiderSchedule params_one_sided_spider(double L, double mu_y, std::int64_t n, double eps);

// Deterministic simultaneous GDA step sizes.
//   two-sided:  tau_y = 1/L, lambda = 6 L^2 / mu_y^2,  tau_x = tau_y / (22 lambda)
//   one-sided:  tau_y = 1/L, lambda = 4 L^2 / mu_y^2,  tau_x = tau_y / (18 lambda)
// mu_x does not enter either formula; it is accepted so call sites can pass
// the constants struct through uniformly.
StepSizes params_gda(double L, double mu_x, double mu_y, PLMode mode);

// Anchored-estimator schedule (two-sided):
//   nu = 1/(176(e-1)), tau_y = nu/(L n^alpha), lambda = 14 L^2 / mu_y^2,
//   tau_x = tau_y / (22 lambda), B = 1, M = floor(n^{3 alpha/2} / (2 nu)),
//   S = ceil(ceil(8/(mu_x tau_x)) / M), T = max(1, ceil(log(1/eps))).
// alpha = 2/3 balances the anchor and step costs.
SpiderSchedule params_svrg(double L, double mu_x, double mu_y, std::int64_t n,
                           double eps, double alpha = 2.0 / 3.0);

// Global sub-solver accuracy for the accelerated (proximal-point) wrapper:
//   two-sided: delta = mu_x eps / (11 (mu_x + 4L) L)
//   one-sided: delta = eps^2 / (8 L kappa_y (22 mu_y + 1)),  kappa_y = L/mu_y
double delta_target(PLMode mode, double L, double mu_x, double mu_y, double eps);

// Per-outer-iteration accuracy:
//   k = 0:  delta_0 = delta mu_y / (14472 kappa_y^2 g0_gap)
//   k >= 1: delta_k = (1/(7236 kappa_y^2)) *
//                     min(1/4, (beta - L) mu_y delta / (16 beta^2 step_sq))
// where step_sq = ||x_k - x_{k-1}||^2; a zero step resolves the min to 1/4.
// A non-positive g0_gap is clamped to machine epsilon (with a note on
// stderr), since the bound only shrinks delta_0 when the initial gap is
// genuinely large.  Requires beta > L.
double delta_k(std::int64_t k, double step_sq, double delta, double kappa_y,
               double beta, double L, double mu_y, double g0_gap);

}  // namespace plmm
