#include "plmm/schedules.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>

namespace plmm {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("schedule: ") + name + " must be positive");
  }
}

// ceil/floor that forgive a few ulps of noise next to an integer, so chained
// divisions that are exact in real arithmetic stay exact as loop counts.
double snap(double v) {
  const double r = std::nearbyint(v);
  if (std::abs(v - r) <= 32.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(v))) {
    return r;
  }
  return v;
}

std::int64_t ceil_count(double v) {
  return static_cast<std::int64_t>(std::ceil(snap(v)));
}

std::int64_t floor_count(double v) {
  return static_cast<std::int64_t>(std::floor(snap(v)));
}

std::int64_t log_restarts(double eps) {
  // T = ceil(log(1/eps)), clamped so eps >= 1 still runs one restart.
  return std::max<std::int64_t>(1, ceil_count(std::log(1.0 / eps)));
}

}  // namespace

SpiderSchedule params_two_sided_spider(double L, double mu_x, double mu_y,
                                       std::int64_t n, double eps) {
  require_positive(L, "L");
  require_positive(mu_x, "mu_x");
  require_positive(mu_y, "mu_y");
  require_positive(eps, "eps");
  if (n < 1) throw std::invalid_argument("schedule: n must be >= 1");

  SpiderSchedule s;
  s.steps.tau_y = 1.0 / (5.0 * L);
  s.steps.lambda = 32.0 * L * L / (mu_y * mu_y);
  s.steps.tau_x = s.steps.tau_y / (24.0 * s.steps.lambda);
  const std::int64_t root_n = ceil_count(std::sqrt(static_cast<double>(n)));
  s.plan.epoch_len = root_n;
  s.plan.batch_size = root_n;
  s.plan.inner_iters = ceil_count(2.0 / (mu_x * s.steps.tau_x));
  s.plan.restarts = log_restarts(eps);
  s.plan.mode = PLMode::kTwoSided;
  return s;
}

SpiderSchedule params_one_sided_spider(double L, double mu_y, std::int64_t n, double eps) {
  require_positive(L, "L");
  require_positive(mu_y, "mu_y");
  require_positive(eps, "eps");
  if (n < 1) throw std::invalid_argument("schedule: n must be >= 1");

  SpiderSchedule s;
  s.steps.tau_y = 1.0 / (5.0 * L);
  s.steps.lambda = 32.0 * L * L / (mu_y * mu_y);
  s.steps.tau_x = s.steps.tau_y / (24.0 * s.steps.lambda);
  const std::int64_t root_n = ceil_count(std::sqrt(static_cast<double>(n)));
  s.plan.epoch_len = root_n;
  s.plan.batch_size = root_n;
  s.plan.inner_iters = ceil_count(64.0 / (s.steps.tau_x * eps * eps));
  s.plan.restarts = 1;
  s.plan.mode = PLMode::kOneSided;
  return s;
}

StepSizes params_gda(double L, double /*mu_x*/, double mu_y, PLMode mode) {
  require_positive(L, "L");
  require_positive(mu_y, "mu_y");

  StepSizes st;
  st.tau_y = 1.0 / L;
  if (mode == PLMode::kTwoSided) {
    st.lambda = 6.0 * L * L / (mu_y * mu_y);
    st.tau_x = st.tau_y / (22.0 * st.lambda);
  } else {
    st.lambda = 4.0 * L * L / (mu_y * mu_y);
    st.tau_x = st.tau_y / (18.0 * st.lambda);
  }
  return st;
}

SpiderSchedule params_svrg(double L, double mu_x, double mu_y, std::int64_t n,
                           double eps, double alpha) {
  require_positive(L, "L");
  require_positive(mu_x, "mu_x");
  require_positive(mu_y, "mu_y");
  require_positive(eps, "eps");
  if (n < 1) throw std::invalid_argument("schedule: n must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("schedule: alpha must lie in (0, 1]");
  }

  const double nu = 1.0 / (176.0 * (std::exp(1.0) - 1.0));
  SpiderSchedule s;
  s.steps.tau_y = nu / (L * std::pow(static_cast<double>(n), alpha));
  s.steps.lambda = 14.0 * L * L / (mu_y * mu_y);
  s.steps.tau_x = s.steps.tau_y / (22.0 * s.steps.lambda);
  s.plan.batch_size = 1;
  s.plan.epoch_len =
      std::max<std::int64_t>(1, floor_count(std::pow(static_cast<double>(n), 1.5 * alpha) / (2.0 * nu)));
  // The bound asks for S*M >= 8/(mu_x tau_x) total inner steps per restart.
  const std::int64_t total = ceil_count(8.0 / (mu_x * s.steps.tau_x));
  s.plan.anchor_rounds =
      std::max<std::int64_t>(1, ceil_count(static_cast<double>(total) /
                                           static_cast<double>(s.plan.epoch_len)));
  s.plan.inner_iters = s.plan.anchor_rounds * s.plan.epoch_len;
  s.plan.restarts = log_restarts(eps);
  s.plan.mode = PLMode::kTwoSided;
  return s;
}

double delta_target(PLMode mode, double L, double mu_x, double mu_y, double eps) {
  require_positive(L, "L");
  require_positive(mu_y, "mu_y");
  require_positive(eps, "eps");
  if (mode == PLMode::kTwoSided) {
    require_positive(mu_x, "mu_x");
    return mu_x * eps / (11.0 * (mu_x + 4.0 * L) * L);
  }
  const double kappa_y = L / mu_y;
  return eps * eps / (8.0 * L * kappa_y * (22.0 * mu_y + 1.0));
}

double delta_k(std::int64_t k, double step_sq, double delta, double kappa_y,
               double beta, double L, double mu_y, double g0_gap) {
  if (k < 0) throw std::invalid_argument("delta_k: k must be >= 0");
  require_positive(delta, "delta");
  require_positive(kappa_y, "kappa_y");
  require_positive(mu_y, "mu_y");
  require_positive(L, "L");
  if (!(beta > L)) throw std::invalid_argument("delta_k: beta must exceed L");
  if (!(step_sq >= 0.0)) throw std::invalid_argument("delta_k: step_sq must be >= 0");

  const double kap2 = kappa_y * kappa_y;
  if (k == 0) {
    double gap = g0_gap;
    if (!(gap > 0.0)) {
      std::cerr << "delta_k: non-positive initial gap " << g0_gap
                << " clamped to machine epsilon\n";
      gap = std::numeric_limits<double>::epsilon();
    }
    return delta * mu_y / (14472.0 * kap2 * gap);
  }
  double second = std::numeric_limits<double>::infinity();
  if (step_sq > 0.0) {
    second = (beta - L) * mu_y * delta / (16.0 * beta * beta * step_sq);
  }
  return std::min(0.25, second) / (7236.0 * kap2);
}

}  // namespace plmm
