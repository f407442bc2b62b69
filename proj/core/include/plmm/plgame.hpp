#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "plmm/problem.hpp"

namespace plmm {

// Raised when a requested metric cannot be evaluated (no reference solution,
// inner maximization unbounded, ...).  Harness code catches this and falls
// back to gradient-norm-only reporting.
struct MetricUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeneratorConfig {
  std::int64_t n = 0;             // number of components
  std::int64_t d = 0;             // dimension of x and of y
  std::int64_t r = 0;             // rank of the curvature covariances
  double mu = 0.0;                // lower end of the curvature spectrum
  double L = 1.0;                 // upper end of the curvature spectrum
  double coupling_scale = 0.1;    // scale of the coupling covariance
  std::uint64_t seed = 0;
  bool well_posed = true;         // project the coupling into the curvature ranges
};

// Synthetic finite-sum quadratic saddle problem
//
//   f(x, y) = (1/2) x'P x - (1/2) y'Q y + x'R y,
//   f_i(x, y) = (1/2)(p_i'x)^2 - (1/2)(q_i'y)^2 + (a_i'x)(b_i'y),
//
// with P = mean_i p_i p_i', Q = mean_i q_i q_i', R = mean_i a_i b_i'.  The
// factors p_i, q_i are Gaussian samples from rank-r covariances with spectrum
// in [mu, L], so f is a PL (not strongly convex) game whenever r < d.  In the
// raw form a_i = b_i = r_i with r_i drawn from the coupling covariance; the
// well-posed form projects the coupling into the curvature ranges,
// a_i = Pi_P r_i and b_i = Pi_Q r_i, which keeps the inner maximization
// bounded and the saddle attained.
class PLGameInstance {
 public:
  // Deterministic generation: one splitmix64 stream seeded with config.seed,
  // consumed in this order (matrices filled column by column):
  //   gaussian basis for U_P, r uniforms for spec_P, basis for U_Q, uniforms
  //   for spec_Q, gaussian V (d x d), then per-component gaussian factors
  //   Z_P (r x n), Z_Q (r x n), W (d x n).
  static PLGameInstance generate(const GeneratorConfig& config);

  // Builds an instance from explicit factor columns (d x n each).  Used for
  // hand-crafted problems in tests and for deserialization; applies the same
  // aggregate/projection pipeline as generate().
  static PLGameInstance from_factors(const GeneratorConfig& config,
                                     Eigen::MatrixXd p_cols,
                                     Eigen::MatrixXd q_cols,
                                     Eigen::MatrixXd r_cols);

  // Portable JSON serialization: {config, factors as row-major arrays}.
  // Aggregates and projections are recomputed on load, so a file plus its
  // config reproduces the instance exactly.
  void save(const std::string& path) const;
  static PLGameInstance load(const std::string& path);
  std::string to_json_text() const;
  static PLGameInstance from_json_text(const std::string& text);

  const GeneratorConfig& config() const { return config_; }
  std::int64_t n() const { return config_.n; }
  std::int64_t d() const { return config_.d; }

  // Factor columns, one component per column (d x n).
  const Eigen::MatrixXd& p_factors() const { return p_; }
  const Eigen::MatrixXd& q_factors() const { return q_; }
  const Eigen::MatrixXd& raw_coupling_factors() const { return r_; }
  const Eigen::MatrixXd& coupling_left() const { return a_; }
  const Eigen::MatrixXd& coupling_right() const { return b_; }

  // Aggregates (d x d): curvature_x = P, curvature_y = Q, coupling = R.
  const Eigen::MatrixXd& curvature_x() const { return P_; }
  const Eigen::MatrixXd& curvature_y() const { return Q_; }
  const Eigen::MatrixXd& coupling() const { return R_; }

  // Sampled covariance spectra (diagonal of D); only present on generated
  // instances, not on loaded or hand-built ones.
  const std::optional<Eigen::VectorXd>& sampled_spectrum_x() const { return spec_p_; }
  const std::optional<Eigen::VectorXd>& sampled_spectrum_y() const { return spec_q_; }

  double value(const Point& p) const;
  void full_grad_aggregate(const Point& p, GradPair& out) const;

 private:
  PLGameInstance() = default;
  void finalize();  // aggregates + well-posed projection

  GeneratorConfig config_;
  Eigen::MatrixXd p_, q_, r_;  // raw factors, d x n
  Eigen::MatrixXd a_, b_;      // coupling factors actually used (== r_ unless well_posed)
  Eigen::MatrixXd P_, Q_, R_;  // d x d aggregates
  std::optional<Eigen::VectorXd> spec_p_, spec_q_;
};

// FiniteSumProblem view over an instance.  Component gradients:
//   grad_x f_i = (p_i'x) p_i + (b_i'y) a_i
//   grad_y f_i = -(q_i'y) q_i + (a_i'x) b_i
// The view holds a pointer; the instance must outlive it.
class PLGameProblem final : public FiniteSumProblem {
 public:
  explicit PLGameProblem(const PLGameInstance& instance) : inst_(&instance) {}

  std::int64_t component_count() const override { return inst_->n(); }
  std::int64_t dim_x() const override { return inst_->d(); }
  std::int64_t dim_y() const override { return inst_->d(); }
  void eval_component(std::int64_t i, const Point& p, GradPair& out) const override;
  bool has_value() const override { return true; }
  double value(const Point& p) const override { return inst_->value(p); }

  const PLGameInstance& instance() const { return *inst_; }

 private:
  const PLGameInstance* inst_;
};

// Estimated problem constants:
//   L      largest spectral norm over the component Hessians (power
//          iteration on each rank-<=4 component, tolerance 1e-8)
//   mu_x   smallest nonzero eigenvalue of P (threshold 1e-10 * lambda_max)
//   mu_y   smallest nonzero eigenvalue of Q
// These equal the exact PL/smoothness constants on well-posed instances and
// are reported as estimates otherwise.
struct ProblemConstants {
  double L = 0.0;
  double mu_x = 0.0;
  double mu_y = 0.0;
  double kappa_x = 0.0;
  double kappa_y = 0.0;
};

// Min-norm reference saddle plus the cached pieces every metric needs.
struct ReferenceSolution {
  Eigen::VectorXd x_star;
  Eigen::VectorXd y_star;
  double g_star = 0.0;
  ProblemConstants constants;
  Eigen::MatrixXd q_pinv;    // pseudo-inverse of Q
  Eigen::MatrixXd q_range;   // orthonormal basis of range(Q)
};

// Solves the stationarity system [P R; R' -Q] z = 0 for its min-norm
// solution and packages the metric caches.  Throws MetricUnavailable if the
// solve does not satisfy the system to 1e-6.
ReferenceSolution reference_saddle(const PLGameInstance& instance);

// g(x) = max_y f(x, y) = (1/2) x'P x + (1/2)(R'x)' Q^+ (R'x), finite only
// when R'x lies in range(Q); otherwise the inner max is unbounded and this
// throws MetricUnavailable ("unbounded inner max").
double primal_value(const PLGameInstance& instance, const ReferenceSolution& ref,
                    const Eigen::VectorXd& x);
double primal_gap(const PLGameInstance& instance, const ReferenceSolution& ref,
                  const Eigen::VectorXd& x);

// Squared distance ||x - x*||^2 + ||y - y*||^2.
double distance_to_saddle(const ReferenceSolution& ref, const Point& p);

}  // namespace plmm
