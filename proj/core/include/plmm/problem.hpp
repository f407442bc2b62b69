#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace plmm {

// A primal/dual iterate of the saddle problem min_x max_y f(x, y).
struct Point {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

// Gradient pair (grad_x f, grad_y f) at one point.
struct GradPair {
  Eigen::VectorXd gx;
  Eigen::VectorXd gy;
};

// Oracle-call accounting for one run.  Callers pass their own counter object
// into each oracle call; the library keeps no global state, so concurrent
// runs never share counters.
//
// Billing convention:
//   * one SFO unit buys the component gradient pair (g_x, g_y) of a single
//     f_i; a recursive/anchored estimator update over a batch of size B is
//     billed B units per block batch (S_x and S_y are drawn independently,
//     so one estimator step with batch B costs 2B);
//   * a full gradient pass costs n units;
//   * metric evaluations for traces and plots are never billed.
struct OracleCounters {
  std::uint64_t sfo = 0;
  std::uint64_t full_grad_evals = 0;

  void reset() {
    sfo = 0;
    full_grad_evals = 0;
  }
};

// Raised when a solver has to stop (non-finite iterate, exploded step, ...).
struct SolverAbort : std::runtime_error {
  SolverAbort(const std::string& what, std::int64_t at_step)
      : std::runtime_error(what), step(at_step) {}
  std::int64_t step = 0;
};

// Finite-sum saddle objective f(x, y) = (1/n) sum_i f_i(x, y), minimized in
// x and maximized in y.  Implementations supply per-component gradients via
// eval_component(); the free functions below add bounds checking, finiteness
// checks and SFO accounting on top.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  virtual std::int64_t component_count() const = 0;
  virtual std::int64_t dim_x() const = 0;
  virtual std::int64_t dim_y() const = 0;

  // Writes (grad_x f_i, grad_y f_i) at p into out.  No accounting, no
  // validation; this is the raw hook estimators and metrics build on.
  virtual void eval_component(std::int64_t i, const Point& p, GradPair& out) const = 0;

  // Function values are optional; only some problems (e.g. the synthetic
  // PL game) expose them.  value() on a problem without an oracle throws.
  virtual bool has_value() const { return false; }
  virtual double value(const Point& p) const;

  // Smoothness constant of the components, when the problem knows one.
  virtual double smoothness_hint() const { return 0.0; }
};

// Billed component gradient: one SFO unit.  Throws std::out_of_range for a
// bad index and std::runtime_error naming the component if the result is not
// finite.
GradPair component_grad(const FiniteSumProblem& problem, std::int64_t i,
                        const Point& p, OracleCounters& counters);

// Billed full gradient: averages all n components, costs n SFO units and one
// full_grad_evals tick.
GradPair full_grad(const FiniteSumProblem& problem, const Point& p,
                   OracleCounters& counters);

// Unbilled full gradient for metric evaluation.
GradPair full_grad_unbilled(const FiniteSumProblem& problem, const Point& p);

// f(x, y) + (beta/2) ||x - center||^2, component-wise: every component
// carries the full regularizer, so the component average equals the
// regularized objective and each component stays (L + beta)-smooth.
//
// Holds a pointer to the wrapped problem; the wrapped problem must outlive
// the wrapper.
class ProxRegularizedProblem final : public FiniteSumProblem {
 public:
  ProxRegularizedProblem(const FiniteSumProblem& inner, double beta,
                         Eigen::VectorXd center);

  std::int64_t component_count() const override { return inner_->component_count(); }
  std::int64_t dim_x() const override { return inner_->dim_x(); }
  std::int64_t dim_y() const override { return inner_->dim_y(); }
  void eval_component(std::int64_t i, const Point& p, GradPair& out) const override;
  bool has_value() const override { return inner_->has_value(); }
  double value(const Point& p) const override;
  double smoothness_hint() const override;

  double beta() const { return beta_; }
  const Eigen::VectorXd& center() const { return center_; }

 private:
  const FiniteSumProblem* inner_;
  double beta_;
  Eigen::VectorXd center_;
};

// The role-swapped negation of a problem: treats the inner problem's y as
// its min-variable and the inner x as its max-variable.  Its objective is
// -f(x, y); component gradients are the inner ones negated and exchanged:
//
//   swapped point (a, b)  <->  inner point (x = b, y = a)
//   grad_a = -(inner grad_y),  grad_b = -(inner grad_x)
//
// Applying the wrapper twice is gradient-equivalent to the original problem.
// Holds a pointer to the wrapped problem; the wrapped problem must outlive
// the wrapper.
class RoleSwappedProblem final : public FiniteSumProblem {
 public:
  explicit RoleSwappedProblem(const FiniteSumProblem& inner) : inner_(&inner) {}

  std::int64_t component_count() const override { return inner_->component_count(); }
  std::int64_t dim_x() const override { return inner_->dim_y(); }
  std::int64_t dim_y() const override { return inner_->dim_x(); }
  void eval_component(std::int64_t i, const Point& p, GradPair& out) const override;
  bool has_value() const override { return inner_->has_value(); }
  double value(const Point& p) const override;
  double smoothness_hint() const override { return inner_->smoothness_hint(); }

 private:
  const FiniteSumProblem* inner_;
};

ProxRegularizedProblem prox_regularize(const FiniteSumProblem& problem,
                                       double beta, Eigen::VectorXd center);
RoleSwappedProblem swap_negate(const FiniteSumProblem& problem);

// The wrappers keep a pointer to the wrapped problem, so building one around
// a temporary would dangle.
ProxRegularizedProblem prox_regularize(FiniteSumProblem&&, double,
                                       Eigen::VectorXd) = delete;
RoleSwappedProblem swap_negate(FiniteSumProblem&&) = delete;

}  // namespace plmm
