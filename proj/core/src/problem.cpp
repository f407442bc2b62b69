#include "plmm/problem.hpp"

#include <utility>

namespace plmm {

double FiniteSumProblem::value(const Point&) const {
  throw std::logic_error("FiniteSumProblem::value: no value oracle for this problem");
}

namespace {

void check_point(const FiniteSumProblem& problem, const Point& p, const char* where) {
  if (p.x.size() != problem.dim_x() || p.y.size() != problem.dim_y()) {
    throw std::invalid_argument(std::string(where) + ": point dimensions (" +
                                std::to_string(p.x.size()) + ", " + std::to_string(p.y.size()) +
                                ") do not match problem (" + std::to_string(problem.dim_x()) +
                                ", " + std::to_string(problem.dim_y()) + ")");
  }
}

}  // namespace

GradPair component_grad(const FiniteSumProblem& problem, std::int64_t i,
                        const Point& p, OracleCounters& counters) {
  if (i < 0 || i >= problem.component_count()) {
    throw std::out_of_range("component_grad: index " + std::to_string(i) +
                            " outside [0, " + std::to_string(problem.component_count()) + ")");
  }
  check_point(problem, p, "component_grad");
  GradPair out;
  problem.eval_component(i, p, out);
  counters.sfo += 1;
  if (!out.gx.allFinite() || !out.gy.allFinite()) {
    throw std::runtime_error("component_grad: component " + std::to_string(i) +
                             " produced a non-finite gradient");
  }
  return out;
}

namespace {

GradPair accumulate_full_grad(const FiniteSumProblem& problem, const Point& p) {
  check_point(problem, p, "full_grad");
  const std::int64_t n = problem.component_count();
  GradPair acc;
  acc.gx = Eigen::VectorXd::Zero(problem.dim_x());
  acc.gy = Eigen::VectorXd::Zero(problem.dim_y());
  GradPair term;
  for (std::int64_t i = 0; i < n; ++i) {
    problem.eval_component(i, p, term);
    acc.gx += term.gx;
    acc.gy += term.gy;
  }
  acc.gx /= static_cast<double>(n);
  acc.gy /= static_cast<double>(n);
  if (!acc.gx.allFinite() || !acc.gy.allFinite()) {
    throw std::runtime_error("full_grad: non-finite gradient");
  }
  return acc;
}

}  // namespace

GradPair full_grad(const FiniteSumProblem& problem, const Point& p,
                   OracleCounters& counters) {
  GradPair g = accumulate_full_grad(problem, p);
  counters.sfo += static_cast<std::uint64_t>(problem.component_count());
  counters.full_grad_evals += 1;
  return g;
}

GradPair full_grad_unbilled(const FiniteSumProblem& problem, const Point& p) {
  return accumulate_full_grad(problem, p);
}

ProxRegularizedProblem::ProxRegularizedProblem(const FiniteSumProblem& inner,
                                               double beta, Eigen::VectorXd center)
    : inner_(&inner), beta_(beta), center_(std::move(center)) {
  if (!(beta_ > 0.0)) {
    throw std::invalid_argument("prox_regularize: beta must be positive");
  }
  if (center_.size() != inner_->dim_x()) {
    throw std::invalid_argument("prox_regularize: center has dimension " +
                                std::to_string(center_.size()) + ", expected " +
                                std::to_string(inner_->dim_x()));
  }
}

void ProxRegularizedProblem::eval_component(std::int64_t i, const Point& p,
                                            GradPair& out) const {
  inner_->eval_component(i, p, out);
  out.gx += beta_ * (p.x - center_);
}

double ProxRegularizedProblem::value(const Point& p) const {
  return inner_->value(p) + 0.5 * beta_ * (p.x - center_).squaredNorm();
}

double ProxRegularizedProblem::smoothness_hint() const {
  const double inner = inner_->smoothness_hint();
  return inner > 0.0 ? inner + beta_ : 0.0;
}

void RoleSwappedProblem::eval_component(std::int64_t i, const Point& p,
                                        GradPair& out) const {
  GradPair inner_grad;
  inner_->eval_component(i, Point{p.y, p.x}, inner_grad);
  out.gx = -inner_grad.gy;
  out.gy = -inner_grad.gx;
}

double RoleSwappedProblem::value(const Point& p) const {
  return -inner_->value(Point{p.y, p.x});
}

ProxRegularizedProblem prox_regularize(const FiniteSumProblem& problem,
                                       double beta, Eigen::VectorXd center) {
  return ProxRegularizedProblem(problem, beta, std::move(center));
}

RoleSwappedProblem swap_negate(const FiniteSumProblem& problem) {
  return RoleSwappedProblem(problem);
}

}  // namespace plmm
