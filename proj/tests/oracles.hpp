#pragma once

// Independent oracles for the test suites: tiny problems with hand-derived
// gradients, central finite differences, explicit summation, and a dense
// eigendecomposition for component Hessian norms.  Everything here is
// deliberately naive and separate from the library code paths it checks.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "plmm/problem.hpp"
#include "plmm/rng.hpp"

namespace plmm::testing {

inline Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd out(1);
  out << v;
  return out;
}

inline Point point1(double x, double y) { return Point{vec1(x), vec1(y)}; }

// f_i == 0 for all i.
class ZeroProblem final : public FiniteSumProblem {
 public:
  ZeroProblem(std::int64_t n, std::int64_t dx, std::int64_t dy) : n_(n), dx_(dx), dy_(dy) {}
  std::int64_t component_count() const override { return n_; }
  std::int64_t dim_x() const override { return dx_; }
  std::int64_t dim_y() const override { return dy_; }
  void eval_component(std::int64_t, const Point&, GradPair& out) const override {
    out.gx = Eigen::VectorXd::Zero(dx_);
    out.gy = Eigen::VectorXd::Zero(dy_);
  }
  bool has_value() const override { return true; }
  double value(const Point&) const override { return 0.0; }

 private:
  std::int64_t n_, dx_, dy_;
};

// f(x, y) = x^2/2 - y^2/2 + x y  (one component, scalar blocks):
// grad_x = x + y, grad_y = -y + x.
class QuadGame1D final : public FiniteSumProblem {
 public:
  std::int64_t component_count() const override { return 1; }
  std::int64_t dim_x() const override { return 1; }
  std::int64_t dim_y() const override { return 1; }
  void eval_component(std::int64_t, const Point& p, GradPair& out) const override {
    out.gx = vec1(p.x(0) + p.y(0));
    out.gy = vec1(-p.y(0) + p.x(0));
  }
  bool has_value() const override { return true; }
  double value(const Point& p) const override {
    return 0.5 * p.x(0) * p.x(0) - 0.5 * p.y(0) * p.y(0) + p.x(0) * p.y(0);
  }
};

// f(x, y) = x y.
class Bilinear1D final : public FiniteSumProblem {
 public:
  std::int64_t component_count() const override { return 1; }
  std::int64_t dim_x() const override { return 1; }
  std::int64_t dim_y() const override { return 1; }
  void eval_component(std::int64_t, const Point& p, GradPair& out) const override {
    out.gx = vec1(p.y(0));
    out.gy = vec1(p.x(0));
  }
  bool has_value() const override { return true; }
  double value(const Point& p) const override { return p.x(0) * p.y(0); }
};

// n components with fixed, point-independent gradients.
class FixedGradProblem final : public FiniteSumProblem {
 public:
  FixedGradProblem(std::vector<Eigen::VectorXd> gxs, std::vector<Eigen::VectorXd> gys)
      : gxs_(std::move(gxs)), gys_(std::move(gys)) {}
  std::int64_t component_count() const override {
    return static_cast<std::int64_t>(gxs_.size());
  }
  std::int64_t dim_x() const override { return gxs_.front().size(); }
  std::int64_t dim_y() const override { return gys_.front().size(); }
  void eval_component(std::int64_t i, const Point&, GradPair& out) const override {
    out.gx = gxs_[static_cast<std::size_t>(i)];
    out.gy = gys_[static_cast<std::size_t>(i)];
  }

 private:
  std::vector<Eigen::VectorXd> gxs_, gys_;
};

// Returns NaN in gx for one poisoned component.
class PoisonProblem final : public FiniteSumProblem {
 public:
  explicit PoisonProblem(std::int64_t n, std::int64_t bad) : n_(n), bad_(bad) {}
  std::int64_t component_count() const override { return n_; }
  std::int64_t dim_x() const override { return 1; }
  std::int64_t dim_y() const override { return 1; }
  void eval_component(std::int64_t i, const Point&, GradPair& out) const override {
    out.gx = vec1(i == bad_ ? std::nan("") : 1.0);
    out.gy = vec1(1.0);
  }

 private:
  std::int64_t n_, bad_;
};

// Central finite differences of a scalar function of Point.
inline GradPair fd_grad(const std::function<double(const Point&)>& f, const Point& p,
                        double h = 1e-5) {
  GradPair out;
  out.gx = Eigen::VectorXd(p.x.size());
  out.gy = Eigen::VectorXd(p.y.size());
  Point q = p;
  for (Eigen::Index i = 0; i < p.x.size(); ++i) {
    q.x(i) = p.x(i) + h;
    const double up = f(q);
    q.x(i) = p.x(i) - h;
    const double dn = f(q);
    q.x(i) = p.x(i);
    out.gx(i) = (up - dn) / (2.0 * h);
  }
  for (Eigen::Index i = 0; i < p.y.size(); ++i) {
    q.y(i) = p.y(i) + h;
    const double up = f(q);
    q.y(i) = p.y(i) - h;
    const double dn = f(q);
    q.y(i) = p.y(i);
    out.gy(i) = (up - dn) / (2.0 * h);
  }
  return out;
}

// Plain-loop mean of all component gradients, independent of full_grad.
inline GradPair explicit_mean_grad(const FiniteSumProblem& problem, const Point& p) {
  GradPair acc;
  acc.gx = Eigen::VectorXd::Zero(problem.dim_x());
  acc.gy = Eigen::VectorXd::Zero(problem.dim_y());
  GradPair g;
  for (std::int64_t i = 0; i < problem.component_count(); ++i) {
    problem.eval_component(i, p, g);
    acc.gx += g.gx;
    acc.gy += g.gy;
  }
  acc.gx /= static_cast<double>(problem.component_count());
  acc.gy /= static_cast<double>(problem.component_count());
  return acc;
}

inline double rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

inline double rel_err_pair(const GradPair& got, const GradPair& want) {
  return std::max(rel_err(got.gx, want.gx), rel_err(got.gy, want.gy));
}

// Dense oracle for the spectral norm of a component Hessian
// [[p p', a b'], [b a', -q q']].
inline double component_hessian_norm_dense(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                           const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index d = p.size();
  Eigen::MatrixXd h(2 * d, 2 * d);
  h.topLeftCorner(d, d) = p * p.transpose();
  h.topRightCorner(d, d) = a * b.transpose();
  h.bottomLeftCorner(d, d) = b * a.transpose();
  h.bottomRightCorner(d, d) = -q * q.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

inline Point random_point(SplitMix64& rng, std::int64_t dx, std::int64_t dy,
                          double scale = 1.0) {
  Point p;
  p.x = Eigen::VectorXd(dx);
  for (Eigen::Index i = 0; i < dx; ++i) p.x(i) = scale * rng.next_gaussian();
  p.y = Eigen::VectorXd(dy);
  for (Eigen::Index i = 0; i < dy; ++i) p.y(i) = scale * rng.next_gaussian();
  return p;
}

}  // namespace plmm::testing
