#include "plmm/plgame.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "plmm/rng.hpp"

namespace plmm {

namespace {

using json = nlohmann::json;

void validate_config(const GeneratorConfig& c, bool generated) {
  if (c.n < 1) throw std::invalid_argument("plgame: n must be >= 1");
  if (c.d < 1) throw std::invalid_argument("plgame: d must be >= 1");
  if (generated) {
    if (c.r < 1) throw std::invalid_argument("plgame: r must be >= 1");
    if (c.r >= c.d) throw std::invalid_argument("plgame: r must be < d");
  }
  if (!(c.mu > 0.0)) throw std::invalid_argument("plgame: mu must be positive");
  if (!(c.L >= c.mu)) throw std::invalid_argument("plgame: L must be >= mu");
  if (!(c.coupling_scale >= 0.0)) {
    throw std::invalid_argument("plgame: coupling_scale must be >= 0");
  }
}

Eigen::MatrixXd draw_gaussian(SplitMix64& rng, std::int64_t rows, std::int64_t cols) {
  Eigen::MatrixXd m(rows, cols);
  for (std::int64_t j = 0; j < cols; ++j) {
    for (std::int64_t i = 0; i < rows; ++i) {
      m(i, j) = rng.next_gaussian();
    }
  }
  return m;
}

// Thin column-orthogonal basis: QR of a Gaussian d x r matrix.
Eigen::MatrixXd orthogonal_basis(SplitMix64& rng, std::int64_t d, std::int64_t r) {
  const Eigen::MatrixXd g = draw_gaussian(rng, d, r);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, r);
}

// Projector onto the range of a symmetric PSD matrix, cutting eigenvalues at
// 1e-10 * lambda_max.
Eigen::MatrixXd range_projector(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd& vals = eig.eigenvalues();
  const double cutoff = 1e-10 * std::max(vals.cwiseAbs().maxCoeff(), 0.0);
  Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(sym.rows(), sym.cols());
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    if (vals(k) > cutoff) {
      proj += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).transpose();
    }
  }
  return proj;
}

}  // namespace

void PLGameInstance::finalize() {
  const double n = static_cast<double>(config_.n);
  P_ = (p_ * p_.transpose()) / n;
  Q_ = (q_ * q_.transpose()) / n;
  if (config_.well_posed) {
    a_ = range_projector(P_) * r_;
    b_ = range_projector(Q_) * r_;
  } else {
    a_ = r_;
    b_ = r_;
  }
  R_ = (a_ * b_.transpose()) / n;
}

PLGameInstance PLGameInstance::generate(const GeneratorConfig& config) {
  validate_config(config, /*generated=*/true);
  SplitMix64 rng(config.seed);

  const std::int64_t d = config.d, r = config.r, n = config.n;

  const Eigen::MatrixXd u_p = orthogonal_basis(rng, d, r);
  Eigen::VectorXd spec_p(r);
  for (std::int64_t k = 0; k < r; ++k) {
    spec_p(k) = config.mu + (config.L - config.mu) * rng.next_unit();
  }
  const Eigen::MatrixXd u_q = orthogonal_basis(rng, d, r);
  Eigen::VectorXd spec_q(r);
  for (std::int64_t k = 0; k < r; ++k) {
    spec_q(k) = config.mu + (config.L - config.mu) * rng.next_unit();
  }
  const Eigen::MatrixXd v = draw_gaussian(rng, d, d);

  PLGameInstance inst;
  inst.config_ = config;
  // p_i ~ N(0, U_P D_P U_P'), sampled through the factor U_P D_P^{1/2} z.
  inst.p_ = u_p * spec_p.cwiseSqrt().asDiagonal() * draw_gaussian(rng, r, n);
  inst.q_ = u_q * spec_q.cwiseSqrt().asDiagonal() * draw_gaussian(rng, r, n);
  // r_i ~ N(0, coupling_scale * V V').
  inst.r_ = std::sqrt(config.coupling_scale) * (v * draw_gaussian(rng, d, n));
  inst.spec_p_ = spec_p;
  inst.spec_q_ = spec_q;
  inst.finalize();
  return inst;
}

PLGameInstance PLGameInstance::from_factors(const GeneratorConfig& config,
                                            Eigen::MatrixXd p_cols,
                                            Eigen::MatrixXd q_cols,
                                            Eigen::MatrixXd r_cols) {
  validate_config(config, /*generated=*/false);
  const auto check = [&](const Eigen::MatrixXd& m, const char* name) {
    if (m.rows() != config.d || m.cols() != config.n) {
      throw std::invalid_argument(std::string("plgame: factor matrix ") + name +
                                  " must be d x n");
    }
  };
  check(p_cols, "p");
  check(q_cols, "q");
  check(r_cols, "r");

  PLGameInstance inst;
  inst.config_ = config;
  inst.p_ = std::move(p_cols);
  inst.q_ = std::move(q_cols);
  inst.r_ = std::move(r_cols);
  inst.finalize();
  return inst;
}

double PLGameInstance::value(const Point& p) const {
  return 0.5 * p.x.dot(P_ * p.x) - 0.5 * p.y.dot(Q_ * p.y) + p.x.dot(R_ * p.y);
}

void PLGameInstance::full_grad_aggregate(const Point& p, GradPair& out) const {
  out.gx = P_ * p.x + R_ * p.y;
  out.gy = R_.transpose() * p.x - Q_ * p.y;
}

void PLGameProblem::eval_component(std::int64_t i, const Point& p, GradPair& out) const {
  const auto pi = inst_->p_factors().col(i);
  const auto qi = inst_->q_factors().col(i);
  const auto ai = inst_->coupling_left().col(i);
  const auto bi = inst_->coupling_right().col(i);
  out.gx = pi.dot(p.x) * pi + bi.dot(p.y) * ai;
  out.gy = ai.dot(p.x) * bi - qi.dot(p.y) * qi;
}

namespace {

json factor_to_json(const Eigen::MatrixXd& cols) {
  // Row-major component layout: component i occupies entries [i*d, (i+1)*d).
  json arr = json::array();
  for (Eigen::Index i = 0; i < cols.cols(); ++i) {
    for (Eigen::Index k = 0; k < cols.rows(); ++k) {
      arr.push_back(cols(k, i));
    }
  }
  return arr;
}

Eigen::MatrixXd factor_from_json(const json& arr, std::int64_t d, std::int64_t n,
                                 const char* name) {
  if (!arr.is_array() || arr.size() != static_cast<std::size_t>(d * n)) {
    throw std::invalid_argument(std::string("plgame: factor array ") + name +
                                " must hold n*d numbers");
  }
  Eigen::MatrixXd cols(d, n);
  std::size_t idx = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t k = 0; k < d; ++k) {
      cols(k, i) = arr[idx++].get<double>();
    }
  }
  return cols;
}

}  // namespace

std::string PLGameInstance::to_json_text() const {
  json doc;
  doc["config"] = {
      {"n", config_.n},
      {"d", config_.d},
      {"r", config_.r},
      {"mu", config_.mu},
      {"L", config_.L},
      {"coupling_scale", config_.coupling_scale},
      {"seed", config_.seed},
      {"well_posed", config_.well_posed},
  };
  doc["factors"] = {
      {"p", factor_to_json(p_)},
      {"q", factor_to_json(q_)},
      {"r", factor_to_json(r_)},
  };
  return doc.dump(2) + "\n";
}

PLGameInstance PLGameInstance::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("plgame: instance file is not valid JSON: ") +
                                e.what());
  }
  if (!doc.contains("config") || !doc.contains("factors")) {
    throw std::invalid_argument("plgame: instance file needs 'config' and 'factors'");
  }
  const json& c = doc["config"];
  GeneratorConfig config;
  config.n = c.at("n").get<std::int64_t>();
  config.d = c.at("d").get<std::int64_t>();
  config.r = c.at("r").get<std::int64_t>();
  config.mu = c.at("mu").get<double>();
  config.L = c.at("L").get<double>();
  config.coupling_scale = c.at("coupling_scale").get<double>();
  config.seed = c.at("seed").get<std::uint64_t>();
  config.well_posed = c.at("well_posed").get<bool>();
  const json& f = doc["factors"];
  return from_factors(config,
                      factor_from_json(f.at("p"), config.d, config.n, "p"),
                      factor_from_json(f.at("q"), config.d, config.n, "q"),
                      factor_from_json(f.at("r"), config.d, config.n, "r"));
}

void PLGameInstance::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("plgame: cannot open " + path + " for writing");
  out << to_json_text();
  if (!out) throw std::runtime_error("plgame: failed writing " + path);
}

PLGameInstance PLGameInstance::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("plgame: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

namespace {

// Spectral norm of the component Hessian
//   H_i = [ p p'   a b' ]
//         [ b a'  -q q' ]
// via power iteration on H_i^2 with factor-form matvecs (H_i has rank <= 4,
// each matvec is O(d)).
double component_hessian_norm(const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                              const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                              double tol) {
  const Eigen::Index d = p.size();
  const auto apply = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                         Eigen::VectorXd& ou, Eigen::VectorXd& ov) {
    ou = p.dot(u) * p + b.dot(v) * a;
    ov = a.dot(u) * b - q.dot(v) * q;
  };

  const auto run = [&](Eigen::VectorXd u, Eigen::VectorXd v) -> double {
    double norm = std::sqrt(u.squaredNorm() + v.squaredNorm());
    if (norm < 1e-300) return 0.0;
    u /= norm;
    v /= norm;
    Eigen::VectorXd tu(d), tv(d);
    double lambda = 0.0;
    for (int it = 0; it < 10000; ++it) {
      apply(u, v, tu, tv);
      apply(tu, tv, u, v);  // one application of H^2
      const double next = std::sqrt(u.squaredNorm() + v.squaredNorm());
      if (next < 1e-300) return 0.0;
      u /= next;
      v /= next;
      const double est = std::sqrt(next);  // ||H u||-scale after two applies
      if (std::abs(est - lambda) <= tol * std::max(1.0, est)) return est;
      lambda = est;
    }
    return lambda;
  };

  // Start inside the column space of H; fall back to a second start so a
  // degenerate first guess cannot undersell the norm.
  const double first = run(p + a, b + q);
  const double second = run(Eigen::VectorXd::Ones(d), Eigen::VectorXd::Ones(d));
  return std::max(first, second);
}

struct EigPieces {
  double lambda_max = 0.0;
  double smallest_nonzero = 0.0;
  Eigen::MatrixXd pinv;
  Eigen::MatrixXd range;  // orthonormal basis columns
};

EigPieces analyze_psd(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd& vals = eig.eigenvalues();
  EigPieces out;
  out.lambda_max = std::max(vals.maxCoeff(), 0.0);
  const double cutoff = 1e-10 * out.lambda_max;
  std::int64_t kept = 0;
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    if (vals(k) > cutoff) ++kept;
  }
  out.pinv = Eigen::MatrixXd::Zero(sym.rows(), sym.cols());
  out.range = Eigen::MatrixXd(sym.rows(), kept);
  out.smallest_nonzero = std::numeric_limits<double>::infinity();
  std::int64_t col = 0;
  for (Eigen::Index k = 0; k < vals.size(); ++k) {
    if (vals(k) > cutoff) {
      out.pinv += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).transpose() / vals(k);
      out.range.col(col++) = eig.eigenvectors().col(k);
      out.smallest_nonzero = std::min(out.smallest_nonzero, vals(k));
    }
  }
  if (kept == 0) out.smallest_nonzero = 0.0;
  return out;
}

}  // namespace

ReferenceSolution reference_saddle(const PLGameInstance& instance) {
  const std::int64_t d = instance.d();
  const Eigen::MatrixXd& P = instance.curvature_x();
  const Eigen::MatrixXd& Q = instance.curvature_y();
  const Eigen::MatrixXd& R = instance.coupling();

  // Stationarity system [P R; R' -Q] z = 0, min-norm solution.
  Eigen::MatrixXd sys(2 * d, 2 * d);
  sys.topLeftCorner(d, d) = P;
  sys.topRightCorner(d, d) = R;
  sys.bottomLeftCorner(d, d) = R.transpose();
  sys.bottomRightCorner(d, d) = -Q;
  const Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * d);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys);
  const Eigen::VectorXd z = cod.solve(rhs);
  if ((sys * z - rhs).norm() > 1e-6 * (1.0 + rhs.norm())) {
    throw MetricUnavailable("reference unavailable: stationarity system inconsistent");
  }

  ReferenceSolution ref;
  ref.x_star = z.head(d);
  ref.y_star = z.tail(d);

  const EigPieces ep = analyze_psd(P);
  const EigPieces eq = analyze_psd(Q);
  ref.q_pinv = eq.pinv;
  ref.q_range = eq.range;

  double worst = 0.0;
  for (std::int64_t i = 0; i < instance.n(); ++i) {
    worst = std::max(worst, component_hessian_norm(
                                instance.p_factors().col(i), instance.q_factors().col(i),
                                instance.coupling_left().col(i),
                                instance.coupling_right().col(i), 1e-8));
  }
  ref.constants.L = worst;
  ref.constants.mu_x = ep.smallest_nonzero;
  ref.constants.mu_y = eq.smallest_nonzero;
  ref.constants.kappa_x = ref.constants.mu_x > 0.0 ? worst / ref.constants.mu_x : 0.0;
  ref.constants.kappa_y = ref.constants.mu_y > 0.0 ? worst / ref.constants.mu_y : 0.0;

  ref.g_star = 0.0;  // fill below once the caches exist
  ref.g_star = primal_value(instance, ref, ref.x_star);
  return ref;
}

double primal_value(const PLGameInstance& instance, const ReferenceSolution& ref,
                    const Eigen::VectorXd& x) {
  const Eigen::VectorXd s = instance.coupling().transpose() * x;
  const Eigen::VectorXd in_range = ref.q_range * (ref.q_range.transpose() * s);
  // Scale the leakage test by the input magnitude, not |s| alone: near the
  // saddle s shrinks toward zero while the projection noise floor stays at
  // eps * |R| * |x|, and a purely relative test would reject well-posed points.
  const double scale = s.norm() + instance.coupling().norm() * x.norm();
  if ((s - in_range).norm() > 1e-8 * scale) {
    throw MetricUnavailable("unbounded inner max: R'x leaves range(Q)");
  }
  return 0.5 * x.dot(instance.curvature_x() * x) + 0.5 * s.dot(ref.q_pinv * s);
}

double primal_gap(const PLGameInstance& instance, const ReferenceSolution& ref,
                  const Eigen::VectorXd& x) {
  return primal_value(instance, ref, x) - ref.g_star;
}

double distance_to_saddle(const ReferenceSolution& ref, const Point& p) {
  return (p.x - ref.x_star).squaredNorm() + (p.y - ref.y_star).squaredNorm();
}

}  // namespace plmm
