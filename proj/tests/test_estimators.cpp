#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "plmm/estimators.hpp"
#include "plmm/plgame.hpp"
#include "plmm/rng.hpp"

using namespace plmm;
using namespace plmm::testing;

namespace {

PLGameInstance small_instance(std::int64_t n, std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.n = n;
  cfg.d = 4;
  cfg.r = 2;
  cfg.mu = 0.2;
  cfg.L = 1.0;
  cfg.seed = seed;
  return PLGameInstance::generate(cfg);
}

GradPair pair_diff(const GradPair& a, const GradPair& b) {
  return GradPair{a.gx - b.gx, a.gy - b.gy};
}

double pair_norm(const GradPair& g) { return std::hypot(g.gx.norm(), g.gy.norm()); }

}  // namespace

TEST_CASE("spider refresh: equals the full gradient and resets the epoch") {
  const PLGameInstance inst = small_instance(8, 1);
  const PLGameProblem problem(inst);
  SpiderEstimator est(/*epoch_len=*/4, /*batch_size=*/2);
  OracleCounters counters;
  SplitMix64 rng(5);
  const Point p = random_point(rng, 4, 4);

  const GradPair& g = est.refresh(problem, p, counters);
  const GradPair want = full_grad_unbilled(problem, p);
  CHECK(pair_norm(pair_diff(g, want)) == 0.0);
  CHECK(counters.sfo == 8);
  CHECK(est.steps_since_refresh() == 0);
  CHECK(est.initialized());

  // Zero objective: refresh yields the zero gradient.
  const ZeroProblem zero(3, 2, 2);
  SpiderEstimator zest(2, 1);
  const GradPair& zg = zest.refresh(zero, random_point(rng, 2, 2), counters);
  CHECK(zg.gx.isZero(0.0));
  CHECK(zg.gy.isZero(0.0));
}

TEST_CASE("spider step: B = n exhaustive batches reproduce the full gradient") {
  const PLGameInstance inst = small_instance(10, 2);
  const PLGameProblem problem(inst);
  SplitMix64 rng(7);
  SpiderEstimator est(/*epoch_len=*/50, /*batch_size=*/10, BatchSampling::kExhaustive);
  OracleCounters counters;
  Point prev = random_point(rng, 4, 4);
  est.refresh(problem, prev, counters);
  for (int k = 0; k < 20; ++k) {
    const Point next = random_point(rng, 4, 4);
    const GradPair& g = est.step(problem, next, prev, rng, counters);
    const GradPair want = full_grad_unbilled(problem, next);
    CHECK(rel_err_pair(g, want) <= 1e-10);
    prev = next;
  }
}

TEST_CASE("spider step: stationary update leaves the estimate unchanged") {
  const PLGameInstance inst = small_instance(9, 3);
  const PLGameProblem problem(inst);
  SplitMix64 rng(11);
  SpiderEstimator est(/*epoch_len=*/10, /*batch_size=*/3);
  OracleCounters counters;
  const Point p = random_point(rng, 4, 4);
  est.refresh(problem, p, counters);
  const GradPair before{est.current().gx, est.current().gy};
  for (int k = 0; k < 5; ++k) {
    const GradPair& g = est.step(problem, p, p, rng, counters);
    CHECK(pair_norm(pair_diff(g, before)) == 0.0);
  }
}

TEST_CASE("spider step: exhaustive enumeration matches the recursion identity") {
  // With one fixed G_prev, the average of the update over every possible
  // (S_x, S_y) draw must equal grad f(p2) - grad f(p1) + G_prev.
  const std::int64_t n = 5;
  const PLGameInstance inst = small_instance(n, 4);
  const PLGameProblem problem(inst);
  SplitMix64 rng(13);
  const Point p0 = random_point(rng, 4, 4);
  const Point p1 = random_point(rng, 4, 4);
  const Point p2 = random_point(rng, 4, 4);

  // Fixed history: refresh at p0, one step p0 -> p1 with pinned batches.
  const std::vector<std::int64_t> hist_x{2};
  const std::vector<std::int64_t> hist_y{4};
  GradPair g_prev;
  {
    SpiderEstimator est(/*epoch_len=*/10, /*batch_size=*/1);
    OracleCounters counters;
    est.refresh(problem, p0, counters);
    g_prev = est.step_with_batches(problem, p1, p0, hist_x, hist_y, counters);
  }

  GradPair avg{Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4)};
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      SpiderEstimator est(/*epoch_len=*/10, /*batch_size=*/1);
      OracleCounters counters;
      est.refresh(problem, p0, counters);
      est.step_with_batches(problem, p1, p0, hist_x, hist_y, counters);
      const std::vector<std::int64_t> bx{i};
      const std::vector<std::int64_t> by{j};
      const GradPair& g = est.step_with_batches(problem, p2, p1, bx, by, counters);
      avg.gx += g.gx;
      avg.gy += g.gy;
    }
  }
  avg.gx /= static_cast<double>(n * n);
  avg.gy /= static_cast<double>(n * n);

  const GradPair f2 = full_grad_unbilled(problem, p2);
  const GradPair f1 = full_grad_unbilled(problem, p1);
  const GradPair want{f2.gx - f1.gx + g_prev.gx, f2.gy - f1.gy + g_prev.gy};
  CHECK(pair_norm(pair_diff(avg, want)) <= 1e-12);
}

TEST_CASE("svrg anchor: idempotent, equals full gradient, bills n") {
  const PLGameInstance inst = small_instance(7, 5);
  const PLGameProblem problem(inst);
  SplitMix64 rng(17);
  SvrgEstimator est(/*batch_size=*/2);
  OracleCounters counters;
  const Point p = random_point(rng, 4, 4);
  est.anchor(problem, p, counters);
  CHECK(counters.sfo == 7);
  const GradPair first{est.anchor_grad().gx, est.anchor_grad().gy};
  est.anchor(problem, p, counters);
  CHECK(counters.sfo == 14);
  CHECK(pair_norm(pair_diff(est.anchor_grad(), first)) == 0.0);
  const GradPair want = full_grad_unbilled(problem, p);
  CHECK(pair_norm(pair_diff(est.anchor_grad(), want)) == 0.0);
}

TEST_CASE("svrg step: at the anchor every draw returns the anchor gradient") {
  const PLGameInstance inst = small_instance(6, 6);
  const PLGameProblem problem(inst);
  SplitMix64 rng(19);
  SvrgEstimator est(/*batch_size=*/3);
  OracleCounters counters;
  const Point p = random_point(rng, 4, 4);
  est.anchor(problem, p, counters);
  for (int t = 0; t < 8; ++t) {
    const GradPair g = est.step(problem, p, rng, counters);
    CHECK(pair_norm(pair_diff(g, est.anchor_grad())) == 0.0);
  }
}

TEST_CASE("svrg step: enumeration over all draws is unbiased") {
  const std::int64_t n = 5;
  const PLGameInstance inst = small_instance(n, 7);
  const PLGameProblem problem(inst);
  SplitMix64 rng(23);
  const Point anchor = random_point(rng, 4, 4);
  const Point p = random_point(rng, 4, 4);
  SvrgEstimator est(/*batch_size=*/1);
  OracleCounters counters;
  est.anchor(problem, anchor, counters);

  GradPair avg{Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(4)};
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      const std::vector<std::int64_t> bx{i};
      const std::vector<std::int64_t> by{j};
      const GradPair g = est.step_with_batches(problem, p, bx, by, counters);
      avg.gx += g.gx;
      avg.gy += g.gy;
    }
  }
  avg.gx /= static_cast<double>(n * n);
  avg.gy /= static_cast<double>(n * n);
  const GradPair want = full_grad_unbilled(problem, p);
  CHECK(pair_norm(pair_diff(avg, want)) <= 1e-12);
}

TEST_CASE("svrg step: B = n exhaustive equals the full gradient") {
  const PLGameInstance inst = small_instance(8, 8);
  const PLGameProblem problem(inst);
  SplitMix64 rng(29);
  SvrgEstimator est(/*batch_size=*/8, BatchSampling::kExhaustive);
  OracleCounters counters;
  est.anchor(problem, random_point(rng, 4, 4), counters);
  for (int t = 0; t < 5; ++t) {
    const Point p = random_point(rng, 4, 4);
    const GradPair g = est.step(problem, p, rng, counters);
    const GradPair want = full_grad_unbilled(problem, p);
    CHECK(rel_err_pair(g, want) <= 1e-10);
  }
}

TEST_CASE("variance recursion: single-step growth bounded by (L^2/B) step^2") {
  for (const std::int64_t n : {4, 8}) {
    const PLGameInstance inst = small_instance(n, 30 + static_cast<std::uint64_t>(n));
    const PLGameProblem problem(inst);
    const ReferenceSolution ref = reference_saddle(inst);
    const double L = ref.constants.L;
    SplitMix64 rng(31);
    const Point p0 = random_point(rng, 4, 4);
    const Point p1 = random_point(rng, 4, 4);
    const Point p2 = random_point(rng, 4, 4);

    // Fixed history giving a nontrivial G_prev with known error at p1.
    const std::vector<std::int64_t> hist_x{1};
    const std::vector<std::int64_t> hist_y{0};
    GradPair g_prev;
    {
      SpiderEstimator est(10, 1);
      OracleCounters counters;
      est.refresh(problem, p0, counters);
      g_prev = est.step_with_batches(problem, p1, p0, hist_x, hist_y, counters);
    }
    const GradPair f1 = full_grad_unbilled(problem, p1);
    const GradPair f2 = full_grad_unbilled(problem, p2);
    const double prev_err_sq =
        (g_prev.gx - f1.gx).squaredNorm() + (g_prev.gy - f1.gy).squaredNorm();

    // Enumerated E ||G_new - grad f(p2)||^2 over independent block draws.
    double exp_err_sq = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < n; ++j) {
        SpiderEstimator est(10, 1);
        OracleCounters counters;
        est.refresh(problem, p0, counters);
        est.step_with_batches(problem, p1, p0, hist_x, hist_y, counters);
        const std::vector<std::int64_t> bx{i};
        const std::vector<std::int64_t> by{j};
        const GradPair& g = est.step_with_batches(problem, p2, p1, bx, by, counters);
        exp_err_sq +=
            ((g.gx - f2.gx).squaredNorm() + (g.gy - f2.gy).squaredNorm()) /
            static_cast<double>(n * n);
      }
    }

    const double step_sq =
        (p2.x - p1.x).squaredNorm() + (p2.y - p1.y).squaredNorm();
    CHECK(exp_err_sq - prev_err_sq <= L * L * step_sq + 1e-12);
  }
}

TEST_CASE("epoch discipline: refresh count and the end-of-epoch guard") {
  const PLGameInstance inst = small_instance(6, 40);
  const PLGameProblem problem(inst);
  SplitMix64 rng(37);

  for (const std::int64_t M : {1, 3, 4, 7}) {
    for (const std::int64_t total_steps : {1, 5, 12}) {
      SpiderEstimator est(M, 2);
      OracleCounters counters;
      Point prev = random_point(rng, 4, 4);
      std::int64_t refreshes = 0;
      for (std::int64_t k = 0; k < total_steps; ++k) {
        if (k % M == 0) {
          est.refresh(problem, prev, counters);
          ++refreshes;
        } else {
          const Point next = random_point(rng, 4, 4);
          est.step(problem, next, prev, rng, counters);
          prev = next;
        }
      }
      CHECK(refreshes == (total_steps + M - 1) / M);
    }
  }

  // Stepping past the epoch boundary (or before any refresh) throws.
  SpiderEstimator est(/*epoch_len=*/3, /*batch_size=*/1);
  OracleCounters counters;
  const Point p = random_point(rng, 4, 4);
  CHECK_THROWS_AS(est.step(problem, p, p, rng, counters), std::logic_error);
  est.refresh(problem, p, counters);
  est.step(problem, p, p, rng, counters);
  est.step(problem, p, p, rng, counters);
  CHECK_THROWS_AS(est.step(problem, p, p, rng, counters), std::logic_error);

  SvrgEstimator unanchored(1);
  CHECK_THROWS_AS(unanchored.step(problem, p, rng, counters), std::logic_error);
}

TEST_CASE("SFO accounting: 2B per step, n per refresh/anchor") {
  const PLGameInstance inst = small_instance(12, 41);
  const PLGameProblem problem(inst);
  SplitMix64 rng(43);
  const Point p = random_point(rng, 4, 4);

  SpiderEstimator spider(/*epoch_len=*/100, /*batch_size=*/8);
  OracleCounters counters;
  spider.refresh(problem, p, counters);
  CHECK(counters.sfo == 12);
  spider.step(problem, p, p, rng, counters);
  CHECK(counters.sfo == 12 + 16);  // one step with B = 8 costs 16

  SvrgEstimator svrg(/*batch_size=*/5);
  counters.reset();
  svrg.anchor(problem, p, counters);
  svrg.step(problem, p, rng, counters);
  svrg.step(problem, p, rng, counters);
  CHECK(counters.sfo == 12 + 2 * 10);
}

TEST_CASE("determinism: equal seeds give bit-identical estimator trajectories") {
  const PLGameInstance inst = small_instance(10, 42);
  const PLGameProblem problem(inst);

  const auto run = [&](std::uint64_t seed) {
    SplitMix64 rng(seed);
    SpiderEstimator est(/*epoch_len=*/8, /*batch_size=*/2);
    OracleCounters counters;
    SplitMix64 prng(99);
    Point prev = random_point(prng, 4, 4);
    est.refresh(problem, prev, counters);
    std::vector<double> flat;
    for (int k = 1; k < 8; ++k) {
      const Point next = random_point(prng, 4, 4);
      const GradPair& g = est.step(problem, next, prev, rng, counters);
      for (Eigen::Index i = 0; i < g.gx.size(); ++i) flat.push_back(g.gx(i));
      for (Eigen::Index i = 0; i < g.gy.size(); ++i) flat.push_back(g.gy(i));
      prev = next;
    }
    return flat;
  };

  const std::vector<double> a = run(7);
  const std::vector<double> b = run(7);
  const std::vector<double> c = run(8);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("draw_batch: size, range, determinism, full coverage over time") {
  SplitMix64 rng(51);
  const std::int64_t n = 13;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int t = 0; t < 400; ++t) {
    const std::vector<std::int64_t> batch = draw_batch(rng, n, 4);
    REQUIRE(batch.size() == 4);
    for (const std::int64_t i : batch) {
      REQUIRE(i >= 0);
      REQUIRE(i < n);
      seen[static_cast<std::size_t>(i)] = true;
    }
  }
  for (const bool s : seen) CHECK(s);

  SplitMix64 r1(3), r2(3);
  CHECK(draw_batch(r1, 100, 10) == draw_batch(r2, 100, 10));
}
