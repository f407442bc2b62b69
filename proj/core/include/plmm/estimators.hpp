#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "plmm/problem.hpp"
#include "plmm/rng.hpp"

namespace plmm {

// How estimator batches are drawn.
//   kIidWithReplacement  the normal mode: B independent uniform indices
//   kExhaustive          indices 0..B-1 in order, consuming no randomness;
//                        only meaningful with B == n, where it makes the
//                        estimators exactly reproduce full gradients (used by
//                        the exactness tests and the reduction-to-GDA checks)
enum class BatchSampling { kIidWithReplacement, kExhaustive };

// B i.i.d. uniform indices from [0, n).
std::vector<std::int64_t> draw_batch(SplitMix64& rng, std::int64_t n, std::int64_t batch);

// Recursive gradient estimator: a full refresh every M steps, recursive
// difference updates in between,
//
//   G <- mean_{i in S} [grad f_i(current) - grad f_i(previous)] + G.
//
// The x and y blocks use independent batches, S_x drawn before S_y from the
// caller's stream.  Each batch is billed batch_size SFO units (the pair
// difference for one sampled index counts as one oracle call), so one step
// costs 2B and one refresh costs n.
class SpiderEstimator {
 public:
  SpiderEstimator(std::int64_t epoch_len, std::int64_t batch_size,
                  BatchSampling sampling = BatchSampling::kIidWithReplacement);

  // Full gradient anchor; resets the epoch counter.
  const GradPair& refresh(const FiniteSumProblem& problem, const Point& p,
                          OracleCounters& counters);

  // Recursive update from `previous` to `current`.  Throws std::logic_error
  // if called before any refresh or past the end of an epoch (the caller is
  // expected to refresh whenever step_index % M == 0).
  const GradPair& step(const FiniteSumProblem& problem, const Point& current,
                       const Point& previous, SplitMix64& rng, OracleCounters& counters);

  // Same update with caller-chosen batches; this is the deterministic seam
  // the enumeration tests use to average over every possible draw.
  const GradPair& step_with_batches(const FiniteSumProblem& problem, const Point& current,
                                    const Point& previous,
                                    std::span<const std::int64_t> batch_x,
                                    std::span<const std::int64_t> batch_y,
                                    OracleCounters& counters);

  const GradPair& current() const;
  bool initialized() const { return initialized_; }
  std::int64_t steps_since_refresh() const { return steps_since_refresh_; }
  std::int64_t epoch_len() const { return epoch_len_; }
  std::int64_t batch_size() const { return batch_size_; }

 private:
  std::int64_t epoch_len_;
  std::int64_t batch_size_;
  BatchSampling sampling_;
  GradPair g_;
  GradPair scratch_a_, scratch_b_;
  std::vector<std::int64_t> batch_buf_;
  std::int64_t steps_since_refresh_ = 0;
  bool initialized_ = false;
};

// Anchored estimator: a full gradient at an anchor point, plus corrections
//
//   G = mean_{i in S} [grad f_i(p) - grad f_i(anchor)] + full_grad(anchor).
//
// Batch conventions and billing match SpiderEstimator: independent S_x and
// S_y batches (S_x first), 2B per step, n per anchor.
class SvrgEstimator {
 public:
  SvrgEstimator(std::int64_t batch_size,
                BatchSampling sampling = BatchSampling::kIidWithReplacement);

  void anchor(const FiniteSumProblem& problem, const Point& p, OracleCounters& counters);

  GradPair step(const FiniteSumProblem& problem, const Point& p, SplitMix64& rng,
                OracleCounters& counters);
  GradPair step_with_batches(const FiniteSumProblem& problem, const Point& p,
                             std::span<const std::int64_t> batch_x,
                             std::span<const std::int64_t> batch_y,
                             OracleCounters& counters);

  bool anchored() const { return anchored_; }
  const Point& anchor_point() const;
  const GradPair& anchor_grad() const;
  std::int64_t batch_size() const { return batch_size_; }

 private:
  std::int64_t batch_size_;
  BatchSampling sampling_;
  Point anchor_point_;
  GradPair anchor_grad_;
  GradPair scratch_a_, scratch_b_;
  std::vector<std::int64_t> batch_buf_;
  bool anchored_ = false;
};

}  // namespace plmm
