#include "plmm/estimators.hpp"

#include <string>

namespace plmm {

namespace {

void check_batch_indices(std::span<const std::int64_t> batch, std::int64_t n,
                         const char* where) {
  if (batch.empty()) {
    throw std::invalid_argument(std::string(where) + ": empty batch");
  }
  for (const std::int64_t i : batch) {
    if (i < 0 || i >= n) {
      throw std::out_of_range(std::string(where) + ": index " + std::to_string(i) +
                              " outside [0, " + std::to_string(n) + ")");
    }
  }
}

void fill_batch(std::vector<std::int64_t>& buf, SplitMix64& rng, std::int64_t n,
                std::int64_t batch, BatchSampling sampling) {
  buf.clear();
  buf.reserve(static_cast<std::size_t>(batch));
  if (sampling == BatchSampling::kExhaustive) {
    for (std::int64_t i = 0; i < batch; ++i) buf.push_back(i);
  } else {
    for (std::int64_t i = 0; i < batch; ++i) {
      buf.push_back(static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(n))));
    }
  }
}

}  // namespace

std::vector<std::int64_t> draw_batch(SplitMix64& rng, std::int64_t n, std::int64_t batch) {
  if (n < 1) throw std::invalid_argument("draw_batch: n must be >= 1");
  if (batch < 1) throw std::invalid_argument("draw_batch: batch must be >= 1");
  std::vector<std::int64_t> out;
  fill_batch(out, rng, n, batch, BatchSampling::kIidWithReplacement);
  return out;
}

SpiderEstimator::SpiderEstimator(std::int64_t epoch_len, std::int64_t batch_size,
                                 BatchSampling sampling)
    : epoch_len_(epoch_len), batch_size_(batch_size), sampling_(sampling) {
  if (epoch_len_ < 1) throw std::invalid_argument("SpiderEstimator: epoch_len must be >= 1");
  if (batch_size_ < 1) throw std::invalid_argument("SpiderEstimator: batch_size must be >= 1");
}

const GradPair& SpiderEstimator::refresh(const FiniteSumProblem& problem, const Point& p,
                                         OracleCounters& counters) {
  g_ = full_grad(problem, p, counters);
  steps_since_refresh_ = 0;
  initialized_ = true;
  return g_;
}

const GradPair& SpiderEstimator::step(const FiniteSumProblem& problem, const Point& current,
                                      const Point& previous, SplitMix64& rng,
                                      OracleCounters& counters) {
  // S_x before S_y, always, so a seed pins the whole draw sequence.
  fill_batch(batch_buf_, rng, problem.component_count(), batch_size_, sampling_);
  std::vector<std::int64_t> batch_x = batch_buf_;
  fill_batch(batch_buf_, rng, problem.component_count(), batch_size_, sampling_);
  return step_with_batches(problem, current, previous, batch_x, batch_buf_, counters);
}

const GradPair& SpiderEstimator::step_with_batches(const FiniteSumProblem& problem,
                                                   const Point& current, const Point& previous,
                                                   std::span<const std::int64_t> batch_x,
                                                   std::span<const std::int64_t> batch_y,
                                                   OracleCounters& counters) {
  if (!initialized_) {
    throw std::logic_error("SpiderEstimator::step: refresh() must run first");
  }
  // A refresh serves step 0 of an epoch, so only M-1 recursive updates fit.
  if (steps_since_refresh_ >= epoch_len_ - 1) {
    throw std::logic_error("SpiderEstimator::step: epoch of length " +
                           std::to_string(epoch_len_) + " exhausted; refresh() required");
  }
  check_batch_indices(batch_x, problem.component_count(), "SpiderEstimator::step (x batch)");
  check_batch_indices(batch_y, problem.component_count(), "SpiderEstimator::step (y batch)");

  Eigen::VectorXd acc_x = Eigen::VectorXd::Zero(problem.dim_x());
  for (const std::int64_t i : batch_x) {
    problem.eval_component(i, current, scratch_a_);
    problem.eval_component(i, previous, scratch_b_);
    acc_x += scratch_a_.gx - scratch_b_.gx;
  }
  g_.gx += acc_x / static_cast<double>(batch_x.size());

  Eigen::VectorXd acc_y = Eigen::VectorXd::Zero(problem.dim_y());
  for (const std::int64_t i : batch_y) {
    problem.eval_component(i, current, scratch_a_);
    problem.eval_component(i, previous, scratch_b_);
    acc_y += scratch_a_.gy - scratch_b_.gy;
  }
  g_.gy += acc_y / static_cast<double>(batch_y.size());

  // One unit per sampled index per block batch (see OracleCounters).
  counters.sfo += static_cast<std::uint64_t>(batch_x.size() + batch_y.size());
  ++steps_since_refresh_;

  if (!g_.gx.allFinite() || !g_.gy.allFinite()) {
    throw std::runtime_error("SpiderEstimator::step: estimate became non-finite");
  }
  return g_;
}

const GradPair& SpiderEstimator::current() const {
  if (!initialized_) {
    throw std::logic_error("SpiderEstimator::current: refresh() must run first");
  }
  return g_;
}

SvrgEstimator::SvrgEstimator(std::int64_t batch_size, BatchSampling sampling)
    : batch_size_(batch_size), sampling_(sampling) {
  if (batch_size_ < 1) throw std::invalid_argument("SvrgEstimator: batch_size must be >= 1");
}

void SvrgEstimator::anchor(const FiniteSumProblem& problem, const Point& p,
                           OracleCounters& counters) {
  anchor_grad_ = full_grad(problem, p, counters);
  anchor_point_ = p;
  anchored_ = true;
}

GradPair SvrgEstimator::step(const FiniteSumProblem& problem, const Point& p,
                             SplitMix64& rng, OracleCounters& counters) {
  fill_batch(batch_buf_, rng, problem.component_count(), batch_size_, sampling_);
  std::vector<std::int64_t> batch_x = batch_buf_;
  fill_batch(batch_buf_, rng, problem.component_count(), batch_size_, sampling_);
  return step_with_batches(problem, p, batch_x, batch_buf_, counters);
}

GradPair SvrgEstimator::step_with_batches(const FiniteSumProblem& problem, const Point& p,
                                          std::span<const std::int64_t> batch_x,
                                          std::span<const std::int64_t> batch_y,
                                          OracleCounters& counters) {
  if (!anchored_) {
    throw std::logic_error("SvrgEstimator::step: anchor() must run first");
  }
  check_batch_indices(batch_x, problem.component_count(), "SvrgEstimator::step (x batch)");
  check_batch_indices(batch_y, problem.component_count(), "SvrgEstimator::step (y batch)");

  GradPair out;
  out.gx = Eigen::VectorXd::Zero(problem.dim_x());
  for (const std::int64_t i : batch_x) {
    problem.eval_component(i, p, scratch_a_);
    problem.eval_component(i, anchor_point_, scratch_b_);
    out.gx += scratch_a_.gx - scratch_b_.gx;
  }
  out.gx = out.gx / static_cast<double>(batch_x.size()) + anchor_grad_.gx;

  out.gy = Eigen::VectorXd::Zero(problem.dim_y());
  for (const std::int64_t i : batch_y) {
    problem.eval_component(i, p, scratch_a_);
    problem.eval_component(i, anchor_point_, scratch_b_);
    out.gy += scratch_a_.gy - scratch_b_.gy;
  }
  out.gy = out.gy / static_cast<double>(batch_y.size()) + anchor_grad_.gy;

  counters.sfo += static_cast<std::uint64_t>(batch_x.size() + batch_y.size());

  if (!out.gx.allFinite() || !out.gy.allFinite()) {
    throw std::runtime_error("SvrgEstimator::step: estimate became non-finite");
  }
  return out;
}

const Point& SvrgEstimator::anchor_point() const {
  if (!anchored_) throw std::logic_error("SvrgEstimator: no anchor yet");
  return anchor_point_;
}

const GradPair& SvrgEstimator::anchor_grad() const {
  if (!anchored_) throw std::logic_error("SvrgEstimator: no anchor yet");
  return anchor_grad_;
}

}  // namespace plmm
