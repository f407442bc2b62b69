#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plmm/plgame.hpp"
#include "plmm/schedules.hpp"
#include "plmm/solvers.hpp"
#include "plmm/svg_plot.hpp"

namespace plmm {

// One metric snapshot.  grad_norm (the full-gradient norm of f) is always
// present; the reference-based metrics are absent when no reference solution
// exists.  wall_ns is wall-clock time since the run started; it lives in the
// JSON trace only — the CSV keeps its column but leaves it empty so that CSV
// artifacts are byte-reproducible across machines and reruns.
struct TraceRecord {
  std::int64_t sfo = 0;
  std::int64_t iter = 0;
  double grad_norm = 0.0;
  std::optional<double> primal_gap;
  std::optional<double> dist_saddle;
  std::optional<double> lyapunov;
  std::int64_t wall_ns = 0;
};

// Manual schedule overrides; anything unset falls back to the documented
// defaults (see resolve in harness.cpp).  Keys mirror the JSON config.
struct ManualSchedule {
  std::optional<double> tau_x, tau_y;
  std::optional<std::int64_t> T, K, M, B, S;
  std::optional<double> beta, gamma;
};

struct ExperimentConfig {
  // Exactly one of generator / instance_file is set.
  std::optional<GeneratorConfig> generator;
  std::optional<std::string> instance_file;

  std::string algorithm;          // gda | agda | spider_gda | svrg_gda | acc_spider
  std::string schedule = "theory";  // theory | manual
  ManualSchedule manual;
  double eps = 1e-2;
  std::uint64_t seed = 0;
  std::int64_t snapshot_every = 1000;  // SFO between snapshots
  std::int64_t max_sfo = 10'000'000;   // budget; 0 = record the initial snapshot only
};

// The schedule a run actually used, echoed into the JSON trace.
struct ResolvedSchedule {
  StepSizes steps;
  LoopPlan plan;
  double beta = 0.0;
  double gamma = 0.0;
  std::int64_t outer_iters = 0;
  double delta = 0.0;
};

struct Trace {
  std::vector<TraceRecord> records;
  ExperimentConfig config;          // fully resolved
  ResolvedSchedule schedule;
  std::vector<double> delta_history;  // accelerated runs, theory mode
  std::vector<std::string> warnings;
  ProblemConstants constants;
  bool reference_available = false;
};

// JSON config parsing/serialization.  Unknown keys and malformed values are
// reported by name.  to_config_json_text writes the fully resolved config,
// and parsing that text again reproduces the config exactly.
ExperimentConfig parse_config_json_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string to_config_json_text(const ExperimentConfig& config);

// Runs a configured experiment: builds (or loads) the instance, resolves the
// schedule, and drives the solver while snapshotting metrics every
// snapshot_every SFO plus once at the start and once at the end.  Metric
// evaluation is unbilled and read-only, so iterates do not depend on the
// snapshot cadence.  The run stops at schedule completion or as soon as the
// SFO budget is reached.
Trace run_experiment(const ExperimentConfig& config);

// CSV artifact.  Header is exactly
//   sfo,iter,grad_norm,primal_gap,dist_saddle,lyapunov,wall_ns
// and every row carries all seven fields, absent ones empty.
void write_trace_csv(const Trace& trace, const std::string& path);
std::string trace_csv_text(const Trace& trace);

// JSON artifact: records plus config echo, resolved schedule, constants,
// warnings, and library/rng identification.
void write_trace_json(const Trace& trace, const std::string& path);
std::string trace_json_text(const Trace& trace);

// Reads a CSV trace back as (sfo, value) pairs of one metric column.
// Missing-column and empty-column cases throw MetricUnavailable.
Series read_csv_series(const std::string& path, const std::string& metric,
                       const std::string& label);

// Ranks labeled traces by a metric's last value at or before the SFO budget,
// ascending (ties broken by label).  Throws std::invalid_argument if a trace
// has no snapshot inside the budget, MetricUnavailable if the metric is
// absent from one of the traces.
struct RankedTrace {
  std::string label;
  double value = 0.0;
};
std::vector<RankedTrace> compare_traces(
    const std::vector<std::pair<std::string, const Trace*>>& traces,
    const std::string& metric, std::int64_t budget);

}  // namespace plmm
