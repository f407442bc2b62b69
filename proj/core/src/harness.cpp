#include "plmm/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "plmm/version.hpp"

namespace plmm {

namespace {

using json = nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names = {"gda", "agda", "spider_gda", "svrg_gda",
                                                 "acc_spider"};
  return names;
}

void check_known_keys(const json& obj, const std::vector<std::string>& known,
                      const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const std::string& k : known) {
      if (key == k) {
        ok = true;
        break;
      }
    }
    if (!ok) config_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) config_error(std::string("missing key '") + key + "' in " + where);
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(std::string("key '") + key + "' in " + where + " has the wrong type");
  }
}

template <typename T>
void maybe_field(const json& obj, const char* key, const std::string& where,
                 std::optional<T>& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(std::string("key '") + key + "' in " + where + " has the wrong type");
  }
}

}  // namespace

ExperimentConfig parse_config_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) config_error("top level must be an object");
  check_known_keys(doc, {"instance", "algorithm", "schedule", "manual", "eps", "seed",
                         "snapshot_every", "max_sfo"},
                   "config");

  ExperimentConfig cfg;
  if (!doc.contains("instance")) config_error("missing key 'instance'");
  const json& inst = doc.at("instance");
  if (!inst.is_object()) config_error("'instance' must be an object");
  if (inst.contains("file")) {
    check_known_keys(inst, {"file"}, "instance");
    cfg.instance_file = get_field<std::string>(inst, "file", "instance");
  } else {
    check_known_keys(inst, {"n", "d", "r", "mu", "L", "coupling_scale", "seed", "well_posed"},
                     "instance");
    GeneratorConfig g;
    g.n = get_field<std::int64_t>(inst, "n", "instance");
    g.d = get_field<std::int64_t>(inst, "d", "instance");
    g.r = get_field<std::int64_t>(inst, "r", "instance");
    g.mu = get_field<double>(inst, "mu", "instance");
    if (inst.contains("L")) g.L = get_field<double>(inst, "L", "instance");
    if (inst.contains("coupling_scale")) {
      g.coupling_scale = get_field<double>(inst, "coupling_scale", "instance");
    }
    if (inst.contains("seed")) g.seed = get_field<std::uint64_t>(inst, "seed", "instance");
    if (inst.contains("well_posed")) {
      g.well_posed = get_field<bool>(inst, "well_posed", "instance");
    }
    cfg.generator = g;
  }

  cfg.algorithm = get_field<std::string>(doc, "algorithm", "config");
  bool known_alg = false;
  for (const std::string& a : algorithm_names()) known_alg = known_alg || a == cfg.algorithm;
  if (!known_alg) {
    config_error("unknown algorithm '" + cfg.algorithm +
                 "' (expected gda, agda, spider_gda, svrg_gda or acc_spider)");
  }

  if (doc.contains("schedule")) cfg.schedule = get_field<std::string>(doc, "schedule", "config");
  if (cfg.schedule != "theory" && cfg.schedule != "manual") {
    config_error("schedule must be 'theory' or 'manual', got '" + cfg.schedule + "'");
  }
  if (doc.contains("manual")) {
    const json& m = doc.at("manual");
    if (!m.is_object()) config_error("'manual' must be an object");
    check_known_keys(m, {"tau_x", "tau_y", "T", "K", "M", "B", "S", "beta", "gamma"}, "manual");
    maybe_field(m, "tau_x", "manual", cfg.manual.tau_x);
    maybe_field(m, "tau_y", "manual", cfg.manual.tau_y);
    maybe_field(m, "T", "manual", cfg.manual.T);
    maybe_field(m, "K", "manual", cfg.manual.K);
    maybe_field(m, "M", "manual", cfg.manual.M);
    maybe_field(m, "B", "manual", cfg.manual.B);
    maybe_field(m, "S", "manual", cfg.manual.S);
    maybe_field(m, "beta", "manual", cfg.manual.beta);
    maybe_field(m, "gamma", "manual", cfg.manual.gamma);
  }
  if (doc.contains("eps")) cfg.eps = get_field<double>(doc, "eps", "config");
  if (!(cfg.eps > 0.0)) config_error("eps must be positive");
  if (doc.contains("seed")) cfg.seed = get_field<std::uint64_t>(doc, "seed", "config");
  if (doc.contains("snapshot_every")) {
    cfg.snapshot_every = get_field<std::int64_t>(doc, "snapshot_every", "config");
  }
  if (cfg.snapshot_every < 1) config_error("snapshot_every must be >= 1");
  if (doc.contains("max_sfo")) cfg.max_sfo = get_field<std::int64_t>(doc, "max_sfo", "config");
  if (cfg.max_sfo < 0) config_error("max_sfo must be >= 0");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_json_text(buf.str());
}

namespace {

json config_to_json(const ExperimentConfig& cfg) {
  json doc;
  if (cfg.generator) {
    const GeneratorConfig& g = *cfg.generator;
    doc["instance"] = {{"n", g.n},
                       {"d", g.d},
                       {"r", g.r},
                       {"mu", g.mu},
                       {"L", g.L},
                       {"coupling_scale", g.coupling_scale},
                       {"seed", g.seed},
                       {"well_posed", g.well_posed}};
  } else {
    doc["instance"] = {{"file", cfg.instance_file.value_or("")}};
  }
  doc["algorithm"] = cfg.algorithm;
  doc["schedule"] = cfg.schedule;
  json m = json::object();
  const ManualSchedule& ms = cfg.manual;
  if (ms.tau_x) m["tau_x"] = *ms.tau_x;
  if (ms.tau_y) m["tau_y"] = *ms.tau_y;
  if (ms.T) m["T"] = *ms.T;
  if (ms.K) m["K"] = *ms.K;
  if (ms.M) m["M"] = *ms.M;
  if (ms.B) m["B"] = *ms.B;
  if (ms.S) m["S"] = *ms.S;
  if (ms.beta) m["beta"] = *ms.beta;
  if (ms.gamma) m["gamma"] = *ms.gamma;
  if (!m.empty()) doc["manual"] = m;
  doc["eps"] = cfg.eps;
  doc["seed"] = cfg.seed;
  doc["snapshot_every"] = cfg.snapshot_every;
  doc["max_sfo"] = cfg.max_sfo;
  return doc;
}

}  // namespace

std::string to_config_json_text(const ExperimentConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

namespace {

struct ResolvedRun {
  ResolvedSchedule schedule;
  CatalystPlan catalyst;          // acc_spider only
  std::int64_t gda_iters = 0;     // gda/agda only
  ManualSchedule manual_echo;     // fully resolved manual block
};

double per_step_cost(const std::string& algorithm, std::int64_t n, std::int64_t batch,
                     std::int64_t epoch_len) {
  if (algorithm == "gda") return static_cast<double>(n);
  if (algorithm == "agda") return 2.0 * static_cast<double>(n);
  return 2.0 * static_cast<double>(batch) +
         static_cast<double>(n) / static_cast<double>(epoch_len);
}

std::int64_t fill_budget(std::int64_t max_sfo, double per_step, std::int64_t repeats) {
  const double steps = static_cast<double>(max_sfo) /
                       (per_step * static_cast<double>(std::max<std::int64_t>(1, repeats)));
  if (!(steps >= 1.0)) return 1;
  return static_cast<std::int64_t>(std::floor(steps));
}

ResolvedRun resolve_schedule(const ExperimentConfig& cfg, const PLGameInstance& instance,
                             const ProblemConstants* constants, double g0_gap) {
  const std::int64_t n = instance.n();
  ResolvedRun out;

  const auto need_constants = [&]() -> const ProblemConstants& {
    if (constants == nullptr || !(constants->L > 0.0)) {
      config_error("schedule needs problem constants, but no reference solution is available");
    }
    return *constants;
  };

  if (cfg.schedule == "theory") {
    const ProblemConstants& c = need_constants();
    if (cfg.algorithm == "gda" || cfg.algorithm == "agda") {
      out.schedule.steps = params_gda(c.L, c.mu_x, c.mu_y, PLMode::kTwoSided);
      // Linear-rate horizon: (1 - mu_x tau_x / 2)^K <= eps.
      const double k = 2.0 * std::log(1.0 / cfg.eps) / (c.mu_x * out.schedule.steps.tau_x);
      out.gda_iters = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(k)));
      out.schedule.plan.restarts = 1;
      out.schedule.plan.inner_iters = out.gda_iters;
      out.schedule.plan.epoch_len = 1;
      out.schedule.plan.batch_size = n;
    } else if (cfg.algorithm == "spider_gda") {
      const SpiderSchedule s = params_two_sided_spider(c.L, c.mu_x, c.mu_y, n, cfg.eps);
      out.schedule.steps = s.steps;
      out.schedule.plan = s.plan;
    } else if (cfg.algorithm == "svrg_gda") {
      const SpiderSchedule s = params_svrg(c.L, c.mu_x, c.mu_y, n, cfg.eps);
      out.schedule.steps = s.steps;
      out.schedule.plan = s.plan;
    } else {  // acc_spider
      CatalystPlan plan;
      plan.theory = true;
      plan.beta = 2.0 * c.L;
      plan.gamma = 0.0;
      plan.L = c.L;
      plan.mu_y = c.mu_y;
      plan.kappa_y = c.kappa_y;
      plan.delta = delta_target(PLMode::kTwoSided, c.L, c.mu_x, c.mu_y, cfg.eps);
      plan.g0_gap = g0_gap;
      // Proximal-point horizon: (1 - mu_x/(2 beta + mu_x))^k g0 <= eps/2.
      const double rate = c.mu_x / (2.0 * plan.beta + c.mu_x);
      const double target = std::max(2.0 * std::max(g0_gap, cfg.eps) / cfg.eps, std::exp(1.0));
      plan.outer_iters = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::ceil(std::log(target) / rate)));
      out.catalyst = plan;
      out.schedule.beta = plan.beta;
      out.schedule.gamma = plan.gamma;
      out.schedule.outer_iters = plan.outer_iters;
      out.schedule.delta = plan.delta;
    }
    return out;
  }

  // Manual schedule.  Defaults echo the practical settings from the
  // experiments this harness reproduces: B = 1, M = n, single restart,
  // beta = L/(20 n), gamma = 0.999; loop counts fall back to filling the
  // SFO budget.
  const ManualSchedule& m = cfg.manual;
  if (cfg.algorithm != "gda" && cfg.algorithm != "agda") {
    if (!m.tau_x || !m.tau_y) {
      config_error("manual schedule requires 'tau_x' and 'tau_y'");
    }
  } else if (!m.tau_x || !m.tau_y) {
    config_error("manual schedule requires 'tau_x' and 'tau_y'");
  }
  StepSizes steps;
  steps.tau_x = *m.tau_x;
  steps.tau_y = *m.tau_y;
  steps.lambda = 0.0;  // no Lyapunov weight attached to manual runs
  if (!(steps.tau_x > 0.0) || !(steps.tau_y > 0.0)) {
    config_error("manual step sizes must be positive");
  }
  out.schedule.steps = steps;
  out.manual_echo = m;
  out.manual_echo.tau_x = steps.tau_x;
  out.manual_echo.tau_y = steps.tau_y;

  const std::int64_t T = m.T.value_or(1);
  const std::int64_t B = m.B.value_or(1);
  const std::int64_t M = m.M.value_or(n);
  if (T < 1) config_error("manual T must be >= 1");
  if (B < 1) config_error("manual B must be >= 1");
  if (M < 1) config_error("manual M must be >= 1");
  out.manual_echo.T = T;
  out.manual_echo.B = B;
  out.manual_echo.M = M;

  if (cfg.algorithm == "gda" || cfg.algorithm == "agda") {
    const std::int64_t K =
        m.K.value_or(fill_budget(cfg.max_sfo, per_step_cost(cfg.algorithm, n, 1, 1), 1));
    if (K < 1) config_error("manual K must be >= 1");
    out.gda_iters = K;
    out.schedule.plan.restarts = 1;
    out.schedule.plan.inner_iters = K;
    out.manual_echo.K = K;
  } else if (cfg.algorithm == "spider_gda") {
    const std::int64_t K =
        m.K.value_or(fill_budget(cfg.max_sfo, per_step_cost(cfg.algorithm, n, B, M), T));
    if (K < 1) config_error("manual K must be >= 1");
    out.schedule.plan =
        LoopPlan{T, K, M, B, /*anchor_rounds=*/0, PLMode::kTwoSided};
    out.manual_echo.K = K;
  } else if (cfg.algorithm == "svrg_gda") {
    const double round_cost = static_cast<double>(n) + 2.0 * static_cast<double>(B * M);
    const std::int64_t S = m.S.value_or(std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::floor(static_cast<double>(cfg.max_sfo) /
                                                (round_cost * static_cast<double>(T))))));
    if (S < 1) config_error("manual S must be >= 1");
    out.schedule.plan = LoopPlan{T, S * M, M, B, S, PLMode::kTwoSided};
    out.manual_echo.S = S;
  } else {  // acc_spider
    const std::int64_t K = m.K.value_or(M);  // one epoch per outer solve by default
    if (K < 1) config_error("manual K must be >= 1");
    double beta = 0.0;
    if (m.beta) {
      beta = *m.beta;
    } else {
      const ProblemConstants& c = need_constants();
      beta = c.L / (20.0 * static_cast<double>(n));
    }
    if (!(beta > 0.0)) config_error("manual beta must be positive");
    const double gamma = m.gamma.value_or(0.999);
    if (!(gamma >= 0.0)) config_error("manual gamma must be >= 0");

    CatalystPlan plan;
    plan.theory = false;
    plan.beta = beta;
    plan.gamma = gamma;
    plan.sub_steps = steps;
    plan.sub_plan = LoopPlan{1, K, M, B, 0, PLMode::kTwoSided};
    const double outer_cost =
        static_cast<double>(K) * per_step_cost("spider_gda", n, B, M);
    plan.outer_iters = m.T ? T : fill_budget(cfg.max_sfo, outer_cost, 1);
    plan.mode = PLMode::kTwoSided;
    out.catalyst = plan;
    out.manual_echo.K = K;
    out.manual_echo.T = plan.outer_iters;
    out.manual_echo.beta = beta;
    out.manual_echo.gamma = gamma;
    out.schedule.beta = beta;
    out.schedule.gamma = gamma;
    out.schedule.outer_iters = plan.outer_iters;
    out.schedule.plan = plan.sub_plan;
  }
  return out;
}

}  // namespace

Trace run_experiment(const ExperimentConfig& config) {
  // Re-validate through the JSON round trip so API and file callers see the
  // same checks.
  ExperimentConfig cfg = parse_config_json_text(to_config_json_text(config));

  const PLGameInstance instance = cfg.generator
                                      ? PLGameInstance::generate(*cfg.generator)
                                      : PLGameInstance::load(*cfg.instance_file);
  const PLGameProblem problem(instance);

  Trace trace;
  trace.config = cfg;

  std::optional<ReferenceSolution> ref;
  try {
    ref = reference_saddle(instance);
    trace.reference_available = true;
    trace.constants = ref->constants;
  } catch (const MetricUnavailable& e) {
    trace.warnings.push_back(std::string("reference solution unavailable: ") + e.what());
  }

  // Deterministic start point: d_x + d_y standard normals off the run
  // stream, x coordinates first.  The solver consumes the same stream
  // afterwards.
  SplitMix64 rng(cfg.seed);
  Point init;
  init.x = Eigen::VectorXd(problem.dim_x());
  for (Eigen::Index i = 0; i < init.x.size(); ++i) init.x(i) = rng.next_gaussian();
  init.y = Eigen::VectorXd(problem.dim_y());
  for (Eigen::Index i = 0; i < init.y.size(); ++i) init.y(i) = rng.next_gaussian();

  double g0_gap = 0.0;
  if (ref) {
    try {
      g0_gap = primal_gap(instance, *ref, init.x);
    } catch (const MetricUnavailable&) {
      g0_gap = 0.0;
    }
  }

  ResolvedRun resolved =
      resolve_schedule(cfg, instance, ref ? &ref->constants : nullptr, g0_gap);
  trace.schedule = resolved.schedule;
  if (cfg.schedule == "manual") trace.config.manual = resolved.manual_echo;

  const double lyap_weight =
      resolved.schedule.steps.lambda > 0.0
          ? resolved.schedule.steps.lambda * resolved.schedule.steps.tau_x /
                resolved.schedule.steps.tau_y
          : 0.0;

  OracleCounters counters;
  const auto t0 = std::chrono::steady_clock::now();
  bool warned_gap = false;

  const auto record = [&](const Point& p, std::int64_t iter) {
    TraceRecord rec;
    rec.sfo = static_cast<std::int64_t>(counters.sfo);
    rec.iter = iter;
    GradPair g;
    instance.full_grad_aggregate(p, g);
    rec.grad_norm = std::sqrt(g.gx.squaredNorm() + g.gy.squaredNorm());
    if (ref) {
      rec.dist_saddle = distance_to_saddle(*ref, p);
      try {
        const double gval = primal_value(instance, *ref, p.x);
        rec.primal_gap = gval - ref->g_star;
        if (lyap_weight > 0.0) {
          rec.lyapunov = *rec.primal_gap + lyap_weight * (gval - instance.value(p));
        }
      } catch (const MetricUnavailable& e) {
        if (!warned_gap) {
          trace.warnings.push_back(std::string("primal gap unavailable: ") + e.what());
          warned_gap = true;
        }
      }
    }
    rec.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    trace.records.push_back(rec);
  };

  record(init, 0);
  if (cfg.max_sfo == 0) return trace;

  std::int64_t next_mark = cfg.snapshot_every;
  const StepObserver observer = [&](const Point& p, std::int64_t step,
                                    const OracleCounters& c) {
    const std::int64_t sfo = static_cast<std::int64_t>(c.sfo);
    if (sfo >= next_mark) {
      record(p, step);
      next_mark = (sfo / cfg.snapshot_every + 1) * cfg.snapshot_every;
    }
    return sfo < cfg.max_sfo;
  };

  RunResult result;
  if (cfg.algorithm == "gda") {
    result = gda_run(problem, init, resolved.gda_iters, resolved.schedule.steps,
                     PLMode::kTwoSided, rng, counters, observer);
  } else if (cfg.algorithm == "agda") {
    result = agda_run(problem, init, resolved.gda_iters, resolved.schedule.steps,
                      PLMode::kTwoSided, rng, counters, observer);
  } else if (cfg.algorithm == "spider_gda") {
    result = spider_gda_run(problem, init, resolved.schedule.plan, resolved.schedule.steps,
                            rng, counters, observer);
  } else if (cfg.algorithm == "svrg_gda") {
    result = svrg_gda_run(problem, init, resolved.schedule.plan, resolved.schedule.steps,
                          rng, counters, observer);
  } else {
    result = acc_spider_run(problem, init, resolved.catalyst, rng, counters, observer);
    trace.delta_history = result.delta_history;
  }

  // Closing snapshot at the run's output point; replaces the last row when
  // the SFO count did not advance past it (keeps the sfo column strictly
  // increasing).
  const std::int64_t final_sfo = static_cast<std::int64_t>(counters.sfo);
  if (!trace.records.empty() && trace.records.back().sfo == final_sfo) {
    trace.records.pop_back();
  }
  record(result.output, result.steps);
  return trace;
}

namespace {

void append_double_field(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void append_int_field(std::string& out, std::int64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string trace_csv_text(const Trace& trace) {
  std::string out = "sfo,iter,grad_norm,primal_gap,dist_saddle,lyapunov,wall_ns\n";
  for (const TraceRecord& r : trace.records) {
    append_int_field(out, r.sfo);
    out += ',';
    append_int_field(out, r.iter);
    out += ',';
    append_double_field(out, r.grad_norm);
    out += ',';
    if (r.primal_gap) append_double_field(out, *r.primal_gap);
    out += ',';
    if (r.dist_saddle) append_double_field(out, *r.dist_saddle);
    out += ',';
    if (r.lyapunov) append_double_field(out, *r.lyapunov);
    // wall clock never enters the CSV artifact; see TraceRecord.
    out += ",\n";
  }
  return out;
}

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("trace: cannot open " + path + " for writing");
  out << trace_csv_text(trace);
  if (!out) throw std::runtime_error("trace: failed writing " + path);
}

std::string trace_json_text(const Trace& trace) {
  json doc;
  doc["version"] = kVersion;
  doc["rng_algorithm"] = kRngAlgorithm;
  doc["config"] = config_to_json(trace.config);
  doc["reference_available"] = trace.reference_available;
  if (trace.reference_available) {
    doc["constants"] = {{"L", trace.constants.L},
                        {"mu_x", trace.constants.mu_x},
                        {"mu_y", trace.constants.mu_y},
                        {"kappa_x", trace.constants.kappa_x},
                        {"kappa_y", trace.constants.kappa_y}};
  }
  json sched;
  sched["tau_x"] = trace.schedule.steps.tau_x;
  sched["tau_y"] = trace.schedule.steps.tau_y;
  sched["lambda"] = trace.schedule.steps.lambda;
  sched["restarts"] = trace.schedule.plan.restarts;
  sched["inner_iters"] = trace.schedule.plan.inner_iters;
  sched["epoch_len"] = trace.schedule.plan.epoch_len;
  sched["batch_size"] = trace.schedule.plan.batch_size;
  sched["anchor_rounds"] = trace.schedule.plan.anchor_rounds;
  if (trace.config.algorithm == "acc_spider") {
    sched["beta"] = trace.schedule.beta;
    sched["gamma"] = trace.schedule.gamma;
    sched["outer_iters"] = trace.schedule.outer_iters;
    sched["delta"] = trace.schedule.delta;
  }
  doc["schedule"] = sched;
  if (!trace.delta_history.empty()) doc["delta_k"] = trace.delta_history;
  doc["warnings"] = trace.warnings;

  json records = json::array();
  for (const TraceRecord& r : trace.records) {
    json rec;
    rec["sfo"] = r.sfo;
    rec["iter"] = r.iter;
    rec["grad_norm"] = r.grad_norm;
    rec["primal_gap"] = r.primal_gap ? json(*r.primal_gap) : json(nullptr);
    rec["dist_saddle"] = r.dist_saddle ? json(*r.dist_saddle) : json(nullptr);
    rec["lyapunov"] = r.lyapunov ? json(*r.lyapunov) : json(nullptr);
    rec["wall_ns"] = r.wall_ns;
    records.push_back(rec);
  }
  doc["records"] = records;
  return doc.dump(2) + "\n";
}

void write_trace_json(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("trace: cannot open " + path + " for writing");
  out << trace_json_text(trace);
  if (!out) throw std::runtime_error("trace: failed writing " + path);
}

namespace {

int metric_column(const std::string& metric) {
  if (metric == "grad_norm") return 2;
  if (metric == "primal_gap") return 3;
  if (metric == "dist_saddle") return 4;
  if (metric == "lyapunov") return 5;
  throw MetricUnavailable("unknown metric '" + metric +
                          "' (expected grad_norm, primal_gap, dist_saddle or lyapunov)");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

Series read_csv_series(const std::string& path, const std::string& metric,
                       const std::string& label) {
  const int col = metric_column(metric);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("trace: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace: " + path + " is empty");
  if (split_csv_line(line) !=
      std::vector<std::string>{"sfo", "iter", "grad_norm", "primal_gap", "dist_saddle",
                               "lyapunov", "wall_ns"}) {
    throw std::runtime_error("trace: " + path + " does not carry the expected CSV header");
  }

  Series series;
  series.label = label;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 7) {
      throw std::runtime_error("trace: " + path + ":" + std::to_string(line_no) +
                               " has " + std::to_string(fields.size()) + " fields, expected 7");
    }
    if (fields[static_cast<std::size_t>(col)].empty()) continue;
    std::int64_t sfo = 0;
    double value = 0.0;
    const std::string& sfo_s = fields[0];
    const std::string& val_s = fields[static_cast<std::size_t>(col)];
    if (std::from_chars(sfo_s.data(), sfo_s.data() + sfo_s.size(), sfo).ec != std::errc{}) {
      throw std::runtime_error("trace: bad sfo value at " + path + ":" +
                               std::to_string(line_no));
    }
    if (std::from_chars(val_s.data(), val_s.data() + val_s.size(), value).ec != std::errc{}) {
      throw std::runtime_error("trace: bad metric value at " + path + ":" +
                               std::to_string(line_no));
    }
    series.points.emplace_back(sfo, value);
  }
  if (series.points.empty()) {
    throw MetricUnavailable("metric '" + metric + "' unavailable in trace " + path);
  }
  return series;
}

std::vector<RankedTrace> compare_traces(
    const std::vector<std::pair<std::string, const Trace*>>& traces,
    const std::string& metric, std::int64_t budget) {
  if (traces.empty()) throw std::invalid_argument("compare_traces: no traces");
  metric_column(metric);  // validates the name

  const auto metric_of = [&](const TraceRecord& r) -> std::optional<double> {
    if (metric == "grad_norm") return r.grad_norm;
    if (metric == "primal_gap") return r.primal_gap;
    if (metric == "dist_saddle") return r.dist_saddle;
    return r.lyapunov;
  };

  std::vector<RankedTrace> ranked;
  for (const auto& [label, trace] : traces) {
    bool in_budget = false;
    std::optional<double> last;
    for (const TraceRecord& r : trace->records) {
      if (r.sfo > budget) break;
      in_budget = true;
      if (const std::optional<double> v = metric_of(r)) last = v;
    }
    if (!in_budget) {
      throw std::invalid_argument("compare_traces: budget " + std::to_string(budget) +
                                  " lies before the first snapshot of '" + label + "'");
    }
    if (!last) {
      throw MetricUnavailable("metric '" + metric + "' unavailable in trace '" + label + "'");
    }
    ranked.push_back({label, *last});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedTrace& a, const RankedTrace& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.label < b.label;
  });
  return ranked;
}

}  // namespace plmm
