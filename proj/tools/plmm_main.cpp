// plmm — generate PL-game instances, run solvers, sweep parameter grids and
// plot the resulting traces.
//
// Exit codes: 0 success, 2 usage/validation, 3 solver abort, 4 metric
// unavailable.  Everything else (I/O failures, malformed trace files) is 1.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "plmm/harness.hpp"
#include "plmm/plgame.hpp"
#include "plmm/solvers.hpp"
#include "plmm/svg_plot.hpp"
#include "plmm/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// `key=value` with a dotted key path into the config JSON.  The value is
// parsed as JSON when possible (numbers, bools) and kept as a string
// otherwise, so `--override seed=9` and `--override algorithm=gda` both work.
void apply_override(json& doc, const std::string& spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override '" + spec + "' is not of the form key=value");
  }
  const std::string path = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }

  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) {
      throw std::invalid_argument("override '" + spec + "' has an empty path segment");
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (!node->is_object() && !node->is_null()) {
      throw std::invalid_argument("override '" + spec + "': '" + key + "' is not an object");
    }
    start = dot + 1;
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return doc;
}

// foo.json -> foo ; foo -> foo
std::string config_stem(const std::string& path) {
  const fs::path p(path);
  if (p.extension() == ".json") {
    return (p.parent_path() / p.stem()).string();
  }
  return path;
}

// a/b/x.trace.csv -> x ; a/b/x.csv -> x
std::string trace_label(const std::string& path) {
  std::string stem = fs::path(path).stem().string();
  const std::string suffix = ".trace";
  if (stem.size() > suffix.size() &&
      stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
    stem.resize(stem.size() - suffix.size());
  }
  return stem;
}

std::string sanitize_for_filename(const std::string& s) {
  std::string out;
  for (const char c : s) {
    const bool keep = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                      (c >= 'A' && c <= 'Z') || c == '-' || c == '.';
    out += keep ? c : '-';
  }
  return out;
}

struct RunPaths {
  std::string csv;
  std::string json_path;
};

RunPaths execute_run(const json& config_doc, const std::string& stem) {
  const plmm::ExperimentConfig cfg = plmm::parse_config_json_text(config_doc.dump());
  const plmm::Trace trace = plmm::run_experiment(cfg);
  RunPaths paths{stem + ".trace.csv", stem + ".trace.json"};
  plmm::write_trace_csv(trace, paths.csv);
  plmm::write_trace_json(trace, paths.json_path);
  return paths;
}

int do_gen(const plmm::GeneratorConfig& gc, std::string out) {
  if (out.empty()) out = "plgame_" + std::to_string(gc.seed) + ".json";
  const plmm::PLGameInstance instance = plmm::PLGameInstance::generate(gc);
  instance.save(out);
  std::cout << "wrote " << out << "\n";
  try {
    const plmm::ReferenceSolution ref = plmm::reference_saddle(instance);
    const plmm::ProblemConstants& c = ref.constants;
    std::printf("L = %.6g, mu_x = %.6g, mu_y = %.6g, kappa_x = %.6g, kappa_y = %.6g\n", c.L,
                c.mu_x, c.mu_y, c.kappa_x, c.kappa_y);
  } catch (const plmm::MetricUnavailable& e) {
    std::cerr << "constants unavailable: " << e.what() << "\n";
  }
  return 0;
}

int do_run(const std::string& config_path, const std::vector<std::string>& overrides) {
  json doc = load_json_file(config_path);
  for (const std::string& o : overrides) apply_override(doc, o);
  const RunPaths paths = execute_run(doc, config_stem(config_path));
  std::cout << "wrote " << paths.csv << " and " << paths.json_path << "\n";
  return 0;
}

struct SweepCell {
  std::vector<std::string> overrides;
  std::string stem;
};

int do_sweep(const std::string& config_path, const std::vector<std::string>& vary,
             const std::string& seeds_spec, int jobs, std::string out_dir) {
  const json base = load_json_file(config_path);

  // --vary key=v1,v2,...  ->  one axis per flag occurrence
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  for (const std::string& v : vary) {
    const std::size_t eq = v.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == v.size()) {
      throw std::invalid_argument("--vary '" + v + "' is not of the form key=v1,v2,...");
    }
    const std::string key = v.substr(0, eq);
    std::vector<std::string> values;
    std::istringstream split(v.substr(eq + 1));
    std::string item;
    while (std::getline(split, item, ',')) {
      if (!item.empty()) values.push_back(item);
    }
    if (values.empty()) throw std::invalid_argument("--vary '" + key + "' has no values");
    axes.emplace_back(key, values);
  }

  // --seeds a..b (inclusive) or a single seed
  std::int64_t seed_lo = 0;
  std::int64_t seed_hi = 0;
  {
    const std::size_t dots = seeds_spec.find("..");
    try {
      if (dots == std::string::npos) {
        seed_lo = seed_hi = std::stoll(seeds_spec);
      } else {
        seed_lo = std::stoll(seeds_spec.substr(0, dots));
        seed_hi = std::stoll(seeds_spec.substr(dots + 2));
      }
    } catch (const std::exception&) {
      throw std::invalid_argument("--seeds '" + seeds_spec + "' is not of the form a..b");
    }
    if (seed_hi < seed_lo) {
      throw std::invalid_argument("--seeds range " + seeds_spec + " is empty");
    }
  }

  if (out_dir.empty()) {
    out_dir = fs::path(config_path).parent_path().string();
    if (out_dir.empty()) out_dir = ".";
  }
  fs::create_directories(out_dir);
  const std::string base_name = fs::path(config_stem(config_path)).filename().string();

  // Cartesian product of all axes, then seeds.
  std::vector<SweepCell> cells;
  std::vector<std::size_t> idx(axes.size(), 0);
  for (;;) {
    SweepCell cell;
    std::string tag = base_name;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const std::string& key = axes[a].first;
      const std::string& value = axes[a].second[idx[a]];
      cell.overrides.push_back(key + "=" + value);
      std::string leaf = key;
      const std::size_t dot = leaf.rfind('.');
      if (dot != std::string::npos) leaf = leaf.substr(dot + 1);
      tag += "__" + sanitize_for_filename(leaf) + "_" + sanitize_for_filename(value);
    }
    for (std::int64_t s = seed_lo; s <= seed_hi; ++s) {
      SweepCell c = cell;
      c.overrides.push_back("seed=" + std::to_string(s));
      c.stem = (fs::path(out_dir) / (tag + "__seed_" + std::to_string(s))).string();
      cells.push_back(std::move(c));
    }
    std::size_t a = 0;
    for (; a < axes.size(); ++a) {
      if (++idx[a] < axes[a].second.size()) break;
      idx[a] = 0;
    }
    if (a == axes.size()) break;
  }
  if (cells.empty()) throw std::invalid_argument("sweep product is empty");

  // Validate the first cell's config up front so schema errors surface
  // before any threads start.
  {
    json doc = base;
    for (const std::string& o : cells.front().overrides) apply_override(doc, o);
    plmm::parse_config_json_text(doc.dump());
  }

  std::atomic<std::size_t> next{0};
  std::mutex state_mu;
  std::vector<std::string> failures;
  int failure_code = 0;
  std::vector<json> manifest_cells(cells.size());

  const auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const SweepCell& cell = cells[i];
      try {
        json doc = base;
        for (const std::string& o : cell.overrides) apply_override(doc, o);
        const RunPaths paths = execute_run(doc, cell.stem);
        json entry;
        entry["overrides"] = cell.overrides;
        entry["csv"] = paths.csv;
        entry["json"] = paths.json_path;
        manifest_cells[i] = entry;
      } catch (const std::exception& e) {
        int code = 1;
        if (dynamic_cast<const plmm::SolverAbort*>(&e) != nullptr) {
          code = 3;
        } else if (dynamic_cast<const plmm::MetricUnavailable*>(&e) != nullptr) {
          code = 4;
        } else if (dynamic_cast<const std::invalid_argument*>(&e) != nullptr) {
          code = 2;
        }
        const std::lock_guard<std::mutex> lock(state_mu);
        failures.push_back(cell.stem + ": " + e.what());
        if (failure_code == 0) failure_code = code;
      }
    }
  };

  const std::size_t n_threads =
      std::min<std::size_t>(std::max(jobs, 1), cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t + 1 < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  if (!failures.empty()) {
    for (const std::string& f : failures) std::cerr << "sweep cell failed: " << f << "\n";
    return failure_code;
  }

  json manifest;
  manifest["config"] = config_path;
  manifest["cells"] = manifest_cells;
  const std::string manifest_path =
      (fs::path(out_dir) / (base_name + ".manifest.json")).string();
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + manifest_path + " for writing");
  out << manifest.dump(2) << "\n";
  std::cout << "wrote " << cells.size() << " traces and " << manifest_path << "\n";
  return 0;
}

int do_plot(const std::vector<std::string>& traces, const std::string& metric,
            const std::string& out_path, const std::string& title) {
  std::vector<plmm::Series> series;
  for (const std::string& path : traces) {
    series.push_back(plmm::read_csv_series(path, metric, trace_label(path)));
  }
  plmm::PlotOptions opts;
  opts.title = title.empty() ? metric + " vs sfo" : title;
  opts.y_label = metric;
  const std::string svg = plmm::emit_plot(series, opts);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + out_path + " for writing");
  out << svg;
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-sum minimax solvers on PL games"};
  app.set_version_flag("--version", plmm::kVersion);
  app.require_subcommand(1);

  // gen
  plmm::GeneratorConfig gc;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen", "generate a PL-game instance file");
  gen->add_option("--n", gc.n, "number of components")->required();
  gen->add_option("--d", gc.d, "dimension of each block")->required();
  gen->add_option("--r", gc.r, "rank of the curvature matrices (< d)")->required();
  gen->add_option("--mu", gc.mu, "smallest nonzero curvature eigenvalue")->required();
  gen->add_option("--L", gc.L, "largest curvature eigenvalue");
  gen->add_option("--scale", gc.coupling_scale, "coupling strength");
  gen->add_option("--seed", gc.seed, "generator seed");
  gen->add_flag("--well-posed,!--no-well-posed", gc.well_posed,
                "project the coupling onto the curvature ranges");
  gen->add_option("--out", gen_out, "output path (default plgame_<seed>.json)");

  // run
  std::string run_config;
  std::vector<std::string> run_overrides;
  CLI::App* run = app.add_subcommand("run", "run one experiment from a JSON config");
  run->add_option("--config", run_config, "experiment config JSON")->required();
  run->add_option("--override", run_overrides,
                  "key=value override with dotted paths (repeatable)");

  // sweep
  std::string sweep_config;
  std::vector<std::string> sweep_vary;
  std::string sweep_seeds = "0..0";
  std::string sweep_out_dir;
  int sweep_jobs = 1;
  CLI::App* sweep = app.add_subcommand("sweep", "run a grid of experiments");
  sweep->add_option("--config", sweep_config, "base experiment config JSON")->required();
  sweep->add_option("--vary", sweep_vary, "key=v1,v2,... axis (repeatable)");
  sweep->add_option("--seeds", sweep_seeds, "seed range a..b (inclusive)");
  sweep->add_option("--jobs", sweep_jobs, "parallel cells");
  sweep->add_option("--out-dir", sweep_out_dir, "output directory (default: config's)");

  // plot
  std::vector<std::string> plot_traces;
  std::string plot_metric = "grad_norm";
  std::string plot_out = "plot.svg";
  std::string plot_title;
  CLI::App* plot = app.add_subcommand("plot", "plot trace CSVs as an SVG");
  plot->add_option("--traces", plot_traces, "trace CSV paths, comma separated")
      ->required()
      ->delimiter(',');
  plot->add_option("--metric", plot_metric,
                   "grad_norm | primal_gap | dist_saddle | lyapunov");
  plot->add_option("--out", plot_out, "output SVG path");
  plot->add_option("--title", plot_title, "plot title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return do_gen(gc, gen_out);
    if (run->parsed()) return do_run(run_config, run_overrides);
    if (sweep->parsed()) {
      return do_sweep(sweep_config, sweep_vary, sweep_seeds, sweep_jobs, sweep_out_dir);
    }
    return do_plot(plot_traces, plot_metric, plot_out, plot_title);
  } catch (const plmm::SolverAbort& e) {
    std::cerr << "solver abort: " << e.what() << "\n";
    return 3;
  } catch (const plmm::MetricUnavailable& e) {
    std::cerr << "metric unavailable: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
