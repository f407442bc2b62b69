#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "plmm/plgame.hpp"
#include "plmm/schedules.hpp"

#ifndef CLI_BIN
#error "CLI_BIN must point at the plmm executable"
#endif

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Scratch directory shared by all cases, wiped once per process.
const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "plmm_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the binary through the shell with stdout/stderr captured to files.
CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path out = work_dir() / ("stdout_" + std::to_string(counter) + ".txt");
  const fs::path err = work_dir() / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;
  const std::string cmd = "cd '" + work_dir().string() + "' && '" + CLI_BIN + "' " + args +
                          " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult res;
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

json small_config(const std::string& algorithm) {
  json doc;
  doc["instance"] = {{"n", 40}, {"d", 4}, {"r", 2}, {"mu", 0.2}, {"seed", 7}};
  doc["algorithm"] = algorithm;
  doc["schedule"] = "manual";
  doc["manual"] = {{"tau_x", 0.02}, {"tau_y", 0.05}};
  doc["seed"] = 3;
  doc["snapshot_every"] = 500;
  doc["max_sfo"] = 4000;
  return doc;
}

}  // namespace

TEST_CASE("gen: writes the instance, prints constants, reruns identically") {
  const CliResult a =
      run_cli("gen --n 40 --d 6 --r 3 --mu 0.1 --seed 5 --out inst_a.json");
  CHECK(a.code == 0);
  CHECK(a.out.find("wrote inst_a.json") != std::string::npos);
  CHECK(a.out.find("L = ") != std::string::npos);
  CHECK(a.out.find("mu_x = ") != std::string::npos);
  CHECK(a.out.find("kappa_y = ") != std::string::npos);
  REQUIRE(fs::exists(work_dir() / "inst_a.json"));

  const CliResult b =
      run_cli("gen --n 40 --d 6 --r 3 --mu 0.1 --seed 5 --out inst_b.json");
  CHECK(b.code == 0);
  CHECK(slurp(work_dir() / "inst_a.json") == slurp(work_dir() / "inst_b.json"));

  // Default output name carries the seed.
  const CliResult c = run_cli("gen --n 10 --d 3 --r 1 --mu 0.5 --seed 99");
  CHECK(c.code == 0);
  CHECK(fs::exists(work_dir() / "plgame_99.json"));
}

TEST_CASE("gen: invalid geometry exits 2 with the validation message") {
  const CliResult r = run_cli("gen --n 10 --d 6 --r 6 --mu 0.1 --out bad.json");
  CHECK(r.code == 2);
  CHECK(r.err.find("r must be < d") != std::string::npos);
  CHECK(!fs::exists(work_dir() / "bad.json"));
}

TEST_CASE("run: produces both artifacts next to the config") {
  write_file(work_dir() / "c1.json", small_config("gda").dump(2));
  const CliResult r = run_cli("run --config c1.json");
  CHECK(r.code == 0);
  CHECK(r.out.find("wrote c1.trace.csv and c1.trace.json") != std::string::npos);
  REQUIRE(fs::exists(work_dir() / "c1.trace.csv"));
  REQUIRE(fs::exists(work_dir() / "c1.trace.json"));

  std::istringstream csv(slurp(work_dir() / "c1.trace.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "sfo,iter,grad_norm,primal_gap,dist_saddle,lyapunov,wall_ns");

  const json trace = json::parse(slurp(work_dir() / "c1.trace.json"));
  CHECK(trace.at("config").at("algorithm") == "gda");
  CHECK(trace.at("records").size() >= 2);
}

TEST_CASE("run: a missing config file exits 2") {
  const CliResult r = run_cli("run --config nope.json");
  CHECK(r.code == 2);
  CHECK(r.err.find("nope.json") != std::string::npos);
}

TEST_CASE("run: overrides patch exactly the named key") {
  write_file(work_dir() / "c2.json", small_config("gda").dump(2));
  const CliResult base = run_cli("run --config c2.json");
  REQUIRE(base.code == 0);
  const json base_cfg = json::parse(slurp(work_dir() / "c2.trace.json")).at("config");

  write_file(work_dir() / "c3.json", small_config("gda").dump(2));
  const CliResult patched = run_cli("run --config c3.json --override seed=9");
  REQUIRE(patched.code == 0);
  json want = base_cfg;
  want["seed"] = 9;
  const json got = json::parse(slurp(work_dir() / "c3.trace.json")).at("config");
  CHECK(got == want);

  // Dotted paths reach into nested objects.
  write_file(work_dir() / "c4.json", small_config("gda").dump(2));
  const CliResult nested = run_cli("run --config c4.json --override instance.n=60");
  REQUIRE(nested.code == 0);
  CHECK(json::parse(slurp(work_dir() / "c4.trace.json"))
            .at("config")
            .at("instance")
            .at("n")
            .get<std::int64_t>() == 60);
}

TEST_CASE("run: rerunning the echoed config reproduces the CSV byte for byte") {
  write_file(work_dir() / "c5.json", small_config("spider_gda").dump(2));
  const CliResult first = run_cli("run --config c5.json");
  REQUIRE(first.code == 0);
  const json echoed = json::parse(slurp(work_dir() / "c5.trace.json")).at("config");
  write_file(work_dir() / "c5_echo.json", echoed.dump(2));
  const CliResult second = run_cli("run --config c5_echo.json");
  REQUIRE(second.code == 0);
  CHECK(slurp(work_dir() / "c5.trace.csv") == slurp(work_dir() / "c5_echo.trace.csv"));
}

TEST_CASE("run: accelerated theory run writes the accuracy ladder it used") {
  // Cheapest instance the theory sub-solver can handle quickly: d = 1, n = 2,
  // L close to 1.  Budget-capped so only part of the first sub-solve runs.
  plmm::GeneratorConfig gc;
  gc.n = 2;
  gc.d = 1;
  gc.r = 1;
  gc.mu = 0.5;
  gc.L = 1.5;
  Eigen::MatrixXd cols(1, 2);
  cols << 1.0, 1.0;
  const plmm::PLGameInstance inst =
      plmm::PLGameInstance::from_factors(gc, cols, cols, 0.2 * cols);
  inst.save((work_dir() / "tiny.json").string());

  json doc;
  doc["instance"] = {{"file", "tiny.json"}};
  doc["algorithm"] = "acc_spider";
  doc["schedule"] = "theory";
  doc["eps"] = 0.25;
  doc["seed"] = 4;
  doc["snapshot_every"] = 100000;
  doc["max_sfo"] = 500000;
  write_file(work_dir() / "acc.json", doc.dump(2));

  const CliResult r = run_cli("run --config acc.json");
  REQUIRE(r.code == 0);
  const json trace = json::parse(slurp(work_dir() / "acc.trace.json"));
  REQUIRE(trace.contains("delta_k"));
  REQUIRE(trace.at("delta_k").size() >= 1);

  const double L = trace.at("constants").at("L").get<double>();
  const double mu_x = trace.at("constants").at("mu_x").get<double>();
  const double mu_y = trace.at("constants").at("mu_y").get<double>();
  const double kappa_y = trace.at("constants").at("kappa_y").get<double>();
  const double beta = trace.at("schedule").at("beta").get<double>();
  CHECK(beta == doctest::Approx(2.0 * L).epsilon(1e-12));

  const double delta = trace.at("schedule").at("delta").get<double>();
  CHECK(delta == doctest::Approx(plmm::delta_target(plmm::PLMode::kTwoSided, L, mu_x,
                                                    mu_y, 0.25))
                     .epsilon(1e-12));

  // First rung of the ladder: delta_0 from the measured initial primal gap.
  const double g0 = trace.at("records").at(0).at("primal_gap").get<double>();
  const double want =
      plmm::delta_k(0, 0.0, delta, kappa_y, beta, L, mu_y, g0);
  CHECK(trace.at("delta_k").at(0).get<double>() == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("sweep: grid times seeds, manifest lists every artifact") {
  write_file(work_dir() / "s1.json", small_config("gda").dump(2));
  const CliResult r =
      run_cli("sweep --config s1.json --vary instance.n=20,30 --seeds 0..1 --jobs 2");
  REQUIRE(r.code == 0);
  const fs::path manifest = work_dir() / "s1.manifest.json";
  REQUIRE(fs::exists(manifest));
  const json doc = json::parse(slurp(manifest));
  REQUIRE(doc.at("cells").size() == 4);
  for (const json& cell : doc.at("cells")) {
    CHECK(fs::exists(work_dir() / cell.at("csv").get<std::string>()));
    CHECK(fs::exists(work_dir() / cell.at("json").get<std::string>()));
    CHECK(cell.at("overrides").size() == 2);  // one vary axis + the seed
  }

  // Sweeping the algorithm axis works the same way.
  write_file(work_dir() / "s2.json", small_config("gda").dump(2));
  const CliResult r2 = run_cli("sweep --config s2.json --vary algorithm=gda,agda --seeds 5");
  REQUIRE(r2.code == 0);
  const json doc2 = json::parse(slurp(work_dir() / "s2.manifest.json"));
  CHECK(doc2.at("cells").size() == 2);
}

TEST_CASE("sweep: malformed axes exit 2") {
  write_file(work_dir() / "s3.json", small_config("gda").dump(2));
  CHECK(run_cli("sweep --config s3.json --vary instance.n --seeds 0").code == 2);
  CHECK(run_cli("sweep --config s3.json --vary instance.n= --seeds 0").code == 2);
  CHECK(run_cli("sweep --config s3.json --seeds 1..0").code == 2);
}

TEST_CASE("plot: valid SVG per metric, one file per invocation") {
  write_file(work_dir() / "p1.json", small_config("gda").dump(2));
  write_file(work_dir() / "p2.json", small_config("agda").dump(2));
  REQUIRE(run_cli("run --config p1.json").code == 0);
  REQUIRE(run_cli("run --config p2.json").code == 0);

  const CliResult gap = run_cli(
      "plot --traces p1.trace.csv,p2.trace.csv --metric primal_gap --out fig_gap.svg");
  CHECK(gap.code == 0);
  const std::string svg = slurp(work_dir() / "fig_gap.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("p1") != std::string::npos);  // legend labels from file stems
  CHECK(svg.find("p2") != std::string::npos);

  const CliResult grad = run_cli(
      "plot --traces p1.trace.csv,p2.trace.csv --metric grad_norm --out fig_grad.svg");
  CHECK(grad.code == 0);
  CHECK(slurp(work_dir() / "fig_grad.svg").find("grad_norm") != std::string::npos);

  // Deterministic output.
  const CliResult again = run_cli(
      "plot --traces p1.trace.csv,p2.trace.csv --metric primal_gap --out fig_gap2.svg");
  REQUIRE(again.code == 0);
  CHECK(slurp(work_dir() / "fig_gap2.svg") == svg);
}

TEST_CASE("exit codes: metric unavailability is 4, solver abort is 3") {
  // A hand-written trace whose dist_saddle column is empty.
  write_file(work_dir() / "bare.trace.csv",
             "sfo,iter,grad_norm,primal_gap,dist_saddle,lyapunov,wall_ns\n"
             "0,0,1.5,,,,\n"
             "100,1,0.75,,,,\n");
  const CliResult missing =
      run_cli("plot --traces bare.trace.csv --metric dist_saddle --out none.svg");
  CHECK(missing.code == 4);
  CHECK(missing.err.find("metric unavailable") != std::string::npos);

  // An ill-posed instance cannot report primal gaps at all.
  json ill = small_config("gda");
  ill["instance"]["well_posed"] = false;
  ill["instance"]["coupling_scale"] = 0.5;
  ill["instance"]["d"] = 6;
  ill["max_sfo"] = 600;
  write_file(work_dir() / "ill.json", ill.dump(2));
  REQUIRE(run_cli("run --config ill.json").code == 0);
  const CliResult illplot =
      run_cli("plot --traces ill.trace.csv --metric primal_gap --out none2.svg");
  CHECK(illplot.code == 4);

  // Unknown metric name reports the same class of failure.
  CHECK(run_cli("plot --traces bare.trace.csv --metric speed --out none3.svg").code == 4);

  // Diverging manual steps abort the solver.
  json diverge = small_config("gda");
  diverge["manual"]["tau_x"] = 1e150;
  diverge["manual"]["tau_y"] = 1e150;
  diverge["manual"]["K"] = 50;
  write_file(work_dir() / "div.json", diverge.dump(2));
  const CliResult aborted = run_cli("run --config div.json");
  CHECK(aborted.code == 3);
  CHECK(aborted.err.find("solver abort") != std::string::npos);
}

TEST_CASE("exit codes: bad usage is 2, help is 0") {
  CHECK(run_cli("run").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("gen --help").code == 0);
}
