#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bvsmp/cli_runner.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace bvsmp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream is(p);
  std::string line;
  std::getline(is, line);
  return line + "\n";
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("bvsmp_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ExperimentConfig quick(const std::string& kind, const fs::path& out) {
  auto c = parse_config("[experiment]\nkind = " + kind + "\nseed = 3\noutput_dir = " + out.string() +
                        "\n[corridor]\nT = 1\ndt = 0.01\nn_paths = 300\n"
                        "[figure2]\nrho_grid = 1, 2\n"
                        "[smp]\nouter_paths = 500\ninner_paths = 100\nnodes = 3\nstates_per_node = 2\n"
                        "i1_outer = 20\ni1_inner = 20\nknots = 4\ncost_paths = 200\n"
                        "[localtime]\nn_paths = 50\nT = 1\ndt = 0.01\n"
                        "[variation]\nn_paths = 50\nT = 1\ndt = 0.01\n"
                        "[mollify]\nlevels = 5, 10\nn_paths = 50\n"
                        "[spec]\nn_paths = 3\n");
  return c;
}

int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(BVSMP_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const auto c = parse_config("[experiment]\nkind = figure2\nseed = 9\n[corridor]\nrho = 1.5\n");
  CHECK(c.kind == "figure2");
  CHECK(c.seed == 9);
  CHECK(c.corridor.rho == 1.5);
  CHECK(c.corridor.mu == 0.5);
  CHECK(c.corridor.n_paths == 100000);
  CHECK(c.rho_grid == default_rho_grid());
  CHECK(validate(c).empty());
}

TEST_CASE("config errors name the field") {
  auto field_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigParseError& e) {
      return e.field();
    }
    return std::string("none");
  };
  CHECK(field_of("[experiment]\nkind = figure9\n") == "experiment.kind");
  CHECK(field_of("[corridor]\nrho = abc\n") == "corridor.rho");
  CHECK(field_of("[corridor]\nrhoo = 1\n") == "corridor.rhoo");
  CHECK(field_of("[nowhere]\nx = 1\n") == "nowhere");
  CHECK(field_of("[smp]\nrun_i1 = maybe\n") == "smp.run_i1");
  auto c = parse_config("[corridor]\nrho = -1\ndt = 9\n");
  CHECK(validate(c).size() >= 2);
}

TEST_CASE("shipped configs validate") {
  int n = 0;
  for (const auto& entry : fs::directory_iterator(BVSMP_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    CAPTURE(entry.path().string());
    const auto c = load_config(entry.path());
    CHECK(validate(c).empty());
    ++n;
  }
  CHECK(n == static_cast<int>(experiment_kinds().size()));
}

TEST_CASE("each kind writes its file with the agreed header") {
  const std::pair<const char*, const char*> kinds[] = {
      {"figure1", "figure1"},
      {"figure2", "figure2"},
      {"localtime-check", "localtime_check"},
      {"variation-check", "variation_check"},
      {"mollify-sweep", "mollification"},
      {"smp-verify", "adjoint"},
      {"simulate", "ensemble"},
  };
  for (const auto& [kind, stem] : kinds) {
    CAPTURE(kind);
    const auto dir = scratch(stem);
    const auto r = run_experiment(quick(kind, dir));
    CHECK(r.exit_code == 0);
    CHECK(r.error.empty());
    const auto csv = dir / (std::string(stem) + ".csv");
    REQUIRE(fs::exists(csv));
    CHECK(first_line(csv) == slurp(fs::path(BVSMP_GOLDEN_DIR) / (std::string(stem) + ".header")));
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(m["status"] == "ok");
    CHECK(m["kind"] == kind);
    CHECK(m["seed"] == 3);
  }
  const auto j = nlohmann::json::parse(slurp(fs::temp_directory_path() / "bvsmp_test_adjoint" / "smp_report.json"));
  CHECK(j.contains("necessary_condition"));
  CHECK(j.contains("symmetry_i1"));
}

TEST_CASE("reruns are byte identical across thread counts") {
  for (const char* kind : {"figure1", "figure2", "variation-check"}) {
    CAPTURE(kind);
    const auto a = scratch("det_a"), b = scratch("det_b");
    auto ca = quick(kind, a);
    auto cb = quick(kind, b);
    cb.threads = 3;
    REQUIRE(run_experiment(ca).exit_code == 0);
    const auto rb = run_experiment(cb);
    REQUIRE(rb.exit_code == 0);
    for (const auto& f : rb.files) CHECK(slurp(a / f) == slurp(b / f));
  }
}

TEST_CASE("failed runs still leave a manifest") {
  const auto dir = scratch("fail");
  auto c = quick("figure1", dir);
  c.corridor.rho = -1.0;
  const auto r = run_experiment(c);
  CHECK(r.exit_code == 1);
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["status"] == "error");
  CHECK(m["error"].get<std::string>().find("rho") != std::string::npos);
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("cli");
  const auto bad = dir / "bad.ini";
  std::ofstream(bad) << "[experiment]\nkind = nonsense\n";
  const auto err = dir / "err.txt";
  CHECK(run_cli("run " + bad.string(), err) == 2);
  const auto e = nlohmann::json::parse(slurp(err));
  CHECK(e["field"] == "experiment.kind");

  const auto invalid = dir / "invalid.ini";
  std::ofstream(invalid) << "[corridor]\nsigma = -2\n";
  CHECK(run_cli("validate " + invalid.string(), err) == 1);
  CHECK(run_cli("validate " + (fs::path(BVSMP_CONFIG_DIR) / "figure1.ini").string(), err) == 0);
  CHECK(run_cli("frobnicate", err) == 2);

  const auto ok = dir / "ok.ini";
  std::ofstream(ok) << "[experiment]\nkind = simulate\n[corridor]\nT = 1\ndt = 0.1\n[spec]\nn_paths = 2\n";
  CHECK(run_cli("run " + ok.string() + " --out " + (dir / "o").string() + " --isa scalar", err) == 0);
  CHECK(fs::exists(dir / "o" / "ensemble.csv"));
}
