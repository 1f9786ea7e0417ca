#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fluctlab/fcs.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* cli_path() { return FLUCTLAB_CLI_PATH; }

// Fresh scratch directory per test case.
fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "fluctlab_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

// Returns the CLI's exit code, with stderr silenced to keep test logs clean.
int run_cli(const std::string& args) {
  std::string cmd = std::string(cli_path()) + " " + args + " 2>/dev/null";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WEXITSTATUS(rc);
}

json load_report(const fs::path& out_dir) {
  const fs::path path = out_dir / "report.json";
  REQUIRE(fs::exists(path));
  return json::parse(read_file(path));
}

std::string classical_chain_json(double p) {
  fluctlab::FCSState chain = fluctlab::FCSState::classical_markov(
      (fluctlab::MatrixXd(2, 2) << 1.0 - p, p, p, 1.0 - p).finished());
  fluctlab::FCSSpec spec;
  spec.bond_dim = 2;
  spec.site_dim = 2;
  spec.kraus = chain.kraus();
  return spec.to_json_text();
}

}  // namespace

TEST_CASE("clt study on the tracial product state converges and passes") {
  fs::path dir = scratch("clt_pass");
  write_file(dir / "study.ini",
             "[model]\n"
             "state = product_tracial\n"
             "[generators]\n"
             "q = 1.0 sz\n"
             "[clt]\n"
             "radii = 1 2 4\n"
             "t_min = -2\n"
             "t_max = 2\n"
             "t_step = 0.25\n");
  fs::path out = dir / "out";
  int rc = run_cli("clt --config " + (dir / "study.ini").string() + " --out " +
                   out.string());
  CHECK(rc == 0);
  json report = load_report(out);
  CHECK(report["command"] == "clt");
  CHECK(report["passed"] == true);
  CHECK(report["convergence"] == "DECREASING");
  CHECK(report["state"] == "product_tracial");
  CHECK(report["config_hash"].get<std::string>().rfind("fnv1a:", 0) == 0);
  CHECK(report.contains("phase_convention"));
  auto sup = report["sup_errors"].get<std::vector<double>>();
  REQUIRE(sup.size() == 3);
  CHECK(sup[1] < sup[0]);
  CHECK(sup[2] < sup[1]);
  // Tracial sigma_z generator: unit diagonal covariance, zero tail.
  CHECK(std::abs(report["t_matrix"][0][0]["re"].get<double>() - 1.0) < 1e-12);
  CHECK(report["covariance_tail_bound"].get<double>() < 1e-12);
  // CSV sweep data accompanies the report.
  std::string csv = read_file(out / "data.csv");
  CHECK(csv.rfind("radius,T,", 0) == 0);
}

TEST_CASE("single-radius clt sweeps skip the convergence gate") {
  fs::path dir = scratch("clt_single");
  write_file(dir / "study.ini",
             "[model]\n"
             "state = product_tracial\n"
             "[generators]\n"
             "q = 1.0 sz\n"
             "[clt]\n"
             "radii = 2\n"
             "t_step = 0.5\n");
  fs::path out = dir / "out";
  int rc = run_cli("clt --config " + (dir / "study.ini").string() + " --out " +
                   out.string());
  CHECK(rc == 0);
  json report = load_report(out);
  CHECK(report["convergence"] == "SKIPPED");
  CHECK(report["passed"] == true);
}

TEST_CASE("reports are byte-identical across reruns with the same seed") {
  fs::path dir = scratch("determinism");
  write_file(dir / "study.ini",
             "[model]\n"
             "state = product_plus_z\n"
             "[generators]\n"
             "q = 1.0 sx\n"
             "[clt]\n"
             "radii = 1 2\n"
             "t_step = 0.5\n");
  fs::path out1 = dir / "out1", out2 = dir / "out2";
  std::string base = "clt --config " + (dir / "study.ini").string() +
                     " --seed 7 --out ";
  CHECK(run_cli(base + out1.string()) == 0);
  CHECK(run_cli(base + out2.string()) == 0);
  CHECK(read_file(out1 / "report.json") == read_file(out2 / "report.json"));
  CHECK(read_file(out1 / "data.csv") == read_file(out2 / "data.csv"));
  // Timestamps live in the metadata file, not in the report itself.
  CHECK(fs::exists(out1 / "metadata.json"));
  CHECK(read_file(out1 / "report.json").find("unix") == std::string::npos);
}

TEST_CASE("config problems exit with the dedicated status code") {
  fs::path dir = scratch("config_errors");
  fs::path out = dir / "out";
  // Missing file.
  CHECK(run_cli("clt --config " + (dir / "absent.ini").string() + " --out " +
                out.string()) == 2);
  // Malformed line.
  write_file(dir / "broken.ini", "[model]\nthis line has no equals sign\n");
  CHECK(run_cli("clt --config " + (dir / "broken.ini").string() + " --out " +
                out.string()) == 2);
  // Unknown state kind.
  write_file(dir / "state.ini",
             "[model]\nstate = bogus\n[generators]\nq = 1.0 sz\n");
  CHECK(run_cli("clt --config " + (dir / "state.ini").string() + " --out " +
                out.string()) == 2);
  // Missing generators section.
  write_file(dir / "nogen.ini", "[model]\nstate = product_tracial\n");
  CHECK(run_cli("clt --config " + (dir / "nogen.ini").string() + " --out " +
                out.string()) == 2);
}

TEST_CASE("window cap violations exit with the resource status code") {
  fs::path dir = scratch("window_cap");
  write_file(dir / "study.ini",
             "[model]\n"
             "state = gibbs\n"
             "interaction = tfi\n"
             "beta = 1.0\n"
             "[generators]\n"
             "q = 1.0 sz\n"
             "[clt]\n"
             "radii = 1\n"
             "t_step = 1.0\n");
  int rc = run_cli("clt --config " + (dir / "study.ini").string() +
                   " --max-window-dim 16 --out " + (dir / "out").string());
  CHECK(rc == 3);
}

TEST_CASE("fcs study validates a classical chain description") {
  fs::path dir = scratch("fcs_study");
  write_file(dir / "chain.json", classical_chain_json(0.25));
  write_file(dir / "study.ini",
             "[model]\n"
             "state = fcs\n"
             "fcs_file = " + (dir / "chain.json").string() + "\n"
             "[fcs]\n"
             "block_len = 1\n"
             "density_window = 2\n");
  fs::path out = dir / "out";
  int rc = run_cli("fcs --config " + (dir / "study.ini").string() + " --out " +
                   out.string());
  CHECK(rc == 0);
  json report = load_report(out);
  CHECK(report["passed"] == true);
  CHECK(report["bond_dim"] == 2);
  CHECK(report["site_dim"] == 2);
  CHECK(report["unitality_residual"].get<double>() < 1e-12);
  CHECK(report["rank"].get<int>() >= 1);
  CHECK(std::abs(report["density_trace"].get<double>() - 1.0) < 1e-9);
  CHECK(report["density_min_eig"].get<double>() > -1e-9);
}

TEST_CASE("mixing study certifies the classical chain rate") {
  fs::path dir = scratch("mixing_study");
  write_file(dir / "chain.json", classical_chain_json(0.25));
  write_file(dir / "study.ini",
             "[model]\n"
             "state = fcs\n"
             "fcs_file = " + (dir / "chain.json").string() + "\n"
             "[generators]\n"
             "a = 1.0 sz\n"
             "b = 1.0 sz\n"
             "[mixing]\n"
             "samples = 10\n"
             "n_max = 12\n"
             "separations = 1 2 3 4 5\n");
  fs::path out = dir / "out";
  int rc = run_cli("mixing --config " + (dir / "study.ini").string() +
                   " --out " + out.string());
  CHECK(rc == 0);
  json report = load_report(out);
  CHECK(report["is_mixing"] == true);
  CHECK(std::abs(report["slem"].get<double>() - 0.5) < 1e-10);
  CHECK(std::abs(report["rate"].get<double>() - std::log(2.0)) < 1e-9);
  CHECK(std::abs(report["fitted_rate"].get<double>() - std::log(2.0)) < 1e-6);
  CHECK(report["worst_slack"].get<double>() >= 0.0);
}

TEST_CASE("kms study passes on a small thermal window") {
  fs::path dir = scratch("kms_study");
  write_file(dir / "study.ini",
             "[model]\n"
             "interaction = tfi\n"
             "[kms]\n"
             "window_sites = 8\n"
             "pairs = 2\n"
             "betas = 0.5 1.0\n"
             "tol = 1e-9\n");
  fs::path out = dir / "out";
  int rc = run_cli("kms --config " + (dir / "study.ini").string() + " --out " +
                   out.string());
  CHECK(rc == 0);
  json report = load_report(out);
  CHECK(report["passed"] == true);
  CHECK(report["worst_residual"].get<double>() <= 1e-9);
  std::string csv = read_file(out / "data.csv");
  CHECK(csv.rfind("beta,pair,residual", 0) == 0);
}

TEST_CASE("weyl study reports the group commutator phase") {
  fs::path dir = scratch("weyl_study");
  write_file(dir / "study.ini",
             "[model]\n"
             "state = product_plus_z\n"
             "[generators]\n"
             "a = 1.0 sx\n"
             "b = 1.0 sy\n");
  fs::path out = dir / "out";
  int rc = run_cli("weyl --config " + (dir / "study.ini").string() + " --out " +
                   out.string());
  CHECK(rc == 0);
  json report = load_report(out);
  CHECK(report["dim"] == 2);
  CHECK(report["reduced_dim"] == 2);
  CHECK(std::abs(report["group_commutator_phase"].get<double>() -
                 report["expected_phase"].get<double>()) < 1e-12);
  CHECK(report["gram_min_eig"].get<double>() > -1e-9);
}

TEST_CASE("locality study finds decaying light-cone deviations") {
  fs::path dir = scratch("locality_study");
  write_file(dir / "study.ini",
             "[model]\n"
             "interaction = tfi\n"
             "[generators]\n"
             "q = 1.0 sz\n"
             "[locality]\n"
             "time = 0.3\n"
             "buffers = 1 2 3\n"
             "tol = 1e-6\n");
  fs::path out = dir / "out";
  int rc = run_cli("locality --config " + (dir / "study.ini").string() +
                   " --out " + out.string());
  CHECK(rc == 0);
  json report = load_report(out);
  CHECK(report["decay_slope"].get<double>() < 0.0);
  CHECK(report.contains("evolution_window"));
  CHECK(report["truncation_error"].get<double>() < 1e-5);
}
