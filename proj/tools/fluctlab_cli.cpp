// Command-line laboratory for spin-chain fluctuation studies. Subcommands
// read an INI-style config, run one study, and write JSON + CSV reports
// into the output directory. Timestamps go to a separate metadata file so
// the reports themselves are byte-for-byte reproducible.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "fluctlab/dynamics.hpp"
#include "fluctlab/errors.hpp"
#include "fluctlab/fcs.hpp"
#include "fluctlab/fluctuation.hpp"
#include "fluctlab/gibbs.hpp"
#include "fluctlab/quasilocal.hpp"
#include "fluctlab/weyl.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace fluctlab;

namespace {

constexpr const char* kPhaseConvention =
    "prod_k exp(iT Q_k) -> exp(-T^2/2 t(sum,sum)) "
    "exp(-i T^2/2 sum_{k<l} sigma(Q_k,Q_l))";

// ---------------------------------------------------------------------------
// Config handling

struct Config {
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::string raw;

  bool has(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    return s != sections.end() && s->second.count(key) > 0;
  }
  std::string get(const std::string& sec, const std::string& key) const {
    if (!has(sec, key))
      throw ConfigError("missing config key [" + sec + "] " + key);
    return sections.at(sec).at(key);
  }
  std::string get(const std::string& sec, const std::string& key,
                  const std::string& fallback) const {
    return has(sec, key) ? sections.at(sec).at(key) : fallback;
  }
  double num(const std::string& sec, const std::string& key,
             double fallback) const {
    if (!has(sec, key)) return fallback;
    try {
      return std::stod(get(sec, key));
    } catch (const std::exception&) {
      throw ConfigError("bad number for [" + sec + "] " + key);
    }
  }
  std::vector<double> list(const std::string& sec, const std::string& key,
                           std::vector<double> fallback) const {
    if (!has(sec, key)) return fallback;
    std::vector<double> out;
    std::istringstream in(get(sec, key));
    double v;
    while (in >> v) out.push_back(v);
    if (out.empty()) throw ConfigError("empty list for [" + sec + "] " + key);
    return out;
  }
};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  Config cfg;
  std::ostringstream raw;
  raw << in.rdbuf();
  cfg.raw = raw.str();
  std::istringstream lines(cfg.raw);
  std::string line, section = "global";
  while (std::getline(lines, line)) {
    auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      auto close = line.find(']');
      if (close == std::string::npos)
        throw ConfigError("unterminated section header: " + line);
      section = trim(line.substr(1, close - 1));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value, got: " + line);
    cfg.sections[section][trim(line.substr(0, eq))] =
        trim(line.substr(eq + 1));
  }
  return cfg;
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Generator syntax: comma-separated terms, each "<coeff> <site> <site> ...",
// e.g. "1.0 sz sz, -0.5 sx". All terms anchored at site 0.
LocalOperator parse_generator(const std::string& text) {
  std::vector<LocalOperator> terms;
  std::istringstream by_term(text);
  std::string term;
  while (std::getline(by_term, term, ',')) {
    std::istringstream in(trim(term));
    double coeff;
    if (!(in >> coeff))
      throw ConfigError("generator term needs a leading coefficient: " + term);
    std::vector<std::string> names;
    std::string name;
    while (in >> name) names.push_back(name);
    if (names.empty())
      throw ConfigError("generator term has no site factors: " + term);
    terms.push_back(cplx(coeff) * pauli::word(names, 0));
  }
  if (terms.empty()) throw ConfigError("empty generator spec");
  LocalOperator out = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) out = out + terms[i];
  return out;
}

std::vector<std::pair<std::string, LocalOperator>> parse_generators(
    const Config& cfg) {
  std::vector<std::pair<std::string, LocalOperator>> out;
  auto it = cfg.sections.find("generators");
  if (it == cfg.sections.end())
    throw ConfigError("config needs a [generators] section");
  for (const auto& [name, spec] : it->second)
    out.emplace_back(name, parse_generator(spec));
  return out;
}

Interaction parse_interaction(const Config& cfg) {
  const std::string preset = cfg.get("model", "interaction", "tfi");
  return Interaction::by_name(preset, cfg.num("model", "coupling", 1.0),
                              cfg.num("model", "field", 1.0));
}

// Dense window cap shared by every subcommand, set once from the command line.
std::int64_t g_window_cap = kDefaultWindowCap;

struct StateBundle {
  std::unique_ptr<StateFunctional> state;
  std::string kind;
};

StateBundle build_state(const Config& cfg) {
  const std::int64_t max_window_dim = g_window_cap;
  StateBundle bundle;
  bundle.kind = cfg.get("model", "state", "product_tracial");
  if (bundle.kind == "product_tracial") {
    bundle.state = std::make_unique<ProductState>(ProductState::tracial());
  } else if (bundle.kind == "product_plus_z") {
    bundle.state = std::make_unique<ProductState>(ProductState::plus_z());
  } else if (bundle.kind == "gibbs") {
    WindowPolicy policy;
    policy.margin = static_cast<int>(cfg.num("model", "margin", 2));
    policy.max_window_dim = max_window_dim;
    bundle.state = std::make_unique<GibbsState>(
        parse_interaction(cfg), cfg.num("model", "beta", 1.0), policy);
  } else if (bundle.kind == "fcs") {
    const std::string path = cfg.get("model", "fcs_file");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open FCS file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    bundle.state = std::make_unique<FCSState>(
        FCSState::from_spec(FCSSpec::from_json_text(text.str())));
  } else {
    throw ConfigError("unknown state kind: " + bundle.kind);
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// Reports

struct Reporter {
  fs::path dir;
  ordered_json report;
  std::vector<std::string> csv_lines;

  Reporter(const std::string& out_dir, const std::string& command,
           const Config& cfg, std::uint64_t seed) {
    dir = out_dir;
    fs::create_directories(dir);
    report["command"] = command;
    report["config_hash"] =
        "fnv1a:" + std::to_string(fnv1a(cfg.raw));
    report["phase_convention"] = kPhaseConvention;
    report["seed"] = seed;
  }

  void csv_header(const std::string& header) { csv_lines.push_back(header); }
  template <typename... Args>
  void csv_row(Args&&... args) {
    std::ostringstream row;
    row.precision(17);
    ((row << args << ','), ...);
    std::string line = row.str();
    line.pop_back();
    csv_lines.push_back(line);
  }

  void write(bool passed) {
    report["passed"] = passed;
    std::ofstream js(dir / "report.json");
    js << report.dump(2) << "\n";
    if (!csv_lines.empty()) {
      std::ofstream cs(dir / "data.csv");
      for (const auto& line : csv_lines) cs << line << "\n";
    }
    ordered_json meta;
    const auto now = std::chrono::system_clock::now();
    meta["written_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            now.time_since_epoch())
            .count();
    std::ofstream ms(dir / "metadata.json");
    ms << meta.dump(2) << "\n";
  }
};

// Runs fn(i) for i in [0, count) on `workers` threads.
void parallel_for(int workers, std::size_t count,
                  const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

ordered_json complex_json(cplx v) {
  return ordered_json{{"re", v.real()}, {"im", v.imag()}};
}

// ---------------------------------------------------------------------------
// Subcommands

int run_clt(const Config& cfg, Reporter& rep, int workers) {
  auto bundle = build_state(cfg);
  std::vector<LocalOperator> generators;
  ordered_json names = ordered_json::array();
  for (auto& [name, op] : parse_generators(cfg)) {
    names.push_back(name);
    generators.push_back(op);
  }
  std::vector<int> radii;
  for (double v : cfg.list("clt", "radii", {1, 2, 3, 4, 5}))
    radii.push_back(static_cast<int>(v));
  const double t_min = cfg.num("clt", "t_min", -3.0);
  const double t_max = cfg.num("clt", "t_max", 3.0);
  const double t_step = cfg.num("clt", "t_step", 0.05);
  std::vector<double> grid;
  for (double t = t_min; t <= t_max + 1e-12; t += t_step) grid.push_back(t);

  CovarianceOptions opts;
  opts.tail_tol = cfg.num("clt", "tail_tol", 1e-10);
  CovarianceData cov = covariance_data(*bundle.state, generators, opts);
  std::vector<double> sup_errors(radii.size(), 0.0);
  rep.csv_header("radius,T,value_re,value_im,prediction_re,prediction_im");
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    CharacteristicEvaluator eval(*bundle.state, generators, radii[ri]);
    std::vector<cplx> values(grid.size());
    parallel_for(workers, grid.size(),
                 [&](std::size_t gi) { values[gi] = eval.value(grid[gi]); });
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      const cplx pred = gaussian_prediction(cov, grid[gi]);
      sup_errors[ri] = std::max(sup_errors[ri], std::abs(values[gi] - pred));
      rep.csv_row(radii[ri], grid[gi], values[gi].real(), values[gi].imag(),
                  pred.real(), pred.imag());
    }
  }
  rep.report["generators"] = names;
  rep.report["state"] = bundle.kind;
  rep.report["block_radii"] = radii;
  rep.report["sup_errors"] = sup_errors;
  rep.report["covariance_tail_bound"] = cov.tail_bound;
  ordered_json tmat = ordered_json::array();
  for (Eigen::Index i = 0; i < cov.t.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < cov.t.cols(); ++j)
      row.push_back(complex_json(cov.t(i, j)));
    tmat.push_back(row);
  }
  rep.report["t_matrix"] = tmat;

  bool passed = true;
  const double slack = cfg.num("clt", "decrease_slack", 0.0);
  if (radii.size() < 2) {
    rep.report["convergence"] = "SKIPPED";
  } else {
    for (std::size_t i = 1; i < sup_errors.size(); ++i)
      passed = passed && sup_errors[i] < sup_errors[i - 1] + slack;
    rep.report["convergence"] = passed ? "DECREASING" : "NOT_DECREASING";
  }
  const double final_tol = cfg.num("clt", "final_error_tol", 0.0);
  if (final_tol > 0.0) passed = passed && sup_errors.back() <= final_tol;
  return passed ? 0 : 1;
}

int run_mixing(const Config& cfg, Reporter& rep, std::uint64_t seed) {
  auto bundle = build_state(cfg);
  const auto* fcs = dynamic_cast<const FCSState*>(bundle.state.get());
  if (!fcs) throw ConfigError("mixing study needs an fcs state");
  MixingCertificate cert = mixing_analysis(*fcs);
  rep.report["is_mixing"] = cert.is_mixing;
  rep.report["slem"] = cert.slem;
  rep.report["rate"] = cert.rate;
  rep.report["prefactor"] = cert.prefactor;
  bool passed = true;
  if (cert.is_mixing && std::isfinite(cert.rate)) {
    // Empirical check of the certified bound on random bond observables.
    const int samples = static_cast<int>(cfg.num("mixing", "samples", 50));
    const int n_max = static_cast<int>(cfg.num("mixing", "n_max", 30));
    const int k = fcs->bond_dim();
    std::mt19937_64 rng(seed);
    double worst_slack = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
      MatrixXcd a = random_hermitian(k, rng());
      const double norm_a = operator_norm(a);
      const cplx psi_a = (fcs->fixed_point() * a).trace();
      MatrixXcd cur = a;
      for (int n = 0; n <= n_max; ++n) {
        const double dev = operator_norm(
            cur - psi_a * MatrixXcd::Identity(k, k));
        const double bound =
            cert.prefactor * std::exp(-cert.rate * n) * norm_a;
        worst_slack = std::min(worst_slack, bound - dev);
        if (bound - dev < -1e-12) passed = false;
        cur = fcs->transfer_apply(cur);
      }
    }
    rep.report["worst_slack"] = worst_slack;
  }
  // Pair-correlation decay against the spectral rate.
  auto gens = parse_generators(cfg);
  if (gens.size() >= 2 && cert.is_mixing && std::isfinite(cert.rate)) {
    std::vector<int> seps;
    for (double v : cfg.list("mixing", "separations", {5, 6, 7, 8, 9, 10}))
      seps.push_back(static_cast<int>(v));
    TwoPointTable table =
        two_point_decay(*bundle.state, gens[0].second, gens[1].second, seps);
    rep.csv_header("separation,correlation");
    for (std::size_t i = 0; i < table.separations.size(); ++i)
      rep.csv_row(table.separations[i], table.values[i]);
    rep.report["fitted_rate"] = table.fitted_rate();
    rep.report["fit_r2"] = table.fit.r2;
    const double rel_tol = cfg.num("mixing", "rate_rel_tol", 0.1);
    if (table.fit.points >= 3 &&
        std::abs(table.fitted_rate() - cert.rate) > rel_tol * cert.rate)
      passed = false;
  }
  return passed ? 0 : 1;
}

int run_fcs(const Config& cfg, Reporter& rep) {
  auto bundle = build_state(cfg);
  const auto* fcs = dynamic_cast<const FCSState*>(bundle.state.get());
  if (!fcs) throw ConfigError("fcs study needs an fcs state");
  const int k = fcs->bond_dim();
  MatrixXcd gram = MatrixXcd::Zero(k, k);
  for (const auto& v : fcs->kraus()) gram += v.adjoint() * v;
  rep.report["bond_dim"] = k;
  rep.report["site_dim"] = fcs->site_dim();
  rep.report["unitality_residual"] =
      (gram - MatrixXcd::Identity(k, k)).cwiseAbs().maxCoeff();
  const int block_len = static_cast<int>(cfg.num("fcs", "block_len", 1));
  rep.report["rank"] = fcs_rank_probe(*fcs, block_len, block_len);
  const int window = static_cast<int>(cfg.num("fcs", "density_window", 3));
  MatrixXcd rho = fcs->window_density(Interval(0, window - 1));
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho);
  rep.report["density_trace"] = rho.trace().real();
  rep.report["density_min_eig"] = es.eigenvalues().minCoeff();
  const bool passed = std::abs(rho.trace().real() - 1.0) < 1e-9 &&
                      es.eigenvalues().minCoeff() > -1e-9;
  return passed ? 0 : 1;
}

int run_kms(const Config& cfg, Reporter& rep, std::uint64_t seed) {
  Interaction psi = parse_interaction(cfg);
  const int window_sites = static_cast<int>(cfg.num("kms", "window_sites", 10));
  const int pairs = static_cast<int>(cfg.num("kms", "pairs", 5));
  const double tol = cfg.num("kms", "tol", 1e-9);
  const Interval window(0, window_sites - 1);
  std::vector<double> betas = cfg.list("kms", "betas", {0.5, 1.0, 2.0});
  std::mt19937_64 rng(seed);
  rep.csv_header("beta,pair,residual");
  double worst = 0.0;
  for (double beta : betas) {
    WindowPolicy policy;
    policy.max_window_dim = g_window_cap;
    GibbsState state(psi, beta, policy);
    for (int p = 0; p < pairs; ++p) {
      LocalOperator q1(Interval(2, 3), random_hermitian(4, rng()));
      LocalOperator q2(Interval(5, 6), random_hermitian(4, rng()));
      const double res = state.kms_residual(q1, q2, window);
      worst = std::max(worst, res);
      rep.csv_row(beta, p, res);
    }
  }
  rep.report["worst_residual"] = worst;
  rep.report["tol"] = tol;
  return worst <= tol ? 0 : 1;
}

int run_weyl(const Config& cfg, Reporter& rep) {
  auto bundle = build_state(cfg);
  std::vector<LocalOperator> generators;
  for (auto& [name, op] : parse_generators(cfg)) generators.push_back(op);
  CovarianceOptions opts;
  opts.tail_tol = cfg.num("weyl", "tail_tol", 1e-10);
  CovarianceData cov = covariance_data(*bundle.state, generators, opts);
  SymplecticSpace space = SymplecticSpace::from_covariance(cov);
  QuotientResult quotient = quotient_reduce(space);
  rep.report["dim"] = space.dim();
  rep.report["reduced_dim"] = quotient.space.dim();
  // Group commutator of the first two directions: pure phase e^{-i sigma}.
  bool passed = true;
  if (quotient.space.dim() >= 2) {
    VectorXd f = VectorXd::Unit(quotient.space.dim(), 0);
    VectorXd g = VectorXd::Unit(quotient.space.dim(), 1);
    ReducedWeyl red = weyl_reduce(quotient.space, WeylWord{{f, g, -f, -g}});
    const double expected = -quotient.space.sigma_at(f, g);
    rep.report["group_commutator_phase"] = red.phase;
    rep.report["expected_phase"] = expected;
    passed = passed && std::abs(red.phase - expected) < 1e-12 &&
             red.total.cwiseAbs().maxCoeff() < 1e-12;
  }
  std::vector<VectorXd> dirs;
  for (int i = 0; i < quotient.space.dim(); ++i)
    dirs.push_back(VectorXd::Unit(quotient.space.dim(), i));
  MatrixXcd gram = quasifree_gram(quotient.space, dirs);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram);
  rep.report["gram_min_eig"] = es.eigenvalues().minCoeff();
  passed = passed && es.eigenvalues().minCoeff() > -1e-9;
  return passed ? 0 : 1;
}

int run_locality(const Config& cfg, Reporter& rep) {
  Interaction psi = parse_interaction(cfg);
  auto gens = parse_generators(cfg);
  if (gens.empty()) throw ConfigError("locality study needs a generator");
  const LocalOperator& q = gens[0].second;
  const double time = cfg.num("locality", "time", 0.5);
  std::vector<int> buffers;
  for (double v : cfg.list("locality", "buffers", {1, 2, 3, 4, 5}))
    buffers.push_back(static_cast<int>(v));
  LiebRobinsonTable table = lieb_robinson_probe(q, time, psi, buffers);
  rep.csv_header("buffer,deviation");
  for (const auto& row : table.rows) rep.csv_row(row.buffer, row.deviation);
  rep.report["decay_slope"] = table.decay_fit.slope;
  rep.report["decay_r2"] = table.decay_fit.r2;
  EvolutionResult res = evolve_infinite_approx(
      q, time, psi, cfg.num("locality", "tol", 1e-8));
  QuasiLocalObservable ladder = QuasiLocalObservable::from_local(res.op);
  rep.report["evolution_window"] = res.window.str();
  rep.report["truncation_error"] = res.truncation_error;
  rep.report["theta_norm"] = theta_norm(ladder, 0.9);
  const bool passed = table.decay_fit.slope < 0.0;
  return passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spin-chain fluctuation laboratory"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  int workers = 1;
  std::uint64_t seed = 1;
  std::int64_t max_window_dim = kDefaultWindowCap;
  app.add_option("--config", config_path, "INI-style config file")
      ->required();
  app.add_option("--out", out_dir, "report output directory");
  app.add_option("--workers", workers, "thread count for grid sweeps");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--max-window-dim", max_window_dim,
                 "dense window dimension cap");
  for (const char* name :
       {"clt", "mixing", "fcs", "kms", "weyl", "locality"})
    app.add_subcommand(name)->fallthrough();
  CLI11_PARSE(app, argc, argv);
  g_window_cap = max_window_dim;
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    Config cfg = load_config(config_path);
    Reporter rep(out_dir, command, cfg, seed);
    int rc = 1;
    if (command == "clt") rc = run_clt(cfg, rep, workers);
    else if (command == "mixing") rc = run_mixing(cfg, rep, seed);
    else if (command == "fcs") rc = run_fcs(cfg, rep);
    else if (command == "kms") rc = run_kms(cfg, rep, seed);
    else if (command == "weyl") rc = run_weyl(cfg, rep);
    else if (command == "locality") rc = run_locality(cfg, rep);
    rep.write(rc == 0);
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const WindowCapError& e) {
    std::cerr << "resource cap: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
