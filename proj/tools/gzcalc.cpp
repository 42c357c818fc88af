#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gz/curvature.hpp"
#include "gz/fpe.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDomain = 2;
constexpr int kExitLambda = 3;
constexpr int kExitCheck = 4;

/// Cells allowed in one simulation grid.
constexpr std::size_t kMaxCells = std::size_t{1} << 22;

struct Common {
  std::string builtin;
  std::string config;
  std::vector<std::string> params;
  std::string mode;
  bool drift = false;
  bool no_drift = false;
  std::string weight = "vol";
  std::string box;
  std::string res;
  std::string out;
  std::string format;  // per-command default
  unsigned seed = 1;
  double tol_lambda = 1e-8;
  double tol_decomp = 1e-8;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--builtin", c.builtin, "builtin structure name (see 'examples')");
  app->add_option("--config", c.config, "JSON structure file");
  app->add_option("--param", c.params, "builtin parameter k=v (repeatable)");
  app->add_option("--mode", c.mode, "horizontal | z_plain | generalized");
  app->add_flag("--drift", c.drift, "include drift terms (default when the structure has one)");
  app->add_flag("--no-drift", c.no_drift, "ignore the drift");
  app->add_option("--weight", c.weight, "vol | custom:EXPR (log of the weight)");
  app->add_option("--box", c.box, "lo:hi[,lo:hi...]; a single pair applies to every axis");
  app->add_option("--res", c.res, "N[,N...]; a single value applies to every axis");
  app->add_option("--out", c.out, "output path (default stdout)");
  app->add_option("--format", c.format, "json | csv");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--tol-lambda", c.tol_lambda, "tolerance on the Lambda residual");
  app->add_option("--tol-decomp", c.tol_decomp, "tolerance on decomposition residuals");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError("invalid number '" + s + "' in " + what);
  return v;
}

gz::Structure load(const Common& c) {
  if (c.builtin.empty() == c.config.empty())
    throw ConfigError("give exactly one of --builtin or --config");
  std::map<std::string, double> params;
  for (const auto& p : c.params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects k=v, got '" + p + "'");
    params[p.substr(0, eq)] = to_double(p.substr(eq + 1), "--param");
  }
  if (!c.builtin.empty()) return gz::builtin(c.builtin, params);
  std::ifstream in(c.config);
  if (!in) throw ConfigError("cannot open config file '" + c.config + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!params.empty()) {
    for (const auto& [k, v] : params) cfg["params"][k] = v;
  }
  return gz::load_structure(cfg);
}

gz::Mode mode_of(const Common& c, const gz::Structure& s) {
  if (!c.mode.empty()) return gz::parse_mode(c.mode);
  return s.m > 0 ? gz::Mode::generalized : gz::Mode::horizontal;
}

bool drift_of(const Common& c, const gz::Structure& s) {
  if (c.drift && c.no_drift) throw ConfigError("--drift and --no-drift are exclusive");
  if (c.no_drift) return false;
  return c.drift || s.has_drift();
}

gz::Weight weight_of(const Common& c, const gz::Structure& s) {
  gz::Weight w;
  if (c.weight == "vol") return w;
  if (c.weight.rfind("custom:", 0) == 0) {
    w.custom_log = gz::parse(c.weight.substr(7), s.variables, s.params);
    return w;
  }
  throw ConfigError("--weight expects vol or custom:EXPR");
}

std::vector<std::pair<double, double>> box_of(const Common& c, const gz::Structure& s) {
  const int D = s.dim();
  std::vector<std::pair<double, double>> box;
  if (c.box.empty()) {
    if (!s.domain.empty()) return s.domain;
    return std::vector<std::pair<double, double>>(D, {-1.0, 1.0});
  }
  for (const auto& part : split(c.box, ',')) {
    const auto lh = split(part, ':');
    if (lh.size() != 2) throw ConfigError("--box expects lo:hi pairs, got '" + part + "'");
    const double lo = to_double(lh[0], "--box"), hi = to_double(lh[1], "--box");
    if (!(hi > lo)) throw ConfigError("--box needs lo < hi in '" + part + "'");
    box.emplace_back(lo, hi);
  }
  if (box.size() == 1) box.assign(D, box.front());
  if (static_cast<int>(box.size()) != D)
    throw ConfigError("--box has " + std::to_string(box.size()) + " pairs for " +
                      std::to_string(D) + " coordinates");
  return box;
}

std::vector<int> res_of(const Common& c, int D, int fallback) {
  if (c.res.empty()) return std::vector<int>(D, fallback);
  std::vector<int> res;
  for (const auto& part : split(c.res, ',')) {
    const double v = to_double(part, "--res");
    if (v < 1 || v != std::floor(v) || v > 1e6)
      throw ConfigError("--res entries must be positive integers, got '" + part + "'");
    res.push_back(static_cast<int>(v));
  }
  if (res.size() == 1) res.assign(D, res.front());
  if (static_cast<int>(res.size()) != D)
    throw ConfigError("--res has " + std::to_string(res.size()) + " entries for " +
                      std::to_string(D) + " coordinates");
  return res;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out);
  if (!f) throw ConfigError("cannot write '" + c.out + "'");
  f << text;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------------------------------------

int cmd_examples(bool as_json) {
  json list = json::array();
  for (const auto& b : gz::builtin_catalog()) {
    json params = json::array();
    for (const auto& p : b.params)
      params.push_back({{"name", p.name},
                        {"default", std::isnan(p.default_value) ? json(nullptr)
                                                                 : json(p.default_value)},
                        {"meaning", p.meaning}});
    list.push_back(
        {{"name", b.name}, {"topic", b.topic}, {"summary", b.summary}, {"params", params}});
  }
  if (as_json) {
    json j{{"schema_version", 1}, {"builtins", list}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }
  for (const auto& b : gz::builtin_catalog()) {
    std::cout << b.name << "  (" << b.topic << ")\n    " << b.summary << "\n";
    for (const auto& p : b.params) {
      std::cout << "    --param " << p.name << "=";
      if (std::isnan(p.default_value))
        std::cout << "<required>";
      else
        std::cout << p.default_value;
      std::cout << "  " << p.meaning << "\n";
    }
  }
  return kExitOk;
}

int cmd_analyze(const Common& c) {
  const gz::Structure s = load(c);
  gz::CurvatureOptions opt;
  opt.mode = mode_of(c, s);
  opt.drift = drift_of(c, s);
  opt.weight = weight_of(c, s);
  opt.tol_lambda = c.tol_lambda;
  const auto box = box_of(c, s);
  gz::GridSpec grid;
  for (const auto& [lo, hi] : box) {
    grid.lo.push_back(lo);
    grid.hi.push_back(hi);
  }
  grid.res = res_of(c, s.dim(), 5);
  std::size_t nodes = 1;
  for (int r : grid.res) nodes *= r;
  if (nodes > 1000000) throw ConfigError("analysis grid has more than 10^6 nodes");

  const gz::CurvatureReport rep = gz::scan(s, grid, opt, 3, c.seed);
  if (rep.skipped == static_cast<int>(rep.points.size())) {
    std::cerr << "gzcalc: every grid point is outside the domain of the structure";
    if (!rep.points.empty()) std::cerr << ": " << rep.points.front().skip_reason;
    std::cerr << "\n";
    return kExitDomain;
  }
  double worst_decomp = 0.0;
  for (const auto& p : rep.points)
    if (!p.skipped) worst_decomp = std::max(worst_decomp, p.decomposition_residual);

  const std::string format = c.format.empty() ? "json" : c.format;
  if (format == "csv") {
    std::ostringstream os;
    for (const auto& v : s.variables) os << v << ",";
    os << "kappa,lambda_residual,factorization_residual,decomposition_residual\n";
    char buf[64];
    auto num = [&](double v) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return std::string(buf);
    };
    for (const auto& p : rep.points) {
      if (p.skipped) continue;
      for (double x : p.x) os << num(x) << ",";
      os << num(p.kappa) << "," << num(p.lambda_residual) << ","
         << num(p.factorization_residual) << "," << num(p.decomposition_residual) << "\n";
    }
    emit(c, os.str());
  } else if (format == "json") {
    json pts = json::array();
    for (const auto& p : rep.points) {
      json e{{"x", p.x}, {"skipped", p.skipped}};
      if (p.skipped) {
        e["reason"] = p.skip_reason;
      } else {
        e["kappa"] = finite_or_null(p.kappa);
        e["lambda_residual"] = p.lambda_residual;
        e["factorization_residual"] = finite_or_null(p.factorization_residual);
        e["decomposition_residual"] = p.decomposition_residual;
        e["used_pencil"] = p.used_pencil;
        e["d_diag"] = p.dims.d_diag;
        e["d_all"] = p.dims.d_all;
      }
      pts.push_back(e);
    }
    json j{{"schema_version", 1},
           {"command", "analyze"},
           {"structure", s.name},
           {"variables", s.variables},
           {"mode", gz::mode_name(opt.mode)},
           {"drift", opt.drift},
           {"grid", {{"lo", grid.lo}, {"hi", grid.hi}, {"res", grid.res}}},
           {"tol_lambda", opt.tol_lambda},
           {"summary",
            {{"min_kappa", finite_or_null(rep.min_kappa)},
             {"argmin", rep.argmin},
             {"fraction_lambda_ok", rep.fraction_lambda_ok},
             {"max_decomposition_residual", worst_decomp},
             {"skipped", rep.skipped},
             {"points", rep.points.size()}}},
           {"points", pts}};
    emit(c, j.dump(2) + "\n");
  } else {
    throw ConfigError("--format expects json or csv");
  }
  if (rep.fraction_lambda_ok < 1.0) {
    std::cerr << "gzcalc: Lambda residual above " << opt.tol_lambda << " at "
              << (1.0 - rep.fraction_lambda_ok) * 100.0 << "% of the evaluated points\n";
    return kExitLambda;
  }
  return kExitOk;
}

int cmd_verify(const Common& c) {
  const gz::Structure s = load(c);
  const gz::Mode mode = mode_of(c, s);
  const bool drift = drift_of(c, s);
  const gz::Weight w = weight_of(c, s);
  gz::Structure sampled = s;
  sampled.domain = box_of(c, s);
  const auto pts = gz::sample_points(sampled, 10, c.seed);

  json checks = json::array();
  bool all_ok = true, lambda_ok = true;
  auto record = [&](const std::string& name, double value, double tol) {
    const bool ok = value <= tol;
    all_ok = all_ok && ok;
    checks.push_back({{"name", name}, {"value", value}, {"tolerance", tol}, {"pass", ok}});
    return ok;
  };

  const double sym = gz::invariant_measure_residual(s, pts);
  const double stat = gz::stationary_residual(s, pts);
  if (s.has_drift() && sym > 1e-10) {
    // Non-reversible drift: the weight is only required to be stationary.
    checks.push_back({{"name", "symmetric_defect"}, {"value", sym}, {"informational", true}});
    record("stationary_residual", stat, 1e-10);
  } else {
    record("invariant_measure_residual", sym, 1e-10);
    record("stationary_residual", stat, 1e-10);
  }

  std::mt19937_64 rng(c.seed);
  double worst_lambda = 0.0, worst_decomp = 0.0;
  for (const auto& x : pts) {
    const gz::GammaContext ctx(s, x, w);
    const gz::AssembledPoint ap = gz::assemble(s, x);
    const gz::LambdaSolution lam = gz::solve_lambda(ap, mode);
    worst_lambda = std::max(worst_lambda, lam.residual);
    for (int k = 0; k < 10; ++k) {
      const gz::Expression f = gz::random_polynomial(s.variables, 4, rng);
      const auto r = gz::decomposition_residual(ctx, ap, lam, ctx.jet(f), {mode, drift, w});
      worst_decomp = std::max(worst_decomp, r.residual);
    }
  }
  lambda_ok = record("lambda_residual", worst_lambda, c.tol_lambda);
  record("decomposition_residual", worst_decomp, c.tol_decomp);

  const auto hr = gz::hormander_rank(s, pts.front(), 4);
  json j{{"schema_version", 1},
         {"command", "verify"},
         {"structure", s.name},
         {"mode", gz::mode_name(mode)},
         {"drift", drift},
         {"points", pts.size()},
         {"hormander", {{"rank", hr.rank}, {"depth", hr.depth}, {"dimension", s.dim()}}},
         {"checks", checks},
         {"pass", all_ok}};
  emit(c, j.dump(2) + "\n");
  for (const auto& ch : checks)
    if (ch.contains("pass"))
      std::cerr << (ch["pass"].get<bool>() ? "PASS " : "FAIL ") << ch["name"].get<std::string>()
                << " = " << ch["value"].get<double>() << "\n";
  if (all_ok) return kExitOk;
  return lambda_ok ? kExitCheck : kExitLambda;
}

struct SimulateArgs {
  double T = 0.0;
  std::string dt = "auto";
  int sample_every = 0;
  std::string init;
  double kappa = std::numeric_limits<double>::quiet_NaN();
};

int cmd_simulate(const Common& c, const SimulateArgs& a) {
  const gz::Structure s = load(c);
  if (s.dim() > 3) throw ConfigError("simulation supports at most 3 coordinates");
  const auto box = box_of(c, s);
  const std::vector<int> res = res_of(c, s.dim(), 32);
  std::size_t cells = 1;
  for (int r : res) cells *= static_cast<std::size_t>(r);
  if (cells > kMaxCells)
    throw ConfigError("grid of " + std::to_string(cells) + " cells exceeds the memory guard of " +
                      std::to_string(kMaxCells) + " cells");
  std::vector<double> lo, hi;
  for (const auto& [l, h] : box) {
    lo.push_back(l);
    hi.push_back(h);
  }
  const gz::Grid grid = gz::Grid::make(lo, hi, res);
  const gz::FokkerPlanck op(s, grid);

  // Reference curvature: minimum over a coarse node grid of the time-reversed structure.
  double kappa = a.kappa;
  if (std::isnan(kappa)) {
    gz::Structure dual = s;
    if (!op.reversible()) dual.dual_drift = true;
    gz::CurvatureOptions opt;
    opt.mode = mode_of(c, s);
    opt.drift = drift_of(c, s);
    opt.weight = weight_of(c, s);
    gz::GridSpec gs{lo, hi, std::vector<int>(s.dim(), 5)};
    const auto rep = gz::scan(dual, gs, opt, 0, c.seed);
    kappa = rep.min_kappa;
  }

  gz::DensityField rho0 = op.steady_state();
  if (a.init != "steady") {
    std::string text = a.init;
    if (text.empty()) {
      // Default start: the steady state times a smooth periodic bump.
      for (int d = 0; d < s.dim(); ++d) {
        std::ostringstream t;
        t.precision(17);
        t << "0.5*cos(2*pi*(" << s.variables[d] << " - (" << lo[d] << "))/" << (hi[d] - lo[d])
          << ")";
        text += (d ? " + " : "") + t.str();
      }
    }
    const gz::Expression pert = gz::parse(text, s.variables, s.params);
    std::vector<double> lv(grid.size());
    for (std::size_t i = 0; i < lv.size(); ++i)
      lv[i] = std::log(op.steady_state().rho[i]) + gz::eval_value(pert, grid.center(i));
    const double mx = *std::max_element(lv.begin(), lv.end());
    double total = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i) {
      rho0.rho[i] = std::exp(lv[i] - mx);
      total += rho0.rho[i];
    }
    for (double& r : rho0.rho) r /= total * grid.cell_volume();
  }

  double T = a.T;
  if (!(T > 0.0)) T = (kappa > 0.0 && std::isfinite(kappa)) ? 3.0 / kappa : 1.0;
  const double dt = a.dt == "auto" ? 0.5 * op.cfl_limit() : to_double(a.dt, "--dt");
  const long steps = static_cast<long>(std::ceil(T / dt));
  const int every = a.sample_every > 0 ? a.sample_every
                                       : static_cast<int>(std::max(1L, steps / 200));
  const gz::TimeSeries ts = gz::simulate(op, rho0, T, dt, every);

  const double rate = gz::fit_decay(ts, gz::SeriesField::fisher_az);
  json summary{{"schema_version", 1},
               {"command", "simulate"},
               {"structure", s.name},
               {"grid", {{"lo", lo}, {"hi", hi}, {"cells", res}}},
               {"T", T},
               {"dt", T / std::max(1L, steps)},
               {"cfl_limit", op.cfl_limit()},
               {"reversible", op.reversible()},
               {"samples", ts.t.size()},
               {"kappa", finite_or_null(kappa)},
               {"two_kappa", finite_or_null(2.0 * kappa)},
               {"fitted_rate_fisher_az", rate},
               {"fitted_rate_entropy", gz::fit_decay(ts, gz::SeriesField::entropy)},
               {"aborted", ts.aborted}};
  if (ts.aborted) summary["error"] = ts.error;

  const std::string format = c.format.empty() ? "csv" : c.format;
  if (format == "json") {
    json series = json::array();
    for (std::size_t i = 0; i < ts.t.size(); ++i) {
      const auto& f = ts.samples[i];
      series.push_back({{"t", ts.t[i]},
                        {"mass", f.mass},
                        {"entropy", f.entropy},
                        {"fisher_a", f.fisher_a},
                        {"fisher_z", f.fisher_z},
                        {"fisher_az", f.fisher_az}});
    }
    summary["series"] = series;
    emit(c, summary.dump(2) + "\n");
  } else if (format == "csv") {
    emit(c, ts.to_csv());
    (c.out.empty() ? std::cerr : std::cout) << summary.dump(2) << "\n";
  } else {
    throw ConfigError("--format expects json or csv");
  }
  return ts.aborted ? kExitDomain : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gamma-z calculus and curvature-dimension bounds for degenerate diffusions"};
  app.require_subcommand(1);

  Common common;
  auto* analyze = app.add_subcommand("analyze", "scan the curvature lower bound over a grid");
  add_common(analyze, common);
  auto* verify = app.add_subcommand("verify", "check the pointwise identities of a structure");
  add_common(verify, common);
  auto* simulate = app.add_subcommand("simulate", "run the Fokker-Planck simulator");
  add_common(simulate, common);
  SimulateArgs sim;
  simulate->add_option("--T", sim.T, "final time (default 3/kappa)");
  simulate->add_option("--dt", sim.dt, "time step or 'auto'");
  simulate->add_option("--sample-every", sim.sample_every, "steps between samples");
  simulate->add_option("--init", sim.init,
                       "log-density perturbation EXPR added to log rho*, or 'steady'");
  simulate->add_option("--kappa", sim.kappa, "reference curvature (default: coarse scan)");
  auto* examples = app.add_subcommand("examples", "list builtin structures");
  bool examples_json = false;
  examples->add_flag("--json", examples_json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*examples) return cmd_examples(examples_json);
    if (*analyze) return cmd_analyze(common);
    if (*verify) return cmd_verify(common);
    if (*simulate) return cmd_simulate(common, sim);
  } catch (const ConfigError& e) {
    std::cerr << "gzcalc: " << e.what() << "\n";
    return kExitConfig;
  } catch (const gz::DomainError& e) {
    std::cerr << "gzcalc: " << e.what() << "\n";
    return kExitDomain;
  } catch (const gz::NonFinite& e) {
    std::cerr << "gzcalc: " << e.what() << "\n";
    return kExitDomain;
  } catch (const gz::RankError& e) {
    std::cerr << "gzcalc: " << e.what() << "\n";
    return kExitDomain;
  } catch (const gz::Error& e) {
    std::cerr << "gzcalc: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "gzcalc: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
