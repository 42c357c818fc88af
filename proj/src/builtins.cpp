#include <cmath>
#include <numbers>

#include "gz/fields.hpp"

namespace gz {

using nlohmann::json;

const std::vector<BuiltinInfo>& builtin_catalog() {
  static const std::vector<BuiltinInfo> catalog = {
      {"heisenberg", "Heisenberg group",
       "horizontal Brownian motion on the Heisenberg group, z = vertical direction",
       {}},
      {"su2", "SU(2) in Euler angles",
       "left-invariant sub-Laplacian on SU(2), Vol = sin(theta), z = d/dpsi",
       {}},
      {"grushin", "Grushin plane",
       "a = diag(1, x^k) on the half plane x > 0",
       {{"k", NAN, "step parameter (required, positive integer)"}}},
      {"langevin_const", "kinetic Langevin, constant coefficients",
       "dx = v dt, dv = -(gamma u v + U'(x)) dt + sqrt(2 gamma u) dB with constant z",
       {{"gamma", 1.0, "friction"},
        {"u", 1.0, "diffusion scale"},
        {"z1", 0.0, "z component along x"},
        {"z2", 1.0, "z component along v"},
        {"c", 1.0, "potential strength"},
        {"harmonic", 0.0, "0: U = c(1 - cos x), 1: U = c x^2/2"}}},
      {"langevin_var", "kinetic Langevin, variable coefficients",
       "u(x) = 1 + eps cos x and z(x) = (z1 + zeta sin x, z2 + zeta cos x)",
       {{"gamma", 1.0, "friction"},
        {"eps", 0.5, "amplitude of u(x) - 1"},
        {"z1", 0.0, "mean z component along x"},
        {"z2", 1.0, "mean z component along v"},
        {"zeta", 0.3, "amplitude of the z variation"},
        {"c", 1.0, "potential strength, U = c(1 - cos x)"}}},
      {"se2", "displacement group SE(2)",
       "a = [[1,0],[0,exp(beta theta)],[0,1]], z = (0,0,-beta), V = theta^2 + x^2/2 + y^2/2",
       {{"beta", 0.1, "twist parameter"},
        {"potential", 1.0, "1: gradient drift with V, 0: no drift"}}},
      {"conformal2d", "conformal change of the flat metric",
       "a = exp(-phi) Id with phi = eps sin x sin y, Vol = a^-2",
       {{"eps", 0.3, "amplitude of phi"}}},
      {"euclidean", "flat space", "a = identity in D dimensions", {{"D", 2.0, "dimension"}}},
  };
  return catalog;
}

namespace {

std::map<std::string, double> resolve(const BuiltinInfo& info,
                                      const std::map<std::string, double>& given) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : given) {
    bool known = false;
    for (const auto& p : info.params) known = known || p.name == k;
    if (!known) throw SchemaError("builtin '" + info.name + "' has no parameter '" + k + "'");
  }
  for (const auto& p : info.params) {
    auto it = given.find(p.name);
    if (it != given.end()) {
      out[p.name] = it->second;
    } else {
      if (std::isnan(p.default_value))
        throw SchemaError("builtin '" + info.name + "' requires parameter '" + p.name + "'");
      out[p.name] = p.default_value;
    }
  }
  return out;
}

json rows(const std::vector<std::vector<std::string>>& m) {
  json out = json::array();
  for (const auto& r : m) {
    json row = json::array();
    for (const auto& e : r) row.push_back(e);
    out.push_back(row);
  }
  return out;
}

json list(const std::vector<std::string>& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(e);
  return out;
}

json box(std::initializer_list<std::pair<double, double>> b) {
  json d = json::array();
  for (const auto& [lo, hi] : b) d.push_back(json::array({lo, hi}));
  return d;
}

}  // namespace

Structure builtin(const std::string& name, const std::map<std::string, double>& given) {
  const BuiltinInfo* info = nullptr;
  for (const auto& b : builtin_catalog())
    if (b.name == name) info = &b;
  if (!info) throw UnknownExample("unknown builtin '" + name + "'");
  const auto p = resolve(*info, given);
  json cfg;
  cfg["name"] = name;
  const double pi = std::numbers::pi;

  if (name == "heisenberg") {
    cfg["variables"] = list({"x1", "x2", "x3"});
    cfg["a"] = rows({{"1", "0"}, {"0", "1"}, {"-x2/2", "x1/2"}});
    cfg["z"] = rows({{"x2/2"}, {"-x1/2"}, {"1"}});
    cfg["domain"] = box({{-1, 1}, {-1, 1}, {-1, 1}});
  } else if (name == "su2") {
    cfg["variables"] = list({"theta", "phi", "psi"});
    cfg["a"] = rows({{"cos(psi)", "-sin(psi)"},
                {"sin(psi)/sin(theta)", "cos(psi)/sin(theta)"},
                {"-cos(theta)*sin(psi)/sin(theta)", "-cos(theta)*cos(psi)/sin(theta)"}});
    cfg["z"] = rows({{"0"}, {"0"}, {"1"}});
    cfg["log_vol"] = "log(sin(theta))";
    cfg["domain"] = box({{0.3, pi - 0.3}, {-pi, pi}, {-pi, pi}});
  } else if (name == "grushin") {
    const double k = p.at("k");
    if (k < 1 || k != std::round(k)) throw SchemaError("grushin: k must be a positive integer");
    cfg["variables"] = list({"x", "y"});
    cfg["a"] = rows({{"1", "0"}, {"0", "x^k"}});
    cfg["log_vol"] = "0";
    cfg["domain"] = box({{0.5, 2.0}, {-1, 1}});
  } else if (name == "langevin_const") {
    if (p.at("gamma") * p.at("u") <= 0) throw SchemaError("langevin_const: gamma*u must be positive");
    const bool harmonic = p.at("harmonic") != 0.0;
    const std::string U = harmonic ? "c*x^2/2" : "c*(1 - cos(x))";
    const std::string dU = harmonic ? "c*x" : "c*sin(x)";
    cfg["variables"] = list({"x", "v"});
    cfg["a"] = rows({{"0"}, {"sqrt(2*gamma*u)"}});
    cfg["z"] = rows({{"z1"}, {"z2"}});
    cfg["b"] = list({"v", "-gamma*u*v - " + dU});
    cfg["potential"] = "v^2/2 + " + U;
    cfg["domain"] = box({{-2, 2}, {-2, 2}});
  } else if (name == "langevin_var") {
    if (std::fabs(p.at("eps")) >= 1) throw SchemaError("langevin_var: |eps| must be < 1");
    cfg["variables"] = list({"x", "v"});
    cfg["a"] = rows({{"0"}, {"sqrt(2*gamma*(1 + eps*cos(x)))"}});
    cfg["z"] = rows({{"z1 + zeta*sin(x)"}, {"z2 + zeta*cos(x)"}});
    cfg["b"] = list({"v", "-gamma*(1 + eps*cos(x))*v - c*sin(x)"});
    cfg["potential"] = "v^2/2 + c*(1 - cos(x))";
    cfg["domain"] = box({{-2, 2}, {-2, 2}});
  } else if (name == "se2") {
    cfg["variables"] = list({"theta", "x", "y"});
    cfg["a"] = rows({{"1", "0"}, {"0", "exp(beta*theta)"}, {"0", "1"}});
    cfg["z"] = rows({{"0"}, {"0"}, {"-beta"}});
    if (p.at("potential") != 0.0) {
      cfg["potential"] = "theta^2 + x^2/2 + y^2/2";
      // b = -1/2 aa^T ∇V
      cfg["b"] = list({"-theta", "-(exp(2*beta*theta)*x + exp(beta*theta)*y)/2",
                  "-(exp(beta*theta)*x + y)/2"});
    }
    cfg["log_vol"] = "0";
    cfg["domain"] = box({{-0.1, 0.1}, {-0.1, 0.1}, {-0.1, 0.1}});
  } else if (name == "conformal2d") {
    const std::string a = "exp(-eps*sin(x)*sin(y))";
    cfg["variables"] = list({"x", "y"});
    cfg["a"] = rows({{a, "0"}, {"0", a}});
    // L = ∇·(a²∇) − 2a∇a·∇ = Σ X_k² + 2b·∇ with b = −½ a∇a = ½ a² ∇phi.
    cfg["b"] = list({"exp(-2*eps*sin(x)*sin(y))*eps*cos(x)*sin(y)/2",
                "exp(-2*eps*sin(x)*sin(y))*eps*sin(x)*cos(y)/2"});
    cfg["log_vol"] = "2*eps*sin(x)*sin(y)";
    cfg["domain"] = box({{-pi, pi}, {-pi, pi}});
  } else if (name == "euclidean") {
    const double Dd = p.at("D");
    if (Dd < 1 || Dd > kMaxDim || Dd != std::round(Dd))
      throw SchemaError("euclidean: D must be an integer in 1.." + std::to_string(kMaxDim));
    const int D = static_cast<int>(Dd);
    json vars = json::array(), a = json::array(), dom = json::array();
    for (int i = 0; i < D; ++i) {
      vars.push_back("x" + std::to_string(i + 1));
      json row = json::array();
      for (int j = 0; j < D; ++j) row.push_back(i == j ? "1" : "0");
      a.push_back(row);
      dom.push_back({-1.0, 1.0});
    }
    cfg["variables"] = vars;
    cfg["a"] = a;
    cfg["log_vol"] = "0";
    cfg["domain"] = dom;
  }
  cfg["params"] = p;
  return load_structure(cfg);
}

}  // namespace gz
