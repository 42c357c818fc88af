#include "gz/fields.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

namespace gz {

using nlohmann::json;

namespace {

Jet zero_jet(int d, int order) { return Jet::constant(d, order, 0.0); }

std::vector<Jet> eval_all(const std::vector<Expression>& es, std::span<const double> x,
                          int order) {
  std::vector<Jet> out;
  out.reserve(es.size());
  for (const auto& e : es) out.push_back(eval_jet(e, x, order));
  return out;
}

Expression parse_entry(const json& j, const std::string& where,
                       const std::vector<std::string>& vars,
                       const std::map<std::string, double>& params) {
  std::string text;
  if (j.is_string())
    text = j.get<std::string>();
  else if (j.is_number())
    text = j.dump();
  else
    throw SchemaError(where + ": expected an expression string");
  try {
    return parse(text, vars, params);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

std::vector<Expression> parse_matrix(const json& j, const std::string& key, int rows,
                                     int& cols, const std::vector<std::string>& vars,
                                     const std::map<std::string, double>& params) {
  if (!j.is_array()) throw SchemaError("'" + key + "' must be an array of rows");
  if (static_cast<int>(j.size()) != rows)
    throw SchemaError("'" + key + "' must have " + std::to_string(rows) + " rows, got " +
                      std::to_string(j.size()));
  std::vector<Expression> out;
  cols = -1;
  for (int r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array()) throw SchemaError("'" + key + "' row " + std::to_string(r) + " is not an array");
    if (cols < 0) cols = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != cols)
      throw SchemaError("'" + key + "' row " + std::to_string(r) + " has " +
                        std::to_string(row.size()) + " entries, expected " +
                        std::to_string(cols));
    for (int c = 0; c < cols; ++c)
      out.push_back(parse_entry(row[c], key + "[" + std::to_string(r) + "][" + std::to_string(c) + "]",
                                vars, params));
  }
  return out;
}

json matrix_json(const std::vector<Expression>& es, int rows, int cols) {
  json m = json::array();
  for (int r = 0; r < rows; ++r) {
    json row = json::array();
    for (int c = 0; c < cols; ++c) row.push_back(es[r * cols + c].to_string());
    m.push_back(row);
  }
  return m;
}

}  // namespace

FieldJets eval_fields(const Structure& s, std::span<const double> x, int order) {
  FieldJets fj;
  fj.D = s.dim();
  fj.n = s.n;
  fj.m = s.m;
  fj.order = order;
  const int D = fj.D;
  fj.aT.resize(static_cast<std::size_t>(s.n) * D);
  fj.zT.resize(static_cast<std::size_t>(s.m) * D);
  for (int k = 0; k < D; ++k) {
    for (int i = 0; i < s.n; ++i) fj.aT[i * D + k] = eval_jet(s.a_at(k, i), x, order);
    for (int j = 0; j < s.m; ++j) fj.zT[j * D + k] = eval_jet(s.z_at(k, j), x, order);
  }
  fj.logw = zero_jet(D, order);
  if (s.log_vol) fj.logw += eval_jet(*s.log_vol, x, order);
  if (s.potential) fj.logw -= eval_jet(*s.potential, x, order);
  if (s.b.empty()) {
    fj.b.assign(D, zero_jet(D, order));
  } else {
    fj.b = eval_all(s.b, x, order);
  }
  fj.has_drift = s.has_drift();
  if (s.dual_drift) {
    // b' = a⊗∇a + aa^T∇log w − b.
    const std::vector<Jet> A = a_otimes_grad_a(fj);
    std::vector<Jet> nb;
    for (int kh = 0; kh < D; ++kh) {
      Jet v = A[kh] - fj.b[kh];
      for (int i = 0; i < s.n; ++i) {
        Jet grad = zero_jet(D, order - 1);
        for (int j = 0; j < D; ++j) grad += fj.at(i, j) * fj.logw.partial(j);
        v += fj.at(i, kh) * grad;
      }
      nb.push_back(v);
    }
    fj.b = std::move(nb);
  }
  return fj;
}

std::vector<Jet> a_otimes_grad_a(const FieldJets& fj) {
  const int D = fj.D;
  std::vector<Jet> div(fj.n, zero_jet(D, fj.order - 1));
  for (int k = 0; k < fj.n; ++k)
    for (int kp = 0; kp < D; ++kp) div[k] += fj.at(k, kp).partial(kp);
  std::vector<Jet> out(D, zero_jet(D, fj.order - 1));
  for (int kh = 0; kh < D; ++kh)
    for (int k = 0; k < fj.n; ++k) out[kh] += fj.at(k, kh) * div[k];
  return out;
}

std::vector<double> a_otimes_grad_a(const Structure& s, std::span<const double> x) {
  const FieldJets fj = eval_fields(s, x, 1);
  std::vector<double> out;
  for (const Jet& j : a_otimes_grad_a(fj)) out.push_back(j.value());
  return out;
}

std::vector<Jet> symmetric_defect(const FieldJets& fj) {
  const int D = fj.D;
  std::vector<Jet> r = a_otimes_grad_a(fj);
  std::vector<Jet> ag(fj.n, zero_jet(D, fj.order - 1));
  for (int i = 0; i < fj.n; ++i)
    for (int j = 0; j < D; ++j) ag[i] += fj.at(i, j) * fj.logw.partial(j);
  for (int kh = 0; kh < D; ++kh) {
    r[kh] -= 2.0 * fj.b[kh];
    for (int i = 0; i < fj.n; ++i) r[kh] += fj.at(i, kh) * ag[i];
  }
  return r;
}

double invariant_measure_residual(const Structure& s,
                                  const std::vector<std::vector<double>>& pts) {
  double worst = 0.0;
  for (const auto& p : pts) {
    const FieldJets fj = eval_fields(s, p, 2);
    for (const Jet& r : symmetric_defect(fj)) worst = std::max(worst, std::fabs(r.value()));
  }
  return worst;
}

double stationary_residual(const Structure& s, const std::vector<std::vector<double>>& pts) {
  double worst = 0.0;
  for (const auto& p : pts) {
    const FieldJets fj = eval_fields(s, p, 3);
    const std::vector<Jet> r = symmetric_defect(fj);
    double v = 0.0;
    for (int k = 0; k < fj.D; ++k) v += r[k].d1(k) + r[k].value() * fj.logw.d1(k);
    worst = std::max(worst, std::fabs(v));
  }
  return worst;
}

HormanderResult hormander_rank(const Structure& s, std::span<const double> x, int max_depth) {
  if (max_depth < 1) throw std::invalid_argument("max_depth must be at least 1");
  const int D = s.dim();
  const int depth_cap = std::min(max_depth, kMaxOrder + 1);
  const FieldJets fj = eval_fields(s, x, depth_cap - 1);
  using Field = std::vector<Jet>;
  std::vector<Field> gens;
  for (int i = 0; i < s.n; ++i) {
    Field f;
    for (int k = 0; k < D; ++k) f.push_back(fj.at(i, k));
    gens.push_back(f);
  }
  auto bracket = [&](const Field& V, const Field& W) {
    Field out;
    const int order = std::min(V[0].order(), W[0].order()) - 1;
    for (int c = 0; c < D; ++c) {
      Jet acc = zero_jet(D, order);
      for (int d = 0; d < D; ++d)
        acc += V[d] * W[c].partial(d) - W[d] * V[c].partial(d);
      out.push_back(acc);
    }
    return out;
  };
  std::vector<std::vector<double>> columns;
  auto rank_of = [&] {
    Eigen::MatrixXd M(D, static_cast<int>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c)
      for (int r = 0; r < D; ++r) M(r, static_cast<int>(c)) = columns[c][r];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > 1e-9 * sv(0)) ++r;
    return r;
  };
  HormanderResult res;
  std::vector<Field> level = gens;
  for (int depth = 1; depth <= depth_cap; ++depth) {
    if (depth > 1) {
      std::vector<Field> next;
      for (const auto& V : level)
        for (const auto& g : gens) next.push_back(bracket(V, g));
      level = std::move(next);
    }
    for (const auto& f : level) {
      std::vector<double> col;
      for (const Jet& j : f) col.push_back(j.value());
      columns.push_back(col);
    }
    const int r = rank_of();
    if (r > res.rank) {
      res.rank = r;
      res.depth = depth;
    }
    if (r == D) break;
  }
  if (res.depth == 0) res.depth = 1;
  return res;
}

Structure load_structure(const json& cfg) {
  if (!cfg.is_object()) throw SchemaError("structure config must be a JSON object");
  Structure s;
  s.name = cfg.value("name", std::string("custom"));
  if (!cfg.contains("variables") || !cfg["variables"].is_array() || cfg["variables"].empty())
    throw SchemaError("'variables' must be a nonempty array of names");
  for (const auto& v : cfg["variables"]) {
    if (!v.is_string()) throw SchemaError("'variables' entries must be strings");
    s.variables.push_back(v.get<std::string>());
  }
  const int D = s.dim();
  if (D > kMaxDim) throw SchemaError("at most " + std::to_string(kMaxDim) + " coordinates");
  if (cfg.contains("params")) {
    if (!cfg["params"].is_object()) throw SchemaError("'params' must be an object");
    for (const auto& [k, v] : cfg["params"].items()) {
      if (!v.is_number()) throw SchemaError("parameter '" + k + "' must be a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw SchemaError("parameter '" + k + "' is not finite");
      s.params[k] = d;
    }
  }
  if (!cfg.contains("a")) throw SchemaError("missing 'a'");
  s.a = parse_matrix(cfg["a"], "a", D, s.n, s.variables, s.params);
  if (s.n < 1) throw SchemaError("'a' must have at least one column");
  if (cfg.contains("z") && !cfg["z"].is_null()) {
    s.z = parse_matrix(cfg["z"], "z", D, s.m, s.variables, s.params);
    if (s.m > D) throw SchemaError("'z' has more columns than coordinates");
  }
  if (cfg.contains("b") && !cfg["b"].is_null()) {
    const json& b = cfg["b"];
    if (!b.is_array() || static_cast<int>(b.size()) != D)
      throw SchemaError("'b' must be an array of " + std::to_string(D) + " expressions");
    for (int k = 0; k < D; ++k)
      s.b.push_back(parse_entry(b[k], "b[" + std::to_string(k) + "]", s.variables, s.params));
    if (std::all_of(s.b.begin(), s.b.end(), [](const Expression& e) { return e.is_zero_constant(); }))
      s.b.clear();
  }
  if (cfg.contains("log_vol") && !cfg["log_vol"].is_null())
    s.log_vol = parse_entry(cfg["log_vol"], "log_vol", s.variables, s.params);
  if (cfg.contains("potential") && !cfg["potential"].is_null())
    s.potential = parse_entry(cfg["potential"], "potential", s.variables, s.params);
  if (cfg.contains("dual_drift")) s.dual_drift = cfg["dual_drift"].get<bool>();
  if (cfg.contains("domain")) {
    const json& d = cfg["domain"];
    if (!d.is_array() || static_cast<int>(d.size()) != D)
      throw SchemaError("'domain' must list one [lo, hi] pair per coordinate");
    for (const auto& p : d) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number() ||
          !(p[0].get<double>() < p[1].get<double>()))
        throw SchemaError("'domain' entries must be [lo, hi] with lo < hi");
      s.domain.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
  }
  return s;
}

json serialize(const Structure& s) {
  json j;
  j["name"] = s.name;
  j["variables"] = s.variables;
  const int D = s.dim();
  j["a"] = matrix_json(s.a, D, s.n);
  if (s.m > 0) j["z"] = matrix_json(s.z, D, s.m);
  if (!s.b.empty()) {
    json b = json::array();
    for (const auto& e : s.b) b.push_back(e.to_string());
    j["b"] = b;
  }
  if (s.log_vol) j["log_vol"] = s.log_vol->to_string();
  if (s.potential) j["potential"] = s.potential->to_string();
  if (!s.params.empty()) j["params"] = s.params;
  if (s.dual_drift) j["dual_drift"] = true;
  if (!s.domain.empty()) {
    json d = json::array();
    for (const auto& [lo, hi] : s.domain) d.push_back({lo, hi});
    j["domain"] = d;
  }
  return j;
}

Structure rotate(const Structure& s, const std::vector<std::vector<double>>& R) {
  const int D = s.dim();
  std::vector<Expression> coords;
  for (int j = 0; j < D; ++j) coords.push_back(parse(s.variables[j], s.variables));
  // Old coordinate x_i = Σ_j R_{ji} y_j.
  std::vector<Expression> old_in_new;
  for (int i = 0; i < D; ++i) {
    std::vector<double> c;
    for (int j = 0; j < D; ++j) c.push_back(R[j][i]);
    old_in_new.push_back(linear_combination(c, coords, s.variables));
  }
  auto sub = [&](const Expression& e) { return e.substitute(old_in_new); };
  auto rot_matrix = [&](const std::vector<Expression>& M, int cols) {
    std::vector<Expression> out(static_cast<std::size_t>(D) * cols);
    for (int r = 0; r < D; ++r)
      for (int c = 0; c < cols; ++c) {
        std::vector<double> coef;
        std::vector<Expression> terms;
        for (int q = 0; q < D; ++q) {
          coef.push_back(R[r][q]);
          terms.push_back(sub(M[q * cols + c]));
        }
        out[r * cols + c] = linear_combination(coef, terms, s.variables);
      }
    return out;
  };
  Structure t = s;
  t.name = s.name + "_rotated";
  t.a = rot_matrix(s.a, s.n);
  t.z = rot_matrix(s.z, s.m);
  if (!s.b.empty()) t.b = rot_matrix(s.b, 1);
  if (s.log_vol) t.log_vol = sub(*s.log_vol);
  if (s.potential) t.potential = sub(*s.potential);
  t.domain.clear();
  return t;
}

Structure scale_fields(const Structure& s, double c) {
  Structure t = s;
  for (auto& e : t.a) e = linear_combination({c}, {e}, s.variables);
  for (auto& e : t.z) e = linear_combination({c}, {e}, s.variables);
  return t;
}

std::vector<std::vector<double>> sample_points(const Structure& s, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < count; ++i) {
    std::vector<double> p;
    for (int k = 0; k < s.dim(); ++k) {
      const auto [lo, hi] = s.domain.empty() ? std::pair{-1.0, 1.0} : s.domain[k];
      p.push_back(std::uniform_real_distribution<double>(lo, hi)(rng));
    }
    pts.push_back(p);
  }
  return pts;
}

}  // namespace gz
