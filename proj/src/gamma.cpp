#include "gz/gamma.hpp"

#include <stdexcept>

namespace gz {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::horizontal:
      return "horizontal";
    case Mode::z_plain:
      return "z_plain";
    case Mode::generalized:
      return "generalized";
  }
  return "?";
}

Mode parse_mode(const std::string& s) {
  if (s == "horizontal") return Mode::horizontal;
  if (s == "z_plain") return Mode::z_plain;
  if (s == "generalized") return Mode::generalized;
  throw SchemaError("unknown mode '" + s + "' (expected horizontal, z_plain or generalized)");
}

GammaContext::GammaContext(const Structure& s, std::span<const double> x, const Weight& w)
    : s_(&s), x_(x.begin(), x.end()), fj_(eval_fields(s, x, 3)) {
  logpsi_ = w.custom_log ? eval_jet(*w.custom_log, x, 3) : fj_.logw;
}

Jet GammaContext::jet(const Expression& f) const { return eval_jet(f, x_, 3); }

namespace {

Jet zero(int d, int order) { return Jet::constant(d, order < 0 ? 0 : order, 0.0); }

Jet directional(const std::vector<Jet>& rows, int i, int D, const Jet& g) {
  Jet acc = zero(D, g.order() - 1);
  for (int k = 0; k < D; ++k) acc += rows[i * D + k] * g.partial(k);
  return acc;
}

/// L_v g = Σ X_i X_i g + Σ v_k ∂_k g, with v possibly empty.
Jet apply_L_vec(const GammaContext& c, const Jet& g, const std::vector<Jet>& v) {
  const FieldJets& fj = c.fields();
  Jet acc = zero(fj.D, g.order() - 2);
  for (int i = 0; i < fj.n; ++i) acc += apply_X(c, i, apply_X(c, i, g));
  for (std::size_t k = 0; k < v.size(); ++k) acc += v[k] * g.partial(static_cast<int>(k));
  return acc;
}

std::vector<Jet> drift_vector(const GammaContext& c, bool drift) {
  if (!drift || !c.fields().has_drift) return {};
  std::vector<Jet> v;
  for (const Jet& b : c.fields().b) v.push_back(2.0 * b);
  return v;
}

double gamma2_generic(const GammaContext& c, const Jet& f, const std::vector<Jet>& v,
                      bool use_z) {
  if (f.order() < 3) throw std::invalid_argument("Gamma2 needs an order-3 jet of f");
  const Jet G = use_z ? gamma1_z_jet(c, f, f) : gamma1_jet(c, f, f);
  const Jet LG = apply_L_vec(c, G, v);
  const Jet Lf = apply_L_vec(c, f, v);
  const double g1 = use_z ? gamma1_z_jet(c, Lf, f).value() : gamma1_jet(c, Lf, f).value();
  return 0.5 * LG.value() - g1;
}

/// (1/Ψ)∇·(Ψ w w^T V) for w = a or z.
double weighted_divergence(const GammaContext& c, const std::vector<Jet>& V, bool use_z) {
  const FieldJets& fj = c.fields();
  const int D = fj.D;
  const int cols = use_z ? fj.m : fj.n;
  const auto& W = use_z ? fj.zT : fj.aT;
  std::vector<Jet> w(D, zero(D, 1));
  for (int j = 0; j < cols; ++j) {
    Jet proj = zero(D, 1);
    for (int k = 0; k < D; ++k) proj += W[j * D + k] * V[k];
    for (int k = 0; k < D; ++k) w[k] += W[j * D + k] * proj;
  }
  double div = 0.0;
  for (int k = 0; k < D; ++k) div += w[k].d1(k) + w[k].value() * c.log_weight().d1(k);
  return div;
}

}  // namespace

Jet apply_X(const GammaContext& c, int i, const Jet& g) {
  return directional(c.fields().aT, i, c.dim(), g);
}

Jet apply_Z(const GammaContext& c, int j, const Jet& g) {
  return directional(c.fields().zT, j, c.dim(), g);
}

Jet apply_L_jet(const GammaContext& c, const Jet& f, bool drift) {
  return apply_L_vec(c, f, drift_vector(c, drift));
}

Jet gamma1_jet(const GammaContext& c, const Jet& f, const Jet& g) {
  const int order = std::min(f.order(), g.order()) - 1;
  Jet acc = zero(c.dim(), order);
  for (int i = 0; i < c.fields().n; ++i) acc += apply_X(c, i, f) * apply_X(c, i, g);
  return acc;
}

Jet gamma1_z_jet(const GammaContext& c, const Jet& f, const Jet& g) {
  const int order = std::min(f.order(), g.order()) - 1;
  Jet acc = zero(c.dim(), order);
  for (int j = 0; j < c.fields().m; ++j) acc += apply_Z(c, j, f) * apply_Z(c, j, g);
  return acc;
}

double apply_L(const GammaContext& c, const Jet& f, bool drift) {
  return apply_L_jet(c, f, drift).value();
}

double gamma1(const GammaContext& c, const Jet& f, const Jet& g) {
  return gamma1_jet(c, f, g).value();
}

double gamma1_z(const GammaContext& c, const Jet& f, const Jet& g) {
  return gamma1_z_jet(c, f, g).value();
}

double gamma2_direct(const GammaContext& c, const Jet& f, bool drift) {
  return gamma2_generic(c, f, drift_vector(c, drift), false);
}

double gamma2_z_direct(const GammaContext& c, const Jet& f, bool drift) {
  if (c.fields().m == 0) return 0.0;
  return gamma2_generic(c, f, drift_vector(c, drift), true);
}

double gamma2_with_vector_drift(const GammaContext& c, const Jet& f, const std::vector<Jet>& v) {
  return gamma2_generic(c, f, v, false);
}

std::vector<Jet> gradient_gram_vector(const GammaContext& c, const Jet& f, bool use_z) {
  const FieldJets& fj = c.fields();
  const int D = fj.D;
  const int cols = use_z ? fj.m : fj.n;
  const auto& W = use_z ? fj.zT : fj.aT;
  std::vector<Jet> out(D, zero(D, std::min(2, f.order() - 1)));
  for (int i = 0; i < cols; ++i) {
    Jet wf = zero(D, f.order() - 1);
    for (int p = 0; p < D; ++p) wf += W[i * D + p] * f.partial(p);
    for (int k = 0; k < D; ++k) {
      Jet dwf = zero(D, f.order() - 1);
      for (int p = 0; p < D; ++p) dwf += W[i * D + p].partial(k) * f.partial(p);
      out[k] += 2.0 * wf * dwf;
    }
  }
  return out;
}

double div_correction(const GammaContext& c, const Jet& f) {
  if (c.fields().m == 0) return 0.0;
  const std::vector<Jet> Va = gradient_gram_vector(c, f, false);
  const std::vector<Jet> Vz = gradient_gram_vector(c, f, true);
  return weighted_divergence(c, Va, true) - weighted_divergence(c, Vz, false);
}

double gamma2_z_psi(const GammaContext& c, const Jet& f, bool drift) {
  if (c.fields().m == 0) return 0.0;
  return gamma2_z_direct(c, f, drift) + div_correction(c, f);
}

QuadraticForm bochner_correction(const Structure& s, std::span<const double> x) {
  const FieldJets fj = eval_fields(s, x, 3);
  const int D = fj.D, n = fj.n;
  // div_k = Σ_i ∂_i a_{ik}, kept as an order-2 jet.
  std::vector<Jet> div(n, zero(D, 2));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < D; ++i) div[k] += fj.at(k, i).partial(i);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < D; ++j) B(l, k) += fj.at(l, j).value() * div[k].d1(j);
  Eigen::MatrixXd aT(n, D);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < D; ++k) aT(i, k) = fj.at(i, k).value();
  Eigen::MatrixXd M = -aT.transpose() * B * aT;
  // B₀ = Σ_l (X_l f) [Σ_k div_k X_k(a^T_{ll'}) f_{l'} − a^T_{ll'} div_k ∂_{l'} a^T_{kk̂} f_k̂].
  for (int l = 0; l < n; ++l) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(D);
    for (int k = 0; k < n; ++k) {
      const double dk = div[k].value();
      for (int lp = 0; lp < D; ++lp) {
        double xk = 0.0;
        for (int j = 0; j < D; ++j) xk += fj.at(k, j).value() * fj.at(l, lp).d1(j);
        u(lp) += dk * xk;
      }
      for (int lp = 0; lp < D; ++lp)
        for (int kh = 0; kh < D; ++kh)
          u(kh) -= fj.at(l, lp).value() * dk * fj.at(k, kh).d1(lp);
    }
    M += aT.row(l).transpose() * u.transpose();
  }
  QuadraticForm q;
  q.M = 0.5 * (M + M.transpose());
  return q;
}

}  // namespace gz
