#ifndef GZ_GAMMA_HPP
#define GZ_GAMMA_HPP

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gz/fields.hpp"

namespace gz {

enum class Mode { horizontal, z_plain, generalized };

const char* mode_name(Mode m);
Mode parse_mode(const std::string& s);

/// Weight Ψ of the divergence corrections: the structure's Vol·e^{-V}, or a custom log-weight.
struct Weight {
  std::optional<Expression> custom_log;
};

enum class Basis { gradient, U };

/// Symmetric matrix acting on ∇f (or on U = (a^T∇f, z^T∇f)).
struct QuadraticForm {
  Eigen::MatrixXd M;
  Basis basis = Basis::gradient;
  double operator()(const Eigen::VectorXd& v) const { return v.dot(M * v); }
};

/// Structure jets at one point, order 3 for the fields, plus the log-weight.
class GammaContext {
 public:
  GammaContext(const Structure& s, std::span<const double> x, const Weight& w = {});

  const Structure& structure() const { return *s_; }
  const FieldJets& fields() const { return fj_; }
  const Jet& log_weight() const { return logpsi_; }
  const std::vector<double>& point() const { return x_; }
  int dim() const { return fj_.D; }

  /// Order-3 jet of an expression at this point.
  Jet jet(const Expression& f) const;

 private:
  const Structure* s_;
  std::vector<double> x_;
  FieldJets fj_;
  Jet logpsi_;
};

/// X_i g = Σ_k a^T_{ik} ∂_k g as a jet one order below g.
Jet apply_X(const GammaContext& c, int i, const Jet& g);
Jet apply_Z(const GammaContext& c, int j, const Jet& g);

/// Lf (+ 2b·∇f), as a jet two orders below f.
Jet apply_L_jet(const GammaContext& c, const Jet& f, bool drift);
Jet gamma1_jet(const GammaContext& c, const Jet& f, const Jet& g);
Jet gamma1_z_jet(const GammaContext& c, const Jet& f, const Jet& g);

double apply_L(const GammaContext& c, const Jet& f, bool drift);
double gamma1(const GammaContext& c, const Jet& f, const Jet& g);
double gamma1_z(const GammaContext& c, const Jet& f, const Jet& g);
double gamma2_direct(const GammaContext& c, const Jet& f, bool drift);
double gamma2_z_direct(const GammaContext& c, const Jet& f, bool drift);
double div_correction(const GammaContext& c, const Jet& f);
double gamma2_z_psi(const GammaContext& c, const Jet& f, bool drift);

/// Γ2 of the operator L + v·∇ for an arbitrary first-order drift field v (jets of order ≥ 1).
double gamma2_with_vector_drift(const GammaContext& c, const Jet& f, const std::vector<Jet>& v);

/// Γ_{1,∇(ww^T)}(f,f): the D-vector ⟨∇f, ∂_k(ww^T)∇f⟩ for w = a (use_z false) or z.
std::vector<Jet> gradient_gram_vector(const GammaContext& c, const Jet& f, bool use_z);

/// ⟨−B a^T∇f, a^T∇f⟩ + B₀(f) as a quadratic form in ∇f.
QuadraticForm bochner_correction(const Structure& s, std::span<const double> x);

}  // namespace gz

#endif
