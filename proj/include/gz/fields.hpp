#ifndef GZ_FIELDS_HPP
#define GZ_FIELDS_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gz/expr.hpp"

namespace gz {

/// A problem instance: diffusion matrix a (D x n), auxiliary directions z (D x m),
/// drift b, log-volume and potential. The effective weight is Vol * exp(-V).
struct Structure {
  std::string name;
  std::vector<std::string> variables;
  int n = 0;
  int m = 0;
  std::vector<Expression> a;  // row-major D x n
  std::vector<Expression> z;  // row-major D x m
  std::vector<Expression> b;  // length D, or empty for zero drift
  std::optional<Expression> log_vol;
  std::optional<Expression> potential;
  std::map<std::string, double> params;
  /// Replace b by the drift of the time-reversed process with respect to the weight,
  /// b' = a⊗∇a + aa^T∇log(Vol e^{-V}) - b. For reversible b this is b itself.
  bool dual_drift = false;
  /// Default sampling box, one [lo, hi] per coordinate (empty if unspecified).
  std::vector<std::pair<double, double>> domain;

  int dim() const { return static_cast<int>(variables.size()); }
  bool has_drift() const { return !b.empty() || dual_drift; }
  const Expression& a_at(int row, int col) const { return a[row * n + col]; }
  const Expression& z_at(int row, int col) const { return z[row * m + col]; }
};

/// Jets of every structure field at one point.
struct FieldJets {
  int D = 0, n = 0, m = 0, order = 0;
  std::vector<Jet> aT;  // n x D, aT[i*D+k] = a(k,i)
  std::vector<Jet> zT;  // m x D
  std::vector<Jet> b;   // D entries; effective drift (order - 1 when dual_drift)
  Jet logw;             // log Vol - V
  bool has_drift = false;

  const Jet& at(int i, int k) const { return aT[i * D + k]; }
  const Jet& zt(int j, int k) const { return zT[j * D + k]; }
};

FieldJets eval_fields(const Structure& s, std::span<const double> x, int order = 3);

Structure load_structure(const nlohmann::json& config);
nlohmann::json serialize(const Structure& s);

struct BuiltinParam {
  std::string name;
  double default_value;
  std::string meaning;
};

struct BuiltinInfo {
  std::string name;
  std::string topic;
  std::string summary;
  std::vector<BuiltinParam> params;
};

const std::vector<BuiltinInfo>& builtin_catalog();
Structure builtin(const std::string& name, const std::map<std::string, double>& params = {});

/// (a⊗∇a)_k̂ = Σ_k a_{k̂k} Σ_{k'} ∂_{k'} a_{k'k}.
std::vector<double> a_otimes_grad_a(const Structure& s, std::span<const double> x);
/// Jet version, one order below the input jets.
std::vector<Jet> a_otimes_grad_a(const FieldJets& fj);

/// r = a⊗∇a − 2b + aa^T∇log(Vol e^{-V}); zero iff the weight is a symmetric invariant measure.
std::vector<Jet> symmetric_defect(const FieldJets& fj);

/// max over points of ‖a⊗∇a − 2b + aa^T∇log Vol_eff‖∞.
double invariant_measure_residual(const Structure& s, const std::vector<std::vector<double>>& pts);

/// max over points of |(1/ρ*)∇·(ρ* r)| with r the symmetric defect. Zero iff ρ* is
/// stationary for the full (possibly non-reversible) Fokker-Planck equation.
double stationary_residual(const Structure& s, const std::vector<std::vector<double>>& pts);

struct HormanderResult {
  int rank = 0;
  int depth = 0;
};

/// Rank of the span of the columns of a and their iterated brackets up to max_depth.
/// Bracket depth is limited by the available jet order (at most 4).
HormanderResult hormander_rank(const Structure& s, std::span<const double> x, int max_depth);

/// The structure expressed in rotated coordinates y = R x (R orthogonal).
Structure rotate(const Structure& s, const std::vector<std::vector<double>>& R);

/// Copy with a and z multiplied by a constant.
Structure scale_fields(const Structure& s, double c);

/// Random points inside the structure's default domain (or the given box).
std::vector<std::vector<double>> sample_points(const Structure& s, int count, unsigned seed);

}  // namespace gz

#endif
