#ifndef GZ_TENSOR_HPP
#define GZ_TENSOR_HPP

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gz/gamma.hpp"

namespace gz {

/// Coefficient matrix of a vector that is linear in ∇f (rows: vector entries, cols: ∂_c f).
using LinearFormMap = Eigen::MatrixXd;

/// Index conventions: X = vec(Hess f) with entry (î,k̂) at î*D+k̂; Q row (i,k) at i*n+k;
/// P and E rows (j,i) at j*n+i with j a z-column and i an a-column.
struct AssembledPoint {
  int D = 0, n = 0, m = 0;
  std::vector<double> point;
  Eigen::MatrixXd Q, P;
  LinearFormMap C, F, G, Dvec, Evec;
  Eigen::MatrixXd aT, zT;  // n x D, m x D
  Eigen::MatrixXd gram_a, gram_z;
  FieldJets fields;
};

AssembledPoint assemble(const Structure& s, std::span<const double> x);

/// Right-hand side of the Λ equations for the mode.
LinearFormMap lambda_rhs(const AssembledPoint& ap, Mode mode);

struct LambdaSolution {
  LinearFormMap L1, L2;  // D² x D; L2 is empty in horizontal mode
  double residual = 0.0;
  Mode mode = Mode::horizontal;
  /// True when the full equation had no exact solution and only its symmetric part was imposed.
  bool symmetric_only = false;
};

/// Projection of D²-vectors onto their symmetric part.
Eigen::MatrixXd symmetrizer(int D);

LambdaSolution solve_lambda(const AssembledPoint& ap, Mode mode);

/// Spectral norm of sym(Q^TQ L1 [+ P^TP L2] − RHS).
double lambda_residual(const AssembledPoint& ap, const LambdaSolution& lam);

QuadraticForm ricci_a(const AssembledPoint& ap, const LambdaSolution& lam);
QuadraticForm ricci_z(const AssembledPoint& ap);
QuadraticForm ricci_psi(const AssembledPoint& ap, const Jet& log_weight);
QuadraticForm drift_correction(const AssembledPoint& ap, bool z_direction);

/// The first-order quadratic sum Σ_{i,k} (W_k f)[X_iX_i W^T_k − W_k(X_i a^T_i)]·∇f for W = a or z.
QuadraticForm derivative_sums(const AssembledPoint& ap, bool use_z);

Eigen::VectorXd hessian_vector(const Jet& f);
Eigen::VectorXd gradient_vector(const Jet& f);
double hessian_square(const AssembledPoint& ap, const LambdaSolution& lam, const Jet& f);

struct DecompositionOptions {
  Mode mode = Mode::horizontal;
  bool drift = false;
  Weight weight;
};

struct DecompositionResult {
  double residual = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double lambda_residual = 0.0;
};

/// Sum of the Ricci forms that enter the decomposition in this mode.
QuadraticForm ricci_total(const AssembledPoint& ap, const LambdaSolution& lam,
                          const DecompositionOptions& opt, const Jet& log_weight);

/// |LHS − (|Hess|² + Σℛ)| / (1 + |LHS|) with LHS from the direct Gamma evaluators.
DecompositionResult decomposition_residual(const Structure& s, const Expression& f,
                                           std::span<const double> x,
                                           const DecompositionOptions& opt);

/// Same, reusing an assembled point and Λ for many test functions.
DecompositionResult decomposition_residual(const GammaContext& ctx, const AssembledPoint& ap,
                                           const LambdaSolution& lam, const Jet& f,
                                           const DecompositionOptions& opt);

}  // namespace gz

#endif
