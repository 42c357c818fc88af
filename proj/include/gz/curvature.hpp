#ifndef GZ_CURVATURE_HPP
#define GZ_CURVATURE_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gz/tensor.hpp"

namespace gz {

struct CurvatureOptions {
  Mode mode = Mode::horizontal;
  bool drift = false;
  Weight weight;
  double tol_lambda = 1e-8;
};

struct TotalRicci {
  QuadraticForm form;
  LambdaSolution lambda;
};

/// Sum of the applicable Ricci forms in the ∇f basis.
TotalRicci total_ricci(const Structure& s, std::span<const double> x, const CurvatureOptions& opt);

/// Rows of W = [a^T; z^T] (z rows only outside horizontal mode).
Eigen::MatrixXd u_basis(const AssembledPoint& ap, Mode mode);

struct UForm {
  Eigen::MatrixXd A;
  double residual = 0.0;
};

/// Least-squares A with M ≈ W^T A W. Throws RankError when W is row-deficient.
UForm to_u_form(const Eigen::MatrixXd& W, const QuadraticForm& M);
UForm to_u_form(const Structure& s, std::span<const double> x, const QuadraticForm& M,
                Mode mode);

/// Largest κ with M ⪰ κ·G; −∞ when M is indefinite on the kernel of G.
double pencil_min(const Eigen::MatrixXd& M, const Eigen::MatrixXd& G);

struct KappaResult {
  double kappa = 0.0;
  double lambda_residual = 0.0;
  double factorization_residual = 0.0;
  bool used_pencil = false;
  Eigen::MatrixXd A;
};

KappaResult kappa_at(const Structure& s, std::span<const double> x, const CurvatureOptions& opt);

struct CdDimension {
  int d_diag = 0;
  int d_all = 0;
};

CdDimension cd_dimension(const AssembledPoint& ap, Mode mode);

struct GridSpec {
  std::vector<double> lo, hi;
  std::vector<int> res;
};

struct PointRecord {
  std::vector<double> x;
  bool skipped = false;
  std::string skip_reason;
  double kappa = 0.0;
  double lambda_residual = 0.0;
  double factorization_residual = 0.0;
  double decomposition_residual = 0.0;
  bool used_pencil = false;
  CdDimension dims;
};

struct CurvatureReport {
  Mode mode = Mode::horizontal;
  bool drift = false;
  GridSpec grid;
  double tol_lambda = 1e-8;
  std::vector<PointRecord> points;
  double min_kappa = 0.0;
  std::vector<double> argmin;
  double fraction_lambda_ok = 0.0;
  int skipped = 0;
};

/// Grid nodes: res points per axis including both ends (a single point sits at the midpoint).
std::vector<std::vector<double>> grid_nodes(const GridSpec& g);

CurvatureReport scan(const Structure& s, const GridSpec& grid, const CurvatureOptions& opt,
                     int spotcheck_fns, unsigned seed, int threads = 0);

}  // namespace gz

#endif
