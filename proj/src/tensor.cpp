#include "gz/tensor.hpp"

#include <cmath>

namespace gz {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Shorthands over the assembled jets: value, first and second derivatives of a^T and z^T.
struct Coeffs {
  const FieldJets& fj;
  double a(int i, int k) const { return fj.at(i, k).value(); }
  double da(int i, int k, int p) const { return fj.at(i, k).d1(p); }
  double dda(int i, int k, int p, int q) const { return fj.at(i, k).d2(p, q); }
  double z(int j, int k) const { return fj.zt(j, k).value(); }
  double dz(int j, int k, int p) const { return fj.zt(j, k).d1(p); }
  double ddz(int j, int k, int p, int q) const { return fj.zt(j, k).d2(p, q); }
  double w(bool use_z, int i, int k) const { return use_z ? z(i, k) : a(i, k); }
  double dw(bool use_z, int i, int k, int p) const { return use_z ? dz(i, k, p) : da(i, k, p); }
  double ddw(bool use_z, int i, int k, int p, int q) const {
    return use_z ? ddz(i, k, p, q) : dda(i, k, p, q);
  }
  // X_i applied to the coefficient a^T_{jk} (or z^T_{jk}).
  double Xa(int i, int j, int k) const {
    double s = 0.0;
    for (int p = 0; p < fj.D; ++p) s += a(i, p) * da(j, k, p);
    return s;
  }
  double Xz(int i, int j, int k) const {
    double s = 0.0;
    for (int p = 0; p < fj.D; ++p) s += a(i, p) * dz(j, k, p);
    return s;
  }
  double Za(int j, int i, int k) const {
    double s = 0.0;
    for (int p = 0; p < fj.D; ++p) s += z(j, p) * da(i, k, p);
    return s;
  }
};

MatrixXd sym(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

/// Min-norm least squares with relative singular-value cutoff 1e-10.
MatrixXd min_norm_solve(const MatrixXd& A, const MatrixXd& R) {
  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double cut = s.size() > 0 ? 1e-10 * s(0) : 0.0;
  VectorXd inv = VectorXd::Zero(s.size());
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > cut && s(i) > 0.0) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * R;
}

double spectral_norm(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues()(0);
}

}  // namespace

AssembledPoint assemble(const Structure& s, std::span<const double> x) {
  AssembledPoint ap;
  ap.fields = eval_fields(s, x, 3);
  const FieldJets& fj = ap.fields;
  const Coeffs c{fj};
  const int D = fj.D, n = fj.n, m = fj.m;
  ap.D = D;
  ap.n = n;
  ap.m = m;
  ap.point.assign(x.begin(), x.end());
  ap.aT.resize(n, D);
  ap.zT.resize(m, D);
  for (int k = 0; k < D; ++k) {
    for (int i = 0; i < n; ++i) ap.aT(i, k) = c.a(i, k);
    for (int j = 0; j < m; ++j) ap.zT(j, k) = c.z(j, k);
  }
  ap.gram_a = ap.aT.transpose() * ap.aT;
  ap.gram_z = ap.zT.transpose() * ap.zT;

  ap.Q = MatrixXd::Zero(n * n, D * D);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int ih = 0; ih < D; ++ih)
        for (int kh = 0; kh < D; ++kh) ap.Q(i * n + k, ih * D + kh) = c.a(i, ih) * c.a(k, kh);

  ap.P = MatrixXd::Zero(m * n, D * D);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      for (int ih = 0; ih < D; ++ih)
        for (int kh = 0; kh < D; ++kh) ap.P(j * n + i, ih * D + kh) = c.z(j, ih) * c.a(i, kh);

  // D_{(i,k)} = Σ_î a^T_{iî} ∂_î a^T_{kc} f_c
  ap.Dvec = MatrixXd::Zero(n * n, D);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int col = 0; col < D; ++col) ap.Dvec(i * n + k, col) = c.Xa(i, k, col);

  // E_{(j,i)} = Σ_î a^T_{iî} ∂_î z^T_{jc} f_c
  ap.Evec = MatrixXd::Zero(m * n, D);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      for (int col = 0; col < D; ++col) ap.Evec(j * n + i, col) = c.Xz(i, j, col);

  // C_{îk̂} = Σ_{i,k} [a^T_{iî} X_i(a^T_{kk̂}) − a^T_{ik̂} X_k(a^T_{iî})] X_k f
  ap.C = MatrixXd::Zero(D * D, D);
  for (int ih = 0; ih < D; ++ih)
    for (int kh = 0; kh < D; ++kh)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
          const double coef = c.a(i, ih) * c.Xa(i, k, kh) - c.a(i, kh) * c.Xa(k, i, ih);
          if (coef == 0.0) continue;
          for (int col = 0; col < D; ++col) ap.C(ih * D + kh, col) += coef * c.a(k, col);
        }

  // F_{îk̂} = Σ_{i,k} [a^T_{iî} X_i(z^T_{kk̂}) − a^T_{ik̂} Z_k(a^T_{iî})] Z_k f
  ap.F = MatrixXd::Zero(D * D, D);
  for (int ih = 0; ih < D; ++ih)
    for (int kh = 0; kh < D; ++kh)
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < m; ++k) {
          const double coef = c.a(i, ih) * c.Xz(i, k, kh) - c.a(i, kh) * c.Za(k, i, ih);
          if (coef == 0.0) continue;
          for (int col = 0; col < D; ++col) ap.F(ih * D + kh, col) += coef * c.z(k, col);
        }

  // G_{îĵ} = Σ_{i,j} [z^T_{jĵ} Z_j(a^T_{iî}) X_i f + z^T_{jĵ} a^T_{iî} Z_j(a^T_{ic}) f_c
  //                  − a^T_{iî} X_i(z^T_{jĵ}) Z_j f − a^T_{iî} z^T_{jĵ} X_i(z^T_{jc}) f_c]
  ap.G = MatrixXd::Zero(D * D, D);
  for (int ih = 0; ih < D; ++ih)
    for (int jh = 0; jh < D; ++jh)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
          for (int col = 0; col < D; ++col)
            ap.G(ih * D + jh, col) += c.z(j, jh) * c.Za(j, i, ih) * c.a(i, col) +
                                      c.z(j, jh) * c.a(i, ih) * c.Za(j, i, col) -
                                      c.a(i, ih) * c.Xz(i, j, jh) * c.z(j, col) -
                                      c.a(i, ih) * c.z(j, jh) * c.Xz(i, j, col);
  return ap;
}

LinearFormMap lambda_rhs(const AssembledPoint& ap, Mode mode) {
  LinearFormMap R = ap.C + ap.Q.transpose() * ap.Dvec;
  if (mode != Mode::horizontal && ap.m > 0) {
    R += ap.F + ap.P.transpose() * ap.Evec;
    if (mode == Mode::generalized) R += ap.G;
  }
  return R;
}

Eigen::MatrixXd symmetrizer(int D) {
  MatrixXd S = MatrixXd::Zero(D * D, D * D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      S(i * D + j, i * D + j) += 0.5;
      S(i * D + j, j * D + i) += 0.5;
    }
  return S;
}

double lambda_residual(const AssembledPoint& ap, const LambdaSolution& lam) {
  const MatrixXd K1 = ap.Q.transpose() * ap.Q;
  MatrixXd lhs = K1 * lam.L1;
  if (lam.L2.size() > 0) lhs += ap.P.transpose() * ap.P * lam.L2;
  return spectral_norm(symmetrizer(ap.D) * (lhs - lambda_rhs(ap, lam.mode)));
}

LambdaSolution solve_lambda(const AssembledPoint& ap, Mode mode) {
  const int D = ap.D, D2 = D * D;
  const bool with_z = mode != Mode::horizontal && ap.m > 0;
  const MatrixXd K1 = ap.Q.transpose() * ap.Q;
  MatrixXd A = K1;
  if (with_z) {
    A.resize(D2, 2 * D2);
    A << K1, ap.P.transpose() * ap.P;
  }
  const MatrixXd R = lambda_rhs(ap, mode);
  auto unpack = [&](const MatrixXd& sol, bool sym_only) {
    LambdaSolution s;
    s.mode = mode;
    s.L1 = sol.topRows(D2);
    if (with_z) s.L2 = sol.bottomRows(D2);
    s.symmetric_only = sym_only;
    s.residual = lambda_residual(ap, s);
    return s;
  };
  // The full equation pins Λ down the way the closed-form examples do; when it has no exact
  // solution only its symmetric part (the part paired with the Hessian) is imposed.
  LambdaSolution full = unpack(min_norm_solve(A, R), false);
  const double scale = 1.0 + spectral_norm(R);
  if (full.residual <= 1e-11 * scale) return full;
  const MatrixXd S = symmetrizer(D);
  LambdaSolution symm = unpack(min_norm_solve(S * A, S * R), true);
  return symm.residual < full.residual ? symm : full;
}

QuadraticForm derivative_sums(const AssembledPoint& ap, bool use_z) {
  const FieldJets& fj = ap.fields;
  const Coeffs c{fj};
  const int D = fj.D, n = fj.n;
  const int cols = use_z ? fj.m : fj.n;
  MatrixXd M = MatrixXd::Zero(D, D);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < cols; ++k) {
      VectorXd u = VectorXd::Zero(D);
      for (int col = 0; col < D; ++col) {
        double v = 0.0;
        for (int ip = 0; ip < D; ++ip) {
          const double aip = c.a(i, ip);
          for (int ih = 0; ih < D; ++ih) {
            // X_i X_i (W^T_{k,col})
            v += aip * c.da(i, ih, ip) * c.dw(use_z, k, col, ih);
            v += aip * c.a(i, ih) * c.ddw(use_z, k, col, ip, ih);
          }
        }
        for (int kh = 0; kh < D; ++kh) {
          const double wk = c.w(use_z, k, kh);
          if (wk == 0.0) continue;
          for (int ip = 0; ip < D; ++ip) {
            // W_k (X_i a^T_{i,col})
            v -= wk * c.da(i, ip, kh) * c.da(i, col, ip);
            v -= wk * c.a(i, ip) * c.dda(i, col, kh, ip);
          }
        }
        u(col) = v;
      }
      VectorXd wrow(D);
      for (int col = 0; col < D; ++col) wrow(col) = c.w(use_z, k, col);
      M += u * wrow.transpose();
    }
  return {sym(M), Basis::gradient};
}

QuadraticForm ricci_a(const AssembledPoint& ap, const LambdaSolution& lam) {
  const MatrixXd QL = ap.Q * lam.L1;
  MatrixXd M = -QL.transpose() * QL + ap.Dvec.transpose() * ap.Dvec;
  if (lam.mode != Mode::horizontal && ap.m > 0) {
    const MatrixXd PL = ap.P * lam.L2;
    M += -PL.transpose() * PL + ap.Evec.transpose() * ap.Evec;
  }
  M += derivative_sums(ap, false).M;
  return {sym(M), Basis::gradient};
}

QuadraticForm ricci_z(const AssembledPoint& ap) {
  if (ap.m == 0) return {MatrixXd::Zero(ap.D, ap.D), Basis::gradient};
  return derivative_sums(ap, true);
}

QuadraticForm ricci_psi(const AssembledPoint& ap, const Jet& log_weight) {
  const FieldJets& fj = ap.fields;
  const Coeffs c{fj};
  const int D = fj.D, n = fj.n, m = fj.m;
  MatrixXd M = MatrixXd::Zero(D, D);
  if (m == 0) return {M, Basis::gradient};
  // One half of the first-order part of div_z^Ψ(V_a) − div_a^Ψ(V_z). With
  // w_j = 2 Σ_i (X_i f) ψ_{ji}, ψ_{ji} = Z_j(a^T_i)·∇f, the z-half is
  // Σ_j [2 Σ_i (ψ_{ji}² + (X_i f) Z_jZ_j(a^T_i)·∇f) + (div z_j + Z_j log Ψ) w_j];
  // the a-half swaps the roles of a and z.
  auto half = [&](bool outer_z) {
    const int no = outer_z ? m : n;  // directions that differentiate
    const int ni = outer_z ? n : m;  // directions inside the Gram vector
    auto wo = [&](int j, int k) { return outer_z ? c.z(j, k) : c.a(j, k); };
    auto dwo = [&](int j, int k, int p) { return outer_z ? c.dz(j, k, p) : c.da(j, k, p); };
    auto wi = [&](int i, int k) { return outer_z ? c.a(i, k) : c.z(i, k); };
    auto dwi = [&](int i, int k, int p) { return outer_z ? c.da(i, k, p) : c.dz(i, k, p); };
    auto ddwi = [&](int i, int k, int p, int q) {
      return outer_z ? c.dda(i, k, p, q) : c.ddz(i, k, p, q);
    };
    MatrixXd H = MatrixXd::Zero(D, D);
    for (int j = 0; j < no; ++j) {
      double divj = 0.0, dlog = 0.0;
      for (int k = 0; k < D; ++k) {
        divj += dwo(j, k, k);
        dlog += wo(j, k) * log_weight.d1(k);
      }
      for (int i = 0; i < ni; ++i) {
        VectorXd psi = VectorXd::Zero(D), zz = VectorXd::Zero(D), xi(D);
        for (int p = 0; p < D; ++p) {
          xi(p) = wi(i, p);
          for (int q = 0; q < D; ++q) {
            psi(p) += wo(j, q) * dwi(i, p, q);
            for (int r = 0; r < D; ++r)
              zz(p) += wo(j, q) * (dwo(j, r, q) * dwi(i, p, r) + wo(j, r) * ddwi(i, p, r, q));
          }
        }
        H += 2.0 * psi * psi.transpose();
        H += 2.0 * xi * zz.transpose();
        H += 2.0 * (divj + dlog) * xi * psi.transpose();
      }
    }
    return H;
  };
  M = half(true) - half(false);
  return {sym(M), Basis::gradient};
}

QuadraticForm drift_correction(const AssembledPoint& ap, bool z_direction) {
  const FieldJets& fj = ap.fields;
  const Coeffs c{fj};
  const int D = fj.D;
  MatrixXd M = MatrixXd::Zero(D, D);
  if (!fj.has_drift) return {M, Basis::gradient};
  const int rows = z_direction ? fj.m : fj.n;
  for (int i = 0; i < rows; ++i) {
    VectorXd u = VectorXd::Zero(D), w(D);
    for (int col = 0; col < D; ++col) {
      w(col) = c.w(z_direction, i, col);
      for (int ih = 0; ih < D; ++ih) u(col) += c.w(z_direction, i, ih) * fj.b[col].d1(ih);
      for (int kh = 0; kh < D; ++kh)
        u(col) -= fj.b[kh].value() * c.dw(z_direction, i, col, kh);
    }
    M += -2.0 * u * w.transpose();
  }
  return {sym(M), Basis::gradient};
}

Eigen::VectorXd hessian_vector(const Jet& f) {
  const int D = f.dim();
  VectorXd X(D * D);
  for (int i = 0; i < D; ++i)
    for (int k = 0; k < D; ++k) X(i * D + k) = f.d2(i, k);
  return X;
}

Eigen::VectorXd gradient_vector(const Jet& f) {
  VectorXd g(f.dim());
  for (int i = 0; i < f.dim(); ++i) g(i) = f.d1(i);
  return g;
}

double hessian_square(const AssembledPoint& ap, const LambdaSolution& lam, const Jet& f) {
  const VectorXd X = hessian_vector(f);
  const VectorXd g = gradient_vector(f);
  double h = (ap.Q * (X + lam.L1 * g)).squaredNorm();
  if (lam.mode != Mode::horizontal && ap.m > 0) h += (ap.P * (X + lam.L2 * g)).squaredNorm();
  return h;
}

QuadraticForm ricci_total(const AssembledPoint& ap, const LambdaSolution& lam,
                          const DecompositionOptions& opt, const Jet& log_weight) {
  MatrixXd M = ricci_a(ap, lam).M;
  const bool with_z = opt.mode != Mode::horizontal && ap.m > 0;
  if (with_z) M += ricci_z(ap).M;
  if (opt.mode == Mode::generalized && ap.m > 0) M += ricci_psi(ap, log_weight).M;
  if (opt.drift && ap.fields.has_drift) {
    M += drift_correction(ap, false).M;
    if (with_z) M += drift_correction(ap, true).M;
  }
  return {sym(M), Basis::gradient};
}

DecompositionResult decomposition_residual(const GammaContext& ctx, const AssembledPoint& ap,
                                           const LambdaSolution& lam, const Jet& f,
                                           const DecompositionOptions& opt) {
  DecompositionResult r;
  r.lhs = gamma2_direct(ctx, f, opt.drift);
  if (opt.mode != Mode::horizontal && ap.m > 0) {
    r.lhs += gamma2_z_direct(ctx, f, opt.drift);
    if (opt.mode == Mode::generalized) r.lhs += div_correction(ctx, f);
  }
  const VectorXd g = gradient_vector(f);
  r.rhs = hessian_square(ap, lam, f);
  r.rhs += g.dot(ricci_total(ap, lam, opt, ctx.log_weight()).M * g);
  r.residual = std::fabs(r.lhs - r.rhs) / (1.0 + std::fabs(r.lhs));
  r.lambda_residual = lam.residual;
  return r;
}

DecompositionResult decomposition_residual(const Structure& s, const Expression& f,
                                           std::span<const double> x,
                                           const DecompositionOptions& opt) {
  const GammaContext ctx(s, x, opt.weight);
  const AssembledPoint ap = assemble(s, x);
  const LambdaSolution lam = solve_lambda(ap, opt.mode);
  return decomposition_residual(ctx, ap, lam, ctx.jet(f), opt);
}

}  // namespace gz
