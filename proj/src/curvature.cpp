#include "gz/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace gz {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TotalRicci total_ricci(const Structure& s, std::span<const double> x,
                       const CurvatureOptions& opt) {
  const AssembledPoint ap = assemble(s, x);
  TotalRicci t;
  t.lambda = solve_lambda(ap, opt.mode);
  const Jet logw =
      opt.weight.custom_log ? eval_jet(*opt.weight.custom_log, x, 3) : ap.fields.logw;
  t.form = ricci_total(ap, t.lambda, {opt.mode, opt.drift, opt.weight}, logw);
  return t;
}

Eigen::MatrixXd u_basis(const AssembledPoint& ap, Mode mode) {
  const bool with_z = mode != Mode::horizontal && ap.m > 0;
  MatrixXd W(ap.n + (with_z ? ap.m : 0), ap.D);
  W.topRows(ap.n) = ap.aT;
  if (with_z) W.bottomRows(ap.m) = ap.zT;
  return W;
}

UForm to_u_form(const Eigen::MatrixXd& W, const QuadraticForm& M) {
  Eigen::JacobiSVD<MatrixXd> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(0) > 0 && s(i) > 1e-9 * s(0)) ++rank;
  if (rank < W.rows())
    throw RankError("[a^T; z^T] has rank " + std::to_string(rank) + " < " +
                    std::to_string(W.rows()));
  VectorXd inv = s.cwiseInverse();
  const MatrixXd Wpinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  UForm u;
  u.A = Wpinv.transpose() * M.M * Wpinv;
  u.A = 0.5 * (u.A + u.A.transpose());
  u.residual = (M.M - W.transpose() * u.A * W).norm();
  return u;
}

UForm to_u_form(const Structure& s, std::span<const double> x, const QuadraticForm& M,
                Mode mode) {
  return to_u_form(u_basis(assemble(s, x), mode), M);
}

double pencil_min(const Eigen::MatrixXd& M, const Eigen::MatrixXd& G) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eg(G);
  const VectorXd& lam = eg.eigenvalues();
  const double lmax = lam.cwiseAbs().maxCoeff();
  if (lmax == 0.0) return -std::numeric_limits<double>::infinity();
  std::vector<int> range, kernel;
  for (int i = 0; i < lam.size(); ++i) (lam(i) > 1e-9 * lmax ? range : kernel).push_back(i);
  const MatrixXd U = eg.eigenvectors();
  MatrixXd Ur(U.rows(), range.size()), Uk(U.rows(), kernel.size());
  for (std::size_t i = 0; i < range.size(); ++i) Ur.col(i) = U.col(range[i]);
  for (std::size_t i = 0; i < kernel.size(); ++i) Uk.col(i) = U.col(kernel[i]);
  MatrixXd S = Ur.transpose() * M * Ur;
  const double scale = 1.0 + M.norm();
  if (!kernel.empty()) {
    const MatrixXd Mkk = Uk.transpose() * M * Uk;
    const MatrixXd Mrk = Ur.transpose() * M * Uk;
    Eigen::SelfAdjointEigenSolver<MatrixXd> ek(0.5 * (Mkk + Mkk.transpose()));
    const VectorXd& mu = ek.eigenvalues();
    const double tol = 1e-10 * scale;
    if (mu.minCoeff() < -tol) return -std::numeric_limits<double>::infinity();
    // Schur complement over the positive part of Mkk; the null part must not couple to the range.
    const MatrixXd V = ek.eigenvectors();
    for (int i = 0; i < mu.size(); ++i) {
      const VectorXd coupling = Mrk * V.col(i);
      if (mu(i) > tol)
        S -= coupling * coupling.transpose() / mu(i);
      else if (coupling.norm() > 1e-9 * scale)
        return -std::numeric_limits<double>::infinity();
    }
  }
  VectorXd ginv(range.size());
  for (std::size_t i = 0; i < range.size(); ++i) ginv(i) = 1.0 / std::sqrt(lam(range[i]));
  const MatrixXd T = ginv.asDiagonal() * S * ginv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> et(0.5 * (T + T.transpose()));
  return et.eigenvalues()(0);
}

KappaResult kappa_at(const Structure& s, std::span<const double> x,
                     const CurvatureOptions& opt) {
  const AssembledPoint ap = assemble(s, x);
  KappaResult r;
  const LambdaSolution lam = solve_lambda(ap, opt.mode);
  const Jet logw =
      opt.weight.custom_log ? eval_jet(*opt.weight.custom_log, x, 3) : ap.fields.logw;
  const QuadraticForm M = ricci_total(ap, lam, {opt.mode, opt.drift, opt.weight}, logw);
  r.lambda_residual = lam.residual;
  const MatrixXd W = u_basis(ap, opt.mode);
  bool use_u = true;
  try {
    const UForm u = to_u_form(W, M);
    r.A = u.A;
    r.factorization_residual = u.residual;
    use_u = u.residual <= 1e-9 * (1.0 + M.M.norm());
  } catch (const RankError&) {
    use_u = false;
    r.factorization_residual = std::numeric_limits<double>::quiet_NaN();
  }
  if (use_u) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> e(r.A);
    r.kappa = e.eigenvalues()(0);
  } else {
    r.used_pencil = true;
    r.kappa = pencil_min(M.M, W.transpose() * W);
  }
  return r;
}

CdDimension cd_dimension(const AssembledPoint& ap, Mode mode) {
  CdDimension d;
  d.d_diag = ap.n;
  auto nonzero_rows = [](const MatrixXd& M) {
    int c = 0;
    for (int i = 0; i < M.rows(); ++i)
      if (M.row(i).cwiseAbs().maxCoeff() > 0.0) ++c;
    return c;
  };
  d.d_all = nonzero_rows(ap.Q);
  if (mode != Mode::horizontal && ap.m > 0) d.d_all += nonzero_rows(ap.P);
  return d;
}

std::vector<std::vector<double>> grid_nodes(const GridSpec& g) {
  const std::size_t D = g.lo.size();
  std::vector<std::vector<double>> axes(D);
  for (std::size_t k = 0; k < D; ++k) {
    const int r = g.res[k];
    for (int i = 0; i < r; ++i)
      axes[k].push_back(r == 1 ? 0.5 * (g.lo[k] + g.hi[k])
                               : g.lo[k] + (g.hi[k] - g.lo[k]) * i / (r - 1));
  }
  std::vector<std::vector<double>> pts;
  std::vector<int> idx(D, 0);
  for (;;) {
    std::vector<double> p(D);
    for (std::size_t k = 0; k < D; ++k) p[k] = axes[k][idx[k]];
    pts.push_back(p);
    std::size_t k = 0;
    while (k < D && ++idx[k] >= g.res[k]) idx[k++] = 0;
    if (k == D) break;
  }
  return pts;
}

namespace {

PointRecord analyze_point(const Structure& s, const std::vector<double>& x,
                          const CurvatureOptions& opt, int spotcheck_fns, unsigned seed) {
  PointRecord rec;
  rec.x = x;
  try {
    const KappaResult k = kappa_at(s, x, opt);
    rec.kappa = k.kappa;
    rec.lambda_residual = k.lambda_residual;
    rec.factorization_residual = k.factorization_residual;
    rec.used_pencil = k.used_pencil;
    const AssembledPoint ap = assemble(s, x);
    rec.dims = cd_dimension(ap, opt.mode);
    if (spotcheck_fns > 0) {
      const GammaContext ctx(s, x, opt.weight);
      const LambdaSolution lam = solve_lambda(ap, opt.mode);
      std::mt19937_64 rng(seed);
      for (int i = 0; i < spotcheck_fns; ++i) {
        const Expression f = random_polynomial(s.variables, 4, rng);
        const auto r = decomposition_residual(ctx, ap, lam, ctx.jet(f),
                                              {opt.mode, opt.drift, opt.weight});
        rec.decomposition_residual = std::max(rec.decomposition_residual, r.residual);
      }
    }
  } catch (const DomainError& e) {
    rec.skipped = true;
    rec.skip_reason = e.what();
  }
  return rec;
}

}  // namespace

CurvatureReport scan(const Structure& s, const GridSpec& grid, const CurvatureOptions& opt,
                     int spotcheck_fns, unsigned seed, int threads) {
  CurvatureReport rep;
  rep.mode = opt.mode;
  rep.drift = opt.drift;
  rep.grid = grid;
  rep.tol_lambda = opt.tol_lambda;
  const auto nodes = grid_nodes(grid);
  rep.points.resize(nodes.size());
  int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::clamp(nthreads, 1, static_cast<int>(std::max<std::size_t>(1, nodes.size())));
  auto work = [&](int t) {
    for (std::size_t i = t; i < nodes.size(); i += nthreads)
      rep.points[i] = analyze_point(s, nodes[i], opt, spotcheck_fns,
                                    seed + static_cast<unsigned>(i) * 7919u);
  };
  if (nthreads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  rep.min_kappa = std::numeric_limits<double>::infinity();
  int ok = 0, evaluated = 0;
  for (const auto& p : rep.points) {
    if (p.skipped) {
      ++rep.skipped;
      continue;
    }
    ++evaluated;
    if (p.lambda_residual <= opt.tol_lambda) ++ok;
    if (p.kappa < rep.min_kappa) {
      rep.min_kappa = p.kappa;
      rep.argmin = p.x;
    }
  }
  rep.fraction_lambda_ok = evaluated > 0 ? static_cast<double>(ok) / evaluated : 0.0;
  return rep;
}

}  // namespace gz
