#include "gz/fpe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include "gz/gamma.hpp"

namespace gz {

using Eigen::MatrixXd;

namespace {

constexpr double kLogFloor = 1e-300;

// Gauss-Legendre nodes and weights on [-1, 1].
constexpr double kGaussX[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                               0.8611363115940526};
constexpr double kGaussW[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                               0.3478548451374538};

double log_weight_at(const Structure& s, std::span<const double> x) {
  double lw = 0.0;
  if (s.log_vol) lw += eval_value(*s.log_vol, x);
  if (s.potential) lw -= eval_value(*s.potential, x);
  return lw;
}

MatrixXd matrix_at(const std::vector<Expression>& es, int rows, int cols,
                   std::span<const double> x) {
  MatrixXd M(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) M(r, c) = eval_value(es[r * cols + c], x);
  return M;
}

DensityField normalized(const Grid& g, std::vector<double> logv) {
  const double mx = *std::max_element(logv.begin(), logv.end());
  DensityField f{g, std::vector<double>(logv.size())};
  double total = 0.0;
  for (std::size_t i = 0; i < logv.size(); ++i) {
    f.rho[i] = std::exp(logv[i] - mx);
    total += f.rho[i];
  }
  total *= g.cell_volume();
  for (double& r : f.rho) r /= total;
  return f;
}

template <class F>
void parallel_for(std::size_t n, F&& fn) {
  const int nt = std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
  if (n < 4096 || nt == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += nt) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

Grid Grid::make(std::vector<double> lo, std::vector<double> hi, std::vector<int> cells,
                bool periodic) {
  Grid g;
  g.D = static_cast<int>(lo.size());
  if (g.D < 1 || g.D > 3) throw SchemaError("grid dimension must be 1, 2 or 3");
  if (hi.size() != lo.size() || cells.size() != lo.size())
    throw SchemaError("grid bounds and cell counts must have the same length");
  for (int d = 0; d < g.D; ++d) {
    if (!(hi[d] > lo[d])) throw SchemaError("grid axis " + std::to_string(d) + " is empty");
    if (cells[d] < 8) throw SchemaError("grid needs at least 8 cells per axis");
  }
  g.lo = std::move(lo);
  g.hi = std::move(hi);
  g.cells = std::move(cells);
  g.periodic.assign(g.D, periodic);
  return g;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int d = 0; d < D; ++d) v *= h(d);
  return v;
}

std::size_t Grid::size() const {
  std::size_t n = 1;
  for (int c : cells) n *= static_cast<std::size_t>(c);
  return n;
}

std::array<int, 3> Grid::multi_index(std::size_t idx) const {
  std::array<int, 3> mi{0, 0, 0};
  for (int d = 0; d < D; ++d) {
    mi[d] = static_cast<int>(idx % cells[d]);
    idx /= cells[d];
  }
  return mi;
}

std::size_t Grid::flat(const std::array<int, 3>& mi) const {
  std::size_t idx = 0;
  for (int d = D - 1; d >= 0; --d) idx = idx * cells[d] + mi[d];
  return idx;
}

std::vector<double> Grid::center(std::size_t idx) const {
  const auto mi = multi_index(idx);
  std::vector<double> x(D);
  for (int d = 0; d < D; ++d) x[d] = lo[d] + (mi[d] + 0.5) * h(d);
  return x;
}

std::optional<std::size_t> Grid::neighbor(std::size_t idx, int d, int dir) const {
  auto mi = multi_index(idx);
  mi[d] += dir;
  if (mi[d] < 0 || mi[d] >= cells[d]) {
    if (!periodic[d]) return std::nullopt;
    mi[d] = (mi[d] + cells[d]) % cells[d];
  }
  return flat(mi);
}

double DensityField::mass() const {
  double m = 0.0;
  for (double r : rho) m += r;
  return m * grid.cell_volume();
}

std::string TimeSeries::to_csv() const {
  std::ostringstream os;
  os << "t,mass,entropy,fisher_a,fisher_z,fisher_az\n";
  char buf[256];
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& s = samples[i];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", t[i], s.mass,
                  s.entropy, s.fisher_a, s.fisher_z, s.fisher_az);
    os << buf;
  }
  return os.str();
}

DensityField steady_state(const Structure& s, const Grid& grid) {
  if (s.dim() != grid.D) throw SchemaError("grid dimension does not match the structure");
  std::vector<double> lw(grid.size());
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = log_weight_at(s, grid.center(i));
  return normalized(grid, std::move(lw));
}

DensityField density_from_log(const Grid& grid, const Expression& log_density) {
  if (log_density.dim() != grid.D)
    throw SchemaError("density expression dimension does not match the grid");
  std::vector<double> lv(grid.size());
  for (std::size_t i = 0; i < lv.size(); ++i) lv[i] = eval_value(log_density, grid.center(i));
  return normalized(grid, std::move(lv));
}

FokkerPlanck::FokkerPlanck(const Structure& s, const Grid& grid)
    : s_(s), grid_(grid), steady_(gz::steady_state(s, grid)) {
  const int D = grid_.D;
  const std::size_t N = grid_.size();
  aT_.resize(N);
  zT_.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto x = grid_.center(i);
    aT_[i] = matrix_at(s_.a, D, s_.n, x).transpose();
    zT_[i] = s_.m > 0 ? MatrixXd(matrix_at(s_.z, D, s_.m, x).transpose()) : MatrixXd(0, D);
  }

  // The transport term only matters when the defect r is nonzero somewhere.
  double rmax = 0.0, rscale = 1.0;
  if (s_.has_drift()) {
    for (std::size_t i = 0; i < N; ++i) {
      const auto x = grid_.center(i);
      const FieldJets fj = eval_fields(s_, x, 1);
      for (const Jet& r : symmetric_defect(fj)) rmax = std::max(rmax, std::fabs(r.value()));
      for (const Jet& b : fj.b) rscale = std::max(rscale, std::fabs(b.value()));
    }
  }
  reversible_ = rmax <= 1e-12 * rscale;

  std::vector<double> diff_rate(D, 0.0), adv_rate(D, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    for (int d = 0; d < D; ++d) {
      const auto right = grid_.neighbor(i, d, +1);
      if (!right) continue;
      Face f;
      f.left = i;
      f.right = *right;
      f.d = d;
      auto xf = grid_.center(i);
      xf[d] += 0.5 * grid_.h(d);
      const MatrixXd aTf = matrix_at(s_.a, D, s_.n, xf).transpose();
      const MatrixXd A = aTf.transpose() * aTf;
      f.arow.setZero();
      for (int j = 0; j < D; ++j) f.arow(j) = A(d, j);
      f.w = std::sqrt(steady_.rho[f.left] * steady_.rho[f.right]);
      f.transport = 0.0;
      if (!reversible_) {
        // Face average of ρ* r·n by tensor Gauss quadrature over the other axes.
        std::vector<int> others;
        for (int e = 0; e < D; ++e)
          if (e != d) others.push_back(e);
        const int nq = others.empty() ? 1 : (others.size() == 1 ? 4 : 16);
        const double logC = std::log(steady_.rho[f.left]) - log_weight_at(s_, grid_.center(i));
        for (int q = 0; q < nq; ++q) {
          auto xq = xf;
          double wq = 1.0;
          int rem = q;
          for (int e : others) {
            const int k = rem % 4;
            rem /= 4;
            xq[e] += 0.5 * grid_.h(e) * kGaussX[k];
            wq *= 0.5 * kGaussW[k];
          }
          const FieldJets fj = eval_fields(s_, xq, 1);
          const double rn = symmetric_defect(fj)[d].value();
          f.transport += wq * std::exp(log_weight_at(s_, xq) + logC) * rn;
        }
      }
      double offdiag = 0.0;
      for (int j = 0; j < D; ++j)
        if (j != d) offdiag += std::fabs(A(d, j)) * grid_.h(d) / grid_.h(j);
      const double hd = grid_.h(d);
      const double wmin = std::min(steady_.rho[f.left], steady_.rho[f.right]);
      diff_rate[d] = std::max(diff_rate[d], (std::fabs(A(d, d)) + offdiag) * f.w / wmin / (hd * hd));
      if (!reversible_) adv_rate[d] = std::max(adv_rate[d], std::fabs(f.transport) / wmin / hd);
      faces_.push_back(f);
    }
  }
  double total = 0.0;
  for (int d = 0; d < D; ++d) total += 2.0 * diff_rate[d] + adv_rate[d];
  cfl_ = total > 0.0 ? 1.0 / total : std::numeric_limits<double>::infinity();
}

std::vector<double> FokkerPlanck::centered_gradient(const std::vector<double>& u,
                                                    std::size_t idx) const {
  std::vector<double> g(grid_.D, 0.0);
  for (int d = 0; d < grid_.D; ++d) {
    const auto r = grid_.neighbor(idx, d, +1);
    const auto l = grid_.neighbor(idx, d, -1);
    const double h = grid_.h(d);
    if (r && l)
      g[d] = (u[*r] - u[*l]) / (2.0 * h);
    else if (r)
      g[d] = (u[*r] - u[idx]) / h;
    else if (l)
      g[d] = (u[idx] - u[*l]) / h;
  }
  return g;
}

std::vector<double> FokkerPlanck::rate(const DensityField& rho) const {
  const int D = grid_.D;
  const std::size_t N = grid_.size();
  std::vector<double> hval(N), out(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) hval[i] = rho.rho[i] / steady_.rho[i];
  // Tangential derivatives at faces come from centered differences in the two adjacent cells.
  std::vector<std::vector<double>> grad;
  bool cross = false;
  for (const Face& f : faces_)
    for (int j = 0; j < D; ++j)
      if (j != f.d && f.arow(j) != 0.0) cross = true;
  if (cross) {
    grad.resize(N);
    for (std::size_t i = 0; i < N; ++i) grad[i] = centered_gradient(hval, i);
  }
  for (const Face& f : faces_) {
    const double hd = grid_.h(f.d);
    double flux = f.arow(f.d) * (hval[f.right] - hval[f.left]) / hd;
    if (cross)
      for (int j = 0; j < D; ++j)
        if (j != f.d) flux += f.arow(j) * 0.5 * (grad[f.left][j] + grad[f.right][j]);
    flux *= f.w;
    if (f.transport != 0.0) flux += f.transport * (f.transport < 0.0 ? hval[f.left] : hval[f.right]);
    out[f.left] += flux / hd;
    out[f.right] -= flux / hd;
  }
  return out;
}

DensityField FokkerPlanck::step(const DensityField& rho, double dt) const {
  if (dt > cfl_ * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "time step " << dt << " exceeds the stability limit " << cfl_;
    throw CFLViolation(os.str());
  }
  const std::vector<double> r = rate(rho);
  DensityField next = rho;
  for (std::size_t i = 0; i < r.size(); ++i) {
    next.rho[i] += dt * r[i];
    if (!std::isfinite(next.rho[i])) throw NonFinite("non-finite density after a step");
  }
  return next;
}

Functionals FokkerPlanck::functionals(const DensityField& rho) const {
  const std::size_t N = grid_.size();
  const double vol = grid_.cell_volume();
  Functionals out;
  std::vector<double> logh(N);
  for (std::size_t i = 0; i < N; ++i) {
    double r = rho.rho[i];
    if (r <= 0.0) {
      r = kLogFloor;
      out.floored = true;
    }
    logh[i] = std::log(r) - std::log(steady_.rho[i]);
  }
  for (std::size_t i = 0; i < N; ++i) {
    const double r = rho.rho[i];
    out.mass += r * vol;
    if (r > 0.0) out.entropy += r * logh[i] * vol;
    const auto g = centered_gradient(logh, i);
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), grid_.D);
    const double ra = r > 0.0 ? r : 0.0;
    out.fisher_a += (aT_[i] * gv).squaredNorm() * ra * vol;
    if (zT_[i].rows() > 0) out.fisher_z += (zT_[i] * gv).squaredNorm() * ra * vol;
  }
  out.fisher_az = out.fisher_a + out.fisher_z;
  return out;
}

TimeSeries simulate(const FokkerPlanck& op, const DensityField& rho0, double T, double dt,
                    int sample_every) {
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("T and dt must be positive");
  if (sample_every < 1) sample_every = 1;
  const long steps = std::max(1L, static_cast<long>(std::ceil(T / dt - 1e-9)));
  const double h = T / steps;
  if (h > op.cfl_limit() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "time step " << h << " exceeds the stability limit " << op.cfl_limit();
    throw CFLViolation(os.str());
  }
  TimeSeries ts;
  DensityField rho = rho0;
  ts.t.push_back(0.0);
  ts.samples.push_back(op.functionals(rho));
  for (long k = 1; k <= steps; ++k) {
    try {
      rho = op.step(rho, h);
    } catch (const NonFinite& e) {
      ts.aborted = true;
      ts.error = e.what();
      return ts;
    }
    if (k % sample_every == 0 || k == steps) {
      ts.t.push_back(k * h);
      ts.samples.push_back(op.functionals(rho));
    }
  }
  return ts;
}

double fit_decay(const TimeSeries& ts, SeriesField field) {
  auto value = [&](const Functionals& f) {
    switch (field) {
      case SeriesField::entropy:
        return f.entropy;
      case SeriesField::fisher_a:
        return f.fisher_a;
      case SeriesField::fisher_z:
        return f.fisher_z;
      case SeriesField::fisher_az:
        return f.fisher_az;
    }
    return 0.0;
  };
  std::vector<double> t, y;
  for (std::size_t i = ts.t.size() / 2; i < ts.t.size(); ++i) {
    const double v = value(ts.samples[i]);
    if (v > 0.0) {
      t.push_back(ts.t[i]);
      y.push_back(std::log(v));
    }
  }
  if (t.size() < 2) return 0.0;
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= t.size();
  my /= t.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - mt) * (y[i] - my);
    sxx += (t[i] - mt) * (t[i] - mt);
  }
  return sxx > 0.0 ? -sxy / sxx : 0.0;
}

ZlsiResult check_zlsi(const FokkerPlanck& op, const DensityField& rho, double kappa) {
  ZlsiResult r;
  if (!(kappa > 0.0)) return r;
  const Functionals f = op.functionals(rho);
  r.applicable = true;
  r.lhs = f.entropy;
  r.rhs = (f.fisher_a + f.fisher_z) / (2.0 * kappa);
  r.holds = r.lhs <= r.rhs;
  return r;
}

WeakIdentityResult weak_identity_check(const Structure& s, const Expression& h,
                                       const Expression& log_rho, const Grid& grid) {
  if (s.dim() != grid.D) throw SchemaError("grid dimension does not match the structure");
  for (int d = 0; d < grid.D; ++d)
    if (!grid.periodic[d]) throw SchemaError("the weak identity check needs a periodic grid");
  const int D = grid.D;
  const std::size_t N = grid.size();
  const double vol = grid.cell_volume();
  std::vector<double> lhs_cell(N), g(N);
  std::vector<std::vector<double>> flux(N, std::vector<double>(D));
  parallel_for(N, [&](std::size_t i) {
    const auto x = grid.center(i);
    const GammaContext ctx(s, x);
    const Jet hj = ctx.jet(h);
    const double rho = std::exp(eval_value(log_rho, x));
    g[i] = std::exp(hj.value());
    const double t1 = gamma1(ctx, hj, gamma1_z_jet(ctx, hj, hj));
    const double t2 = gamma1_z(ctx, hj, gamma1_jet(ctx, hj, hj));
    lhs_cell[i] = (t1 - t2) * g[i] * rho;
    // F = ρ (zz^T V_a − aa^T V_z)
    const FieldJets& fj = ctx.fields();
    const auto Va = gradient_gram_vector(ctx, hj, false);
    const auto Vz = gradient_gram_vector(ctx, hj, true);
    std::vector<double> F(D, 0.0);
    for (int j = 0; j < fj.m; ++j) {
      double zv = 0.0;
      for (int k = 0; k < D; ++k) zv += fj.zt(j, k).value() * Va[k].value();
      for (int k = 0; k < D; ++k) F[k] += fj.zt(j, k).value() * zv;
    }
    for (int i2 = 0; i2 < fj.n; ++i2) {
      double av = 0.0;
      for (int k = 0; k < D; ++k) av += fj.at(i2, k).value() * Vz[k].value();
      for (int k = 0; k < D; ++k) F[k] -= fj.at(i2, k).value() * av;
    }
    for (int k = 0; k < D; ++k) flux[i][k] = rho * F[k];
  });
  WeakIdentityResult r;
  for (std::size_t i = 0; i < N; ++i) {
    double div = 0.0;
    for (int d = 0; d < D; ++d) {
      const std::size_t R = *grid.neighbor(i, d, +1), L = *grid.neighbor(i, d, -1);
      div += (flux[R][d] - flux[L][d]) / (2.0 * grid.h(d));
    }
    r.lhs += lhs_cell[i] * vol;
    r.rhs += div * g[i] * vol;
  }
  r.gap = std::fabs(r.lhs - r.rhs) / (1.0 + std::fabs(r.lhs));
  return r;
}

}  // namespace gz
