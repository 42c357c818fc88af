#include "gz/jet.hpp"

#include <cmath>
#include <stdexcept>

namespace gz {

namespace {

struct Layout {
  int count[kMaxOrder + 1] = {};
  int idx2[kMaxDim][kMaxDim] = {};
  int idx3[kMaxDim][kMaxDim][kMaxDim] = {};
  int npair = 0, ntriple = 0;
  int pair[kMaxDim * (kMaxDim + 1) / 2][2] = {};
  int triple[kMaxDim * (kMaxDim + 1) * (kMaxDim + 2) / 6][3] = {};
};

Layout make_layout(int d) {
  Layout L;
  int pos = 1 + d;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      L.idx2[i][j] = L.idx2[j][i] = pos;
      L.pair[L.npair][0] = i;
      L.pair[L.npair][1] = j;
      ++L.npair;
      ++pos;
    }
  const int o3 = pos;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      for (int k = j; k < d; ++k) {
        const int p[6][3] = {{i, j, k}, {i, k, j}, {j, i, k}, {j, k, i}, {k, i, j}, {k, j, i}};
        for (auto& q : p) L.idx3[q[0]][q[1]][q[2]] = pos;
        L.triple[L.ntriple][0] = i;
        L.triple[L.ntriple][1] = j;
        L.triple[L.ntriple][2] = k;
        ++L.ntriple;
        ++pos;
      }
  L.count[0] = 1;
  L.count[1] = 1 + d;
  L.count[2] = o3;
  L.count[3] = pos;
  return L;
}

const Layout& layout(int d) {
  static const auto tables = [] {
    std::array<Layout, kMaxDim + 1> t{};
    for (int k = 1; k <= kMaxDim; ++k) t[k] = make_layout(k);
    return t;
  }();
  return tables[d];
}

}  // namespace

Jet::Jet(int dim, int order) : dim_(dim), order_(order) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("jet dimension out of range");
  if (order < 0 || order > kMaxOrder) throw std::invalid_argument("jet order out of range");
}

Jet Jet::constant(int dim, int order, double v) {
  Jet j(dim, order);
  j.c_[0] = v;
  return j;
}

Jet Jet::variable(int dim, int order, int index, double v) {
  Jet j(dim, order);
  j.c_[0] = v;
  if (order >= 1) j.c_[1 + index] = 1.0;
  return j;
}

int Jet::size() const { return layout(dim_).count[order_]; }

double Jet::d1(int i) const { return order_ >= 1 ? c_[1 + i] : 0.0; }
double Jet::d2(int i, int j) const { return order_ >= 2 ? c_[layout(dim_).idx2[i][j]] : 0.0; }
double Jet::d3(int i, int j, int k) const {
  return order_ >= 3 ? c_[layout(dim_).idx3[i][j][k]] : 0.0;
}
double& Jet::d1_ref(int i) { return c_[1 + i]; }
double& Jet::d2_ref(int i, int j) { return c_[layout(dim_).idx2[i][j]]; }
double& Jet::d3_ref(int i, int j, int k) { return c_[layout(dim_).idx3[i][j][k]]; }

Jet Jet::truncated(int order) const {
  if (order >= order_) return *this;
  Jet r(dim_, order);
  const int n = r.size();
  for (int i = 0; i < n; ++i) r.c_[i] = c_[i];
  return r;
}

Jet Jet::partial(int k) const {
  if (order_ == 0) throw std::invalid_argument("cannot differentiate an order-0 jet");
  const Layout& L = layout(dim_);
  Jet r(dim_, order_ - 1);
  r.c_[0] = c_[1 + k];
  if (r.order_ >= 1)
    for (int i = 0; i < dim_; ++i) r.c_[1 + i] = c_[L.idx2[k][i]];
  if (r.order_ >= 2)
    for (int p = 0; p < L.npair; ++p)
      r.c_[L.idx2[L.pair[p][0]][L.pair[p][1]]] = c_[L.idx3[k][L.pair[p][0]][L.pair[p][1]]];
  return r;
}

bool Jet::all_finite() const {
  const int n = size();
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(c_[i])) return false;
  return true;
}

Jet Jet::operator-() const {
  Jet r = *this;
  const int n = size();
  for (int i = 0; i < n; ++i) r.c_[i] = -c_[i];
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  if (o.order_ < order_) *this = truncated(o.order_);
  const int n = size();
  for (int i = 0; i < n; ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  if (o.order_ < order_) *this = truncated(o.order_);
  const int n = size();
  for (int i = 0; i < n; ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::operator*=(double s) {
  const int n = size();
  for (int i = 0; i < n; ++i) c_[i] *= s;
  return *this;
}

Jet operator*(const Jet& f, const Jet& g) {
  const int d = f.dim_;
  const int order = f.order_ < g.order_ ? f.order_ : g.order_;
  const Layout& L = layout(d);
  Jet h(d, order);
  const double f0 = f.c_[0], g0 = g.c_[0];
  h.c_[0] = f0 * g0;
  if (order >= 1)
    for (int i = 0; i < d; ++i) h.c_[1 + i] = f.c_[1 + i] * g0 + f0 * g.c_[1 + i];
  if (order >= 2)
    for (int p = 0; p < L.npair; ++p) {
      const int i = L.pair[p][0], j = L.pair[p][1];
      const int ij = L.idx2[i][j];
      h.c_[ij] = f.c_[ij] * g0 + f.c_[1 + i] * g.c_[1 + j] + f.c_[1 + j] * g.c_[1 + i] +
                 f0 * g.c_[ij];
    }
  if (order >= 3)
    for (int t = 0; t < L.ntriple; ++t) {
      const int i = L.triple[t][0], j = L.triple[t][1], k = L.triple[t][2];
      const int ijk = L.idx3[i][j][k];
      const int ij = L.idx2[i][j], ik = L.idx2[i][k], jk = L.idx2[j][k];
      h.c_[ijk] = f.c_[ijk] * g0 + f.c_[ij] * g.c_[1 + k] + f.c_[ik] * g.c_[1 + j] +
                  f.c_[jk] * g.c_[1 + i] + f.c_[1 + i] * g.c_[jk] + f.c_[1 + j] * g.c_[ik] +
                  f.c_[1 + k] * g.c_[ij] + f0 * g.c_[ijk];
    }
  return h;
}

Jet Jet::compose(double f0, double f1, double f2, double f3) const {
  const int d = dim_;
  const Layout& L = layout(d);
  Jet h(d, order_);
  h.c_[0] = f0;
  if (order_ >= 1)
    for (int i = 0; i < d; ++i) h.c_[1 + i] = f1 * c_[1 + i];
  if (order_ >= 2)
    for (int p = 0; p < L.npair; ++p) {
      const int i = L.pair[p][0], j = L.pair[p][1];
      const int ij = L.idx2[i][j];
      h.c_[ij] = f2 * c_[1 + i] * c_[1 + j] + f1 * c_[ij];
    }
  if (order_ >= 3)
    for (int t = 0; t < L.ntriple; ++t) {
      const int i = L.triple[t][0], j = L.triple[t][1], k = L.triple[t][2];
      const double ui = c_[1 + i], uj = c_[1 + j], uk = c_[1 + k];
      h.c_[L.idx3[i][j][k]] =
          f3 * ui * uj * uk +
          f2 * (c_[L.idx2[i][j]] * uk + c_[L.idx2[i][k]] * uj + c_[L.idx2[j][k]] * ui) +
          f1 * c_[L.idx3[i][j][k]];
    }
  return h;
}

Jet reciprocal(const Jet& u) {
  const double v = u.value();
  const double r = 1.0 / v;
  return u.compose(r, -r * r, 2 * r * r * r, -6 * r * r * r * r);
}

Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

Jet sin(const Jet& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  return u.compose(s, c, -s, -c);
}

Jet cos(const Jet& u) {
  const double s = std::sin(u.value()), c = std::cos(u.value());
  return u.compose(c, -s, -c, s);
}

Jet tan(const Jet& u) {
  const double t = std::tan(u.value());
  const double s2 = 1 + t * t;
  return u.compose(t, s2, 2 * t * s2, 2 * s2 * (1 + 3 * t * t));
}

Jet exp(const Jet& u) {
  const double e = std::exp(u.value());
  return u.compose(e, e, e, e);
}

Jet log(const Jet& u) {
  const double v = u.value();
  const double r = 1.0 / v;
  return u.compose(std::log(v), r, -r * r, 2 * r * r * r);
}

Jet sqrt(const Jet& u) {
  const double s = std::sqrt(u.value());
  const double r = 1.0 / s;
  return u.compose(s, 0.5 * r, -0.25 * r * r * r, 0.375 * r * r * r * r * r);
}

Jet sinh(const Jet& u) {
  const double s = std::sinh(u.value()), c = std::cosh(u.value());
  return u.compose(s, c, s, c);
}

Jet cosh(const Jet& u) {
  const double s = std::sinh(u.value()), c = std::cosh(u.value());
  return u.compose(c, s, c, s);
}

Jet tanh(const Jet& u) {
  const double t = std::tanh(u.value());
  const double s = 1 - t * t;
  return u.compose(t, s, -2 * t * s, s * (6 * t * t - 2));
}

Jet ipow(const Jet& u, int n) {
  const double v = u.value();
  double f[4];
  double falling = 1.0;
  for (int j = 0; j < 4; ++j) {
    f[j] = falling == 0.0 ? 0.0 : falling * std::pow(v, n - j);
    falling *= static_cast<double>(n - j);
  }
  return u.compose(f[0], f[1], f[2], f[3]);
}

}  // namespace gz
