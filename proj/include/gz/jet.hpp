#ifndef GZ_JET_HPP
#define GZ_JET_HPP

#include <array>

namespace gz {

inline constexpr int kMaxDim = 6;
inline constexpr int kMaxOrder = 3;

/// Truncated Taylor expansion of a scalar field at a point: value and all partial
/// derivatives up to `order`. Mixed partials are stored once per multiset of indices,
/// so permuted access is bit-identical.
class Jet {
 public:
  static constexpr int kCapacity = 1 + kMaxDim + kMaxDim * (kMaxDim + 1) / 2 +
                                   kMaxDim * (kMaxDim + 1) * (kMaxDim + 2) / 6;

  Jet() = default;
  Jet(int dim, int order);

  static Jet constant(int dim, int order, double v);
  static Jet variable(int dim, int order, int index, double v);

  int dim() const { return dim_; }
  int order() const { return order_; }
  /// Number of stored coefficients.
  int size() const;

  double value() const { return c_[0]; }
  double d1(int i) const;
  double d2(int i, int j) const;
  double d3(int i, int j, int k) const;

  double& value_ref() { return c_[0]; }
  double& d1_ref(int i);
  double& d2_ref(int i, int j);
  double& d3_ref(int i, int j, int k);

  double coeff(int idx) const { return c_[idx]; }
  double& coeff(int idx) { return c_[idx]; }

  Jet truncated(int order) const;
  /// The jet of the partial derivative along coordinate k (one order lower).
  Jet partial(int k) const;
  bool all_finite() const;

  /// Chain rule phi(u) given phi and its first three derivatives at u = value().
  Jet compose(double f0, double f1, double f2, double f3) const;

  Jet operator-() const;
  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(double s);
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }

 private:
  int dim_ = 0;
  int order_ = 0;
  std::array<double, kCapacity> c_{};
};

/// Multiplicative inverse; the caller guarantees value() != 0.
Jet reciprocal(const Jet& u);
Jet operator/(const Jet& a, const Jet& b);

Jet sin(const Jet& u);
Jet cos(const Jet& u);
Jet tan(const Jet& u);
Jet exp(const Jet& u);
Jet log(const Jet& u);
Jet sqrt(const Jet& u);
Jet sinh(const Jet& u);
Jet cosh(const Jet& u);
Jet tanh(const Jet& u);
Jet ipow(const Jet& u, int n);

}  // namespace gz

#endif
