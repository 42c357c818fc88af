#ifndef GZ_EXPR_HPP
#define GZ_EXPR_HPP

#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gz/errors.hpp"
#include "gz/jet.hpp"

namespace gz {

enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Sinh, Cosh, Tanh, Pow };

struct Node {
  enum class Kind { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
  Kind kind = Kind::Const;
  double value = 0.0;      // Const
  int var = -1;            // Var
  Fn fn = Fn::Sin;         // Call
  bool int_exponent = false;  // Pow (and pow(a,b)) with a constant integral exponent
  int exponent = 0;
  std::vector<std::shared_ptr<const Node>> kids;
};

using NodePtr = std::shared_ptr<const Node>;

/// A parsed scalar field over an ordered list of coordinates. Immutable and cheap to copy.
class Expression {
 public:
  Expression() = default;
  Expression(NodePtr root, std::vector<std::string> variables, std::string source);

  static Expression constant(double v, std::vector<std::string> variables);

  const NodePtr& root() const { return root_; }
  const std::vector<std::string>& variables() const { return *vars_; }
  int dim() const { return static_cast<int>(vars_->size()); }
  const std::string& source() const { return source_; }
  bool is_zero_constant() const;

  /// Canonical fully parenthesized text; parsing it back gives a structurally identical tree.
  std::string to_string() const;

  /// Replace each variable i by `replacement[i]` (all over a common coordinate list).
  Expression substitute(const std::vector<Expression>& replacement) const;

 private:
  NodePtr root_;
  std::shared_ptr<const std::vector<std::string>> vars_;
  std::string source_;
};

Expression parse(std::string_view source, const std::vector<std::string>& variables,
                 const std::map<std::string, double>& params = {});

/// Agreement expected between eval_jet and central differences, as |jet − fd| / max(1, |fd|).
/// Each order is differenced from the order below it (step 1e-5; order 3 extrapolates steps
/// 1e-4 and 5e-5).
struct JetTolerance {
  static constexpr double order1 = 1e-6;
  static constexpr double order2 = 1e-6;
  static constexpr double order3 = 1e-4;
};

Jet eval_jet(const Expression& e, std::span<const double> point, int order);
double eval_value(const Expression& e, std::span<const double> point);

bool structurally_equal(const NodePtr& a, const NodePtr& b);
std::string node_to_string(const NodePtr& n, const std::vector<std::string>& vars);

/// sum_k c_k e_k, skipping zero coefficients. All terms share one coordinate list.
Expression linear_combination(const std::vector<double>& coeffs,
                              const std::vector<Expression>& terms,
                              const std::vector<std::string>& variables);

/// Polynomial of total degree ≤ degree with every monomial present and coefficients in [-1, 1].
Expression random_polynomial(const std::vector<std::string>& variables, int degree,
                             std::mt19937_64& rng);

}  // namespace gz

#endif
