#pragma once

#include <memory>
#include <utility>

namespace pss {

/// Strictly increasing scalar gain function with closed-form inverse.
///
/// The representable family is power laws c * r^p (c, p > 0) and finite
/// compositions thereof. Every member vanishes at zero, is strictly
/// increasing on [0, inf), and is radially unbounded, so inverses exist
/// on all of [0, inf) and are again members of the family.
class ComparisonFn {
 public:
  enum class Kind { kPowerLaw, kComposition };

  ComparisonFn();  // identity: 1 * r^1

  /// c * r^p with c > 0, p > 0.
  static ComparisonFn power_law(double c, double p);
  static ComparisonFn identity();

  /// Pointwise composition outer(inner(r)).
  static ComparisonFn composition(ComparisonFn outer, ComparisonFn inner);

  double eval(double r) const;
  double operator()(double r) const { return eval(r); }

  /// Value v >= 0 such that eval(inverse(v)) == v.
  double inverse(double v) const;

  /// The inverse as a function object of the same family.
  ComparisonFn inverse_fn() const;

  /// s * f(r) for s > 0, again a member of the family.
  ComparisonFn scaled(double s) const;

  Kind kind() const;
  // Power-law accessors; throw for compositions.
  double coefficient() const;
  double exponent() const;
  // Composition accessors; throw for power laws.
  ComparisonFn outer() const;
  ComparisonFn inner() const;

 private:
  struct Node;
  explicit ComparisonFn(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Free-function spelling of ComparisonFn::composition.
ComparisonFn compose(const ComparisonFn& outer, const ComparisonFn& inner);

/// Splits alpha into (alpha_p, alpha_q) = (fraction * alpha, (1 - fraction) * alpha),
/// so that alpha_p + alpha_q == alpha pointwise. fraction must lie in (0, 1).
std::pair<ComparisonFn, ComparisonFn> split_alpha(const ComparisonFn& alpha, double fraction);

/// Decaying bound beta(r, s) = amplitude(r) * exp(-decay_rate * s):
/// strictly increasing in r for fixed s, decreasing to zero in s for fixed r.
struct KLBound {
  ComparisonFn amplitude;
  double decay_rate = 1.0;  // 1/seconds

  double eval(double r, double s) const;
};

}  // namespace pss
