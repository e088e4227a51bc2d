#include "pss/comparison.hpp"

#include <cmath>
#include <stdexcept>

namespace pss {

struct ComparisonFn::Node {
  Kind kind = Kind::kPowerLaw;
  double c = 1.0;
  double p = 1.0;
  std::shared_ptr<const Node> outer;  // composition only
  std::shared_ptr<const Node> inner;

  Node(double c_in, double p_in) : kind(Kind::kPowerLaw), c(c_in), p(p_in) {}
  Node(std::shared_ptr<const Node> o, std::shared_ptr<const Node> i)
      : kind(Kind::kComposition), outer(std::move(o)), inner(std::move(i)) {}

  double eval(double r) const {
    if (kind == Kind::kPowerLaw) return c * std::pow(r, p);
    return outer->eval(inner->eval(r));
  }

  double inverse(double v) const {
    if (kind == Kind::kPowerLaw) return std::pow(v / c, 1.0 / p);
    return inner->inverse(outer->inverse(v));
  }
};

ComparisonFn::ComparisonFn() : node_(std::make_shared<const Node>(1.0, 1.0)) {}

ComparisonFn ComparisonFn::power_law(double c, double p) {
  if (!(c > 0.0) || !(p > 0.0)) {
    throw std::invalid_argument("ComparisonFn::power_law: coefficient and exponent must be positive");
  }
  return ComparisonFn(std::make_shared<const Node>(c, p));
}

ComparisonFn ComparisonFn::identity() { return ComparisonFn(); }

ComparisonFn ComparisonFn::composition(ComparisonFn outer, ComparisonFn inner) {
  return ComparisonFn(std::make_shared<const Node>(std::move(outer.node_), std::move(inner.node_)));
}

double ComparisonFn::eval(double r) const {
  if (r < 0.0) throw std::domain_error("ComparisonFn::eval: negative argument");
  return node_->eval(r);
}

double ComparisonFn::inverse(double v) const {
  if (v < 0.0) throw std::domain_error("ComparisonFn::inverse: negative argument");
  return node_->inverse(v);
}

ComparisonFn ComparisonFn::inverse_fn() const {
  if (node_->kind == Kind::kPowerLaw) {
    // (v/c)^(1/p) = c^(-1/p) * v^(1/p)
    return power_law(std::pow(node_->c, -1.0 / node_->p), 1.0 / node_->p);
  }
  // (g o f)^{-1} = f^{-1} o g^{-1}
  return composition(ComparisonFn(node_->inner).inverse_fn(),
                     ComparisonFn(node_->outer).inverse_fn());
}

ComparisonFn ComparisonFn::scaled(double s) const {
  if (!(s > 0.0)) throw std::invalid_argument("ComparisonFn::scaled: scale must be positive");
  if (node_->kind == Kind::kPowerLaw) {
    return power_law(s * node_->c, node_->p);
  }
  return composition(power_law(s, 1.0), *this);
}

ComparisonFn::Kind ComparisonFn::kind() const { return node_->kind; }

double ComparisonFn::coefficient() const {
  if (node_->kind != Kind::kPowerLaw) throw std::logic_error("ComparisonFn: not a power law");
  return node_->c;
}

double ComparisonFn::exponent() const {
  if (node_->kind != Kind::kPowerLaw) throw std::logic_error("ComparisonFn: not a power law");
  return node_->p;
}

ComparisonFn ComparisonFn::outer() const {
  if (node_->kind != Kind::kComposition) throw std::logic_error("ComparisonFn: not a composition");
  return ComparisonFn(node_->outer);
}

ComparisonFn ComparisonFn::inner() const {
  if (node_->kind != Kind::kComposition) throw std::logic_error("ComparisonFn: not a composition");
  return ComparisonFn(node_->inner);
}

ComparisonFn compose(const ComparisonFn& outer, const ComparisonFn& inner) {
  return ComparisonFn::composition(outer, inner);
}

std::pair<ComparisonFn, ComparisonFn> split_alpha(const ComparisonFn& alpha, double fraction) {
  if (!(fraction > 0.0) || !(fraction < 1.0)) {
    throw std::invalid_argument("split_alpha: fraction must lie in (0, 1)");
  }
  return {alpha.scaled(fraction), alpha.scaled(1.0 - fraction)};
}

double KLBound::eval(double r, double s) const {
  if (s < 0.0) throw std::domain_error("KLBound::eval: negative time argument");
  return amplitude.eval(r) * std::exp(-decay_rate * s);
}

}  // namespace pss
