#pragma once

#include <optional>
#include <string>

#include "cmdual/cmcalc.hpp"
#include "cmdual/measures.hpp"

namespace cmdual {

/// Utility U with inverse marginal I = (U')^{-1} and conjugate
/// V(y) = sup_x (U(x) - x y), so that -V' = I.
class UtilitySpec {
 public:
  enum class Kind { Log, Power, Measure, FiniteOrder };

  static UtilitySpec log();
  /// U(x) = x^p / p, p < 1, p != 0.
  static UtilitySpec power(double p);
  /// I(y) = int e^{-y z} mu(dz); V anchored at anchor (default V(1) = 0).
  /// Requires mu({0}) = 0 and, unless require_inada is false, mu((0, inf)) = inf.
  static UtilitySpec from_measure(BernsteinMeasure mu, Anchor anchor = {1.0, 0.0},
                                  bool require_inada = true);
  /// Conjugate given directly as a finite-order D(n) function.
  static UtilitySpec finite_order(DnFunction v);

  Kind kind() const { return kind_; }
  double p() const { return p_; }
  /// Conjugate exponent q = -p / (1 - p) (Power only).
  double q() const { return -p_ / (1.0 - p_); }
  /// Available order of V (empty: infinite).
  std::optional<int> order() const;
  const DnFunction& conjugate() const { return v_; }

  double inverse_marginal(double y) const;
  /// U'(x): solves inverse_marginal(y) = x. Throws RangeError if unattainable.
  double marginal(double x) const;

  /// V(y) with the spec's own normalization.
  double V(double y) const { return V_derivative(0, y); }
  double V_derivative(int k, double y) const;
  /// log((-1)^k V^(k)(y)) for k >= 1, stable where the value under/overflows.
  double log_signed_V_derivative(int k, double y) const;
  /// V(y) normalized so that V(anchor.y0) = anchor.w0 (measure-backed
  /// specs); closed forms ignore the anchor.
  double conjugate_value(double y, Anchor anchor) const;

  double U(double x) const;
  double U_prime(double x) const { return marginal(x); }
  double U_second(double x) const;
  /// A(x) = -U''(x) x / U'(x).
  double risk_aversion(double x) const;
  /// B(y) = -V''(y) y / V'(y).
  double risk_tolerance(double y) const;

  /// Representing measure of the inverse marginal (Log: Lebesgue; Power:
  /// z^{-q} / Gamma(1 - q)). Throws InvalidInput for finite-order specs.
  BernsteinMeasure bernstein_measure() const;

  /// Serialized description of a finite-order spec (set by the JSON reader);
  /// finite-order specs compare equal when their descriptions match.
  const std::string& descriptor() const { return descriptor_; }
  void set_descriptor(std::string d) { descriptor_ = std::move(d); }

  bool operator==(const UtilitySpec& other) const;

 private:
  Kind kind_ = Kind::Log;
  double p_ = 0.0;
  std::optional<BernsteinMeasure> mu_;
  Anchor anchor_;
  DnFunction v_;
  std::string descriptor_;
};

}  // namespace cmdual
