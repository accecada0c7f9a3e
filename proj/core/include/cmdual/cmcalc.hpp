#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cmdual/measures.hpp"
#include "cmdual/numerics.hpp"

namespace cmdual {

/// Catalog primitive: coef * (x + shift)^{-a} (power) or coef * e^{-b x}.
struct CatalogTerm {
  enum class Kind { Power, Exponential };
  Kind kind = Kind::Power;
  double coef = 1.0;
  double param = 1.0;  // a for Power, b for Exponential
  double shift = 0.0;  // Power only

  bool operator==(const CatalogTerm&) const = default;
};

class CMFunction {
 public:
  static CMFunction from_measure(BernsteinMeasure mu);
  static CMFunction power(double a, double coef = 1.0, double shift = 0.0);
  static CMFunction exponential(double b, double coef = 1.0);
  /// Product of closed-form functions; the factors' catalog terms are merged.
  static CMFunction product(const std::vector<CMFunction>& factors);

  double operator()(double x) const { return derivative(0, x); }
  double derivative(int k, double x) const;

  bool measure_backed() const { return measure_.has_value(); }
  const BernsteinMeasure& measure() const;
  const std::vector<CatalogTerm>& terms() const { return terms_; }

 private:
  std::optional<BernsteinMeasure> measure_;
  std::vector<CatalogTerm> terms_;
};

struct Anchor {
  double y0 = 1.0;
  double w0 = 0.0;
};

/// Member of D (order empty) or D(n): decreasing convex W with -W' completely
/// monotone (of order n-1) and W'(inf) = 0.
class DnFunction {
 public:
  /// Order infinity: -W'(y) = int e^{-y z} mu(dz).
  static DnFunction from_measure(BernsteinMeasure mu, Anchor anchor);
  /// W(y) = e^{-z y}.
  static DnFunction exponential(double z);
  /// Finite order n >= 2 given by W^(n); lower derivatives by integration.
  static DnFunction from_nth_derivative(int n, numerics::RealFn wn, Anchor anchor,
                                        std::vector<double> breakpoints = {});
  /// Explicit W, W', ..., W^(m); the order is m unless given.
  static DnFunction from_derivatives(std::vector<numerics::RealFn> derivatives,
                                     std::optional<int> order = std::nullopt);

  std::optional<int> order() const { return order_; }
  const Anchor& anchor() const { return anchor_; }
  const BernsteinMeasure* measure() const { return measure_ ? &*measure_ : nullptr; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  double operator()(double y) const { return derivative(0, y); }

  /// W^(k)(y). Throws OrderExceeded when k exceeds the order.
  double derivative(int k, double y) const;

  /// W(y) for a finite-order function through the collapsed iterated
  /// integral. Throws TailDivergent when the tail probe fails.
  double nfold_value(double y) const;

  /// W(inf) if finite.
  std::optional<double> value_at_infinity() const;

  /// W^(k) at y = 1e2, 1e4, 1e6; returns the last value. Throws NotVanishing
  /// unless the magnitudes at least halve at each step (or reach zero).
  double limits_at_infinity(int k) const;

  /// Checks that (t - y)^(n-1) |W^(n)(t)| at least halves per decade over
  /// t = 1e3, 1e4, 1e5. Throws TailDivergent otherwise.
  void tail_probe(double y) const;

 private:
  std::optional<int> order_;
  Anchor anchor_;
  std::optional<BernsteinMeasure> measure_;
  numerics::RealFn nth_;
  std::vector<double> breakpoints_;
  std::vector<numerics::RealFn> explicit_;
  double integral_tol_ = 1e-12;

  double lower_derivative(int k, double y) const;
  numerics::QuadratureResult tail_integral(const numerics::RealFn& g, double from) const;
};

enum class CMVerdict { Pass, Violation, Inconclusive };

struct CMCheck {
  CMVerdict verdict = CMVerdict::Pass;
  int k = -1;
  double x = 0.0;
};

struct SignTolerance {
  double rel = 1e-8;
  double abs = 1e-12;
};

/// Exact derivatives: deriv(k, x) returns f^(k)(x).
CMCheck check_cm_order(const std::function<double(int, double)>& deriv, int n,
                       const std::vector<double>& grid, SignTolerance tol = {});

/// Black-box f: k-th central differences with step h * x and h * x / 2,
/// combined by Richardson extrapolation (k <= 6).
CMCheck check_cm_order(const numerics::RealFn& f, int n, const std::vector<double>& grid,
                       double h, SignTolerance tol = {});

CMCheck check_cm_order(const CMFunction& f, int n, const std::vector<double>& grid,
                       SignTolerance tol = {});

/// D(n) membership: (-1)^k W^(k) >= 0 for k = 1..n, i.e. -W' is CM(n-1).
CMCheck check_dn_membership(const DnFunction& w, int n, const std::vector<double>& grid,
                            SignTolerance tol = {});

/// k-th central difference quotient of f at x with step h, Richardson-improved.
double central_difference(const numerics::RealFn& f, int k, double x, double h);

std::string to_string(CMVerdict v);

}  // namespace cmdual
