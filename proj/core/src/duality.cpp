#include "cmdual/duality.hpp"

#include <cmath>

#include "cmdual/error.hpp"
#include "cmdual/numerics.hpp"

namespace cmdual {

UtilitySpec UtilitySpec::log() {
  UtilitySpec u;
  u.kind_ = Kind::Log;
  return u;
}

UtilitySpec UtilitySpec::power(double p) {
  if (!(p < 1.0) || p == 0.0 || !std::isfinite(p))
    fail(ErrorKind::InvalidInput, "power utility needs p < 1, p != 0");
  UtilitySpec u;
  u.kind_ = Kind::Power;
  u.p_ = p;
  return u;
}

UtilitySpec UtilitySpec::from_measure(BernsteinMeasure mu, Anchor anchor, bool require_inada) {
  if (mu.has_mass_at_zero())
    fail(ErrorKind::InvalidMeasure, "inverse-marginal measure must have no mass at 0");
  if (require_inada && !mu.mass(Interval{0.0, std::nullopt, true, false}).infinite)
    fail(ErrorKind::InvalidMeasure, "inverse-marginal measure must have infinite mass");
  UtilitySpec u;
  u.kind_ = Kind::Measure;
  u.v_ = DnFunction::from_measure(mu, anchor);
  u.mu_ = std::move(mu);
  u.anchor_ = anchor;
  return u;
}

UtilitySpec UtilitySpec::finite_order(DnFunction v) {
  if (!v.order() || *v.order() < 2)
    fail(ErrorKind::InvalidInput, "finite-order conjugate needs order >= 2");
  UtilitySpec u;
  u.kind_ = Kind::FiniteOrder;
  u.v_ = std::move(v);
  return u;
}

std::optional<int> UtilitySpec::order() const {
  if (kind_ == Kind::FiniteOrder) return v_.order();
  return std::nullopt;
}

double UtilitySpec::V_derivative(int k, double y) const {
  if (k < 0 || !(y > 0.0)) fail(ErrorKind::InvalidInput, "V derivative needs k >= 0, y > 0");
  switch (kind_) {
    case Kind::Log:
      if (k == 0) return -std::log(y) - 1.0;
      return (k % 2 == 0 ? 1.0 : -1.0) * numerics::factorial(k - 1) * std::pow(y, -k);
    case Kind::Power: {
      const double q = this->q();
      if (k == 0) return -std::pow(y, q) / q;
      double c = -1.0;
      for (int j = 1; j <= k - 1; ++j) c *= q - j;
      return c * std::pow(y, q - k);
    }
    case Kind::Measure:
    case Kind::FiniteOrder:
      return v_.derivative(k, y);
  }
  return 0.0;
}

double UtilitySpec::log_signed_V_derivative(int k, double y) const {
  if (k < 1 || !(y > 0.0)) fail(ErrorKind::InvalidInput, "needs k >= 1, y > 0");
  switch (kind_) {
    case Kind::Log: return std::lgamma(double(k)) - k * std::log(y);
    case Kind::Power: {
      const double q = this->q();
      double s = (q - k) * std::log(y);
      for (int j = 1; j <= k - 1; ++j) s += std::log(j - q);
      return s;
    }
    case Kind::Measure: return mu_->log_laplace_moment(y, k - 1);
    case Kind::FiniteOrder: {
      const double v = (k % 2 == 0 ? 1.0 : -1.0) * v_.derivative(k, y);
      return std::log(v);
    }
  }
  return 0.0;
}

double UtilitySpec::conjugate_value(double y, Anchor anchor) const {
  if (kind_ == Kind::Measure) {
    if (!(anchor.y0 > 0.0)) fail(ErrorKind::InvalidInput, "anchor y0 must be > 0");
    return anchor.w0 + mu_->kernel_difference(y, anchor.y0);
  }
  return V(y);
}

double UtilitySpec::inverse_marginal(double y) const {
  if (!(y > 0.0)) fail(ErrorKind::InvalidInput, "inverse_marginal needs y > 0");
  switch (kind_) {
    case Kind::Log: return 1.0 / y;
    case Kind::Power: return std::pow(y, -1.0 / (1.0 - p_));
    case Kind::Measure: return mu_->laplace_moment(y, 0);
    case Kind::FiniteOrder: return -v_.derivative(1, y);
  }
  return 0.0;
}

double UtilitySpec::marginal(double x) const {
  if (!(x > 0.0)) fail(ErrorKind::InvalidInput, "marginal needs x > 0");
  if (kind_ == Kind::Log) return 1.0 / x;
  if (kind_ == Kind::Power) return std::pow(x, -(1.0 - p_));
  // Bracket in log y by doubling from y = 1, then safeguarded Newton.
  const double lx = std::log(x);
  auto f = [&](double u) { return std::log(inverse_marginal(std::exp(u))) - lx; };
  auto df = [&](double u) {
    const double y = std::exp(u);
    return -y * V_derivative(2, y) / inverse_marginal(y);
  };
  double lo = 0.0, hi = 0.0;
  const double f0 = f(0.0);
  if (f0 == 0.0) return 1.0;
  const double step = std::log(2.0);
  for (int i = 0;; ++i) {
    if (i > 2000) fail(ErrorKind::RangeError, "x outside the range of the inverse marginal");
    if (f0 > 0.0) {
      hi += step;
      const double v = f(hi);
      if (!std::isfinite(v)) fail(ErrorKind::RangeError, "inverse marginal not finite");
      if (v < 0.0) break;
      lo = hi;
    } else {
      lo -= step;
      const double v = f(lo);
      if (!std::isfinite(v)) fail(ErrorKind::RangeError, "inverse marginal not finite");
      if (v > 0.0) break;
      hi = lo;
    }
  }
  return std::exp(numerics::solve_bracketed(f, df, lo, hi, 1e-15));
}

double UtilitySpec::U(double x) const {
  const double y = marginal(x);
  return V(y) + x * y;
}

double UtilitySpec::U_second(double x) const {
  return -1.0 / V_derivative(2, marginal(x));
}

double UtilitySpec::risk_aversion(double x) const {
  if (kind_ == Kind::Log) return 1.0;
  if (kind_ == Kind::Power) return 1.0 - p_;
  return -U_second(x) * x / U_prime(x);
}

double UtilitySpec::risk_tolerance(double y) const {
  return -V_derivative(2, y) * y / V_derivative(1, y);
}

BernsteinMeasure UtilitySpec::bernstein_measure() const {
  switch (kind_) {
    case Kind::Log: return BernsteinMeasure::lebesgue();
    case Kind::Power: {
      const double q = this->q();
      return BernsteinMeasure::power(1.0 / std::tgamma(1.0 - q), -q);
    }
    case Kind::Measure: return *mu_;
    case Kind::FiniteOrder: break;
  }
  fail(ErrorKind::InvalidInput, "finite-order specs carry no Bernstein measure");
}

bool UtilitySpec::operator==(const UtilitySpec& o) const {
  if (kind_ != o.kind_) return false;
  switch (kind_) {
    case Kind::Log: return true;
    case Kind::Power: return p_ == o.p_;
    case Kind::Measure:
      return *mu_ == *o.mu_ && anchor_.y0 == o.anchor_.y0 && anchor_.w0 == o.anchor_.w0;
    case Kind::FiniteOrder: return !descriptor_.empty() && descriptor_ == o.descriptor_;
  }
  return false;
}

}  // namespace cmdual
