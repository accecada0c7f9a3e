#include "cmdual/cmcalc.hpp"

#include <algorithm>
#include <cmath>

#include "cmdual/error.hpp"

namespace cmdual {

namespace {

double rising(double a, int j) {
  double r = 1.0;
  for (int i = 0; i < j; ++i) r *= a + i;
  return r;
}

double term_derivative(const CatalogTerm& t, int j, double x) {
  const double sign = (j % 2 == 0) ? 1.0 : -1.0;
  if (t.kind == CatalogTerm::Kind::Power)
    return t.coef * sign * rising(t.param, j) * std::pow(x + t.shift, -t.param - j);
  return t.coef * std::pow(-t.param, j) * std::exp(-t.param * x);
}

double product_derivative(const std::vector<CatalogTerm>& terms, std::size_t idx, int k,
                          double x) {
  if (idx == terms.size()) return k == 0 ? 1.0 : 0.0;
  if (idx + 1 == terms.size()) return term_derivative(terms[idx], k, x);
  double s = 0.0;
  for (int j = 0; j <= k; ++j)
    s += numerics::binomial(k, j) * term_derivative(terms[idx], j, x) *
         product_derivative(terms, idx + 1, k - j, x);
  return s;
}

double kernel(int m, double u) {
  if (u <= 0.0) return m == 0 ? (u == 0.0 ? 1.0 : 0.0) : 0.0;
  return std::pow(u, m) / numerics::factorial(m);
}

// (u^m - v^m) / m! for u, v >= 0 without cancellation.
double kernel_difference(int m, double u, double v) {
  if (m == 0) return 0.0;
  double s = 0.0;
  for (int i = 0; i < m; ++i) s += std::pow(u, i) * std::pow(v, m - 1 - i);
  return (u - v) * s / numerics::factorial(m);
}

}  // namespace

CMFunction CMFunction::from_measure(BernsteinMeasure mu) {
  CMFunction f;
  f.measure_ = std::move(mu);
  return f;
}

CMFunction CMFunction::power(double a, double coef, double shift) {
  if (!(a > 0.0) || !(coef > 0.0) || !(shift >= 0.0))
    fail(ErrorKind::InvalidInput, "power term needs a > 0, coef > 0, shift >= 0");
  CMFunction f;
  f.terms_.push_back({CatalogTerm::Kind::Power, coef, a, shift});
  return f;
}

CMFunction CMFunction::exponential(double b, double coef) {
  if (!(b > 0.0) || !(coef > 0.0))
    fail(ErrorKind::InvalidInput, "exponential term needs b > 0, coef > 0");
  CMFunction f;
  f.terms_.push_back({CatalogTerm::Kind::Exponential, coef, b, 0.0});
  return f;
}

CMFunction CMFunction::product(const std::vector<CMFunction>& factors) {
  CMFunction f;
  for (const auto& g : factors) {
    if (g.measure_) fail(ErrorKind::InvalidInput, "products are limited to closed forms");
    f.terms_.insert(f.terms_.end(), g.terms_.begin(), g.terms_.end());
  }
  return f;
}

const BernsteinMeasure& CMFunction::measure() const {
  if (!measure_) fail(ErrorKind::InvalidInput, "function is not measure-backed");
  return *measure_;
}

double CMFunction::derivative(int k, double x) const {
  if (k < 0 || !(x > 0.0)) fail(ErrorKind::InvalidInput, "derivative needs k >= 0, x > 0");
  if (measure_) {
    const double m = measure_->laplace_moment(x, k);
    return k % 2 == 0 ? m : -m;
  }
  return product_derivative(terms_, 0, k, x);
}

DnFunction DnFunction::from_measure(BernsteinMeasure mu, Anchor anchor) {
  if (mu.has_mass_at_zero())
    fail(ErrorKind::InvalidMeasure, "a D-class generator has no mass at zero");
  if (!(anchor.y0 > 0.0)) fail(ErrorKind::InvalidInput, "anchor y0 must be > 0");
  DnFunction w;
  w.measure_ = std::move(mu);
  w.anchor_ = anchor;
  return w;
}

DnFunction DnFunction::exponential(double z) {
  if (!(z > 0.0)) fail(ErrorKind::InvalidInput, "exponential rate must be > 0");
  return from_measure(BernsteinMeasure::atom(z, z), Anchor{1.0, std::exp(-z)});
}

DnFunction DnFunction::from_nth_derivative(int n, numerics::RealFn wn, Anchor anchor,
                                           std::vector<double> breakpoints) {
  if (n < 2) fail(ErrorKind::InvalidInput, "finite order must be >= 2");
  if (!(anchor.y0 > 0.0)) fail(ErrorKind::InvalidInput, "anchor y0 must be > 0");
  DnFunction w;
  w.order_ = n;
  w.anchor_ = anchor;
  w.nth_ = std::move(wn);
  std::sort(breakpoints.begin(), breakpoints.end());
  w.breakpoints_ = std::move(breakpoints);
  return w;
}

DnFunction DnFunction::from_derivatives(std::vector<numerics::RealFn> derivatives,
                                        std::optional<int> order) {
  if (derivatives.empty()) fail(ErrorKind::InvalidInput, "need at least W itself");
  DnFunction w;
  w.order_ = order ? *order : static_cast<int>(derivatives.size()) - 1;
  w.explicit_ = std::move(derivatives);
  return w;
}

numerics::QuadratureResult DnFunction::tail_integral(const numerics::RealFn& g,
                                                     double from) const {
  numerics::QuadratureOptions o;
  o.abs_tol = 0.0;
  o.rel_tol = integral_tol_;
  std::vector<double> cuts;
  for (double b : breakpoints_)
    if (b > from) cuts.push_back(b);
  return numerics::integrate_piecewise(g, from, cuts, o, std::max(1.0, from));
}

double DnFunction::lower_derivative(int k, double y) const {
  const int n = *order_;
  const int m = n - k - 1;
  auto g = [&](double t) { return kernel(m, t - y) * nth_(t); };
  auto r = tail_integral(g, y);
  if (!r.converged) fail(ErrorKind::QuadratureFailure, "derivative integral did not converge");
  return ((n - k) % 2 == 0 ? 1.0 : -1.0) * r.value;
}

double DnFunction::derivative(int k, double y) const {
  // W(0) is the limit from the right; derivatives need y > 0.
  if (k < 0 || !(y >= 0.0) || (k > 0 && y == 0.0))
    fail(ErrorKind::InvalidInput, "derivative needs k >= 0, y > 0");
  if (order_ && k > *order_)
    fail(ErrorKind::OrderExceeded, "derivative order " + std::to_string(k) +
                                       " exceeds function order " + std::to_string(*order_));
  if (measure_) {
    if (k == 0) return anchor_.w0 + measure_->kernel_difference(y, anchor_.y0);
    const double m = measure_->laplace_moment(y, k - 1);
    return k % 2 == 0 ? m : -m;
  }
  if (!explicit_.empty()) {
    if (k >= static_cast<int>(explicit_.size()))
      fail(ErrorKind::OrderExceeded, "derivative not available");
    return explicit_[k](y);
  }
  if (k == *order_) return nth_(y);
  if (k == 0) return nfold_value(y);
  return lower_derivative(k, y);
}

void DnFunction::tail_probe(double y) const {
  if (!order_ || !nth_) return;
  const int m = *order_ - 1;
  const double base = std::max(1.0, y);
  double prev = -1.0;
  for (double t : {1e3, 1e4, 1e5}) {
    const double tt = base * t;
    const double v = std::pow(tt - y, m) * std::fabs(nth_(tt));
    if (!std::isfinite(v) || (prev >= 0.0 && v > 0.5 * prev && v != 0.0))
      fail(ErrorKind::TailDivergent, "n-th derivative tail does not decay fast enough");
    prev = v;
  }
}

double DnFunction::nfold_value(double y) const {
  if (!order_ || !nth_) {
    if (measure_ || !explicit_.empty()) return derivative(0, y);
    fail(ErrorKind::InvalidInput, "nfold_value needs a generator");
  }
  if (!(y >= 0.0)) fail(ErrorKind::InvalidInput, "nfold_value needs y >= 0");
  tail_probe(y);
  const int n = *order_;
  const int m = n - 1;
  const double y0 = anchor_.y0;
  if (y == y0) return anchor_.w0;
  const double sgn = n % 2 == 0 ? 1.0 : -1.0;
  const double lo = std::min(y, y0), hi = std::max(y, y0);
  auto g = [&](double t) {
    double k;
    if (t >= hi)
      k = kernel_difference(m, t - y, t - y0);
    else
      k = y < y0 ? kernel(m, t - y) : -kernel(m, t - y0);
    return k == 0.0 ? 0.0 : sgn * k * nth_(t);
  };
  numerics::QuadratureOptions o;
  o.abs_tol = 0.0;
  o.rel_tol = integral_tol_;
  std::vector<double> cuts{hi};
  for (double b : breakpoints_)
    if (b > lo) cuts.push_back(b);
  auto r = numerics::integrate_piecewise(g, lo, cuts, o, std::max(1.0, hi));
  if (!r.converged) fail(ErrorKind::QuadratureFailure, "collapsed integral did not converge");
  return anchor_.w0 + r.value;
}

std::optional<double> DnFunction::value_at_infinity() const {
  if (measure_) {
    try {
      return anchor_.w0 - measure_->inverse_moment(anchor_.y0);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonIntegrable) return std::nullopt;
      throw;
    }
  }
  if (!explicit_.empty()) {
    // W at 1e2, 1e4, ..., 1e12: accept when the increments shrink geometrically
    double prev = explicit_[0](1e2), step = INFINITY;
    for (double y = 1e4; y <= 1e12; y *= 1e2) {
      const double v = explicit_[0](y);
      if (!std::isfinite(v)) return std::nullopt;
      const double d = std::fabs(v - prev);
      if (d > 0.25 * step && d > 1e-14 * std::fabs(v)) return std::nullopt;
      step = d;
      prev = v;
    }
    return prev;
  }
  if (!nth_) return std::nullopt;
  try {
    tail_probe(anchor_.y0);
  } catch (const Error&) {
    return std::nullopt;
  }
  const int n = *order_;
  const double y0 = anchor_.y0;
  const double sgn = n % 2 == 0 ? 1.0 : -1.0;
  auto g = [&](double t) { return sgn * kernel(n - 1, t - y0) * nth_(t); };
  auto r = tail_integral(g, y0);
  if (!r.converged || !std::isfinite(r.value)) return std::nullopt;
  return anchor_.w0 - r.value;
}

double DnFunction::limits_at_infinity(int k) const {
  if (k < 1) fail(ErrorKind::InvalidInput, "limits_at_infinity needs k >= 1");
  if (order_ && k > *order_ - 1)
    fail(ErrorKind::OrderExceeded, "limits_at_infinity needs k <= n - 1");
  double prev = 0.0, v = 0.0;
  bool first = true;
  for (double y : {1e2, 1e4, 1e6}) {
    v = derivative(k, y);
    if (!std::isfinite(v)) fail(ErrorKind::NotVanishing, "derivative is not finite");
    if (!first && v != 0.0 && std::fabs(v) > 0.5 * std::fabs(prev))
      fail(ErrorKind::NotVanishing, "W^(" + std::to_string(k) + ") does not vanish at infinity");
    prev = v;
    first = false;
  }
  return v;
}

CMCheck check_cm_order(const std::function<double(int, double)>& deriv, int n,
                       const std::vector<double>& grid, SignTolerance tol) {
  for (int k = 0; k <= n; ++k) {
    for (double x : grid) {
      const double f0 = std::fabs(deriv(0, x));
      const double v = (k % 2 == 0 ? 1.0 : -1.0) * deriv(k, x);
      if (v < -(tol.rel * f0 + tol.abs)) return {CMVerdict::Violation, k, x};
    }
  }
  return {};
}

double central_difference(const numerics::RealFn& f, int k, double x, double h) {
  if (k == 0) return f(x);
  auto d = [&](double step) {
    double s = 0.0;
    for (int j = 0; j <= k; ++j) {
      const double c = numerics::binomial(k, j) * (j % 2 == 0 ? 1.0 : -1.0);
      s += c * f(x + (0.5 * k - j) * step);
    }
    return s / std::pow(step, k);
  };
  return (4.0 * d(0.5 * h) - d(h)) / 3.0;
}

CMCheck check_cm_order(const numerics::RealFn& f, int n, const std::vector<double>& grid,
                       double h, SignTolerance tol) {
  if (n > 6) fail(ErrorKind::OrderExceeded, "black-box differences support k <= 6");
  if (!(h > 0.0) || h * n >= 2.0) fail(ErrorKind::InvalidInput, "step must satisfy 0 < h*n < 2");
  bool inconclusive = false;
  CMCheck first_unclear{CMVerdict::Inconclusive, -1, 0.0};
  for (int k = 0; k <= n; ++k) {
    for (double x : grid) {
      const double f0 = f(x);
      const double t = tol.rel * std::fabs(f0) + tol.abs;
      const double est = central_difference(f, k, x, h * x);
      const double v = (k % 2 == 0 ? 1.0 : -1.0) * est;
      if (v < -t) return {CMVerdict::Violation, k, x};
      if (k > 0 && std::fabs(est) < t && !inconclusive) {
        inconclusive = true;
        first_unclear = {CMVerdict::Inconclusive, k, x};
      }
    }
  }
  return inconclusive ? first_unclear : CMCheck{};
}

CMCheck check_cm_order(const CMFunction& f, int n, const std::vector<double>& grid,
                       SignTolerance tol) {
  return check_cm_order([&](int k, double x) { return f.derivative(k, x); }, n, grid, tol);
}

CMCheck check_dn_membership(const DnFunction& w, int n, const std::vector<double>& grid,
                            SignTolerance tol) {
  auto g = [&](int k, double x) { return -w.derivative(k + 1, x); };
  CMCheck r = check_cm_order(g, n - 1, grid, tol);
  if (r.verdict != CMVerdict::Pass) r.k += 1;
  return r;
}

std::string to_string(CMVerdict v) {
  switch (v) {
    case CMVerdict::Pass: return "PASS";
    case CMVerdict::Violation: return "violation";
    case CMVerdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

}  // namespace cmdual
