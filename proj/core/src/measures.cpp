#include "cmdual/measures.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cmdual/error.hpp"
#include "cmdual/numerics.hpp"

namespace cmdual {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// int_lo^hi c z^{p-1} e^{-s z} [1 - e^{-delta z}] dz, in log form.
struct Segment {
  double c;
  double p;
  double s;
  double lo;
  std::optional<double> hi;
  std::optional<double> delta;
};

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

double log_segment_quadrature(const Segment& g, double tol) {
  // Factor out e^{-s lo} and integrate in u = z - lo; near a singular origin
  // substitute u = v^m so the integrand stays bounded.
  const double eff = g.delta ? g.p + 1.0 : g.p;
  int m = 1;
  if (g.lo == 0.0 && eff < 1.0) m = std::min(20, static_cast<int>(std::ceil(1.0 / eff)));
  auto integrand = [&](double v) {
    const double u = m == 1 ? v : std::pow(v, m);
    const double jac = m == 1 ? 1.0 : m * std::pow(v, m - 1);
    const double z = g.lo + u;
    if (z == 0.0) return 0.0;
    double h = g.c * std::exp((g.p - 1.0) * std::log(z) - g.s * u);
    if (g.delta) h *= -std::expm1(-*g.delta * z);
    return h * jac;
  };
  numerics::QuadratureOptions o;
  o.abs_tol = 0.0;
  o.rel_tol = std::min(tol, 1e-10);
  numerics::QuadratureResult r;
  if (g.hi) {
    const double L = *g.hi - g.lo;
    r = numerics::integrate(integrand, 0.0, m == 1 ? L : std::pow(L, 1.0 / m), o);
  } else {
    const double scale = g.s > 0 ? (m == 1 ? 1.0 / g.s : std::pow(1.0 / g.s, 1.0 / m)) : 1.0;
    r = numerics::integrate_to_infinity(integrand, 0.0, o, scale);
  }
  if (!r.converged) fail(ErrorKind::QuadratureFailure, "density piece moment did not converge");
  if (r.value <= 0.0) return kNegInf;
  return -g.s * g.lo + std::log(r.value);
}

double log_segment(const Segment& g, double tol) {
  if (g.hi && *g.hi <= g.lo) return kNegInf;
  const bool at_zero = g.lo == 0.0;
  if (at_zero) {
    const double eff = g.delta ? g.p + 1.0 : g.p;
    if (eff <= 0.0) fail(ErrorKind::NonIntegrable, "density not integrable at the origin");
  }
  if (!g.hi && g.s <= 0.0) fail(ErrorKind::NonIntegrable, "density tail not integrable");

  if (g.delta) {
    if (at_zero && !g.hi) {
      const double r = std::log1p(*g.delta / g.s);
      if (g.p == 0.0) return std::log(g.c) + std::log(r);
      const double t = -std::expm1(-g.p * r);
      return std::log(g.c) + std::lgamma(g.p) - g.p * std::log(g.s) + std::log(std::fabs(t));
    }
    return log_segment_quadrature(g, tol);
  }

  if (g.s == 0.0) {
    const double hi = *g.hi;
    if (g.p == 0.0) return std::log(g.c) + std::log(std::log(hi / g.lo));
    const double v = (std::pow(hi, g.p) - std::pow(g.lo, g.p)) / g.p;
    return std::log(g.c) + std::log(v);
  }

  if (g.p > 0.0) {
    const double logpre = std::log(g.c) + std::lgamma(g.p) - g.p * std::log(g.s);
    if (at_zero && !g.hi) return logpre;
    try {
      const double sl = g.s * g.lo;
      double diff, big;
      if (sl > g.p) {
        const double qlo = boost::math::gamma_q(g.p, sl);
        const double qhi = g.hi ? boost::math::gamma_q(g.p, g.s * *g.hi) : 0.0;
        diff = qlo - qhi;
        big = qlo;
      } else {
        const double phi = g.hi ? boost::math::gamma_p(g.p, g.s * *g.hi) : 1.0;
        const double plo = at_zero ? 0.0 : boost::math::gamma_p(g.p, sl);
        diff = phi - plo;
        big = phi;
      }
      if (big > std::numeric_limits<double>::min() * 1e10 && diff > 1e-6 * big)
        return logpre + std::log(diff);
    } catch (const std::exception&) {
      // fall through to quadrature
    }
  }
  return log_segment_quadrature(g, tol);
}

Segment piece_segment(const DensityPiece& d, double x, int k) {
  Segment g{d.c, d.a + k + 1.0, x + d.b, d.lo, d.hi, std::nullopt};
  if (d.b2) g.delta = *d.b2 - d.b;
  return g;
}

double log_atom_sum(const std::vector<Atom>& atoms, double x, int k) {
  double acc = kNegInf;
  for (const auto& a : atoms) {
    if (a.z == 0.0) {
      if (k == 0) acc = log_add(acc, std::log(a.w));
      else if (k < 0) fail(ErrorKind::NonIntegrable, "atom at zero under 1/z weight");
      continue;
    }
    acc = log_add(acc, std::log(a.w) + k * std::log(a.z) - x * a.z);
  }
  return acc;
}

double piece_inverse_moment(const DensityPiece& d, double x, double tol) {
  return std::exp(log_segment(piece_segment(d, x, -1), tol));
}

}  // namespace

BernsteinMeasure::BernsteinMeasure(std::vector<Atom> atoms, std::vector<DensityPiece> pieces)
    : atoms_(std::move(atoms)), pieces_(std::move(pieces)) {
  for (const auto& a : atoms_) {
    if (!std::isfinite(a.z) || a.z < 0.0)
      fail(ErrorKind::InvalidMeasure, "atom location must be finite and >= 0");
    if (!std::isfinite(a.w) || a.w <= 0.0)
      fail(ErrorKind::InvalidMeasure, "atom weight must be finite and > 0");
  }
  std::sort(atoms_.begin(), atoms_.end(), [](const Atom& l, const Atom& r) { return l.z < r.z; });
  for (std::size_t i = 1; i < atoms_.size(); ++i)
    if (atoms_[i].z == atoms_[i - 1].z)
      fail(ErrorKind::InvalidMeasure, "atom locations must be distinct");
  for (const auto& d : pieces_) {
    if (!std::isfinite(d.c) || d.c <= 0.0)
      fail(ErrorKind::InvalidMeasure, "piece coefficient must be > 0");
    if (!std::isfinite(d.a)) fail(ErrorKind::InvalidMeasure, "piece power must be finite");
    if (!std::isfinite(d.b) || d.b < 0.0)
      fail(ErrorKind::InvalidMeasure, "piece decay must be >= 0");
    if (!std::isfinite(d.lo) || d.lo < 0.0)
      fail(ErrorKind::InvalidMeasure, "piece lower end must be >= 0");
    if (d.hi && (!std::isfinite(*d.hi) || *d.hi <= d.lo))
      fail(ErrorKind::InvalidMeasure, "piece upper end must exceed the lower end");
    if (d.b2 && (!std::isfinite(*d.b2) || *d.b2 <= d.b))
      fail(ErrorKind::InvalidMeasure, "second decay must exceed the first");
    if (d.lo == 0.0 && d.a <= -1.0)
      fail(ErrorKind::InvalidMeasure, "piece starting at 0 needs a > -1");
  }
}

BernsteinMeasure BernsteinMeasure::lebesgue() { return power(1.0, 0.0); }

BernsteinMeasure BernsteinMeasure::power(double c, double a) {
  return BernsteinMeasure({}, {DensityPiece{c, a, 0.0, 0.0, std::nullopt, std::nullopt}});
}

BernsteinMeasure BernsteinMeasure::atom(double z, double w) {
  return BernsteinMeasure({Atom{z, w}}, {});
}

double BernsteinMeasure::laplace_moment(double x, int k, double tol) const {
  if (!(x >= 0.0) || k < 0 || !(tol > 0.0))
    fail(ErrorKind::InvalidInput, "laplace_moment needs x >= 0, k >= 0, tol > 0");
  double sum = 0.0;
  for (const auto& a : atoms_) {
    if (a.z == 0.0) {
      if (k == 0) sum += a.w;
      continue;
    }
    sum += a.w * std::exp(k * std::log(a.z) - x * a.z);
  }
  for (const auto& d : pieces_) sum += std::exp(log_segment(piece_segment(d, x, k), tol));
  return sum;
}

double BernsteinMeasure::log_laplace_moment(double x, int k, double tol) const {
  if (!(x >= 0.0) || k < 0) fail(ErrorKind::InvalidInput, "log_laplace_moment needs x >= 0, k >= 0");
  double acc = log_atom_sum(atoms_, x, k);
  for (const auto& d : pieces_) acc = log_add(acc, log_segment(piece_segment(d, x, k), tol));
  return acc;
}

double BernsteinMeasure::inverse_moment(double x, double tol) const {
  double sum = std::exp(log_atom_sum(atoms_, x, -1));
  for (const auto& d : pieces_) sum += piece_inverse_moment(d, x, tol);
  return sum;
}

double BernsteinMeasure::kernel_difference(double y, double y0, double tol) const {
  if (!(y >= 0.0) || !(y0 > 0.0))
    fail(ErrorKind::InvalidInput, "kernel_difference needs y >= 0, y0 > 0");
  if (has_mass_at_zero()) fail(ErrorKind::NonIntegrable, "measure has mass at zero");
  if (y == y0) return 0.0;
  double sum = 0.0;
  for (const auto& a : atoms_) sum += a.w * (std::exp(-y * a.z) - std::exp(-y0 * a.z)) / a.z;
  for (const auto& d : pieces_) {
    const bool full = d.lo == 0.0 && !d.hi && !d.b2;
    if (full && d.a <= 0.0) {
      // int_y^{y0} c Gamma(a+1) (s+b)^{-a-1} ds
      if (d.a == 0.0) {
        sum += d.c * std::log((y0 + d.b) / (y + d.b));
      } else {
        sum += d.c * std::tgamma(d.a + 1.0) *
               (std::pow(y + d.b, -d.a) - std::pow(y0 + d.b, -d.a)) / d.a;
      }
      continue;
    }
    bool finite = true;
    double ty = 0.0, ty0 = 0.0;
    try {
      ty = piece_inverse_moment(d, y, tol);
      ty0 = piece_inverse_moment(d, y0, tol);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonIntegrable) throw;
      finite = false;
    }
    if (finite) {
      sum += ty - ty0;
      continue;
    }
    auto L0 = [&](double s) { return std::exp(log_segment(piece_segment(d, s, 0), tol)); };
    numerics::QuadratureOptions o;
    o.abs_tol = 0.0;
    o.rel_tol = std::min(tol, 1e-10);
    auto r = numerics::integrate(L0, y, y0, o);
    if (!r.converged) fail(ErrorKind::QuadratureFailure, "kernel difference did not converge");
    sum += r.value;
  }
  return sum;
}

MassResult BernsteinMeasure::mass(const Interval& in) const {
  if (!(in.lo >= 0.0) || (in.hi && *in.hi < in.lo))
    fail(ErrorKind::InvalidInput, "mass needs 0 <= lo <= hi");
  MassResult out;
  for (const auto& a : atoms_) {
    const bool above = in.lo_open ? a.z > in.lo : a.z >= in.lo;
    const bool below = !in.hi || (in.hi_open ? a.z < *in.hi : a.z <= *in.hi);
    if (above && below) out.value += a.w;
  }
  for (const auto& d : pieces_) {
    const double lo = std::max(d.lo, in.lo);
    std::optional<double> hi = d.hi;
    if (in.hi) hi = hi ? std::min(*hi, *in.hi) : *in.hi;
    if (hi && *hi <= lo) continue;
    Segment g = piece_segment(d, 0.0, 0);
    g.lo = lo;
    g.hi = hi;
    try {
      out.value += std::exp(log_segment(g, 1e-12));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonIntegrable) throw;
      out.infinite = true;
    }
  }
  if (out.infinite) out.value = 0.0;
  return out;
}

bool BernsteinMeasure::has_mass_at_zero() const {
  return !atoms_.empty() && atoms_.front().z == 0.0;
}

bool BernsteinMeasure::operator==(const BernsteinMeasure& other) const {
  return atoms_ == other.atoms_ && pieces_ == other.pieces_;
}

}  // namespace cmdual
