#include "cmdual/dominance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "cmdual/error.hpp"

namespace cmdual {

namespace {

constexpr double kZLo = -40.0;
constexpr double kZHi = 40.0;

double normal_integral(const numerics::RealFn& h, double lo, double hi) {
  // Fixed 5-wide panels so narrow features are never skipped by the first estimate.
  numerics::QuadratureOptions o;
  o.abs_tol = 0.0;
  o.rel_tol = 1e-12;
  double s = 0.0;
  bool ok = true;
  for (double a = lo; a < hi; a += 5.0) {
    auto r = numerics::integrate(h, a, std::min(hi, a + 5.0), o);
    s += r.value;
    ok = ok && r.converged;
  }
  if (!ok) fail(ErrorKind::QuadratureFailure, "lognormal expectation did not converge");
  return s;
}

}  // namespace

Distribution Distribution::discrete(std::vector<double> x, std::vector<double> p) {
  if (x.empty() || x.size() != p.size())
    fail(ErrorKind::InvalidInput, "discrete law needs matching nonempty x and p");
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  Distribution d;
  double total = 0.0;
  for (auto i : idx) {
    if (!std::isfinite(x[i]) || x[i] < 0.0)
      fail(ErrorKind::InvalidInput, "support points must be finite and >= 0");
    if (!std::isfinite(p[i]) || p[i] <= 0.0)
      fail(ErrorKind::InvalidInput, "probabilities must be > 0");
    if (!d.x_.empty() && d.x_.back() == x[i])
      fail(ErrorKind::InvalidInput, "support points must be distinct");
    d.x_.push_back(x[i]);
    d.p_.push_back(p[i]);
    total += p[i];
  }
  if (std::fabs(total - 1.0) > 1e-12)
    fail(ErrorKind::InvalidInput, "probabilities must sum to 1");
  return d;
}

Distribution Distribution::point(double a) { return discrete({a}, {1.0}); }

Distribution Distribution::lognormal(double m, double s2) {
  if (!std::isfinite(m) || !std::isfinite(s2) || s2 <= 0.0)
    fail(ErrorKind::InvalidInput, "lognormal needs finite m and s2 > 0");
  Distribution d;
  d.kind_ = Kind::Lognormal;
  d.m_ = m;
  d.s2_ = s2;
  return d;
}

Distribution Distribution::lognormal_mean_one(double kappa) {
  return lognormal(-0.5 * kappa, kappa);
}

Distribution Distribution::empirical(std::vector<double> sample) {
  if (sample.empty()) fail(ErrorKind::InvalidInput, "empty sample");
  std::vector<double> s = sample;
  std::sort(s.begin(), s.end());
  std::vector<double> x, p;
  const double w = 1.0 / static_cast<double>(s.size());
  for (double v : s) {
    if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::InvalidInput, "sample values must be >= 0");
    if (!x.empty() && x.back() == v) {
      p.back() += w;
    } else {
      x.push_back(v);
      p.push_back(w);
    }
  }
  // Renormalize against rounding in the repeated additions.
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& q : p) q /= total;
  Distribution d;
  d.kind_ = Kind::Empirical;
  d.x_ = std::move(x);
  d.p_ = std::move(p);
  d.sample_ = std::move(sample);
  return d;
}

double Distribution::iterated_cdf(int n, double y) const {
  if (n < 1) fail(ErrorKind::InvalidInput, "iterated_cdf needs n >= 1");
  if (!(y >= 0.0)) fail(ErrorKind::InvalidInput, "iterated_cdf needs y >= 0");
  if (is_discrete()) {
    double s = 0.0;
    const double inv = 1.0 / numerics::factorial(n - 1);
    for (std::size_t i = 0; i < x_.size() && x_[i] <= y; ++i)
      s += p_[i] * (n == 1 ? 1.0 : std::pow(y - x_[i], n - 1) * inv);
    return s;
  }
  if (y <= 0.0) return 0.0;
  const double s = std::sqrt(s2_);
  const double zs = (std::log(y) - m_) / s;
  if (n == 1) return numerics::normal_cdf(zs);
  if (zs <= kZLo) return 0.0;
  const double inv = 1.0 / numerics::factorial(n - 1);
  auto h = [&](double z) {
    const double u = y - std::exp(m_ + s * z);
    return u <= 0.0 ? 0.0 : std::pow(u, n - 1) * inv * numerics::normal_pdf(z);
  };
  return normal_integral(h, kZLo, zs);
}

double Distribution::laplace(double z) const { return std::exp(log_laplace(z)); }

double Distribution::log_laplace(double z) const {
  if (!(z >= 0.0)) fail(ErrorKind::InvalidInput, "laplace needs z >= 0");
  if (is_discrete()) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x_.size(); ++i) mx = std::max(mx, std::log(p_[i]) - z * x_[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) s += std::exp(std::log(p_[i]) - z * x_[i] - mx);
    return mx + std::log(s);
  }
  const double s = std::sqrt(s2_);
  return std::log(normal_integral(
      [&](double t) { return std::exp(-z * std::exp(m_ + s * t)) * numerics::normal_pdf(t); },
      kZLo, kZHi));
}

double Distribution::expectation(const numerics::RealFn& g) const {
  if (is_discrete()) {
    double s = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) s += p_[i] * g(x_[i]);
    return s;
  }
  const double s = std::sqrt(s2_);
  return normal_integral(
      [&](double t) { return g(std::exp(m_ + s * t)) * numerics::normal_pdf(t); }, kZLo, kZHi);
}

double Distribution::mean() const {
  if (is_discrete()) {
    double s = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) s += p_[i] * x_[i];
    return s;
  }
  return std::exp(m_ + 0.5 * s2_);
}

Distribution Distribution::scaled(double c) const {
  if (!(c > 0.0)) fail(ErrorKind::InvalidInput, "scale must be > 0");
  if (!is_discrete()) return lognormal(m_ + std::log(c), s2_);
  Distribution d = *this;
  for (auto& v : d.x_) v *= c;
  for (auto& v : d.sample_) v *= c;
  return d;
}

bool Distribution::operator==(const Distribution& o) const {
  if (kind_ != o.kind_) return false;
  if (kind_ == Kind::Lognormal) return m_ == o.m_ && s2_ == o.s2_;
  if (kind_ == Kind::Empirical) return sample_ == o.sample_;
  return x_ == o.x_ && p_ == o.p_;
}

namespace {

struct Checker {
  const Distribution& F;
  const Distribution& G;
  int n;
  DominanceTolerance tol;
  Verdict result;

  // Returns true when a violation was recorded.
  bool at(double y) {
    if (!(y >= 0.0) || !std::isfinite(y)) return false;
    const double f = F.iterated_cdf(n, y);
    const double g = G.iterated_cdf(n, y);
    if (f > g + tol.abs + tol.rel * std::fabs(g)) {
      result = {false, y, f - g};
      return true;
    }
    return false;
  }
};

// Critical points of a polynomial with coefficients a[0..deg] in (0, hi).
std::vector<double> critical_points(const std::vector<double>& a, double hi) {
  const int deg = static_cast<int>(a.size()) - 1;
  std::vector<double> out;
  if (deg == 2) {
    if (a[2] != 0.0) out.push_back(-a[1] / (2.0 * a[2]));
  } else if (deg == 3) {
    // D' = a1 + 2 a2 t + 3 a3 t^2
    const double A = 3.0 * a[3], B = 2.0 * a[2], C = a[1];
    if (A == 0.0) {
      if (B != 0.0) out.push_back(-C / B);
    } else {
      const double disc = B * B - 4.0 * A * C;
      if (disc >= 0.0) {
        const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
        if (q != 0.0) out.push_back(C / q);
        out.push_back(q / A);
      }
    }
  } else if (deg > 3) {
    const int samples = 64;
    for (int i = 1; i < samples; ++i) out.push_back(hi * i / samples);
  }
  std::vector<double> kept;
  for (double t : out)
    if (t > 0.0 && t < hi && std::isfinite(t)) kept.push_back(t);
  return kept;
}

Verdict dominates_discrete(const Distribution& F, const Distribution& G, int n,
                           DominanceTolerance tol) {
  Checker chk{F, G, n, tol, {}};
  std::vector<double> knots = F.support();
  knots.insert(knots.end(), G.support().begin(), G.support().end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  for (double k : knots)
    if (chk.at(k)) return chk.result;
  if (n == 1) return chk.result;

  const int m = n - 1;
  const double inv_fact = 1.0 / numerics::factorial(m);
  // Coefficients of G_n - F_n in t = y - K over points <= K.
  auto coefficients = [&](double K, std::vector<double>& scale) {
    std::vector<double> a(m + 1, 0.0);
    scale.assign(m + 1, 0.0);
    auto add = [&](const Distribution& d, double sign) {
      for (std::size_t i = 0; i < d.support().size() && d.support()[i] <= K; ++i) {
        const double u = K - d.support()[i];
        for (int j = 0; j <= m; ++j) {
          const double term = d.probabilities()[i] * numerics::binomial(m, j) *
                              std::pow(u, m - j) * inv_fact;
          a[j] += sign * term;
          scale[j] += term;
        }
      }
    };
    add(G, 1.0);
    add(F, -1.0);
    return a;
  };

  std::vector<double> scale;
  for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
    const double K = knots[j], L = knots[j + 1] - K;
    auto a = coefficients(K, scale);
    for (double t : critical_points(a, L))
      if (chk.at(K + t)) return chk.result;
  }

  // Beyond the last knot every point is active and the top coefficient is zero.
  const double K = knots.back();
  auto a = coefficients(K, scale);
  a[m] = 0.0;
  int top = 0;
  for (int d = m - 1; d >= 1; --d) {
    if (std::fabs(a[d]) > 1e-12 * scale[d] + 1e-300) {
      top = d;
      break;
    }
    a[d] = 0.0;
  }
  if (top > 0 && a[top] < 0.0) {
    double t = 1.0 + K;
    for (int i = 0; i < 400; ++i, t *= 2.0)
      if (chk.at(K + t)) return chk.result;
  }
  if (top >= 2) {
    a.resize(top + 1);
    double bound = 0.0;
    for (int d = 1; d < top; ++d) bound = std::max(bound, std::fabs(d * a[d] / (top * a[top])));
    bound = std::min(1.0 + bound, 1e6 * (1.0 + K));
    for (double t : critical_points(a, bound))
      if (chk.at(K + t)) return chk.result;
  }
  return chk.result;
}

std::vector<double> span_points(const Distribution& d, double& lo, double& hi) {
  if (d.is_discrete()) {
    for (double x : d.support()) {
      if (x > 0.0) lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    return d.support();
  }
  const double s = std::sqrt(d.log_variance());
  lo = std::min(lo, std::exp(d.log_mean() - 8.0 * s));
  hi = std::max(hi, std::exp(d.log_mean() + 8.0 * s));
  return {};
}

Verdict dominates_grid(const Distribution& F, const Distribution& G, int n,
                       DominanceTolerance tol) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::vector<double> base = span_points(F, lo, hi);
  auto g = span_points(G, lo, hi);
  base.insert(base.end(), g.begin(), g.end());
  if (!std::isfinite(lo)) lo = 1e-3 * std::max(1.0, hi);
  hi = std::max(hi, lo * 10.0);
  for (double f : {10.0, 100.0, 1000.0}) base.push_back(hi * f);

  auto run = [&](std::size_t N) {
    Checker chk{F, G, n, tol, {}};
    for (double y : base)
      if (chk.at(y)) return chk.result;
    for (double y : numerics::log_grid(lo, hi, N))
      if (chk.at(y)) return chk.result;
    return chk.result;
  };
  std::size_t N = 64;
  Verdict v = run(N);
  int stable = 0;
  while (stable < 2 && N < 4096) {
    N *= 2;
    Verdict w = run(N);
    stable = (w.pass == v.pass) ? stable + 1 : 0;
    v = w;
  }
  return v;
}

}  // namespace

Verdict dominates_n(const Distribution& F, const Distribution& G, int n,
                    DominanceTolerance tol) {
  if (n < 1) fail(ErrorKind::InvalidInput, "dominance order must be >= 1");
  if (F.is_discrete() && G.is_discrete()) return dominates_discrete(F, G, n, tol);
  return dominates_grid(F, G, n, tol);
}

Verdict dominates_inf(const Distribution& F, const Distribution& G,
                      const std::vector<double>& zgrid, double rel_tol) {
  if (zgrid.empty()) fail(ErrorKind::InvalidInput, "zgrid must be nonempty");
  const double log_tol = std::log1p(rel_tol);
  for (double z : zgrid) {
    if (!(z > 0.0)) fail(ErrorKind::InvalidInput, "zgrid points must be > 0");
    const double lf = F.log_laplace(z), lg = G.log_laplace(z);
    if (lf == -std::numeric_limits<double>::infinity()) continue;
    if (lf - lg > log_tol) return {false, z, std::exp(lf) - std::exp(lg)};
  }
  return {};
}

Verdict dominates_inf(const Distribution& F, const Distribution& G) {
  std::size_t N = 200;
  Verdict v = dominates_inf(F, G, numerics::log_grid(1e-4, 1e4, N));
  int stable = 0;
  while (stable < 2) {
    N *= 2;
    Verdict w = dominates_inf(F, G, numerics::log_grid(1e-4, 1e4, N));
    stable = (w.pass == v.pass) ? stable + 1 : 0;
    v = w;
    if (N > 200 * 64) break;
  }
  return v;
}

FubiniCheck expectation_vs_iterated(const Distribution& d, const DnFunction& w, int n) {
  if (n < 1) fail(ErrorKind::InvalidInput, "order must be >= 1");
  auto w_inf = w.value_at_infinity();
  if (!w_inf) fail(ErrorKind::InvalidInput, "W must be bounded below (finite at infinity)");
  FubiniCheck out;
  out.lhs = d.expectation([&](double y) { return w.derivative(0, y); });
  const double sgn = n % 2 == 0 ? 1.0 : -1.0;
  auto h = [&](double t) {
    const double f = d.iterated_cdf(n, t);
    return f == 0.0 ? 0.0 : sgn * w.derivative(n, t) * f;
  };
  std::vector<double> cuts;
  double start = 0.0;
  if (d.is_discrete()) {
    start = d.support().front();
    cuts = d.support();
  } else {
    const double s = std::sqrt(d.log_variance());
    for (double k : {-6.0, -3.0, 0.0, 3.0, 6.0}) cuts.push_back(std::exp(d.log_mean() + k * s));
  }
  cuts.insert(cuts.end(), w.breakpoints().begin(), w.breakpoints().end());
  numerics::QuadratureOptions o;
  o.abs_tol = 1e-14;
  o.rel_tol = 1e-10;
  auto r = numerics::integrate_piecewise(h, start, cuts, o);
  if (!r.converged) fail(ErrorKind::QuadratureFailure, "iterated-cdf integral did not converge");
  out.rhs = *w_inf + r.value;
  out.gap = std::fabs(out.lhs - out.rhs);
  if (out.gap > 1e-6 * (1.0 + std::fabs(out.lhs)))
    fail(ErrorKind::QuadratureFailure, "Fubini tolerance not reached");
  return out;
}

AuditResult test_function_audit(const Distribution& F, const Distribution& G,
                                std::optional<int> order, int family_size,
                                std::uint64_t seed, DominanceTolerance tol) {
  if (family_size < 1) fail(ErrorKind::InvalidInput, "family size must be >= 1");
  AuditResult out;
  auto check = [&](const numerics::RealFn& W, const std::string& label) {
    ++out.tested;
    const double ef = F.expectation(W), eg = G.expectation(W);
    if (ef - eg > tol.abs + tol.rel * std::fabs(eg)) {
      if (out.pass) {
        out.pass = false;
        out.counterexample = label;
        out.excess = ef - eg;
      }
    }
  };
  auto fmt = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };

  for (double z : numerics::log_grid(1e-3, 1e3, static_cast<std::size_t>(family_size)))
    check([z](double y) { return std::exp(-z * y); }, "exp(-" + fmt(z) + "*y)");
  if (!order) return out;

  const int n = *order;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < family_size; ++i) {
    const int terms = 1 + static_cast<int>(rng() % 4);
    std::vector<double> z(terms), c(terms);
    double norm = 0.0;
    for (int j = 0; j < terms; ++j) {
      z[j] = std::pow(10.0, -2.0 + 4.0 * unit(rng));
      c[j] = 0.1 + 0.9 * unit(rng);
      c[j] *= std::pow(z[j], -n);
      norm += c[j];
    }
    std::string label = "mixture";
    for (int j = 0; j < terms; ++j) {
      c[j] /= norm;
      label += " " + fmt(c[j]) + "*exp(-" + fmt(z[j]) + "*y)";
    }
    check(
        [z, c](double y) {
          double s = 0.0;
          for (std::size_t j = 0; j < z.size(); ++j) s += c[j] * std::exp(-z[j] * y);
          return s;
        },
        label);
  }

  double reach = 0.0;
  for (const Distribution* d : {&F, &G}) {
    if (d->is_discrete())
      reach = std::max(reach, d->support().back());
    else
      reach = std::max(reach, std::exp(d->log_mean() + 3.0 * std::sqrt(d->log_variance())));
  }
  reach = 1.5 * std::max(reach, 1e-3);
  for (int i = 0; i < family_size; ++i) {
    const double b = reach * (0.02 + 0.98 * unit(rng));
    check(
        [b, n](double y) { return y >= b ? 0.0 : std::pow(1.0 - y / b, n); },
        "hinge (1-y/" + fmt(b) + ")_+^" + std::to_string(n));
  }
  return out;
}

}  // namespace cmdual
