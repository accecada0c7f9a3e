#include "cmdual/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <sstream>
#include <thread>

#include "cmdual/error.hpp"

namespace cmdual::numerics {

namespace {

constexpr int kRuleOrder = 20;

struct Estimate {
  double value;
  double abs_value;
};

Estimate apply_rule(const RealFn& f, double a, double b) {
  static const GaussRule& rule = gauss_legendre(kRuleOrder);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double s = 0.0, sa = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = f(mid + half * rule.nodes[i]);
    s += rule.weights[i] * v;
    sa += rule.weights[i] * std::fabs(v);
  }
  return {s * half, sa * std::fabs(half)};
}

struct Segment {
  double a, b;
  Estimate left, right;
  double error;
  int depth;
  double value() const { return left.value + right.value; }
  double abs_value() const { return left.abs_value + right.abs_value; }
};

struct ByError {
  bool operator()(const Segment& x, const Segment& y) const {
    return x.error < y.error;
  }
};

Segment make_segment(const RealFn& f, double a, double b, const Estimate& whole,
                     int depth) {
  const double m = 0.5 * (a + b);
  Segment s{a, b, apply_rule(f, a, m), apply_rule(f, m, b), 0.0, depth};
  s.error = std::fabs(whole.value - s.value());
  return s;
}

}  // namespace

QuadratureResult integrate(const RealFn& f, double a, double b,
                           const QuadratureOptions& opts) {
  QuadratureResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<Segment, std::vector<Segment>, ByError> open;
  double done_value = 0.0, done_error = 0.0, done_abs = 0.0;
  open.push(make_segment(f, a, b, apply_rule(f, a, b), 0));
  double total = open.top().value();
  double total_err = open.top().error;
  double total_abs = open.top().abs_value();
  std::size_t count = 1;

  auto tolerance = [&] {
    return std::max({opts.abs_tol, opts.rel_tol * std::fabs(total),
                     64.0 * std::numeric_limits<double>::epsilon() * total_abs});
  };

  while (!open.empty() && total_err > tolerance()) {
    if (!std::isfinite(total)) break;
    if (count >= opts.max_intervals) break;
    Segment s = open.top();
    open.pop();
    if (s.depth >= opts.max_depth) {
      done_value += s.value();
      done_error += s.error;
      done_abs += s.abs_value();
      continue;
    }
    const double m = 0.5 * (s.a + s.b);
    Segment l = make_segment(f, s.a, m, s.left, s.depth + 1);
    Segment r = make_segment(f, m, s.b, s.right, s.depth + 1);
    total += l.value() + r.value() - s.value();
    total_err += l.error + r.error - s.error;
    total_abs += l.abs_value() + r.abs_value() - s.abs_value();
    open.push(l);
    open.push(r);
    ++count;
  }
  // Recompute sums from scratch to shed accumulated rounding in the running totals.
  double value = done_value, error = done_error, abs_value = done_abs;
  while (!open.empty()) {
    value += open.top().value();
    error += open.top().error;
    abs_value += open.top().abs_value();
    open.pop();
  }
  out.value = sign * value;
  out.error = error;
  out.converged =
      std::isfinite(value) &&
      error <= std::max({opts.abs_tol, opts.rel_tol * std::fabs(value),
                         64.0 * std::numeric_limits<double>::epsilon() * abs_value}) *
                   1.0000001;
  return out;
}

QuadratureResult integrate_to_infinity(const RealFn& f, double a,
                                       const QuadratureOptions& opts,
                                       double scale) {
  if (!(scale > 0.0)) scale = std::max(1.0, std::fabs(a));
  auto g = [&](double u) {
    const double w = 1.0 - u;
    const double t = a + scale * u / w;
    if (!std::isfinite(t)) return 0.0;
    const double v = f(t);
    if (v == 0.0) return 0.0;
    return v * scale / (w * w);
  };
  return integrate(g, 0.0, 1.0, opts);
}

QuadratureResult integrate_piecewise(const RealFn& f, double a,
                                     std::span<const double> breakpoints,
                                     const QuadratureOptions& opts,
                                     double tail_scale) {
  std::vector<double> cuts{a};
  for (double c : breakpoints)
    if (c > a && std::isfinite(c)) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  QuadratureResult out;
  out.converged = true;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto r = integrate(f, cuts[i], cuts[i + 1], opts);
    out.value += r.value;
    out.error += r.error;
    out.converged = out.converged && r.converged;
  }
  const double last = cuts.back();
  const double scale = tail_scale > 0.0 ? tail_scale : std::max(1.0, last - cuts.front());
  auto r = integrate_to_infinity(f, last, opts, scale);
  out.value += r.value;
  out.error += r.error;
  out.converged = out.converged && r.converged;
  return out;
}

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

namespace {

// Orthonormal probabilists' Hermite polynomials psi_0..psi_{n}.
void hermite_values(int n, double x, double& psi_n, double& psi_nm1,
                    double& sum_sq) {
  double p0 = 1.0, p1 = x;
  sum_sq = 1.0;
  if (n == 0) {
    psi_n = 1.0;
    psi_nm1 = 0.0;
    return;
  }
  for (int k = 1; k < n; ++k) {
    sum_sq += p1 * p1;
    const double p2 = (x * p1 - std::sqrt(double(k)) * p0) / std::sqrt(k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  psi_n = p1;
  psi_nm1 = p0;
}

}  // namespace

const GaussRule& gauss_hermite(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = es.eigenvalues()(i);
    double pn, pnm1, ss;
    for (int it2 = 0; it2 < 8; ++it2) {
      hermite_values(n, x, pn, pnm1, ss);
      const double dx = pn / (std::sqrt(double(n)) * pnm1);
      x -= dx;
      if (std::fabs(dx) <= 1e-15 * std::max(1.0, std::fabs(x))) break;
    }
    hermite_values(n, x, pn, pnm1, ss);
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / ss;
  }
  // Enforce exact symmetry.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return cache.emplace(n, std::move(rule)).first->second;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double normal_partial_moment(int r, double d) {
  if (r < 0 || r > 4) fail(ErrorKind::InvalidInput, "partial moment order must be 0..4");
  if (d >= -1.0) {
    // E[Z^j 1{Z > c}], c = -d, by the upward recursion.
    const double c = -d;
    double m[5];
    m[0] = normal_cdf(d);
    m[1] = normal_pdf(c);
    for (int j = 2; j <= 4; ++j) m[j] = std::pow(c, j - 1) * normal_pdf(c) + (j - 1) * m[j - 2];
    double s = 0.0;
    for (int j = 0; j <= r; ++j) s += binomial(r, j) * std::pow(d, r - j) * m[j];
    return std::max(s, 0.0);
  }
  // Deep tail: integrate s^r phi(s - d) over s > 0 directly.
  const double scale = 1.0 / (-d);
  auto g = [&](double s) { return std::pow(s, r) * normal_pdf(s - d); };
  QuadratureOptions o;
  o.abs_tol = 0.0;
  o.rel_tol = 1e-13;
  return integrate(g, 0.0, 40.0 * scale + 10.0 * scale, o).value;
}

double solve_bracketed(const RealFn& f, const RealFn& df, double lo, double hi,
                       double rel_tol, int max_iter) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) fail(ErrorKind::NoRoot, "root not bracketed");
  // Orient so that f(xl) < 0 < f(xh).
  double xl = flo < 0 ? lo : hi;
  double xh = flo < 0 ? hi : lo;
  double x = 0.5 * (lo + hi);
  double dx_old = std::fabs(hi - lo), dx = dx_old;
  double fx = f(x), dfx = df(x);
  for (int it = 0; it < max_iter; ++it) {
    const bool newton_out = ((x - xh) * dfx - fx) * ((x - xl) * dfx - fx) > 0.0;
    const bool too_slow = std::fabs(2.0 * fx) > std::fabs(dx_old * dfx);
    if (newton_out || too_slow || !std::isfinite(dfx) || dfx == 0.0) {
      dx_old = dx;
      dx = 0.5 * (xh - xl);
      x = xl + dx;
    } else {
      dx_old = dx;
      dx = fx / dfx;
      x -= dx;
    }
    if (std::fabs(dx) <= rel_tol * std::fabs(x)) return x;
    fx = f(x);
    if (fx == 0.0) return x;
    dfx = df(x);
    if (fx < 0.0)
      xl = x;
    else
      xh = x;
    if (std::fabs(xh - xl) <= rel_tol * std::fabs(x)) return x;
  }
  return x;
}

GoldenResult golden_section_max(const RealFn& f, double a, double b, double tol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (std::fabs(b - a) > tol * (1.0 + std::fabs(c) + std::fabs(d))) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? GoldenResult{c, fc} : GoldenResult{d, fd};
}

std::vector<double> linear_grid(double a, double b, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {a};
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = a + (b - a) * double(i) / double(n - 1);
  g.back() = b;
  return g;
}

std::vector<double> log_grid(double a, double b, std::size_t n) {
  auto g = linear_grid(std::log(a), std::log(b), n);
  for (auto& v : g) v = std::exp(v);
  if (!g.empty()) {
    g.front() = a;
    g.back() = b;
  }
  return g;
}

std::vector<double> parse_grid(const std::string& spec) {
  std::stringstream ss(spec);
  std::string pa, pb, pn;
  if (!std::getline(ss, pa, ':') || !std::getline(ss, pb, ':') || !std::getline(ss, pn))
    fail(ErrorKind::InvalidInput, "grid must be a:b:steps, got '" + spec + "'");
  double a, b;
  long n;
  try {
    std::size_t pos;
    a = std::stod(pa, &pos);
    if (pos != pa.size()) throw std::invalid_argument(pa);
    b = std::stod(pb, &pos);
    if (pos != pb.size()) throw std::invalid_argument(pb);
    n = std::stol(pn, &pos);
    if (pos != pn.size()) throw std::invalid_argument(pn);
  } catch (const std::logic_error&) {
    fail(ErrorKind::InvalidInput, "grid must be a:b:steps, got '" + spec + "'");
  }
  if (!(a < b) || n < 2) fail(ErrorKind::InvalidInput, "grid needs a<b and steps>=2");
  return linear_grid(a, b, static_cast<std::size_t>(n));
}

double factorial(int n) { return std::tgamma(n + 1.0); }

double log_factorial(int n) { return std::lgamma(n + 1.0); }

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

double zeta_tail(double p, long long a) {
  if (!(p > 1.0) || a < 1) fail(ErrorKind::InvalidInput, "zeta_tail needs p>1, a>=1");
  constexpr long long kStart = 100;
  double s = 0.0;
  long long j = a;
  for (; j < kStart; ++j) s += std::pow(double(j), -p);
  const double N = double(j);
  // Euler-Maclaurin remainder for sum_{i >= N} i^{-p}.
  const double np = std::pow(N, -p);
  double em = N * np / (p - 1.0) + 0.5 * np + p * np / (12.0 * N);
  em -= p * (p + 1) * (p + 2) * np / (720.0 * N * N * N);
  em += p * (p + 1) * (p + 2) * (p + 3) * (p + 4) * np / (30240.0 * std::pow(N, 5));
  em -= p * (p + 1) * (p + 2) * (p + 3) * (p + 4) * (p + 5) * (p + 6) * np /
        (1209600.0 * std::pow(N, 7));
  return s + em;
}

double zeta_partial(double p, long long n) {
  if (n <= 0) return 0.0;
  if (n <= 2000) {
    double s = 0.0;
    for (long long j = n; j >= 1; --j) s += std::pow(double(j), -p);
    return s;
  }
  return zeta_tail(p, 1) - zeta_tail(p, n + 1);
}

namespace {

void enumerate(int n, int part, int remaining, std::vector<int>& k,
               std::vector<Partition>& out) {
  if (part > n) {
    if (remaining != 0) return;
    Partition p{k, 0, factorial(n)};
    for (int i = 1; i <= n; ++i) {
      p.block_count += k[i - 1];
      p.coefficient /= factorial(k[i - 1]) * std::pow(factorial(i), k[i - 1]);
    }
    p.coefficient = std::round(p.coefficient);
    out.push_back(std::move(p));
    return;
  }
  for (int m = 0; m * part <= remaining; ++m) {
    k[part - 1] = m;
    enumerate(n, part + 1, remaining - m * part, k, out);
  }
  k[part - 1] = 0;
}

}  // namespace

const std::vector<Partition>& partitions(int n) {
  static std::mutex mu;
  static std::map<int, std::vector<Partition>> cache;
  if (n < 0 || n > 20) fail(ErrorKind::OrderExceeded, "partition order out of range");
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<Partition> out;
  if (n == 0) {
    out.push_back(Partition{{}, 0, 1.0});
  } else {
    std::vector<int> k(n, 0);
    enumerate(n, 1, n, k, out);
  }
  return cache.emplace(n, std::move(out)).first->second;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CMDUAL_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) threads = std::min<std::size_t>(threads, static_cast<std::size_t>(v));
  }
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace cmdual::numerics
