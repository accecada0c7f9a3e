#pragma once

// Reference computations for the tests. Nothing here calls into the library:
// everything is closed form, direct summation or plain composite quadrature.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

inline double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
}

// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// int_0^inf f after t = u / (1 - u).
inline double simpson_half_line(const std::function<double(double)>& f, int n = 20000) {
  auto g = [&](double u) {
    if (u >= 1.0) return 0.0;
    const double t = u / (1.0 - u);
    return f(t) / ((1.0 - u) * (1.0 - u));
  };
  return simpson(g, 0.0, 1.0 - 1e-12, n);
}

// int_lo^inf c z^{a+k} e^{-(x+b) z} dz for lo = 0.
inline double gamma_moment(double c, double a, double b, double x, int k) {
  const double s = a + k + 1.0;
  return c * std::tgamma(s) / std::pow(x + b, s);
}

struct Discrete {
  std::vector<double> x, p;
};

inline Discrete random_discrete(std::mt19937_64& rng, int max_points = 6, double hi = 5.0) {
  std::uniform_int_distribution<int> count(1, max_points);
  std::uniform_real_distribution<double> loc(0.0, hi), w(0.05, 1.0);
  const int m = count(rng);
  std::vector<double> xs;
  while (int(xs.size()) < m) {
    const double v = std::round(loc(rng) * 1000.0) / 1000.0;
    if (std::find(xs.begin(), xs.end(), v) == xs.end()) xs.push_back(v);
  }
  std::sort(xs.begin(), xs.end());
  std::vector<double> ps(m);
  double total = 0.0;
  for (auto& v : ps) total += (v = w(rng));
  for (auto& v : ps) v /= total;
  double tail = 1.0;
  for (int i = 0; i + 1 < m; ++i) tail -= ps[i];
  ps.back() = tail;
  return {xs, ps};
}

// E[g(X)] by direct summation.
inline double expect(const Discrete& d, const std::function<double(double)>& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.x.size(); ++i) s += d.p[i] * g(d.x[i]);
  return s;
}

// F_n(y) by literal repeated integration of the cdf on a uniform grid of step
// h: exact on the first level, trapezoid above it. Atoms and y must sit on
// grid nodes so that every kink is a node.
inline double iterated_cdf_grid(const Discrete& d, int n, double y, double h) {
  const long cells = std::lround(y / h);
  std::vector<double> F(cells + 1);
  for (long j = 0; j <= cells; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i)
      if (d.x[i] <= j * h + 0.5 * h) s += d.p[i];
    F[j] = s;
  }
  for (int level = 2; level <= n; ++level) {
    std::vector<double> G(cells + 1, 0.0);
    for (long j = 1; j <= cells; ++j)
      G[j] = G[j - 1] + (level == 2 ? F[j - 1] * h : 0.5 * (F[j - 1] + F[j]) * h);
    F = std::move(G);
  }
  return F[cells];
}

// Richardson over h and h/2 (trapezoid error is h^2 on each polynomial piece).
// Atoms and y must be multiples of 1e-3.
inline double iterated_cdf_numeric(const Discrete& d, int n, double y) {
  if (y <= 0.0) {
    if (n > 1) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < d.x.size(); ++i)
      if (d.x[i] <= y) s += d.p[i];
    return s;
  }
  const double h = 1e-3 / 8.0;
  const double coarse = iterated_cdf_grid(d, n, y, h), fine = iterated_cdf_grid(d, n, y, h / 2.0);
  return fine + (fine - coarse) / 3.0;
}

// F_n(y) = sum p_i (y - x_i)_+^{n-1} / (n-1)!.
inline double iterated_cdf_closed(const Discrete& d, int n, double y) {
  double s = 0.0, fact = 1.0;
  for (int j = 2; j < n; ++j) fact *= j;
  for (std::size_t i = 0; i < d.x.size(); ++i)
    if (d.x[i] <= y) s += d.p[i] * std::pow(y - d.x[i], n - 1) / fact;
  return s;
}

// Power utility U(x) = x^p / p with deflator law: u'(x) = c x^{p-1},
// c = E[Y^q]^{1-p}, q = -p / (1 - p); derivatives follow from the power rule.
inline double power_u_derivative(double p, double EYq, int n, double x) {
  const double c = std::pow(EYq, 1.0 - p);
  double coef = c;
  for (int j = 1; j < n; ++j) coef *= (p - j);
  return coef * std::pow(x, p - n);
}

// E[Y^s] for lognormal with log-mean m and log-variance s2.
inline double lognormal_moment(double m, double s2, double s) {
  return std::exp(s * m + 0.5 * s * s * s2);
}

// k-th derivative by central differences with steps h, h/2, h/4 and two
// Richardson levels (error O(h^6)).
inline double fd(const std::function<double(double)>& f, int k, double x, double h) {
  auto central = [&](double s) {
    double acc = 0.0, binom = 1.0;
    for (int j = 0; j <= k; ++j) {
      acc += ((j % 2) ? -1.0 : 1.0) * binom * f(x + (0.5 * k - j) * s);
      binom = binom * (k - j) / (j + 1);
    }
    return acc / std::pow(s, k);
  };
  const double d1 = central(h), d2 = central(h / 2), d3 = central(h / 4);
  const double r1 = (4.0 * d2 - d1) / 3.0, r2 = (4.0 * d3 - d2) / 3.0;
  return (16.0 * r2 - r1) / 15.0;
}

inline double harmonic(long long a, long long b) {
  double s = 0.0;
  for (long long i = b; i > a; --i) s += 1.0 / double(i);
  return s;
}

// Regularized upper incomplete gamma Q(n, x) for integer n.
inline double upper_gamma_q(int n, double x) {
  double term = 1.0, s = 1.0;
  for (int k = 1; k < n; ++k) {
    term *= x / k;
    s += term;
  }
  return std::exp(-x) * s;
}

}  // namespace oracle
