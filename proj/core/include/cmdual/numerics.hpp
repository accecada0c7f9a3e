#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <span>
#include <vector>

namespace cmdual::numerics {

using RealFn = std::function<double(double)>;

struct QuadratureOptions {
  double abs_tol = 1e-14;
  double rel_tol = 1e-10;
  int max_depth = 40;
  std::size_t max_intervals = 20000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = false;
};

/// Globally adaptive Gauss-Legendre quadrature on [a, b]. Each interval is
/// estimated with a 20-point rule and its two halves; the interval with the
/// largest disagreement is bisected next, down to `max_depth` levels.
QuadratureResult integrate(const RealFn& f, double a, double b,
                           const QuadratureOptions& opts = {});

/// Integral over [a, +inf) through t = a + scale * u / (1 - u).
QuadratureResult integrate_to_infinity(const RealFn& f, double a,
                                       const QuadratureOptions& opts = {},
                                       double scale = 0.0);

/// Integral over [a, +inf) split at the given breakpoints (those inside
/// (a, inf)); the last segment is mapped to the unit interval with the given
/// scale (default: the span of the finite segments, at least 1).
QuadratureResult integrate_piecewise(const RealFn& f, double a,
                                     std::span<const double> breakpoints,
                                     const QuadratureOptions& opts = {},
                                     double tail_scale = 0.0);

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
const GaussRule& gauss_legendre(int n);

/// n-point Gauss-Hermite rule for E[g(Z)], Z ~ N(0, 1) (weights sum to 1).
const GaussRule& gauss_hermite(int n);

double normal_cdf(double x);
double normal_pdf(double x);

/// E[(d + Z)_+^r] for Z ~ N(0, 1), r = 0..4.
double normal_partial_moment(int r, double d);

/// Root of a strictly monotone f on a bracket [lo, hi] with f(lo), f(hi) of
/// opposite signs. Newton steps using df, falling back to bisection whenever
/// a step leaves the bracket.
double solve_bracketed(const RealFn& f, const RealFn& df, double lo, double hi,
                       double rel_tol = 1e-14, int max_iter = 400);

struct GoldenResult {
  double argmax;
  double value;
};

GoldenResult golden_section_max(const RealFn& f, double a, double b,
                                double tol = 1e-12);

std::vector<double> linear_grid(double a, double b, std::size_t n);
std::vector<double> log_grid(double a, double b, std::size_t n);

/// Parses "a:b:steps" into a linear grid. Throws InvalidInput.
std::vector<double> parse_grid(const std::string& spec);

double factorial(int n);
double log_factorial(int n);
double binomial(int n, int k);

/// Sum_{j >= a} j^{-p}, p > 1, a >= 1.
double zeta_tail(double p, long long a);

/// Sum_{j = 1}^{n} j^{-p}, p > 1.
double zeta_partial(double p, long long n);

inline constexpr double kZeta2 = 1.6449340668482264365;
inline constexpr double kZeta3 = 1.2020569031595942854;

/// A term of the Faa di Bruno sum for the n-th derivative of a composition:
/// multiplicities k_1..k_n with sum_i i*k_i = n.
struct Partition {
  std::vector<int> multiplicity;  // multiplicity[i-1] = k_i
  int block_count;                // k_1 + ... + k_n
  double coefficient;             // n! / prod(k_i! (i!)^{k_i})
};

/// Partitions of n (cached; n = 0 yields the single empty partition).
const std::vector<Partition>& partitions(int n);

/// Runs body(i) for i in [0, n); the number of worker threads is capped by
/// the CMDUAL_THREADS environment variable (default: hardware concurrency).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cmdual::numerics
