#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "cmdual/cmcalc.hpp"
#include "cmdual/duality.hpp"
#include "cmdual/solver.hpp"

namespace cmdual {

/// f(y) = 2 - (1/C) int_0^y g, g = sum_{i <= N_g} i^{-2} g_{i, sigma_i},
/// g_{mu, s}(x) = exp(-(x - mu)^2 / (2 s^2)) / s, sigma_i = i^{-4},
/// C = sqrt(2 pi) sum_{i <= N_g} i^{-2}.
class AnalyticBump {
 public:
  explicit AnalyticBump(long long terms = 1000000);

  long long terms() const { return terms_; }
  double C() const { return C_; }
  static double sigma(long long i) { return 1.0 / std::pow(double(i), 4); }

  double f(double y) const;
  double f_prime(double y) const;
  /// g(y) / C.
  double density(double y) const;
  /// Breakpoints i +- 12 sigma_i for i <= limit (for generic quadrature).
  std::vector<double> breakpoints(long long limit) const;

 private:
  long long terms_;
  double h2_;  // sum_{i <= N_g} i^{-2}
  double C_;
  double top_;  // f = top_ - (sum_i i^{-2} Phi((y - i) / sigma_i)) / h2_
  friend class Cex1Instance;
};

enum class Truncation { Raw, Renormalized };

/// V^(n) = f * Vbar^(n), Vbar(y) = 1/y, with V and its lower derivatives
/// vanishing at infinity. Z takes 1/2 with probability 1 - eps and i >= 1
/// with probability eps q_i / s0, q_i = i^{-3}.
class Cex1Instance {
 public:
  Cex1Instance(int n = 2, long long bump_terms = 1000000);

  int n() const { return n_; }
  const AnalyticBump& bump() const { return bump_; }
  double s0() const { return s0_; }
  double s1() const { return s1_; }
  double eps() const { return eps_; }
  double prob(long long i) const { return eps_ * std::pow(double(i), -3) / s0_; }

  /// (-1)^k V^(k)(y) for k = 0..n+1.
  double signed_V(int k, double y) const;
  /// (-1)^k Vbar^(k)(y) = k! y^{-k-1}.
  static double signed_Vbar(int k, double y);
  /// The same conjugate as a generic D(n) function (quadrature based).
  DnFunction conjugate(long long breakpoint_limit = 50) const;

 private:
  int n_;
  AnalyticBump bump_;
  double s0_, s1_, eps_;
  /// sum_i w_i int_y^inf K_m(t - y) n! t^{-n-1} Phi((t - i)/sigma_i) dt.
  double smoothed_steps(int m, double y) const;
};

struct Cex1FiniteRow {
  long long truncation;
  std::vector<double> values;  // v^(k)(1), k = 0..n
};

/// v^(k)(1) = E[V^(k)(Z) Z^k], k = 0..n, over Z truncated at each level.
/// Throws EnvelopeViolation if a term leaves the Vbar sandwich.
std::vector<Cex1FiniteRow> cex1_verify_finite(const Cex1Instance& inst,
                                              const std::vector<long long>& truncations,
                                              Truncation mode = Truncation::Renormalized);

struct Cex1DivergenceRow {
  long long truncation;
  double partial_sum;  // S_N = sum_{i <= N} p_i (-1)^{n+1} V^{(n+1)}(i) i^{n+1}
  double increment;    // S_N - S_previous (0 for the first row)
  double oracle;       // eps n! / (s0 C) * sum_{previous < i <= N} 1/i
};

std::vector<Cex1DivergenceRow> cex1_divergence(const Cex1Instance& inst,
                                               const std::vector<long long>& truncations);

/// Utility with -V'(y) = 1 / (y (y + 1)), i.e. inverse-marginal measure (1 - e^{-z}) dz.
UtilitySpec footnote_utility();

struct Cex2Instance {
  UtilitySpec utility;
  int N = 0;
  std::vector<double> S;    // S[0] = 2, S[n] = 1/n
  std::vector<double> p;
  std::vector<double> U1;   // U'(S)
  std::vector<double> U2;   // U''(S)
  double delta_hat = 0.0;
  std::pair<int, int> rra_pair;  // indices m, k (0 stands for the state S = 2) with A differing
  double sum_p = 0.0;
  double foc_residual = 0.0;   // E[U'(S_1)(1 - S_1)]
  double u_prime_one = 0.0;    // E[U'(S_1)]
  double expected_S = 0.0;
  double G_sum = 0.0;          // sum_n p_n |G(omega_n)| with eps_bar = 1/3

  /// The market seen as a finite one-period model (riskless asset plus the stock).
  FiniteMarket market() const;
};

Cex2Instance cex2_build(const UtilitySpec& util = footnote_utility(), int N = 200);

/// Q(D) = E[U''(S_1) (D S_1 + 1 - D)^2].
double cex2_quadratic(const Cex2Instance& inst, double delta);

struct PositionOptimum {
  double delta;
  double value;
  bool at_boundary;
};

/// argmax over D in [-x, x] of E[U(x + D (S_1 - 1))].
PositionOptimum cex2_optimal_position(const Cex2Instance& inst, double x);

struct Cex2GapRow {
  double eps;
  double D_plus;   // (2/eps^2)(u(1+eps) - u(1) - eps u'(1))
  double D_minus;  // same at 1 - eps
  double slope_plus;   // Dtilde with X(1+eps) - S = eps (1 + Dtilde (S - 1))
  double slope_minus;
  bool boundary_plus;
  bool boundary_minus;
};

struct Cex2GapReport {
  std::vector<Cex2GapRow> rows;
  double Q_hat = 0.0;    // Q(delta_hat)
  double Q_bound = 0.0;  // sup of Q on the side of 1 away from delta_hat
  double gap = 0.0;      // Q_hat - Q_bound
  double margin = 0.0;   // gap / |Q_hat|
};

Cex2GapReport cex2_gap(const Cex2Instance& inst, const std::vector<double>& eps_list);

}  // namespace cmdual
