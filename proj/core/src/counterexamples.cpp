#include "cmdual/counterexamples.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cmdual/error.hpp"
#include "cmdual/numerics.hpp"

namespace cmdual {

namespace {

constexpr long long kSmooth = 5;  // bumps with sigma_i > 1e-3 are integrated numerically
constexpr double kWindow = 12.0;

// sum_{i >= a} i^{-p}, tabulated for small integer p and a
double tail(double p, long long a) {
  constexpr int kP = 8, kA = 128;
  static const auto table = [] {
    std::vector<double> t((kP + 1) * kA, 0.0);
    for (int q = 2; q <= kP; ++q)
      for (int b = 1; b < kA; ++b) t[q * kA + b] = numerics::zeta_tail(q, b);
    return t;
  }();
  const int q = int(p);
  if (double(q) == p && q >= 2 && q <= kP && a < kA) return table[q * kA + int(a)];
  return numerics::zeta_tail(p, a);
}

// sum_{i=a}^{b} i^{-p}
double zeta_range(double p, long long a, long long b) {
  if (b < a) return 0.0;
  if (b - a < 64) {
    double s = 0.0;
    for (long long i = b; i >= a; --i) s += std::pow(double(i), -p);
    return s;
  }
  return tail(p, a) - tail(p, b + 1);
}

// E[(Z - d)_+^r]
double upper_moment(int r, double d) {
  if (r <= 4) return numerics::normal_partial_moment(r, -d);
  auto g = [&](double z) { return std::pow(z - d, r) * numerics::normal_pdf(z); };
  return numerics::integrate(g, std::max(d, -40.0), std::max(d, 0.0) + 40.0).value;
}

// int_0^inf v^j [Phi(v + d) - 1{v + d > 0}] dv
double step_defect(int j, double d) {
  const double below = d < 0.0 ? std::pow(-d, j + 1) : 0.0;
  return (below - upper_moment(j + 1, d)) / (j + 1);
}

double kernel(int m, double u) {
  if (m < 0) return 0.0;
  if (u <= 0.0) return m == 0 ? 1.0 : 0.0;
  return std::pow(u, m) / numerics::factorial(m);
}

}  // namespace

AnalyticBump::AnalyticBump(long long terms) : terms_(terms) {
  if (terms < 1) fail(ErrorKind::InvalidInput, "bump needs at least one term");
  h2_ = zeta_range(2.0, 1, terms);
  C_ = std::sqrt(2.0 * std::numbers::pi) * h2_;
  // mass of the first bumps below zero, excluded from int_0^y g
  double below = 0.0;
  for (long long i = 1; i <= std::min(kSmooth, terms_); ++i)
    below += numerics::normal_cdf(-double(i) / sigma(i)) / double(i * i);
  top_ = 2.0 + below / h2_;
}

double AnalyticBump::f(double y) const {
  if (!(y > 0.0)) fail(ErrorKind::InvalidInput, "bump needs y > 0");
  double s = 0.0;
  for (long long i = 1; i <= std::min(kSmooth, terms_); ++i)
    s += numerics::normal_cdf((y - double(i)) / sigma(i)) / double(i * i);
  const long long j = std::llround(y);
  s += zeta_range(2.0, kSmooth + 1, std::min(j - 1, terms_));
  if (j > kSmooth && j <= terms_) s += numerics::normal_cdf((y - double(j)) / sigma(j)) / double(j) / double(j);
  return top_ - s / h2_;
}

double AnalyticBump::density(double y) const {
  double s = 0.0;
  auto term = [&](long long i) {
    const double sg = sigma(i);
    return numerics::normal_pdf((y - double(i)) / sg) / sg / double(i) / double(i);
  };
  for (long long i = 1; i <= std::min(kSmooth, terms_); ++i) s += term(i);
  const long long j = std::llround(y);
  if (j > kSmooth && j <= terms_) s += term(j);
  return s / h2_;
}

double AnalyticBump::f_prime(double y) const { return -density(y); }

std::vector<double> AnalyticBump::breakpoints(long long limit) const {
  std::vector<double> out;
  for (long long i = 1; i <= std::min(limit, terms_); ++i) {
    const double w = kWindow * sigma(i);
    if (double(i) - w > 0.0) out.push_back(double(i) - w);
    out.push_back(double(i));
    out.push_back(double(i) + w);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Cex1Instance::Cex1Instance(int n, long long bump_terms) : n_(n), bump_(bump_terms) {
  if (n < 1 || n > 3) fail(ErrorKind::InvalidInput, "counterexample order must be 1..3");
  s0_ = numerics::kZeta3;
  s1_ = numerics::kZeta2;
  eps_ = 0.5 / (s1_ / s0_ - 0.5);
}

double Cex1Instance::signed_Vbar(int k, double y) {
  return numerics::factorial(k) * std::pow(y, -k - 1);
}

double Cex1Instance::smoothed_steps(int m, double y) const {
  const int n = n_;
  const int k = n - m - 1;
  const double nf = numerics::factorial(n);
  const double full = signed_Vbar(k, y);
  const long long T = bump_.terms_;
  auto phi = [&](double t) { return kernel(m, t - y) * nf * std::pow(t, -n - 1); };
  auto dphi = [&](double t) {
    return nf * (kernel(m - 1, t - y) * std::pow(t, -n - 1) -
                 (n + 1) * kernel(m, t - y) * std::pow(t, -n - 2));
  };
  // int_s^inf phi for s >= y
  auto H = [&](double s) {
    double acc = 0.0;
    for (int j = 0; j <= m; ++j)
      acc += numerics::binomial(m, j) * std::pow(-y, m - j) * std::pow(s, j - n) / (n - j);
    return acc * nf / numerics::factorial(m);
  };

  double total = 0.0;
  for (long long i = 1; i <= std::min(kSmooth, T); ++i) {
    const double sg = AnalyticBump::sigma(i);
    const double w = 1.0 / double(i * i);
    if (y >= double(i) + kWindow * sg) {
      total += w * full;
      continue;
    }
    const double lo = double(i) - kWindow * sg, hi = double(i) + kWindow * sg;
    std::vector<double> bp;
    for (double b : {lo, double(i), hi})
      if (b > y) bp.push_back(b);
    numerics::QuadratureOptions o;
    o.rel_tol = 1e-13;
    o.abs_tol = 0.0;
    auto r = numerics::integrate_piecewise(
        [&](double t) { return phi(t) * numerics::normal_cdf((t - double(i)) / sg); }, y, bp, o,
        std::max(1.0, y));
    total += w * r.value;
  }
  if (T <= kSmooth) return total;

  const long long j = std::llround(y);
  long long first_ahead = std::max(kSmooth + 1, j + 1);
  // steps already passed
  total += full * zeta_range(2.0, kSmooth + 1, std::min(j - 1, T));
  if (j > kSmooth && j <= T) {
    const double sg = AnalyticBump::sigma(j);
    const double d = (y - double(j)) / sg;
    const double w = 1.0 / double(j) / double(j);
    if (d >= kWindow) {
      total += w * full;
    } else if (d <= -kWindow) {
      first_ahead = j;
    } else {
      const double h = nf * std::pow(y, -n - 1);
      const double dh = -(n + 1) * nf * std::pow(y, -n - 2);
      const double base = d >= 0.0 ? full : H(double(j));
      const double corr = std::pow(sg, m + 1) / numerics::factorial(m) *
                          (h * step_defect(m, d) + sg * dh * step_defect(m + 1, d));
      total += w * (base + corr);
    }
  }
  if (first_ahead <= T) {
    // sum_{i >= first_ahead} i^{-2} [H(i) - sigma_i^2 phi'(i) / 2]
    double acc = 0.0;
    for (int jj = 0; jj <= m; ++jj)
      acc += numerics::binomial(m, jj) * std::pow(-y, m - jj) / (n - jj) *
             zeta_range(double(n + 2 - jj), first_ahead, T);
    total += acc * nf / numerics::factorial(m);
    double corr = 0.0;
    // sigma_i^2 = i^{-8} drops below double resolution past i ~ 100
    for (long long i = first_ahead; i <= std::min({T, first_ahead + 40, 128LL}); ++i) {
      const double sg = AnalyticBump::sigma(i);
      corr += sg * sg * dphi(double(i)) / double(i) / double(i);
    }
    total -= 0.5 * corr;
  }
  return total;
}

double Cex1Instance::signed_V(int k, double y) const {
  if (k < 0 || k > n_ + 1) fail(ErrorKind::OrderExceeded, "derivative order outside 0..n+1");
  if (!(y > 0.0)) fail(ErrorKind::InvalidInput, "needs y > 0");
  const double nf = numerics::factorial(n_);
  if (k == n_ + 1)
    return bump_.f(y) * (n_ + 1) * nf * std::pow(y, -n_ - 2) - bump_.f_prime(y) * nf * std::pow(y, -n_ - 1);
  if (k == n_) return bump_.f(y) * nf * std::pow(y, -n_ - 1);
  // f = top - F with F the normalized sum of smoothed steps
  return bump_.top_ * signed_Vbar(k, y) - smoothed_steps(n_ - k - 1, y) / bump_.h2_;
}

DnFunction Cex1Instance::conjugate(long long breakpoint_limit) const {
  const int n = n_;
  const AnalyticBump b = bump_;
  auto wn = [n, b](double y) {
    return (n % 2 == 0 ? 1.0 : -1.0) * b.f(y) * numerics::factorial(n) * std::pow(y, -n - 1);
  };
  return DnFunction::from_nth_derivative(n, wn, Anchor{1.0, signed_V(0, 1.0)},
                                         bump_.breakpoints(breakpoint_limit));
}

std::vector<Cex1FiniteRow> cex1_verify_finite(const Cex1Instance& inst,
                                              const std::vector<long long>& truncations,
                                              Truncation mode) {
  if (truncations.empty()) fail(ErrorKind::InvalidInput, "no truncations given");
  for (std::size_t t = 0; t < truncations.size(); ++t) {
    if (truncations[t] < 1) fail(ErrorKind::InvalidInput, "truncations must be positive");
    if (t && truncations[t] <= truncations[t - 1]) fail(ErrorKind::InvalidInput, "truncations must increase");
  }
  const int n = inst.n();
  auto term = [&](int k, double z) {
    const double v = inst.signed_V(k, z);
    const double lo = Cex1Instance::signed_Vbar(k, z);
    const double tol = 1e-12 * lo;
    if (!(v >= lo - tol && v <= 2.0 * lo + tol))
      fail(ErrorKind::EnvelopeViolation, "V^(" + std::to_string(k) + ") leaves the envelope at " + std::to_string(z));
    return (k % 2 == 0 ? 1.0 : -1.0) * v * std::pow(z, k);
  };
  const long long top = truncations.back();
  // per-chunk parallel accumulation; chunks ordered so the sum is deterministic
  const long long chunk = 4096;
  const std::size_t chunks = std::size_t((top + chunk - 1) / chunk);
  std::vector<std::vector<double>> part(chunks, std::vector<double>(n + 1, 0.0));
  std::vector<double> part_mass(chunks, 0.0);
  numerics::parallel_for(chunks, [&](std::size_t c) {
    const long long a = 1 + (long long)c * chunk;
    const long long b = std::min(top, a + chunk - 1);
    for (long long i = b; i >= a; --i) {
      const double p = inst.prob(i);
      part_mass[c] += p;
      for (int k = 0; k <= n; ++k) part[c][k] += p * term(k, double(i));
    }
  });
  std::vector<double> acc(n + 1);
  for (int k = 0; k <= n; ++k) acc[k] = (1.0 - inst.eps()) * term(k, 0.5);
  double mass = 1.0 - inst.eps();
  std::vector<Cex1FiniteRow> out;
  long long done = 0;
  std::size_t next = 0;
  auto emit = [&] {
    Cex1FiniteRow row{truncations[next], acc};
    if (mode == Truncation::Renormalized)
      for (auto& v : row.values) v /= mass;
    out.push_back(std::move(row));
    ++next;
  };
  for (std::size_t c = 0; c < chunks; ++c) {
    const long long a = 1 + (long long)c * chunk;
    const long long b = std::min(top, a + chunk - 1);
    // a truncation inside this chunk: add its terms one by one
    if (next < truncations.size() && truncations[next] < b) {
      for (long long i = a; i <= b; ++i) {
        const double p = inst.prob(i);
        mass += p;
        for (int k = 0; k <= n; ++k) acc[k] += p * term(k, double(i));
        done = i;
        while (next < truncations.size() && truncations[next] == done) emit();
      }
      continue;
    }
    mass += part_mass[c];
    for (int k = 0; k <= n; ++k) acc[k] += part[c][k];
    done = b;
    while (next < truncations.size() && truncations[next] == done) emit();
  }
  return out;
}

std::vector<Cex1DivergenceRow> cex1_divergence(const Cex1Instance& inst,
                                               const std::vector<long long>& truncations) {
  if (truncations.empty()) fail(ErrorKind::InvalidInput, "no truncations given");
  for (std::size_t t = 0; t < truncations.size(); ++t) {
    if (truncations[t] < 1) fail(ErrorKind::InvalidInput, "truncations must be positive");
    if (t && truncations[t] <= truncations[t - 1]) fail(ErrorKind::InvalidInput, "truncations must increase");
  }
  const int n = inst.n();
  const double scale = inst.eps() * numerics::factorial(n) / (inst.s0() * inst.bump().C());
  std::vector<Cex1DivergenceRow> out;
  double sum = 0.0, harmonic = 0.0;
  long long prev = 0;
  double prev_sum = 0.0;
  for (long long N : truncations) {
    for (long long i = prev + 1; i <= N; ++i) {
      const double z = double(i);
      sum += inst.prob(i) * inst.signed_V(n + 1, z) * std::pow(z, n + 1);
      harmonic += 1.0 / z;
    }
    out.push_back({N, sum, out.empty() ? 0.0 : sum - prev_sum, scale * harmonic});
    harmonic = 0.0;
    prev_sum = sum;
    prev = N;
  }
  return out;
}

UtilitySpec footnote_utility() {
  DensityPiece piece;
  piece.c = 1.0;
  piece.a = 0.0;
  piece.b = 0.0;
  piece.lo = 0.0;
  piece.b2 = 1.0;
  return UtilitySpec::from_measure(BernsteinMeasure({}, {piece}));
}

FiniteMarket Cex2Instance::market() const {
  FiniteMarket fm;
  fm.p = p;
  fm.S0 = {1.0};
  for (double s : S) fm.S1.push_back({s});
  fm.validate();
  return fm;
}

namespace {

double min_on(const std::function<double(double)>& g, double a, double b) {
  auto r = numerics::golden_section_max([&](double s) { return -g(s); }, a, b, 1e-10);
  return std::min({-r.value, g(a), g(b)});
}

}  // namespace

Cex2Instance cex2_build(const UtilitySpec& util, int N) {
  if (N < 2) fail(ErrorKind::InvalidInput, "cex2 needs N >= 2");
  auto A = [&](double x) { return util.risk_aversion(x); };
  auto state = [](int idx) { return idx == 0 ? 2.0 : 1.0 / idx; };

  Cex2Instance inst{util, N, {}, {}, {}, {}, 0.0, {0, 0}, 0.0, 0.0, 0.0, 0.0, 0.0};
  {
    bool found = false;
    std::vector<double> a(N + 1);
    for (int i = 0; i <= N; ++i) a[i] = A(state(i));
    if (N >= 3 && std::fabs(a[2] - a[3]) > 1e-6) {
      inst.rra_pair = {2, 3};
      found = true;
    }
    for (int m = 0; m <= N && !found; ++m)
      for (int k = m + 1; k <= N && !found; ++k)
        if (std::fabs(a[m] - a[k]) > 1e-6) {
          inst.rra_pair = {m, k};
          found = true;
        }
    if (!found) fail(ErrorKind::ConstantRRA, "relative risk aversion is constant on the states");
  }

  auto U1 = [&](double x) { return util.U_prime(x); };
  auto U2 = [&](double x) { return util.U_second(x); };
  const double up2 = U1(2.0);
  inst.S.resize(N + 1);
  inst.p.assign(N + 1, 0.0);
  for (int i = 0; i <= N; ++i) inst.S[i] = state(i);

  std::vector<double> pn(N + 1, 0.0);
  numerics::parallel_for(std::size_t(N - 1), [&](std::size_t t) {
    const int n = int(t) + 2;
    const double lo = 2.0 / (3.0 * n), hi = 2.0 / 3.0 + 2.0 / (3.0 * n);
    const double m = min_on(U2, lo, hi);
    pn[n] = std::ldexp(1.0, -(n + 1)) * std::min(1.0, up2) / std::max(1.0, U1(1.0 / n) - m);
  });
  double tail = 0.0, p0 = 0.0;
  for (int n = N; n >= 2; --n) {
    inst.p[n] = pn[n];
    tail += pn[n];
    p0 += pn[n] * U1(1.0 / n) * (1.0 - 1.0 / n);
  }
  inst.p[0] = p0 / up2;
  inst.p[1] = 1.0 - (inst.p[0] + tail);
  if (!(inst.p[0] <= 0.25) || !(tail <= 0.25) || !(inst.p[1] >= 0.5))
    fail(ErrorKind::InvalidInput, "probability bounds violated");
  for (double q : inst.p)
    if (!(q > 0.0)) fail(ErrorKind::InvalidInput, "probabilities must be positive");

  inst.U1.resize(N + 1);
  inst.U2.resize(N + 1);
  for (int i = 0; i <= N; ++i) {
    inst.U1[i] = U1(inst.S[i]);
    inst.U2[i] = U2(inst.S[i]);
  }
  double num = 0.0, den = 0.0, foc = 0.0, mean_u1 = 0.0, es = 0.0, sp = 0.0;
  for (int i = N; i >= 0; --i) {
    const double s = inst.S[i], q = inst.p[i];
    num += q * inst.U2[i] * (s - 1.0);
    den += q * inst.U2[i] * (s - 1.0) * (s - 1.0);
    foc += q * inst.U1[i] * (1.0 - s);
    mean_u1 += q * inst.U1[i];
    es += q * s;
    sp += q;
  }
  inst.delta_hat = -num / den;
  inst.foc_residual = foc;
  inst.u_prime_one = mean_u1;
  inst.expected_S = es;
  inst.sum_p = sp;
  if (std::fabs(inst.delta_hat - 1.0) < 1e-9)
    fail(ErrorKind::InvalidInput, "the unperturbed probabilities give delta_hat = 1");

  const double eps_bar = 1.0 / 3.0;
  const bool below = inst.delta_hat < 1.0;
  std::vector<double> g(N + 1);
  numerics::parallel_for(std::size_t(N + 1), [&](std::size_t i) {
    const double s = inst.S[i];
    const double h = 1.0 + inst.delta_hat * (s - 1.0);
    auto arg = [&](double e) { return U2(s + e * h); };
    g[i] = below ? min_on(arg, 0.0, eps_bar) : min_on(arg, -eps_bar, 0.0);
  });
  for (int i = N; i >= 0; --i) inst.G_sum += inst.p[i] * std::fabs(g[i]);
  return inst;
}

double cex2_quadratic(const Cex2Instance& inst, double delta) {
  double s = 0.0;
  for (std::size_t i = inst.S.size(); i-- > 0;) {
    const double w = delta * inst.S[i] + 1.0 - delta;
    s += inst.p[i] * inst.U2[i] * w * w;
  }
  return s;
}

PositionOptimum cex2_optimal_position(const Cex2Instance& inst, double x) {
  if (!(x > 0.0)) fail(ErrorKind::InvalidInput, "needs x > 0");
  auto value = [&](double d) {
    double s = 0.0;
    for (std::size_t i = inst.S.size(); i-- > 0;) s += inst.p[i] * inst.utility.U(x + d * (inst.S[i] - 1.0));
    return s;
  };
  auto r = numerics::golden_section_max(value, -x, x, 1e-12);
  // golden section stalls near sqrt(machine eps) on the flat top; polish with Newton on the first-order condition
  double d = r.argmax;
  for (int it = 0; it < 30; ++it) {
    double g = 0.0, h = 0.0;
    for (std::size_t i = inst.S.size(); i-- > 0;) {
      const double a = inst.S[i] - 1.0, w = x + d * a;
      if (!(w > 0.0)) return {r.argmax, r.value, std::fabs(std::fabs(r.argmax) - x) <= 1e-6 * x};
      g += inst.p[i] * inst.utility.marginal(w) * a;
      h += inst.p[i] * inst.utility.U_second(w) * a * a;
    }
    const double next = std::clamp(d - g / h, -x, x);
    const bool done = std::fabs(next - d) <= 1e-15 * std::max(1.0, std::fabs(d));
    d = next;
    if (done) break;
  }
  const double v = value(d);
  if (v < r.value) d = r.argmax;
  const bool edge = std::fabs(std::fabs(d) - x) <= 1e-6 * x;
  return {d, std::max(v, r.value), edge};
}

namespace {

// Second-order Taylor remainders of U around the states.
struct Remainders {
  const Cex2Instance& inst;
  std::vector<double> U0;

  explicit Remainders(const Cex2Instance& in) : inst(in), U0(in.S.size()) {
    for (std::size_t i = 0; i < in.S.size(); ++i) U0[i] = in.utility.U(in.S[i]);
  }
  bool small(std::size_t i, double d) const { return std::fabs(d) <= 0.05 * inst.S[i]; }
  // U(S + d) - U(S) - d U'(S)
  double R(std::size_t i, double d) const {
    const double s = inst.S[i];
    if (!small(i, d)) return inst.utility.U(s + d) - U0[i] - d * inst.U1[i];
    const auto& gl = numerics::gauss_legendre(10);
    double acc = 0.0;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double t = 0.5 * (gl.nodes[k] + 1.0);
      acc += 0.5 * gl.weights[k] * (1.0 - t) * inst.utility.U_second(s + t * d);
    }
    return d * d * acc;
  }
  // U'(S + d) - U'(S)
  double dU1(std::size_t i, double d) const {
    const double s = inst.S[i];
    if (!small(i, d)) return inst.utility.U_prime(s + d) - inst.U1[i];
    const auto& gl = numerics::gauss_legendre(10);
    double acc = 0.0;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double t = 0.5 * (gl.nodes[k] + 1.0);
      acc += 0.5 * gl.weights[k] * inst.utility.U_second(s + t * d);
    }
    return d * acc;
  }
};

struct SideResult {
  double D;
  double slope;
  bool boundary;
};

SideResult second_difference(const Remainders& rem, double eps) {
  const auto& inst = rem.inst;
  const std::size_t M = inst.S.size();
  const double r = -inst.foc_residual;  // E[U'(S)(S - 1)]
  auto objective = [&](double t) {
    double s = 0.0;
    for (std::size_t i = M; i-- > 0;) s += inst.p[i] * rem.R(i, eps * (1.0 + t * (inst.S[i] - 1.0)));
    return s + eps * t * r;
  };
  auto slope = [&](double t) {
    double s = 0.0;
    for (std::size_t i = M; i-- > 0;)
      s += inst.p[i] * rem.dU1(i, eps * (1.0 + t * (inst.S[i] - 1.0))) * (inst.S[i] - 1.0);
    return eps * (s + r);
  };
  auto curvature = [&](double t) {
    double s = 0.0;
    for (std::size_t i = M; i-- > 0;) {
      const double a = inst.S[i] - 1.0;
      s += inst.p[i] * inst.utility.U_second(inst.S[i] + eps * (1.0 + t * a)) * a * a;
    }
    return eps * eps * s;
  };
  // positions D = 1 + eps t in [-(1 + eps), 1 + eps]
  const double x = 1.0 + eps;
  double lo = (-x - 1.0) / eps, hi = (x - 1.0) / eps;
  if (lo > hi) std::swap(lo, hi);
  auto g = numerics::golden_section_max(objective, lo, hi, 1e-12);
  double t = g.argmax;
  bool boundary = false;
  const double span = hi - lo;
  for (int it = 0; it < 30; ++it) {
    const double d1 = slope(t);
    if ((t >= hi - 1e-9 * span && d1 >= 0.0) || (t <= lo + 1e-9 * span && d1 <= 0.0)) {
      t = d1 >= 0.0 ? hi : lo;
      boundary = true;
      break;
    }
    const double step = -d1 / curvature(t);
    double next = t + step;
    if (next > hi) next = hi;
    if (next < lo) next = lo;
    if (std::fabs(next - t) <= 1e-14 * (1.0 + std::fabs(t))) {
      t = next;
      break;
    }
    t = next;
  }
  if (!boundary && (t == hi || t == lo)) boundary = true;
  return {2.0 / (eps * eps) * objective(t), t, boundary};
}

}  // namespace

Cex2GapReport cex2_gap(const Cex2Instance& inst, const std::vector<double>& eps_list) {
  for (double e : eps_list)
    if (!(e > 0.0) || !(e < 0.5)) fail(ErrorKind::InvalidInput, "eps must lie in (0, 1/2)");
  Cex2GapReport rep;
  rep.Q_hat = cex2_quadratic(inst, inst.delta_hat);
  rep.Q_bound = cex2_quadratic(inst, 1.0);
  rep.gap = rep.Q_hat - rep.Q_bound;
  rep.margin = rep.gap / std::fabs(rep.Q_hat);
  const Remainders rem(inst);
  rep.rows.resize(eps_list.size());
  numerics::parallel_for(eps_list.size() * 2, [&](std::size_t job) {
    const std::size_t k = job / 2;
    const double e = eps_list[k];
    auto side = second_difference(rem, job % 2 == 0 ? e : -e);
    auto& row = rep.rows[k];
    row.eps = e;
    if (job % 2 == 0) {
      row.D_plus = side.D;
      row.slope_plus = side.slope;
      row.boundary_plus = side.boundary;
    } else {
      row.D_minus = side.D;
      row.slope_minus = side.slope;
      row.boundary_minus = side.boundary;
    }
  });
  return rep;
}

}  // namespace cmdual
