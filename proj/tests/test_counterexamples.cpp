#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cmdual/counterexamples.hpp"
#include "cmdual/error.hpp"
#include "oracles.hpp"

using namespace cmdual;

namespace {

constexpr double kZeta2 = 1.6449340668482264;
constexpr double kZeta3 = 1.2020569031595942;

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// f(y) summed term by term from the definition.
double bump_oracle(long long terms, double y) {
  double h = 0.0, drop = 0.0;
  for (long long i = terms; i >= 1; --i) {
    const double w = 1.0 / (double(i) * double(i)), s = std::pow(double(i), -4.0);
    h += w;
    drop += w * (phi((y - double(i)) / s) - phi(-double(i) / s));
  }
  return 2.0 - drop / h;
}

}  // namespace

TEST(AnalyticBump, MatchesDirectSum) {
  const AnalyticBump b(2000);
  double h = 0.0;
  for (long long i = 2000; i >= 1; --i) h += 1.0 / (double(i) * double(i));
  EXPECT_NEAR(b.C(), std::sqrt(2.0 * M_PI) * h, 1e-12);
  for (double y : {0.01, 0.5, 1.0, 1.0 + 1e-3, 2.5, 3.0, 17.2, 150.0, 5000.0})
    EXPECT_NEAR(b.f(y), bump_oracle(2000, y), 1e-12) << y;
  // f' = -g / C against a centered difference away from the spikes
  for (double y : {0.5, 1.3, 2.7})
    EXPECT_NEAR(b.f_prime(y), (b.f(y + 1e-6) - b.f(y - 1e-6)) / 2e-6, 1e-6);
}

TEST(AnalyticBump, RangeAndMonotonicity) {
  const AnalyticBump b;
  EXPECT_NEAR(b.f(1e-9), 2.0, 1e-9);
  EXPECT_GE(b.f(1e9), 1.0);
  double prev = 2.0, lo = 2.0, hi = 1.0;
  for (double y = 0.01; y <= 50.0; y += 0.01) {
    const double v = b.f(y);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    EXPECT_LE(v, prev + 1e-14);
    prev = v;
  }
  EXPECT_GE(lo, 1.0 - 1e-9);
  EXPECT_LE(hi, 2.0);
  for (int i = 1; i < 50; ++i) EXPECT_LT(b.f(i + 0.5), b.f(i - 0.5));
  EXPECT_GE(-b.f_prime(3.0), 9.0 / b.C());
}

TEST(Cex1, InstanceParameters) {
  const Cex1Instance inst;
  EXPECT_NEAR(inst.s0(), kZeta3, 1e-15);
  EXPECT_NEAR(inst.s1(), kZeta2, 1e-15);
  // E[Z] = 1 and probabilities sum to one
  const double ez = (1.0 - inst.eps()) * 0.5 + inst.eps() * kZeta2 / kZeta3;
  EXPECT_NEAR(ez, 1.0, 1e-14);
  EXPECT_GT(inst.eps(), 0.0);
  EXPECT_LT(inst.eps(), 1.0);
  EXPECT_NEAR(inst.prob(2), inst.eps() / (8.0 * kZeta3), 1e-16);
  EXPECT_THROW(Cex1Instance(4), Error);
}

TEST(Cex1, EnvelopeHoldsAtRandomPoints) {
  for (int n : {1, 2, 3}) {
    const Cex1Instance inst(n);
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> pick(0.1, 20.0);
    for (int t = 0; t < 100; ++t) {
      const double y = pick(rng);
      for (int k = 0; k <= n; ++k) {
        const double lo = Cex1Instance::signed_Vbar(k, y), v = inst.signed_V(k, y);
        EXPECT_GE(v, lo * (1.0 - 1e-12)) << n << " " << k << " " << y;
        EXPECT_LE(v, 2.0 * lo * (1.0 + 1e-12)) << n << " " << k << " " << y;
      }
    }
  }
}

TEST(Cex1, FastPathMatchesGenericConjugate) {
  const Cex1Instance inst(2, 20);
  const auto w = inst.conjugate();
  for (double y : {0.3, 0.9, 1.0, 2.0, 3.5, 7.0}) {
    for (int k = 0; k <= 2; ++k) {
      const double generic = (k % 2 ? -1.0 : 1.0) * w.derivative(k, y);
      EXPECT_LT(oracle::rel_err(inst.signed_V(k, y), generic), 1e-9) << k << " " << y;
    }
  }
}

TEST(Cex1, FiniteOrdersConvergeWithinEnvelope) {
  const Cex1Instance inst(2, 100000);
  const auto rows = cex1_verify_finite(inst, {1000, 10000, 100000});
  ASSERT_EQ(rows.size(), 3u);
  // E[1/Z] closed form, untruncated
  const double inv_mean = (1.0 - inst.eps()) * 2.0 + inst.eps() * (1.0823232337111382 / kZeta3);
  for (int k = 0; k <= 2; ++k) {
    const double fact = k == 2 ? 2.0 : 1.0;
    const double signed_v = (k % 2 ? -1.0 : 1.0) * rows.back().values[k];
    EXPECT_GE(signed_v, fact * inv_mean * (1.0 - 1e-6));
    EXPECT_LE(signed_v, 2.0 * fact * inv_mean * (1.0 + 1e-6));
    EXPECT_LT(oracle::rel_err(rows[2].values[k], rows[1].values[k]), 1e-4);
  }
}

TEST(Cex1, DivergenceFollowsHarmonicOracle) {
  const Cex1Instance inst(2, 100000);
  const std::vector<long long> truncs{1000, 10000, 100000};
  const auto rows = cex1_divergence(inst, truncs);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double want = inst.eps() * 2.0 / (kZeta3 * inst.bump().C()) * oracle::harmonic(truncs[i - 1], truncs[i]);
    EXPECT_NEAR(rows[i].oracle, want, 1e-12);
    EXPECT_GT(rows[i].increment, 0.0);
    EXPECT_LT(std::fabs(rows[i].increment / want - 1.0), 0.25);
    EXPECT_NEAR(rows[i].partial_sum - rows[i - 1].partial_sum, rows[i].increment, 1e-12);
  }
}

TEST(Cex1, RawAndRenormalizedDiffer) {
  const Cex1Instance inst(1, 1000);
  const auto raw = cex1_verify_finite(inst, {100}, Truncation::Raw);
  const auto ren = cex1_verify_finite(inst, {100}, Truncation::Renormalized);
  double mass = 1.0 - inst.eps();
  for (long long i = 1; i <= 100; ++i) mass += inst.prob(i);
  EXPECT_NEAR(raw[0].values[0] / ren[0].values[0], mass, 1e-12);
}

TEST(Cex2, InstanceIdentities) {
  const auto inst = cex2_build();
  ASSERT_EQ(inst.S.size(), 201u);
  double sp = 0.0, foc = 0.0, es = 0.0;
  for (std::size_t i = 0; i < inst.S.size(); ++i) {
    sp += inst.p[i];
    EXPECT_GT(inst.p[i], 0.0);
    const double u1 = 0.5 * (std::sqrt(1.0 + 4.0 / inst.S[i]) - 1.0);  // root of y (y + 1) = 1 / S
    EXPECT_LT(oracle::rel_err(inst.U1[i], u1), 1e-10);
    foc += inst.p[i] * u1 * (1.0 - inst.S[i]);
    es += inst.p[i] * inst.S[i];
  }
  EXPECT_NEAR(sp, 1.0, 1e-12);
  EXPECT_NEAR(foc, 0.0, 1e-12);
  EXPECT_NEAR(es, inst.expected_S, 1e-12);
  EXPECT_DOUBLE_EQ(inst.S[0], 2.0);
  EXPECT_DOUBLE_EQ(inst.S[7], 1.0 / 7.0);
  const auto [m, k] = inst.rra_pair;
  EXPECT_GT(std::fabs(inst.utility.risk_aversion(inst.S[m]) - inst.utility.risk_aversion(inst.S[k])), 1e-6);
}

TEST(Cex2, QuadraticAndMaximizer) {
  const auto inst = cex2_build();
  double a = 0.0, b = 0.0, c = 0.0;  // Q(D) = a D^2 + 2 b D + c in D with (S - 1) D + 1
  for (std::size_t i = 0; i < inst.S.size(); ++i) {
    const double w = inst.p[i] * inst.U2[i], s = inst.S[i] - 1.0;
    a += w * s * s;
    b += w * s;
    c += w;
  }
  const double argmax = -b / a;
  EXPECT_NEAR(inst.delta_hat, argmax, 1e-10);
  EXPECT_GT(inst.delta_hat, -1.0);
  EXPECT_LT(inst.delta_hat, 2.0);
  EXPECT_GT(std::fabs(inst.delta_hat - 1.0), 1e-3);
  for (double d : {-0.5, 0.3, 1.0, 1.7})
    EXPECT_LT(oracle::rel_err(cex2_quadratic(inst, d), a * d * d + 2 * b * d + c), 1e-12);
  const auto opt = cex2_optimal_position(inst, 1.0);
  EXPECT_NEAR(opt.delta, 1.0, 1e-8);
}

TEST(Cex2, GapStraddledAndStable) {
  const auto i200 = cex2_build(footnote_utility(), 200);
  const auto r200 = cex2_gap(i200, {1e-2, 1e-3, 1e-4});
  EXPECT_NEAR(r200.Q_hat, cex2_quadratic(i200, i200.delta_hat), 1e-15);
  EXPECT_NEAR(r200.Q_bound, cex2_quadratic(i200, 1.0), 1e-15);
  EXPECT_GT(r200.gap, 0.0);
  EXPECT_GT(r200.margin, 1e-4);
  const auto& last = r200.rows.back();
  EXPECT_DOUBLE_EQ(last.eps, 1e-4);
  EXPECT_GE(last.D_plus, r200.Q_hat);
  EXPECT_LE(last.D_minus, r200.Q_bound);
  const auto i400 = cex2_build(footnote_utility(), 400);
  const auto r400 = cex2_gap(i400, {1e-4});
  EXPECT_LT(std::fabs(r400.gap / r200.gap - 1.0), 0.01);
  EXPECT_LT(std::fabs(i400.G_sum - i200.G_sum), 0.01 * i200.G_sum);
}

TEST(Cex2, Errors) {
  try {
    cex2_build(UtilitySpec::power(0.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConstantRRA);
  }
  const auto inst = cex2_build(footnote_utility(), 20);
  EXPECT_THROW(cex2_gap(inst, {0.7}), Error);
  EXPECT_THROW(cex2_build(footnote_utility(), 0), Error);
}
