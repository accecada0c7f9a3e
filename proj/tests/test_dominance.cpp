#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cmdual/dominance.hpp"
#include "cmdual/error.hpp"
#include "oracles.hpp"

using namespace cmdual;

namespace {

Distribution make(const oracle::Discrete& d) { return Distribution::discrete(d.x, d.p); }
const Distribution two_point = Distribution::discrete({0.0, 2.0}, {0.5, 0.5});

}  // namespace

TEST(IteratedCdf, Examples) {
  const auto a = Distribution::point(1.5);
  for (double y : {0.0, 1.0, 1.5, 2.0, 4.0}) EXPECT_NEAR(a.iterated_cdf(2, y), std::max(y - 1.5, 0.0), 1e-15);
  EXPECT_NEAR(two_point.iterated_cdf(2, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(oracle::iterated_cdf_numeric({{0.0, 2.0}, {0.5, 0.5}}, 2, 1.0), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(two_point.iterated_cdf(1, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(two_point.iterated_cdf(1, 2.0), 1.0);
}

TEST(IteratedCdf, MatchesRepeatedNumericIntegration) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = oracle::random_discrete(rng);
    const auto law = make(d);
    for (int n : {2, 3, 4})
      for (double y : {0.7, 2.5, 6.0})
        EXPECT_NEAR(law.iterated_cdf(n, y), oracle::iterated_cdf_numeric(d, n, y), 1e-8) << trial << " " << n << " " << y;
  }
}

TEST(IteratedCdf, LognormalAgainstQuadrature) {
  const auto ln = Distribution::lognormal(0.1, 0.3);
  // F_2(y) = E[(y - X)_+]
  const double y = 1.4;
  auto integrand = [&](double u) {
    const double x = std::exp(0.1 + std::sqrt(0.3) * u);
    return std::max(y - x, 0.0) * std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
  };
  EXPECT_NEAR(ln.iterated_cdf(2, y), oracle::simpson(integrand, -12.0, 12.0, 400000), 1e-8);
}

TEST(DominatesN, Examples) {
  const auto d1 = Distribution::point(1.0), d2 = Distribution::point(2.0);
  EXPECT_TRUE(dominates_n(d2, d1, 1).pass);
  EXPECT_TRUE(dominates_n(d1, two_point, 2).pass);
  const auto v = dominates_n(d1, two_point, 1);
  ASSERT_FALSE(v.pass);
  ASSERT_TRUE(v.witness.has_value());
  EXPECT_GE(*v.witness, 1.0);
  EXPECT_LT(*v.witness, 2.0);
  EXPECT_GT(d1.iterated_cdf(1, *v.witness), two_point.iterated_cdf(1, *v.witness));
}

TEST(DominatesN, BruteForceGridAgrees) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = oracle::random_discrete(rng, 4), b = oracle::random_discrete(rng, 4);
    for (int n : {1, 2, 3}) {
      const auto v = dominates_n(make(a), make(b), n);
      bool grid_ok = true;
      for (double y = 0.0; y <= 6.0; y += 1e-3)
        if (oracle::iterated_cdf_closed(a, n, y) > oracle::iterated_cdf_closed(b, n, y) + 1e-6) grid_ok = false;
      if (!grid_ok) EXPECT_FALSE(v.pass) << trial << " " << n;
      if (!v.pass) {
        // the witness is a genuine violation
        EXPECT_GT(make(a).iterated_cdf(n, *v.witness), make(b).iterated_cdf(n, *v.witness));
      }
    }
  }
}

TEST(DominatesN, NestingAndScale) {
  std::mt19937_64 rng(7);
  int nested = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto a = oracle::random_discrete(rng, 3), b = oracle::random_discrete(rng, 3);
    for (int n : {1, 2}) {
      if (!dominates_n(make(a), make(b), n).pass) continue;
      ++nested;
      EXPECT_TRUE(dominates_n(make(a), make(b), n + 1).pass);
      EXPECT_TRUE(dominates_n(make(a), make(b), n + 2).pass);
      if (n == 2) EXPECT_TRUE(dominates_inf(make(a), make(b)).pass);
    }
    const auto d = make(a);
    EXPECT_TRUE(dominates_n(d.scaled(1.5), d, 1).pass);
  }
  EXPECT_GT(nested, 5);
}

TEST(DominatesInf, Examples) {
  const auto d1 = Distribution::point(1.0), d2 = Distribution::point(2.0);
  EXPECT_TRUE(dominates_inf(d2, d1).pass);
  const auto v = dominates_inf(d1, d2, {1.0});
  EXPECT_FALSE(v.pass);
  EXPECT_DOUBLE_EQ(*v.witness, 1.0);
  EXPECT_NEAR(v.gap, std::exp(-1.0) - std::exp(-2.0), 1e-15);
  EXPECT_TRUE(dominates_inf(d1, two_point).pass);
  for (double z = 1e-3; z < 1e3; z *= 1.1) EXPECT_LE(std::exp(-z), 0.5 * (1.0 + std::exp(-2.0 * z)));
}

TEST(ExpectationVsIterated, Examples) {
  const auto r1 = expectation_vs_iterated(Distribution::point(1.0), DnFunction::exponential(1.0), 2);
  EXPECT_NEAR(r1.lhs, std::exp(-1.0), 1e-14);
  EXPECT_NEAR(r1.rhs, std::exp(-1.0), 1e-9);
  const oracle::Discrete u13{{1.0, 3.0}, {0.5, 0.5}};
  const auto r2 = expectation_vs_iterated(make(u13), DnFunction::exponential(2.0), 3);
  EXPECT_NEAR(r2.lhs, 0.5 * (std::exp(-2.0) + std::exp(-6.0)), 1e-14);
  // rhs = int 8 e^{-2t} F_3(t) dt with F_3 closed form
  auto F3 = [](double t) {
    auto h = [](double s) { return s > 0 ? 0.5 * s * s : 0.0; };
    return 0.5 * h(t - 1.0) + 0.5 * h(t - 3.0);
  };
  const double rhs = oracle::simpson([&](double t) { return 8.0 * std::exp(-2.0 * t) * F3(t); }, 0.0, 40.0, 200000);
  EXPECT_NEAR(r2.rhs, rhs, 1e-9);
  const auto bounded = DnFunction::from_derivatives({[](double y) { return 1.0 / (1.0 + y); },
                                                     [](double y) { return -1.0 / ((1.0 + y) * (1.0 + y)); },
                                                     [](double y) { return 2.0 / std::pow(1.0 + y, 3); }});
  EXPECT_NEAR(expectation_vs_iterated(Distribution::point(0.0), bounded, 2).lhs, 1.0, 1e-14);
}

TEST(TestFunctionAudit, Examples) {
  const auto d1 = Distribution::point(1.0), d2 = Distribution::point(2.0);
  EXPECT_TRUE(test_function_audit(d2, d1, std::nullopt, 50).pass);
  EXPECT_TRUE(test_function_audit(d1, two_point, 2, 50).pass);
  const auto bad = test_function_audit(two_point, d1, 2, 50);
  EXPECT_FALSE(bad.pass);
  EXPECT_GT(bad.excess, 0.0);
  EXPECT_FALSE(bad.counterexample.empty());
  // Jensen gap for e^{-y}: E[W(uniform{0,2})] - W(1)
  EXPECT_GT(0.5 * (1.0 + std::exp(-2.0)) - std::exp(-1.0), 0.0);
}

TEST(TestFunctionAudit, DeterministicForSeed) {
  const auto a = Distribution::discrete({0.5, 1.5}, {0.5, 0.5});
  const auto b = Distribution::discrete({0.2, 1.8}, {0.5, 0.5});
  const auto r1 = test_function_audit(b, a, 3, 40, 9), r2 = test_function_audit(b, a, 3, 40, 9);
  EXPECT_EQ(r1.pass, r2.pass);
  EXPECT_EQ(r1.counterexample, r2.counterexample);
  EXPECT_EQ(r1.excess, r2.excess);
}

TEST(Distribution, Validation) {
  auto kind = [](auto f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::NoRoot;
  };
  EXPECT_EQ(kind([] { Distribution::discrete({1.0, 2.0}, {0.5, 0.6}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind([] { Distribution::discrete({-1.0}, {1.0}); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind([] { Distribution::lognormal(0.0, -1.0); }), ErrorKind::InvalidInput);
  const auto e = Distribution::empirical({1.0, 2.0, 2.0, 4.0});
  EXPECT_NEAR(e.iterated_cdf(1, 2.0), 0.75, 1e-15);
}
