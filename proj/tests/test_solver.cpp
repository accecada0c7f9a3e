#include <gtest/gtest.h>

#include <cmath>

#include "cmdual/counterexamples.hpp"
#include "cmdual/error.hpp"
#include "cmdual/dominance.hpp"
#include "cmdual/solver.hpp"
#include "oracles.hpp"

using namespace cmdual;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::NoRoot;
}

const Distribution one = Distribution::point(1.0);
const Distribution half_three_halves = Distribution::discrete({0.5, 1.5}, {0.5, 0.5});

ValueFunctionPair make(const UtilitySpec& u, const Distribution& d) { return {u, MarketModel::from_law(d)}; }

}  // namespace

TEST(DualValue, Examples) {
  const auto sqrt_u = UtilitySpec::power(0.5);  // V(y) = 1/y
  EXPECT_NEAR(make(sqrt_u, one).dual_value(2.0), 0.5, 1e-15);
  const auto ln = make(sqrt_u, Distribution::lognormal_mean_one(0.25));
  EXPECT_LT(oracle::rel_err(ln.dual_value(1.0), std::exp(0.25)), 1e-10);
  const double want = -1.0 - 0.5 * (std::log(0.5) + std::log(1.5));
  EXPECT_NEAR(make(UtilitySpec::log(), half_three_halves).dual_value(1.0), want, 1e-14);
  EXPECT_NEAR(want, -1.0 + 0.5 * std::log(1.0 / 0.75), 1e-15);
}

TEST(DualDerivative, Examples) {
  const auto sqrt_u = UtilitySpec::power(0.5);
  EXPECT_NEAR(make(sqrt_u, one).dual_derivative(2, 1.0), 2.0, 1e-14);
  EXPECT_NEAR(make(sqrt_u, one).dual_derivative(1, 2.0), -0.25, 1e-15);
  EXPECT_NEAR(make(sqrt_u, half_three_halves).dual_derivative(1, 1.0), -4.0 / 3.0, 1e-14);
}

TEST(DualDerivative, LognormalPowerClosedForm) {
  // v^(n)(y) = V^(n)(y) E[Y^q], V(y) = y^q / (-q) ... use q = -1: V = 1/y
  const double kappa = 0.3;
  const auto vf = make(UtilitySpec::power(0.5), Distribution::lognormal_mean_one(kappa));
  const double EYq = oracle::lognormal_moment(-0.5 * kappa, kappa, -1.0);
  for (int n = 1; n <= 6; ++n) {
    double coef = 1.0;
    for (int j = 1; j <= n; ++j) coef *= -j;  // d^n y^{-1} = (-1)^n n! y^{-n-1}
    EXPECT_LT(oracle::rel_err(vf.dual_derivative(n, 1.7), coef * std::pow(1.7, -n - 1) * EYq), 1e-10) << n;
  }
}

TEST(DualDerivative, FiniteDifferencesAndSigns) {
  const UtilitySpec utilities[] = {UtilitySpec::log(), UtilitySpec::power(-1.0),
                                   UtilitySpec::from_measure(BernsteinMeasure({}, {DensityPiece{1.0, -0.5, 0.3, 0.0, std::nullopt, std::nullopt}, DensityPiece{1.0, 0.0, 0.0, 0.0, std::nullopt, std::nullopt}}))};
  const Distribution models[] = {one, half_three_halves, Distribution::lognormal_mean_one(0.25)};
  for (const auto& u : utilities) {
    for (const auto& d : models) {
      const auto vf = make(u, d);
      for (double y : {0.5, 1.0, 2.0}) {
        for (int n = 1; n <= 4; ++n) {
          const double fd = oracle::fd([&](double t) { return vf.dual_value(t); }, n, y, 0.1 * y);
          EXPECT_LT(oracle::rel_err(fd, vf.dual_derivative(n, y)), 1e-5) << n << " " << y;
        }
        for (int n = 1; n <= 6; ++n) EXPECT_GT((n % 2 ? -1.0 : 1.0) * vf.dual_derivative(n, y), 0.0);
      }
    }
  }
}

TEST(PrimalMarginal, Examples) {
  EXPECT_NEAR(make(UtilitySpec::power(0.5), one).primal_marginal(4.0), 0.5, 1e-14);
  const auto lg = make(UtilitySpec::log(), Distribution::lognormal_mean_one(0.4));
  EXPECT_NEAR(lg.primal_marginal(2.0), 0.5, 1e-12);
  const auto vf = make(UtilitySpec::power(-1.0), half_three_halves);
  EXPECT_NEAR(vf.primal_marginal(-vf.dual_derivative(1, 1.0)), 1.0, 1e-12);
}

TEST(PrimalDerivative, SquareRootUtility) {
  const auto vf = make(UtilitySpec::power(0.5), one);
  EXPECT_NEAR(vf.primal_derivative(2, 1.0), -0.5, 1e-12);
  EXPECT_NEAR(vf.primal_derivative(3, 1.0), 0.75, 1e-12);
  for (double x : {0.3, 2.0}) {
    const double y = vf.primal_marginal(x);
    EXPECT_LT(oracle::rel_err(vf.primal_derivative(2, x), -1.0 / vf.dual_derivative(2, y)), 1e-12);
    EXPECT_LT(oracle::rel_err(vf.primal_value(x), 2.0 * std::sqrt(x)), 1e-12);
  }
}

TEST(PrimalDerivative, PowerLognormalClosedForm) {
  for (double p : {0.5, -1.0}) {
    const double kappa = 0.3, q = -p / (1.0 - p);
    const auto vf = make(UtilitySpec::power(p), Distribution::lognormal_mean_one(kappa));
    const double EYq = oracle::lognormal_moment(-0.5 * kappa, kappa, q);
    for (int n = 1; n <= 8; ++n)
      for (double x : {0.5, 1.3})
        EXPECT_LT(oracle::rel_err(vf.primal_derivative(n, x), oracle::power_u_derivative(p, EYq, n, x)), 1e-9) << p << " " << n;
  }
}

TEST(PrimalDerivative, FiniteDifferencesAndConjugacy) {
  const UtilitySpec utilities[] = {UtilitySpec::log(), UtilitySpec::power(-1.0), footnote_utility()};
  const Distribution models[] = {one, half_three_halves, Distribution::lognormal_mean_one(0.25)};
  for (const auto& u : utilities) {
    for (const auto& d : models) {
      const auto vf = make(u, d);
      for (double x : {0.5, 1.0, 2.0}) {
        for (int n = 1; n <= 4; ++n) {
          const double fd = oracle::fd([&](double t) { return vf.primal_value(t); }, n, x, 0.1 * x);
          EXPECT_LT(oracle::rel_err(fd, vf.primal_derivative(n, x)), 1e-5) << n << " " << x;
        }
        const double y = vf.primal_marginal(x);
        EXPECT_LE(vf.primal_value(x) - (vf.dual_value(y) + x * y), 1e-9);
        EXPECT_NEAR(vf.primal_marginal(-vf.dual_derivative(1, x)), x, 1e-9 * x);
      }
    }
  }
}

TEST(PrimalDerivative, OrderLimits) {
  const auto vf = make(UtilitySpec::log(), one);
  EXPECT_EQ(kind_of([&] { vf.primal_derivative(9, 1.0); }), ErrorKind::OrderExceeded);
  EXPECT_EQ(kind_of([&] { vf.dual_derivative(9, 1.0); }), ErrorKind::OrderExceeded);
  const auto fo = UtilitySpec::finite_order(
      DnFunction::from_nth_derivative(3, [](double t) { return -6.0 / std::pow(t, 4); }, {1.0, 1.0}));
  const auto vf3 = make(fo, half_three_halves);
  EXPECT_NO_THROW(vf3.dual_derivative(3, 1.0));
  EXPECT_EQ(kind_of([&] { vf3.dual_derivative(4, 1.0); }), ErrorKind::OrderExceeded);
  EXPECT_NO_THROW(vf3.primal_derivative(3, 1.0));
  EXPECT_EQ(kind_of([&] { vf3.primal_derivative(4, 1.0); }), ErrorKind::OrderExceeded);
}

TEST(PrimalDerivative, BoundsInheritedAndHomothetic) {
  for (double p : {-1.0, 0.5}) {
    const auto u = UtilitySpec::power(p);
    const auto vf = make(u, half_three_halves);
    for (int k = 1; k <= 3; ++k)
      for (double y : {0.3, 1.0, 3.0})
        EXPECT_NEAR(-y * vf.dual_derivative(k + 1, y) / vf.dual_derivative(k, y), k - u.q(), 1e-9);
    const auto ln = make(u, Distribution::lognormal_mean_one(0.25));
    for (double x : {0.5, 0.8, 1.2, 2.0})
      EXPECT_NEAR(-ln.primal_derivative(2, x) * x / ln.primal_derivative(1, x), 1.0 - p, 1e-8);
  }
}

TEST(Optimizer, BudgetPositivityAndDerivatives) {
  const UtilitySpec utilities[] = {UtilitySpec::log(), UtilitySpec::power(-1.0), footnote_utility()};
  const Distribution models[] = {half_three_halves, Distribution::discrete({0.4, 1.0, 2.0}, {0.3, 0.4, 0.3}),
                                 Distribution::lognormal_mean_one(0.25)};
  for (const auto& u : utilities) {
    for (const auto& d : models) {
      const auto vf = make(u, d);
      for (double x : {0.5, 1.0, 2.0}) {
        const auto X = vf.optimizer_terminal(x);
        double budget = 0.0;
        for (std::size_t i = 0; i < X.value.size(); ++i) budget += X.weight[i] * X.deflator[i] * X.value[i];
        EXPECT_NEAR(budget, x, 1e-8 * x);
        for (int n = 1; n <= 2; ++n) {
          const auto D = vf.optimizer_derivative(n, x);
          ASSERT_EQ(D.value.size(), X.value.size());
          for (std::size_t i = 0; i < D.value.size(); ++i) {
            if (n == 1) EXPECT_GT(D.value[i], 0.0);
            const double fd = oracle::fd([&](double t) { return vf.optimizer_terminal(t).value[i]; }, n, x, 0.1 * x);
            EXPECT_LT(std::fabs(fd - D.value[i]), 1e-5 * std::max(1.0, std::fabs(D.value[i]))) << n << " " << i;
          }
        }
        // differentiating the budget identity: E[Y X'] = 1
        const auto D1 = vf.optimizer_derivative(1, x);
        double slope = 0.0;
        for (std::size_t i = 0; i < D1.value.size(); ++i) slope += D1.weight[i] * D1.deflator[i] * D1.value[i];
        EXPECT_NEAR(slope, 1.0, 1e-8);
      }
      const auto Y1 = vf.dual_optimizer_derivative(1, 1.3);
      for (std::size_t i = 0; i < Y1.value.size(); ++i) EXPECT_EQ(Y1.value[i], Y1.deflator[i]);
      for (int n = 2; n <= 5; ++n)
        for (double v : vf.dual_optimizer_derivative(n, 1.3).value) EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(Widder, LebesgueExactAndEmptyInterval) {
  for (const auto& d : {one, half_three_halves}) {
    const auto vf = make(UtilitySpec::log(), d);
    for (int n : {1, 2, 4, 8, 16})
      for (double z : {0.5, 1.0, 3.0}) EXPECT_LT(oracle::rel_err(vf.widder_invert(z, n), z), 1e-9) << n << " " << z;
    EXPECT_EQ(vf.widder_invert(0.0, 4), 0.0);
  }
}

TEST(Widder, AtomConvergesMonotonically) {
  const double a = 2.0, w = 1.5;
  const auto u = UtilitySpec::from_measure(BernsteinMeasure::atom(a, w), {1.0, 0.0}, false);
  const auto vf = make(u, one);
  for (double z : {1.0, 1.5, 3.0}) {
    double prev_err = INFINITY;
    const double limit = z >= a ? w : 0.0;
    for (int n : {4, 8, 16}) {
      const double got = vf.widder_invert(z, n);
      EXPECT_LT(oracle::rel_err(got, w * oracle::upper_gamma_q(n, n * a / z)), 1e-8) << z << " " << n;
      const double err = std::fabs(got - limit);
      EXPECT_LT(err, prev_err);
      prev_err = err;
    }
  }
}

TEST(Widder, PowerConvergesToMeasure) {
  // -v'(y) = y^{-1/2} when Y = 1, nu(dz) = z^{-1/2} / Gamma(1/2) dz, nu((0, z]) = 2 sqrt(z / pi)
  const auto vf = make(UtilitySpec::power(-1.0), one);
  const double want = 2.0 * std::sqrt(1.0 / M_PI);
  double prev = INFINITY;
  for (int n : {2, 4, 8, 16}) {
    const double err = std::fabs(vf.widder_invert(1.0, n) - want);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev / want, 0.05);
}

TEST(FiniteMarket, DeflatorVerticesTwoStates) {
  FiniteMarket fm{{0.5, 0.5}, {1.0}, {{2.0}, {0.5}}};
  auto verts = deflator_vertices(fm);
  ASSERT_EQ(verts.size(), 4u);
  // Admissible positions D in [-1, 2]; E[Y (1 + D (S - 1))] <= 1 at both ends
  for (const auto& y : verts) {
    for (double D : {-1.0, 2.0}) EXPECT_LE(0.5 * y[0] * (1.0 + D) + 0.5 * y[1] * (1.0 - 0.5 * D), 1.0 + 1e-12);
    EXPECT_GE(y[0], 0.0);
    EXPECT_GE(y[1], 0.0);
  }
  auto has = [&](double a, double b) {
    for (const auto& y : verts)
      if (std::fabs(y[0] - a) < 1e-12 && std::fabs(y[1] - b) < 1e-12) return true;
    return false;
  };
  EXPECT_TRUE(has(2.0 / 3.0, 4.0 / 3.0));
  EXPECT_TRUE(has(0.0, 0.0));
  const auto rep = sd_equivalence_audit(fm);
  EXPECT_TRUE(rep.agree());
  ASSERT_TRUE(rep.maximal.has_value());
  EXPECT_NEAR(rep.vertices[*rep.maximal][0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(rep.vertices[*rep.maximal][1], 4.0 / 3.0, 1e-12);
}

TEST(FiniteMarket, ArbitrageAndValidation) {
  FiniteMarket arb{{0.5, 0.5}, {1.0}, {{2.0}, {1.5}}};
  EXPECT_EQ(kind_of([&] { deflator_vertices(arb); }), ErrorKind::PolytopeEmpty);
  FiniteMarket bad{{0.5, 0.6}, {1.0}, {{2.0}, {0.5}}};
  EXPECT_EQ(kind_of([&] { deflator_vertices(bad); }), ErrorKind::InvalidInput);
  FiniteMarket fm{{0.5, 0.5}, {1.0}, {{2.0}, {0.5}}};
  EXPECT_EQ(kind_of([&] { sd_equivalence_audit(fm, std::vector<double>{1.0}); }), ErrorKind::InvalidInput);
}

TEST(FiniteMarket, CandidateAudit) {
  FiniteMarket two{{0.5, 0.5}, {1.0}, {{2.0}, {0.5}}};
  const auto full = sd_equivalence_audit(two);
  ASSERT_TRUE(full.maximal.has_value());
  // a strictly smaller deflator is never maximal
  std::vector<double> small = full.vertices[*full.maximal];
  for (auto& v : small) v *= 0.5;
  const auto r2 = sd_equivalence_audit(two, small);
  ASSERT_EQ(r2.rows.size(), 1u);
  EXPECT_FALSE(r2.rows[0].sd_inf);
  EXPECT_FALSE(r2.rows[0].conditional);
  EXPECT_FALSE(r2.rows[0].sd_two);
  EXPECT_TRUE(r2.agree());
}

TEST(FiniteMarket, PhysicalMeasureOfTruncatedGapMarket) {
  // Five-state version of the second-derivative gap market with S0 = 1.
  const auto inst = cex2_build(footnote_utility(), 4);
  FiniteMarket fm;
  fm.p = inst.p;
  fm.S0 = {1.0};
  double es = 0.0;
  for (std::size_t i = 0; i < inst.S.size(); ++i) {
    fm.S1.push_back({inst.S[i]});
    es += inst.p[i] * inst.S[i];
  }
  ASSERT_GT(es, 1.0);  // buying the stock beats the budget under P, so Z = 1 is no deflator
  const std::vector<double> one(5, 1.0);
  EXPECT_FALSE(is_deflator(fm, one));
  const auto rep = sd_equivalence_audit(fm, one);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_FALSE(rep.rows[0].feasible);
  EXPECT_FALSE(rep.maximal.has_value());
  EXPECT_TRUE(rep.agree());
  EXPECT_EQ(rep.rows[0].sd_inf, rep.rows[0].sd_two);
  EXPECT_EQ(rep.rows[0].sd_inf, rep.rows[0].conditional);
  for (const auto& v : sd_equivalence_audit(fm).vertices) EXPECT_TRUE(is_deflator(fm, v));
}

TEST(FiniteMarket, IncompleteThreeStateVertexCheckSplits) {
  // Vertices (0,2,0) and (1.6,0,2.4): the first law {0,2} is second-order
  // larger than {0,1.6,2.4}, yet E[Y | Yhat = 0] = 2 > 0.
  FiniteMarket fm{{0.25, 0.5, 0.25}, {1.0}, {{1.6}, {1.0}, {0.6}}};
  const auto rep = sd_equivalence_audit(fm);
  ASSERT_EQ(rep.vertices.size(), 5u);
  ASSERT_TRUE(rep.maximal.has_value());
  const auto& y = rep.vertices[*rep.maximal];
  EXPECT_NEAR(y[0], 0.0, 1e-12);
  EXPECT_NEAR(y[1], 2.0, 1e-12);
  EXPECT_NEAR(y[2], 0.0, 1e-12);
  const auto& row = rep.rows[*rep.maximal];
  EXPECT_TRUE(row.sd_inf);
  EXPECT_TRUE(row.sd_two);
  EXPECT_FALSE(row.conditional);
  EXPECT_FALSE(rep.agree());
  // the midpoint of the two vertices dominates (0,2,0) but is not a vertex
  const auto mid = state_law({0.8, 1.0, 1.2}, fm.p);
  EXPECT_TRUE(dominates_n(mid, state_law(y, fm.p), 2).pass);
}
