#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "cmdual/dominance.hpp"
#include "cmdual/duality.hpp"

namespace cmdual {

/// One-period market: state probabilities p, prices S0[j] and payoffs S1[i][j].
struct FiniteMarket {
  std::vector<double> p;
  std::vector<double> S0;
  std::vector<std::vector<double>> S1;

  std::size_t states() const { return p.size(); }
  std::size_t assets() const { return S0.size(); }
  void validate() const;
  bool operator==(const FiniteMarket&) const = default;
};

struct MarketModel {
  Distribution deflator;
  std::optional<FiniteMarket> market;

  static MarketModel from_law(Distribution d) { return {std::move(d), std::nullopt}; }
  /// Lognormal deflator with log-variance kappa and mean one.
  static MarketModel lognormal(double kappa) {
    return {Distribution::lognormal_mean_one(kappa), std::nullopt};
  }
};

/// Per-outcome values of a terminal random variable: deflator value, weight
/// (probability or quadrature weight) and the quantity itself.
struct OutcomeTable {
  std::vector<double> deflator;
  std::vector<double> weight;
  std::vector<double> value;

  double expectation() const;
};

inline constexpr int kMaxOrder = 8;

/// Value functions u, v of the primal and dual problems for a utility and a
/// market model, with all derivatives and the optimizers.
class ValueFunctionPair {
 public:
  ValueFunctionPair(UtilitySpec utility, MarketModel model);

  const UtilitySpec& utility() const { return utility_; }
  const MarketModel& model() const { return model_; }

  /// v(y) = E[V(y Y)].
  double dual_value(double y) const;
  /// v^(n)(y) = E[V^(n)(y Y) Y^n].
  double dual_derivative(int n, double y) const;

  /// u'(x): the root of -v'(y) = x.
  double primal_marginal(double x) const;
  double primal_value(double x) const;
  /// u^(n)(x), n >= 1 (n >= 2 through the partition sum over f = -1/v'').
  double primal_derivative(int n, double x) const;

  /// X(x) = -V'(u'(x) Y) per outcome.
  OutcomeTable optimizer_terminal(double x) const;
  /// d^n/dx^n X(x) per outcome.
  OutcomeTable optimizer_derivative(int n, double x) const;
  /// d^n/dy^n of the dual optimizer y Y per outcome: Y for n = 1, 0 beyond.
  OutcomeTable dual_optimizer_derivative(int n, double y) const;

  /// n-th Post-Widder approximant of nu((0, z]) where v'(y) = -int e^{-yz} nu(dz),
  /// including the 1/n! normalization.
  double widder_invert(double z, int n) const;

  /// f^(m)(y) for f = -1/v''.
  double f_derivative(int m, double y) const;

 private:
  struct Nodes {
    std::vector<double> y;
    std::vector<double> w;
  };

  UtilitySpec utility_;
  MarketModel model_;
  mutable std::mutex cache_mu_;
  mutable std::map<double, double> marginal_cache_;

  const Nodes& nodes(int count) const;
  /// E[g(Y)] with node doubling for lognormal laws; returns the node count used.
  double expect(const std::function<double(double)>& g, int* used = nullptr,
                bool dual = true, int order = 0) const;
  void check_order(int n) const;
  Nodes outcome_nodes(double y) const;
};

/// Vertices of the polyhedron of admissible one-share-budget positions and
/// of the resulting one-period supermartingale deflator polytope.
std::vector<std::vector<double>> deflator_vertices(const FiniteMarket& fm);

/// y >= 0 and E[y X] <= 1 for every admissible wealth X with X_0 = 1.
bool is_deflator(const FiniteMarket& fm, const std::vector<double>& y);

/// Discrete law of a state-indexed variable (values within 1e-11 relative are merged).
Distribution state_law(const std::vector<double>& values, const std::vector<double>& p);

struct SdAuditRow {
  std::size_t candidate = 0;
  bool sd_inf = false;       // condition 1 against every vertex
  bool conditional = false;  // condition 2
  bool sd_two = false;       // condition 3
  bool feasible = true;      // candidate lies in the deflator polytope
};

struct SdAuditReport {
  std::vector<std::vector<double>> vertices;
  std::vector<SdAuditRow> rows;
  // First feasible candidate that is SD(inf)-maximal against every vertex.
  std::optional<std::size_t> maximal;
  std::size_t disagreements = 0;  // rows whose three verdicts differ
  bool maximal_disagrees = false;
  /// True when no maximal candidate exists or its three verdicts coincide.
  bool agree() const { return !maximal_disagrees; }
};

/// Tests the three equivalent maximality conditions for each vertex (or just
/// the supplied candidate) against every vertex. Throws PolytopeEmpty when
/// the market admits an arbitrage (no strictly positive deflator).
SdAuditReport sd_equivalence_audit(const FiniteMarket& fm,
                                   const std::optional<std::vector<double>>& candidate = std::nullopt);

}  // namespace cmdual
