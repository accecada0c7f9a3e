#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmdual/cmcalc.hpp"
#include "cmdual/numerics.hpp"

namespace cmdual {

/// Law of a nonnegative random variable.
class Distribution {
 public:
  enum class Kind { Discrete, Lognormal, Empirical };

  Distribution() = default;
  /// Points are sorted; duplicates and probabilities not summing to 1
  /// (within 1e-12) are rejected.
  static Distribution discrete(std::vector<double> x, std::vector<double> p);
  static Distribution point(double a);
  static Distribution lognormal(double m, double s2);
  /// Lognormal with E = 1 and log-variance kappa.
  static Distribution lognormal_mean_one(double kappa);
  /// Equal weights on the sample (ties merged).
  static Distribution empirical(std::vector<double> sample);

  Kind kind() const { return kind_; }
  bool is_discrete() const { return kind_ != Kind::Lognormal; }
  const std::vector<double>& support() const { return x_; }
  const std::vector<double>& probabilities() const { return p_; }
  const std::vector<double>& sample() const { return sample_; }
  double log_mean() const { return m_; }
  double log_variance() const { return s2_; }

  /// F_n(y); F_1 is the cdf.
  double iterated_cdf(int n, double y) const;
  /// E[e^{-z xi}] and its logarithm.
  double laplace(double z) const;
  double log_laplace(double z) const;
  /// E[g(xi)]; quadrature in the normal variable for lognormal laws.
  double expectation(const numerics::RealFn& g) const;
  double mean() const;

  /// Law of c * xi.
  Distribution scaled(double c) const;

  bool operator==(const Distribution& other) const;

 private:
  Kind kind_ = Kind::Discrete;
  std::vector<double> x_, p_, sample_;
  double m_ = 0.0, s2_ = 0.0;
};

struct Verdict {
  bool pass = true;
  std::optional<double> witness;  // y* (order n) or z* (order inf)
  double gap = 0.0;               // F-side minus G-side at the witness
};

/// Tolerance for dominance inequalities: abs + rel * |G-side|.
struct DominanceTolerance {
  double abs = 1e-10;
  double rel = 1e-8;
};

/// F dominates G in order n: F_n <= G_n on [0, inf).
Verdict dominates_n(const Distribution& F, const Distribution& G, int n,
                    DominanceTolerance tol = {});

/// F dominates G in infinite order on the supplied grid.
Verdict dominates_inf(const Distribution& F, const Distribution& G,
                      const std::vector<double>& zgrid, double rel_tol = 1e-10);

/// Default grid (200 log-spaced points on [1e-4, 1e4]), doubled until the
/// verdict is stable across two refinements.
Verdict dominates_inf(const Distribution& F, const Distribution& G);

struct FubiniCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

/// E[W(xi)] against W(inf) + int (-1)^n W^(n)(t) F_n(t) dt.
FubiniCheck expectation_vs_iterated(const Distribution& d, const DnFunction& w, int n);

struct AuditResult {
  bool pass = true;
  int tested = 0;
  std::string counterexample;  // description of the first failing W
  double excess = 0.0;         // E[W(F)] - E[W(G)] for that W
};

/// Samples test functions (exponentials; for finite n also positive
/// exponential mixtures and hinges (b - y)_+^n / n!) and checks
/// E[W(F-variable)] <= E[W(G-variable)] for each.
AuditResult test_function_audit(const Distribution& F, const Distribution& G,
                                std::optional<int> order, int family_size,
                                std::uint64_t seed = 0, DominanceTolerance tol = {});

}  // namespace cmdual
