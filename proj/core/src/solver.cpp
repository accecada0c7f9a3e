#include "cmdual/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cmdual/error.hpp"
#include "cmdual/numerics.hpp"

namespace cmdual {

namespace {

constexpr int kFirstNodes = 64;
constexpr int kMaxNodes = 2048;
constexpr double kNodeTol = 1e-10;

double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void FiniteMarket::validate() const {
  const std::size_t n = p.size();
  if (n < 1 || n > 10) fail(ErrorKind::InvalidInput, "finite market needs 1..10 states");
  if (S0.empty()) fail(ErrorKind::InvalidInput, "finite market needs at least one asset");
  if (S1.size() != n) fail(ErrorKind::InvalidInput, "S1 needs one row per state");
  double total = 0.0;
  for (double q : p) {
    if (!(q > 0.0) || !std::isfinite(q)) fail(ErrorKind::InvalidInput, "state probabilities must be > 0");
    total += q;
  }
  if (std::fabs(total - 1.0) > 1e-12) fail(ErrorKind::InvalidInput, "state probabilities must sum to 1");
  for (double s : S0)
    if (!std::isfinite(s)) fail(ErrorKind::InvalidInput, "S0 must be finite");
  for (const auto& row : S1) {
    if (row.size() != S0.size()) fail(ErrorKind::InvalidInput, "S1 rows need one entry per asset");
    for (double s : row)
      if (!std::isfinite(s)) fail(ErrorKind::InvalidInput, "S1 must be finite");
  }
}

double OutcomeTable::expectation() const {
  double s = 0.0;
  for (std::size_t i = 0; i < value.size(); ++i) s += weight[i] * value[i];
  return s;
}

ValueFunctionPair::ValueFunctionPair(UtilitySpec utility, MarketModel model)
    : utility_(std::move(utility)), model_(std::move(model)) {
  if (model_.deflator.is_discrete()) {
    for (double y : model_.deflator.support())
      if (!(y > 0.0)) fail(ErrorKind::InvalidInput, "deflator law must live on (0, inf)");
  }
}

const ValueFunctionPair::Nodes& ValueFunctionPair::nodes(int count) const {
  static std::mutex mu;
  static std::map<std::pair<double, double>, std::map<int, Nodes>> cache;
  const auto& d = model_.deflator;
  std::lock_guard<std::mutex> lock(mu);
  auto& per_law = cache[{d.log_mean(), d.log_variance()}];
  auto it = per_law.find(count);
  if (it != per_law.end()) return it->second;
  const auto& gh = numerics::gauss_hermite(count);
  Nodes n;
  const double s = std::sqrt(d.log_variance());
  for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
    n.y.push_back(std::exp(d.log_mean() + s * gh.nodes[i]));
    n.w.push_back(gh.weights[i]);
  }
  return per_law.emplace(count, std::move(n)).first->second;
}

double ValueFunctionPair::expect(const std::function<double(double)>& g, int* used, bool dual,
                                 int order) const {
  auto bad = [&] {
    if (dual && order == 0) fail(ErrorKind::DualInfinite, "E[V(yY)] is not finite");
    fail(ErrorKind::DivergentMoment, "expectation of order " + std::to_string(order) + " diverges");
  };
  const auto& d = model_.deflator;
  if (d.is_discrete()) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.support().size(); ++i) s += d.probabilities()[i] * g(d.support()[i]);
    if (!std::isfinite(s)) bad();
    if (used) *used = 0;
    return s;
  }
  auto rule = [&](int count) {
    const Nodes& n = nodes(count);
    double s = 0.0;
    for (std::size_t i = 0; i < n.y.size(); ++i) s += n.w[i] * g(n.y[i]);
    return s;
  };
  int count = kFirstNodes;
  double prev = rule(count);
  for (;;) {
    count *= 2;
    const double cur = rule(count);
    if (!std::isfinite(cur)) bad();
    if (std::fabs(cur - prev) <= kNodeTol * std::fabs(cur) + 1e-300) {
      if (used) *used = count;
      return cur;
    }
    if (count >= kMaxNodes) bad();
    prev = cur;
  }
}

void ValueFunctionPair::check_order(int n) const {
  if (n > kMaxOrder) fail(ErrorKind::OrderExceeded, "orders above 8 are not supported");
  if (auto o = utility_.order(); o && n > *o)
    fail(ErrorKind::OrderExceeded, "order " + std::to_string(n) + " exceeds the order of V");
}

double ValueFunctionPair::dual_value(double y) const {
  if (!(y > 0.0)) fail(ErrorKind::InvalidInput, "dual_value needs y > 0");
  return expect([&](double Y) { return utility_.V(y * Y); }, nullptr, true, 0);
}

double ValueFunctionPair::dual_derivative(int n, double y) const {
  if (n < 1 || !(y > 0.0)) fail(ErrorKind::InvalidInput, "dual_derivative needs n >= 1, y > 0");
  check_order(n);
  return expect([&](double Y) { return utility_.V_derivative(n, y * Y) * std::pow(Y, n); },
                nullptr, true, n);
}

double ValueFunctionPair::primal_marginal(double x) const {
  if (!(x > 0.0)) fail(ErrorKind::InvalidInput, "primal_marginal needs x > 0");
  {
    std::lock_guard<std::mutex> lock(cache_mu_);
    auto it = marginal_cache_.find(x);
    if (it != marginal_cache_.end()) return it->second;
  }
  const double lx = std::log(x);
  auto f = [&](double u) {
    const double v1 = dual_derivative(1, std::exp(u));
    if (!(v1 < 0.0)) fail(ErrorKind::NoRoot, "v' is not negative");
    return std::log(-v1) - lx;
  };
  auto df = [&](double u) {
    const double y = std::exp(u);
    return y * dual_derivative(2, y) / dual_derivative(1, y);
  };
  double lo = 0.0, hi = 0.0;
  const double f0 = f(0.0);
  double y;
  if (f0 == 0.0) {
    y = 1.0;
  } else {
    const double step = std::log(2.0);
    for (int i = 0;; ++i) {
      if (i > 1500) fail(ErrorKind::NoRoot, "x outside the range of -v'");
      double v;
      if (f0 > 0.0) {
        hi += step;
        v = f(hi);
        if (v < 0.0) break;
        lo = hi;
      } else {
        lo -= step;
        v = f(lo);
        if (v > 0.0) break;
        hi = lo;
      }
      if (!std::isfinite(v)) fail(ErrorKind::NoRoot, "-v' not finite while bracketing");
    }
    y = std::exp(numerics::solve_bracketed(f, df, lo, hi, 1e-15));
  }
  std::lock_guard<std::mutex> lock(cache_mu_);
  marginal_cache_.emplace(x, y);
  return y;
}

double ValueFunctionPair::primal_value(double x) const {
  const double y = primal_marginal(x);
  return dual_value(y) + x * y;
}

double ValueFunctionPair::f_derivative(int m, double y) const {
  if (m < 0) fail(ErrorKind::InvalidInput, "f_derivative needs m >= 0");
  std::vector<double> h(m + 1), r(m + 1);
  for (int j = 0; j <= m; ++j) h[j] = dual_derivative(j + 2, y);
  r[0] = 1.0 / h[0];
  for (int k = 1; k <= m; ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += numerics::binomial(k, j) * h[j] * r[k - j];
    r[k] = -s / h[0];
  }
  return -r[m];
}

namespace {

// u^(1..top) at x given y = u'(x) and f^(m)(y), m = 0..top-2.
std::vector<double> primal_ladder(double y, const std::vector<double>& f, int top) {
  std::vector<double> u(top + 1, 0.0);
  u[1] = y;
  for (int k = 2; k <= top; ++k) {
    double s = 0.0;
    for (const auto& part : numerics::partitions(k - 2)) {
      double term = part.coefficient * f[part.block_count];
      for (std::size_t j = 0; j < part.multiplicity.size(); ++j)
        if (part.multiplicity[j] > 0) term *= std::pow(u[j + 2], part.multiplicity[j]);
      s += term;
    }
    u[k] = s;
  }
  return u;
}

}  // namespace

double ValueFunctionPair::primal_derivative(int n, double x) const {
  if (n < 1) fail(ErrorKind::InvalidInput, "primal_derivative needs n >= 1");
  check_order(n);
  const double y = primal_marginal(x);
  if (n == 1) return y;
  std::vector<double> f(n - 1);
  for (int m = 0; m <= n - 2; ++m) f[m] = f_derivative(m, y);
  return primal_ladder(y, f, n)[n];
}

ValueFunctionPair::Nodes ValueFunctionPair::outcome_nodes(double y) const {
  const auto& d = model_.deflator;
  if (d.is_discrete()) return {d.support(), d.probabilities()};
  int used = kFirstNodes;
  expect([&](double Y) { return utility_.V_derivative(1, y * Y) * Y; }, &used, true, 1);
  return nodes(used);
}

OutcomeTable ValueFunctionPair::optimizer_terminal(double x) const {
  const double y = primal_marginal(x);
  const Nodes n = outcome_nodes(y);
  OutcomeTable t{n.y, n.w, {}};
  for (double Y : n.y) t.value.push_back(-utility_.V_derivative(1, y * Y));
  return t;
}

OutcomeTable ValueFunctionPair::optimizer_derivative(int n, double x) const {
  if (n < 1) fail(ErrorKind::InvalidInput, "optimizer_derivative needs n >= 1");
  check_order(n + 1);
  const double y = primal_marginal(x);
  std::vector<double> f(n);
  for (int m = 0; m <= n - 1; ++m) f[m] = f_derivative(m, y);
  const auto u = primal_ladder(y, f, n + 1);
  const Nodes nodes_ = outcome_nodes(y);
  OutcomeTable t{nodes_.y, nodes_.w, {}};
  const auto& parts = numerics::partitions(n);
  for (double Y : nodes_.y) {
    double s = 0.0;
    for (const auto& part : parts) {
      double term = part.coefficient * -utility_.V_derivative(1 + part.block_count, y * Y);
      for (std::size_t j = 0; j < part.multiplicity.size(); ++j)
        if (part.multiplicity[j] > 0) term *= std::pow(u[j + 2] * Y, part.multiplicity[j]);
      s += term;
    }
    t.value.push_back(s);
  }
  return t;
}

OutcomeTable ValueFunctionPair::dual_optimizer_derivative(int n, double y) const {
  if (n < 1 || !(y > 0.0)) fail(ErrorKind::InvalidInput, "needs n >= 1, y > 0");
  const auto& d = model_.deflator;
  Nodes nd = d.is_discrete() ? Nodes{d.support(), d.probabilities()} : nodes(kFirstNodes);
  OutcomeTable t{nd.y, nd.w, {}};
  for (double Y : nd.y) t.value.push_back(n == 1 ? Y : 0.0);
  return t;
}

double ValueFunctionPair::widder_invert(double z, int n) const {
  if (n < 1) fail(ErrorKind::InvalidInput, "widder_invert needs n >= 1");
  if (!(z >= 0.0)) fail(ErrorKind::InvalidInput, "widder_invert needs z >= 0");
  if (auto o = utility_.order(); o && n + 1 > *o)
    fail(ErrorKind::OrderExceeded, "Post-Widder order exceeds the order of V");
  if (z == 0.0) return 0.0;
  const auto& d = model_.deflator;
  const int k = n + 1;
  // log E[(-1)^k V^(k)(s Y) Y^k]
  auto log_moment = [&](double s) {
    auto over = [&](const std::vector<double>& ys, const std::vector<double>& ws) {
      std::vector<double> terms;
      terms.reserve(ys.size());
      for (std::size_t i = 0; i < ys.size(); ++i)
        terms.push_back(std::log(ws[i]) + k * std::log(ys[i]) +
                        utility_.log_signed_V_derivative(k, s * ys[i]));
      return log_sum_exp(terms);
    };
    if (d.is_discrete()) return over(d.support(), d.probabilities());
    int count = kFirstNodes;
    double prev = over(nodes(count).y, nodes(count).w);
    while (count < kMaxNodes) {
      count *= 2;
      const double cur = over(nodes(count).y, nodes(count).w);
      if (std::fabs(cur - prev) <= kNodeTol) return cur;
      prev = cur;
    }
    return prev;
  };
  const double lf = std::lgamma(n + 1.0);
  auto integrand = [&](double rho) {
    if (rho <= 0.0) return 0.0;
    const double s = n / rho;
    const double l = (n + 1) * std::log(s) - lf + log_moment(s);
    return std::exp(l);
  };
  numerics::QuadratureOptions o;
  o.abs_tol = 1e-15;
  o.rel_tol = 1e-11;
  // rho = z t^2 tames a rho^{-1/2}-type singularity at the origin
  auto r = numerics::integrate([&](double t) { return 2.0 * z * t * integrand(z * t * t); }, 0.0, 1.0, o);
  if (!r.converged) fail(ErrorKind::QuadratureFailure, "Post-Widder integral did not converge");
  return r.value;
}

Distribution state_law(const std::vector<double>& values, const std::vector<double>& p) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> x, q;
  double total = 0.0;
  for (auto i : idx) {
    const double v = std::max(0.0, values[i]);
    if (!x.empty() && std::fabs(v - x.back()) <= 1e-11 * std::max(1.0, std::fabs(v))) {
      q.back() += p[i];
    } else {
      x.push_back(v);
      q.push_back(p[i]);
    }
    total += p[i];
  }
  for (auto& w : q) w /= total;
  return Distribution::discrete(std::move(x), std::move(q));
}

namespace {

template <typename F>
void for_each_subset(std::size_t n, std::size_t k, F&& f) {
  std::vector<std::size_t> pick(k);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
    if (depth == k) {
      f(pick);
      return;
    }
    for (std::size_t i = start; i + (k - depth) <= n; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
}

struct Reduced {
  Eigen::MatrixXd A;  // states x r, rows are price changes in a basis of their span
};

Reduced reduce(const FiniteMarket& fm) {
  const auto N = static_cast<Eigen::Index>(fm.states());
  const auto d = static_cast<Eigen::Index>(fm.assets());
  Eigen::MatrixXd A(N, d);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < d; ++j) A(i, j) = fm.S1[i][j] - fm.S0[j];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = 1e-12 * std::max(1.0, sv.size() ? sv(0) : 0.0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > cut) ++r;
  return {A * svd.matrixV().leftCols(r)};
}

bool has_arbitrage(const Eigen::MatrixXd& A) {
  const auto N = static_cast<std::size_t>(A.rows());
  const auto r = static_cast<std::size_t>(A.cols());
  if (r == 0) return false;
  bool found = false;
  for_each_subset(N, r - 1, [&](const std::vector<std::size_t>& pick) {
    if (found) return;
    Eigen::MatrixXd M(static_cast<Eigen::Index>(pick.size()), A.cols());
    for (std::size_t i = 0; i < pick.size(); ++i) M.row(i) = A.row(pick[i]);
    Eigen::VectorXd dir;
    if (pick.empty()) {
      dir = Eigen::VectorXd::Unit(A.cols(), 0);
    } else {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      if (lu.rank() != static_cast<Eigen::Index>(r - 1)) return;
      dir = lu.kernel().col(0);
    }
    for (double sgn : {1.0, -1.0}) {
      const Eigen::VectorXd g = sgn * (A * dir);
      const double scale = std::max(1e-300, g.cwiseAbs().maxCoeff());
      if (g.minCoeff() >= -1e-10 * scale && g.maxCoeff() > 1e-8 * scale) found = true;
    }
  });
  return found;
}

std::vector<Eigen::VectorXd> position_vertices(const Eigen::MatrixXd& A) {
  const auto N = static_cast<std::size_t>(A.rows());
  const auto r = static_cast<std::size_t>(A.cols());
  std::vector<Eigen::VectorXd> out;
  if (r == 0) {
    out.push_back(Eigen::VectorXd::Zero(0));
    return out;
  }
  for_each_subset(N, r, [&](const std::vector<std::size_t>& pick) {
    Eigen::MatrixXd M(static_cast<Eigen::Index>(r), A.cols());
    for (std::size_t i = 0; i < r; ++i) M.row(i) = A.row(pick[i]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.rank() != static_cast<Eigen::Index>(r)) return;
    Eigen::VectorXd delta = lu.solve(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(r), -1.0));
    const Eigen::VectorXd wealth = (A * delta).array() + 1.0;
    if (wealth.minCoeff() < -1e-10) return;
    for (const auto& v : out)
      if ((v - delta).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + delta.cwiseAbs().maxCoeff())) return;
    out.push_back(delta);
  });
  return out;
}

// Budget rows: sum_i p_i (1 + delta . a_i) y_i <= 1 for each position vertex and delta = 0.
std::vector<Eigen::VectorXd> budget_rows(const FiniteMarket& fm) {
  fm.validate();
  const Reduced red = reduce(fm);
  if (has_arbitrage(red.A)) fail(ErrorKind::PolytopeEmpty, "market admits an arbitrage: no positive deflator");
  const std::size_t N = fm.states();
  std::vector<Eigen::VectorXd> rows;
  rows.push_back(Eigen::Map<const Eigen::VectorXd>(fm.p.data(), static_cast<Eigen::Index>(N)));
  for (const auto& delta : position_vertices(red.A)) {
    Eigen::VectorXd row(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i)
      row(i) = fm.p[i] * std::max(0.0, 1.0 + (delta.size() ? red.A.row(i).dot(delta) : 0.0));
    rows.push_back(row);
  }
  return rows;
}

bool within(const std::vector<Eigen::VectorXd>& rows, const std::vector<double>& y) {
  for (double v : y)
    if (v < -1e-12) return false;
  for (const auto& row : rows) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += row(i) * y[i];
    if (s > 1.0 + 1e-10) return false;
  }
  return true;
}

}  // namespace

bool is_deflator(const FiniteMarket& fm, const std::vector<double>& y) {
  const auto rows = budget_rows(fm);
  if (y.size() != fm.states()) fail(ErrorKind::InvalidInput, "deflator needs one value per state");
  return within(rows, y);
}

std::vector<std::vector<double>> deflator_vertices(const FiniteMarket& fm) {
  const auto rows = budget_rows(fm);
  const std::size_t N = fm.states();

  std::vector<std::vector<double>> out;
  const std::size_t M = rows.size();
  for (std::size_t zeros = 0; zeros <= N; ++zeros) {
    for_each_subset(N, zeros, [&](const std::vector<std::size_t>& zero_set) {
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < N; ++i)
        if (std::find(zero_set.begin(), zero_set.end(), i) == zero_set.end()) free.push_back(i);
      const std::size_t k = free.size();
      auto accept = [&](const std::vector<double>& y) {
        if (!within(rows, y)) return;
        for (const auto& v : out) {
          double diff = 0.0;
          for (std::size_t i = 0; i < N; ++i) diff = std::max(diff, std::fabs(v[i] - y[i]));
          if (diff <= 1e-9) return;
        }
        out.push_back(y);
      };
      if (k == 0) {
        accept(std::vector<double>(N, 0.0));
        return;
      }
      for_each_subset(M, k, [&](const std::vector<std::size_t>& act) {
        Eigen::MatrixXd B(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        for (std::size_t a = 0; a < k; ++a)
          for (std::size_t b = 0; b < k; ++b) B(a, b) = rows[act[a]](free[b]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
        if (lu.rank() != static_cast<Eigen::Index>(k)) return;
        Eigen::VectorXd sol = lu.solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k)));
        std::vector<double> y(N, 0.0);
        for (std::size_t b = 0; b < k; ++b) y[free[b]] = (sol(b) < 0.0 && sol(b) > -1e-12) ? 0.0 : sol(b);
        accept(y);
      });
    });
  }
  return out;
}

SdAuditReport sd_equivalence_audit(const FiniteMarket& fm,
                                   const std::optional<std::vector<double>>& candidate) {
  SdAuditReport rep;
  rep.vertices = deflator_vertices(fm);
  const std::size_t V = rep.vertices.size();
  std::vector<Distribution> laws;
  for (const auto& v : rep.vertices) laws.push_back(state_law(v, fm.p));

  auto audit = [&](const std::vector<double>& yhat, const Distribution& law, std::size_t label) {
    SdAuditRow row{label, true, true, true};
    for (std::size_t k = 0; k < V; ++k) {
      const auto& y = rep.vertices[k];
      // Condition 2: conditional means of Y on the level sets of Yhat.
      std::vector<bool> used(yhat.size(), false);
      for (std::size_t i = 0; i < yhat.size() && row.conditional; ++i) {
        if (used[i]) continue;
        double pm = 0.0, pw = 0.0;
        for (std::size_t j = i; j < yhat.size(); ++j) {
          if (!used[j] && std::fabs(yhat[j] - yhat[i]) <= 1e-11 * std::max(1.0, std::fabs(yhat[i]))) {
            used[j] = true;
            pm += fm.p[j] * y[j];
            pw += fm.p[j];
          }
        }
        if (pm / pw > yhat[i] + 1e-9 * (1.0 + std::fabs(yhat[i]))) row.conditional = false;
      }
      if (row.sd_two && !dominates_n(law, laws[k], 2).pass) row.sd_two = false;
      if (row.sd_inf && !dominates_inf(law, laws[k]).pass) row.sd_inf = false;
    }
    return row;
  };

  if (candidate) {
    if (candidate->size() != fm.states()) fail(ErrorKind::InvalidInput, "candidate needs one value per state");
    rep.rows.push_back(audit(*candidate, state_law(*candidate, fm.p), V));
    rep.rows.back().feasible = is_deflator(fm, *candidate);
  } else {
    for (std::size_t h = 0; h < V; ++h) rep.rows.push_back(audit(rep.vertices[h], laws[h], h));
  }
  for (const auto& row : rep.rows) {
    const bool split = !(row.sd_inf == row.conditional && row.conditional == row.sd_two);
    if (split) ++rep.disagreements;
    if (!rep.maximal && row.feasible && row.sd_inf) {
      rep.maximal = row.candidate;
      rep.maximal_disagrees = split;
    }
  }
  return rep;
}

}  // namespace cmdual
