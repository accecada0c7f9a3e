#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "cmdual/counterexamples.hpp"
#include "cmdual/dominance.hpp"
#include "cmdual/error.hpp"
#include "cmdual/json_io.hpp"
#include "cmdual/numerics.hpp"
#include "cmdual/solver.hpp"

namespace cmdual::cli {

namespace {

using json = nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : cols_(header.size()) { line(header); }
  void row(const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double x : v) s.push_back(fmt(x));
    line(s);
  }
  void row(const std::vector<std::string>& v) { line(v); }
  std::string str() const { return ss_.str(); }

 private:
  std::size_t cols_;
  std::ostringstream ss_;
  void line(const std::vector<std::string>& v) {
    if (v.size() != cols_) fail(ErrorKind::InvalidInput, "csv row width mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) ss_ << (i ? "," : "") << v[i];
    ss_ << '\n';
  }
};

std::optional<int> parse_order(const std::string& s, bool allow_inf) {
  if (allow_inf && (s == "inf" || s == "infinity")) return std::nullopt;
  std::size_t used = 0;
  int n = 0;
  try {
    n = std::stoi(s, &used);
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidInput, "order must be an integer" + std::string(allow_inf ? " or inf" : ""));
  }
  if (used != s.size() || n < 1) fail(ErrorKind::InvalidInput, "order must be a positive integer");
  if (n > kMaxOrder) fail(ErrorKind::InvalidInput, "order must be at most 8");
  return n;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidInput, "bad number in list: " + item);
    }
    if (used != item.size() || !std::isfinite(v)) fail(ErrorKind::InvalidInput, "bad number in list: " + item);
    out.push_back(v);
  }
  if (out.empty()) fail(ErrorKind::InvalidInput, "empty list");
  return out;
}

std::vector<long long> parse_counts(const std::string& s) {
  std::vector<long long> out;
  for (double v : parse_list(s)) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) fail(ErrorKind::InvalidInput, "truncations must be positive integers");
    out.push_back(static_cast<long long>(v));
  }
  return out;
}

struct Common {
  std::string out_format;
  std::string output;
};

void emit(const Common& c, std::ostream& out, const std::string& text) {
  if (c.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.output, std::ios::binary);
  if (!f) fail(ErrorKind::InvalidInput, "cannot write " + c.output);
  f << text;
}

void emit_json(const Common& c, std::ostream& out, const json& j) { emit(c, out, j.dump(2) + "\n"); }

void check_format(const Common& c) {
  if (c.out_format != "csv" && c.out_format != "json")
    fail(ErrorKind::InvalidInput, "--out must be csv or json");
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::InvalidInput:
    case ErrorKind::InvalidMeasure:
    case ErrorKind::OrderExceeded:
    case ErrorKind::ConstantRRA:
    case ErrorKind::PolytopeEmpty:
      return kInputError;
    default:
      return kNumericalFailure;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Completely monotone calculus, stochastic dominance and utility duality"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;
  std::string order_s = "2", grid_s, utility_path, model_path, f_path, g_path, eps_s = "1e-2,1e-3,1e-4";
  std::string trunc_s = "1000,10000,100000,1000000", widder_s = "4,8,16", candidate_s, market_path;
  int family = 100, n_cex = 2, N_cex = 200;
  long long bump_terms = 1000000;
  std::uint64_t seed = 0;

  auto* dom = app.add_subcommand("dominance", "Test F >=_n G (or infinite order)");
  dom->add_option("F", f_path, "Distribution F (JSON)")->required();
  dom->add_option("G", g_path, "Distribution G (JSON)")->required();
  dom->add_option("--order", order_s, "Order n or inf")->capture_default_str();

  auto* aud = app.add_subcommand("audit", "Check E[W(F)] <= E[W(G)] over sampled test functions");
  aud->add_option("F", f_path)->required();
  aud->add_option("G", g_path)->required();
  aud->add_option("--order", order_s, "Order n or inf")->capture_default_str();
  aud->add_option("--family-size", family, "Number of sampled test functions")->capture_default_str();
  aud->add_option("--seed", seed, "Random seed")->capture_default_str();

  auto* sol = app.add_subcommand("solve", "Primal value function and derivatives on a wealth grid");
  auto* der = app.add_subcommand("derivatives", "Dual value function and derivatives on a grid");
  auto* inv = app.add_subcommand("invert", "Post-Widder reconstruction of nu((0, z]) on a grid");
  for (auto* s : {sol, der, inv}) {
    s->add_option("--utility", utility_path, "Utility (JSON)")->required();
    s->add_option("--model", model_path, "Deflator law (JSON)")->required();
    s->add_option("--grid", grid_s, "Grid a:b:points")->required();
  }
  sol->add_option("--order", order_s, "Highest derivative order (<= 8)")->capture_default_str();
  der->add_option("--order", order_s, "Highest derivative order (<= 8)")->capture_default_str();
  inv->add_option("--widder-orders", widder_s, "Comma-separated approximant orders")->capture_default_str();

  auto* c1 = app.add_subcommand("cex1", "Analyticity failure: finite derivatives and the divergent one");
  c1->add_option("--n", n_cex, "Order n (1..3)")->capture_default_str();
  c1->add_option("--truncations", trunc_s, "Comma-separated increasing truncations")->capture_default_str();
  c1->add_option("--bump-terms", bump_terms, "Gaussian terms in the bump")->capture_default_str();

  auto* c2 = app.add_subcommand("cex2", "Second-derivative gap in a non-dominant market");
  c2->add_option("--N", N_cex, "Number of states beyond omega_0")->capture_default_str();
  c2->add_option("--eps", eps_s, "Comma-separated step sizes")->capture_default_str();
  c2->add_option("--utility", utility_path, "Utility (JSON; default -V'(y) = 1/(y(y+1)))");

  auto* sd = app.add_subcommand("sd-equiv", "Maximal-deflator conditions on a finite one-period market");
  sd->add_option("market", market_path, "Market (JSON)")->required();
  sd->add_option("--candidate", candidate_s, "Comma-separated candidate deflator (default: every vertex)");

  for (auto* s : {dom, aud, sol, der, inv, c1, c2, sd}) {
    s->add_option("--out", common.out_format, "Output format: csv or json (default json; csv for tables)");
    s->add_option("--output", common.output, "Output file (default: standard output)");
  }

  std::vector<const char*> argv{"cmdual"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kInputError;
  }

  try {
    auto* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    const bool table_cmd = name == "solve" || name == "derivatives" || name == "invert";
    if (chosen->count("--out") == 0) common.out_format = table_cmd ? "csv" : "json";
    check_format(common);

    if (name == "dominance" || name == "audit") {
      const auto order = parse_order(order_s, true);
      const auto F = json_io::distribution_from_json(json_io::read_file(f_path));
      const auto G = json_io::distribution_from_json(json_io::read_file(g_path));
      const json ord = order ? json(*order) : json("inf");
      if (name == "dominance") {
        const Verdict v = order ? dominates_n(F, G, *order) : dominates_inf(F, G);
        const std::string verdict = v.pass ? "dominates" : "not_dominated";
        if (common.out_format == "json") {
          emit_json(common, out, {{"verdict", verdict}, {"order", ord}, {"witness", opt(v.witness)}, {"gap", v.gap}});
        } else {
          Csv csv({"verdict", "order", "witness", "gap"});
          csv.row(std::vector<std::string>{verdict, order ? std::to_string(*order) : "inf",
                                           v.witness ? fmt(*v.witness) : "", fmt(v.gap)});
          emit(common, out, csv.str());
        }
        return v.pass ? kOk : kVerdictFail;
      }
      if (family < 1) fail(ErrorKind::InvalidInput, "--family-size must be positive");
      const AuditResult r = test_function_audit(F, G, order, family, seed);
      if (common.out_format == "json") {
        emit_json(common, out, {{"pass", r.pass}, {"order", ord}, {"tested", r.tested},
                                {"counterexample", r.counterexample}, {"excess", r.excess}, {"seed", seed}});
      } else {
        Csv csv({"pass", "tested", "counterexample", "excess"});
        csv.row(std::vector<std::string>{r.pass ? "true" : "false", std::to_string(r.tested), r.counterexample, fmt(r.excess)});
        emit(common, out, csv.str());
      }
      return r.pass ? kOk : kVerdictFail;
    }

    if (table_cmd) {
      const auto grid = numerics::parse_grid(grid_s);
      const auto util = json_io::utility_from_json(json_io::read_file(utility_path));
      const auto law = json_io::distribution_from_json(json_io::read_file(model_path));
      const ValueFunctionPair vf(util, MarketModel::from_law(law));
      std::vector<std::string> header;
      std::vector<std::vector<double>> rows(grid.size());
      if (name == "invert") {
        std::vector<int> orders;
        for (double v : parse_list(widder_s)) {
          if (v != std::floor(v) || v < 1 || v > 64) fail(ErrorKind::InvalidInput, "Post-Widder orders must be integers in 1..64");
          orders.push_back(int(v));
        }
        header = {"z"};
        for (int n : orders) header.push_back("nu_" + std::to_string(n));
        numerics::parallel_for(grid.size(), [&](std::size_t i) {
          rows[i] = {grid[i]};
          for (int n : orders) rows[i].push_back(vf.widder_invert(grid[i], n));
        });
      } else {
        const int n = *parse_order(order_s, false);
        const bool primal = name == "solve";
        header = {primal ? "x" : "y", primal ? "u" : "v"};
        for (int k = 1; k <= n; ++k) header.push_back((primal ? "u" : "v") + std::to_string(k));
        for (double g : grid)
          if (!(g > 0.0)) fail(ErrorKind::InvalidInput, "grid points must be positive");
        numerics::parallel_for(grid.size(), [&](std::size_t i) {
          const double x = grid[i];
          rows[i] = {x, primal ? vf.primal_value(x) : vf.dual_value(x)};
          for (int k = 1; k <= n; ++k)
            rows[i].push_back(primal ? vf.primal_derivative(k, x) : vf.dual_derivative(k, x));
        });
      }
      if (common.out_format == "csv") {
        Csv csv(header);
        for (const auto& r : rows) csv.row(r);
        emit(common, out, csv.str());
      } else {
        json arr = json::array();
        for (const auto& r : rows) {
          json o;
          for (std::size_t c = 0; c < header.size(); ++c) o[header[c]] = r[c];
          arr.push_back(std::move(o));
        }
        emit_json(common, out, {{"rows", arr}});
      }
      return kOk;
    }

    if (name == "cex1") {
      const auto truncs = parse_counts(trunc_s);
      if (bump_terms < 1) fail(ErrorKind::InvalidInput, "--bump-terms must be positive");
      const Cex1Instance inst(n_cex, bump_terms);
      const auto div = cex1_divergence(inst, truncs);
      const auto fin = cex1_verify_finite(inst, truncs);
      bool diverges = div.size() >= 2;
      for (std::size_t i = 1; i < div.size(); ++i)
        if (!(div[i].increment > 0.0) || std::fabs(div[i].increment / div[i].oracle - 1.0) > 0.25) diverges = false;
      if (common.out_format == "json") {
        json rows = json::array();
        for (std::size_t i = 0; i < div.size(); ++i)
          rows.push_back({{"truncation", div[i].truncation}, {"partial_sum", div[i].partial_sum},
                          {"increment", div[i].increment}, {"oracle", div[i].oracle},
                          {"finite", fin[i].values}});
        emit_json(common, out, {{"n", n_cex}, {"eps", inst.eps()}, {"s0", inst.s0()}, {"s1", inst.s1()},
                                {"C", inst.bump().C()}, {"rows", rows}, {"diverges", diverges}});
      } else {
        std::vector<std::string> header{"truncation", "partial_sum", "increment", "oracle"};
        for (int k = 0; k <= n_cex; ++k) header.push_back("v" + std::to_string(k));
        Csv csv(header);
        for (std::size_t i = 0; i < div.size(); ++i) {
          std::vector<double> r{double(div[i].truncation), div[i].partial_sum, div[i].increment, div[i].oracle};
          r.insert(r.end(), fin[i].values.begin(), fin[i].values.end());
          csv.row(r);
        }
        emit(common, out, csv.str());
        err << json{{"diverges", diverges}}.dump() << '\n';
      }
      return diverges ? kOk : kVerdictFail;
    }

    if (name == "cex2") {
      const auto util = utility_path.empty() ? footnote_utility()
                                             : json_io::utility_from_json(json_io::read_file(utility_path));
      const auto eps = parse_list(eps_s);
      const auto inst = cex2_build(util, N_cex);
      const auto rep = cex2_gap(inst, eps);
      if (common.out_format == "json") {
        json rows = json::array();
        for (const auto& r : rep.rows)
          rows.push_back({{"eps", r.eps}, {"D_plus", r.D_plus}, {"D_minus", r.D_minus},
                          {"slope_plus", r.slope_plus}, {"slope_minus", r.slope_minus},
                          {"boundary_plus", r.boundary_plus}, {"boundary_minus", r.boundary_minus}});
        emit_json(common, out, {{"N", N_cex}, {"p0", inst.p[0]}, {"p1", inst.p[1]}, {"sum_p", inst.sum_p},
                                {"foc_residual", inst.foc_residual}, {"expected_S", inst.expected_S},
                                {"delta_hat", inst.delta_hat}, {"G_sum", inst.G_sum},
                                {"Q_hat", rep.Q_hat}, {"Q_bound", rep.Q_bound},
                                {"gap", rep.gap}, {"margin", rep.margin}, {"rows", rows}});
      } else {
        Csv csv({"eps", "D_plus", "D_minus", "slope_plus", "slope_minus"});
        for (const auto& r : rep.rows) csv.row({r.eps, r.D_plus, r.D_minus, r.slope_plus, r.slope_minus});
        emit(common, out, csv.str());
        err << json{{"gap", rep.gap}, {"margin", rep.margin}}.dump() << '\n';
      }
      return rep.gap > 0.0 ? kOk : kVerdictFail;
    }

    if (name == "sd-equiv") {
      const auto fm = json_io::market_from_json(json_io::read_file(market_path));
      std::optional<std::vector<double>> cand;
      if (!candidate_s.empty()) cand = parse_list(candidate_s);
      const auto rep = sd_equivalence_audit(fm, cand);
      if (common.out_format == "json") {
        json rows = json::array();
        for (const auto& r : rep.rows)
          rows.push_back({{"candidate", r.candidate}, {"sd_inf", r.sd_inf}, {"conditional", r.conditional}, {"sd_two", r.sd_two}, {"feasible", r.feasible}});
        emit_json(common, out, {{"vertices", rep.vertices}, {"rows", rows},
                                {"maximal", rep.maximal ? json(*rep.maximal) : json(nullptr)},
                                {"disagreements", rep.disagreements}, {"agree", rep.agree()}});
      } else {
        Csv csv({"candidate", "sd_inf", "conditional", "sd_two", "feasible"});
        for (const auto& r : rep.rows)
          csv.row(std::vector<std::string>{std::to_string(r.candidate), r.sd_inf ? "1" : "0",
                                           r.conditional ? "1" : "0", r.sd_two ? "1" : "0",
                                           r.feasible ? "1" : "0"});
        emit(common, out, csv.str());
      }
      return rep.agree() ? kOk : kVerdictFail;
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    if (app.got_subcommand("cex1") && e.kind() == ErrorKind::DivergentMoment) {
      out << json{{"diverges", true}}.dump() << '\n';
      return kOk;
    }
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  }
  return kInputError;
}

}  // namespace cmdual::cli
