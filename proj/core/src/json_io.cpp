#include "cmdual/json_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cmdual/error.hpp"

namespace cmdual::json_io {

namespace {

double num(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number())
    fail(ErrorKind::InvalidInput, std::string("expected a number at \"") + key + "\"");
  return j.at(key).get<double>();
}

double num_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? num(j, key) : fallback;
}

std::vector<double> vec(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_array())
    fail(ErrorKind::InvalidInput, std::string("expected an array at \"") + key + "\"");
  std::vector<double> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number()) fail(ErrorKind::InvalidInput, std::string("non-numeric entry in \"") + key + "\"");
    out.push_back(v.get<double>());
  }
  return out;
}

std::string kind_of(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    fail(ErrorKind::InvalidInput, "expected a \"kind\" string");
  return j.at("kind").get<std::string>();
}

Anchor anchor_from(const json& j) {
  if (!j.contains("anchor")) return {};
  const auto& a = j.at("anchor");
  return {num(a, "y0"), num(a, "w0")};
}

}  // namespace

json to_json(const BernsteinMeasure& mu) {
  json j;
  j["atoms"] = json::array();
  for (const auto& a : mu.atoms()) j["atoms"].push_back({{"z", a.z}, {"w", a.w}});
  j["pieces"] = json::array();
  for (const auto& p : mu.pieces()) {
    json q{{"c", p.c}, {"a", p.a}, {"b", p.b}, {"lo", p.lo}};
    if (p.hi)
      q["hi"] = *p.hi;
    else
      q["hi"] = "inf";
    if (p.b2) q["b2"] = *p.b2;
    j["pieces"].push_back(std::move(q));
  }
  return j;
}

BernsteinMeasure measure_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::InvalidInput, "measure must be an object");
  std::vector<Atom> atoms;
  std::vector<DensityPiece> pieces;
  if (j.contains("atoms")) {
    if (!j.at("atoms").is_array()) fail(ErrorKind::InvalidInput, "\"atoms\" must be an array");
    for (const auto& a : j.at("atoms")) atoms.push_back({num(a, "z"), num(a, "w")});
  }
  if (j.contains("pieces")) {
    if (!j.at("pieces").is_array()) fail(ErrorKind::InvalidInput, "\"pieces\" must be an array");
    for (const auto& p : j.at("pieces")) {
      DensityPiece d;
      d.c = num(p, "c");
      d.a = num_or(p, "a", 0.0);
      d.b = num_or(p, "b", 0.0);
      d.lo = num_or(p, "lo", 0.0);
      if (p.contains("hi") && !(p.at("hi").is_string() && p.at("hi").get<std::string>() == "inf"))
        d.hi = num(p, "hi");
      if (p.contains("b2")) d.b2 = num(p, "b2");
      pieces.push_back(d);
    }
  }
  return BernsteinMeasure(std::move(atoms), std::move(pieces));
}

json to_json(const Distribution& d) {
  switch (d.kind()) {
    case Distribution::Kind::Discrete:
      return {{"kind", "discrete"}, {"x", d.support()}, {"p", d.probabilities()}};
    case Distribution::Kind::Lognormal:
      return {{"kind", "lognormal"}, {"m", d.log_mean()}, {"s2", d.log_variance()}};
    case Distribution::Kind::Empirical:
      return {{"kind", "empirical"}, {"sample", d.sample()}};
  }
  return {};
}

Distribution distribution_from_json(const json& j) {
  const std::string k = kind_of(j);
  if (k == "discrete") return Distribution::discrete(vec(j, "x"), vec(j, "p"));
  if (k == "lognormal") {
    if (j.contains("kappa")) return Distribution::lognormal_mean_one(num(j, "kappa"));
    return Distribution::lognormal(num(j, "m"), num(j, "s2"));
  }
  if (k == "empirical") return Distribution::empirical(vec(j, "sample"));
  fail(ErrorKind::InvalidInput, "unknown distribution kind \"" + k + "\"");
}

namespace {

UtilitySpec finite_order_from_json(const json& j) {
  const double nd = num(j, "n");
  const int n = int(nd);
  if (double(n) != nd || n < 2) fail(ErrorKind::InvalidInput, "finite_order needs an integer n >= 2");
  if (!j.contains("factors") || !j.at("factors").is_array() || j.at("factors").empty())
    fail(ErrorKind::InvalidInput, "finite_order needs a non-empty \"factors\" array");
  std::vector<CMFunction> factors;
  for (const auto& f : j.at("factors")) {
    const std::string k = kind_of(f);
    if (k == "power")
      factors.push_back(CMFunction::power(num(f, "a"), num_or(f, "coef", 1.0), num_or(f, "shift", 0.0)));
    else if (k == "exponential")
      factors.push_back(CMFunction::exponential(num(f, "b"), num_or(f, "coef", 1.0)));
    else
      fail(ErrorKind::InvalidInput, "unknown factor kind \"" + k + "\"");
  }
  const CMFunction g = CMFunction::product(factors);
  const double sign = n % 2 == 0 ? 1.0 : -1.0;
  auto wn = [g, sign](double y) { return sign * g(y); };
  auto spec = UtilitySpec::finite_order(DnFunction::from_nth_derivative(n, wn, anchor_from(j)));
  json canonical = j;
  spec.set_descriptor(canonical.dump());
  return spec;
}

}  // namespace

json to_json(const UtilitySpec& u) {
  switch (u.kind()) {
    case UtilitySpec::Kind::Log: return {{"kind", "log"}};
    case UtilitySpec::Kind::Power: return {{"kind", "power"}, {"p", u.p()}};
    case UtilitySpec::Kind::Measure: {
      const Anchor& a = u.conjugate().anchor();
      return {{"kind", "measure"}, {"measure", to_json(u.bernstein_measure())}, {"anchor", {{"y0", a.y0}, {"w0", a.w0}}}};
    }
    case UtilitySpec::Kind::FiniteOrder:
      if (u.descriptor().empty()) fail(ErrorKind::InvalidInput, "finite-order utility has no serial form");
      return json::parse(u.descriptor());
  }
  return {};
}

UtilitySpec utility_from_json(const json& j) {
  const std::string k = kind_of(j);
  if (k == "log") return UtilitySpec::log();
  if (k == "power") return UtilitySpec::power(num(j, "p"));
  if (k == "measure") {
    if (!j.contains("measure")) fail(ErrorKind::InvalidInput, "measure utility needs \"measure\"");
    return UtilitySpec::from_measure(measure_from_json(j.at("measure")), anchor_from(j));
  }
  if (k == "finite_order") return finite_order_from_json(j);
  fail(ErrorKind::InvalidInput, "unknown utility kind \"" + k + "\"");
}

json to_json(const FiniteMarket& m) { return {{"p", m.p}, {"S0", m.S0}, {"S1", m.S1}}; }

FiniteMarket market_from_json(const json& j) {
  FiniteMarket m;
  m.p = vec(j, "p");
  m.S0 = vec(j, "S0");
  if (!j.contains("S1") || !j.at("S1").is_array()) fail(ErrorKind::InvalidInput, "market needs \"S1\"");
  for (const auto& row : j.at("S1")) {
    if (!row.is_array()) fail(ErrorKind::InvalidInput, "\"S1\" rows must be arrays");
    std::vector<double> r;
    for (const auto& v : row) {
      if (!v.is_number()) fail(ErrorKind::InvalidInput, "non-numeric payoff");
      r.push_back(v.get<double>());
    }
    m.S1.push_back(std::move(r));
  }
  m.validate();
  return m;
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    fail(ErrorKind::InvalidInput, path + ": " + e.what());
  }
}

}  // namespace cmdual::json_io
