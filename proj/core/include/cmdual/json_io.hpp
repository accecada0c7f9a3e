#pragma once

#include <nlohmann/json.hpp>

#include "cmdual/dominance.hpp"
#include "cmdual/duality.hpp"
#include "cmdual/measures.hpp"
#include "cmdual/solver.hpp"

// JSON schemas (all numbers are plain JSON numbers; "inf" marks an unbounded end):
//   measure:      {"atoms": [{"z", "w"}], "pieces": [{"c", "a", "b", "lo", "hi" | "inf", "b2"?}]}
//   distribution: {"kind": "discrete", "x": [...], "p": [...]}
//                 {"kind": "lognormal", "m", "s2"} or {"kind": "lognormal", "kappa"}
//                 {"kind": "empirical", "sample": [...]}
//   utility:      {"kind": "log"} | {"kind": "power", "p"}
//                 {"kind": "measure", "measure": {...}, "anchor"?: {"y0", "w0"}}
//                 {"kind": "finite_order", "n", "factors": [{"kind": "power", "a", "coef", "shift"}
//                  | {"kind": "exponential", "b", "coef"}], "anchor"?: {"y0", "w0"}}
//                 where (-1)^n V^(n) is the product of the factors.
//   market:       {"p": [...], "S0": [...], "S1": [[...], ...]}
namespace cmdual::json_io {

using nlohmann::json;

json to_json(const BernsteinMeasure& mu);
BernsteinMeasure measure_from_json(const json& j);

json to_json(const Distribution& d);
Distribution distribution_from_json(const json& j);

json to_json(const UtilitySpec& u);
UtilitySpec utility_from_json(const json& j);

json to_json(const FiniteMarket& m);
FiniteMarket market_from_json(const json& j);

/// Reads and parses a file. Throws InvalidInput.
json read_file(const std::string& path);

}  // namespace cmdual::json_io
