#pragma once

#include <json.hpp>

#include "snml/family.hpp"

// JSON form of a FamilySpec:
//
//   {"kind": "gaussian_location", "variance": 1.0}
//   {"kind": "gamma_shape", "shape": 2.0, "mean_domain": [0, "inf"]}
//   {"kind": "tweedie32"}
//   {"kind": "bernoulli"}
//   {"kind": "poisson"}
//   {"kind": "transformed", "base": {...},
//    "transform": {"type": "affine", "a": 2.0, "b": 3.0}}   // or {"type": "reciprocal"}
//
// "mean_domain" is optional and defaults to the maximal mean-value space.
// Its endpoints are numbers or the strings "inf" / "-inf". A finite endpoint
// is included unless it is an excluded endpoint of the maximal space (the 0
// of gamma_shape, say); "mean_domain_included": [bool, bool] overrides that.
namespace snml {

nlohmann::json family_to_json(const FamilySpec& family);
FamilySpec family_from_json(const nlohmann::json& j);

nlohmann::json interval_to_json(const Interval& interval);

}  // namespace snml
