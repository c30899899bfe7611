#include "snml/family_json.hpp"

#include <cmath>

#include "snml/errors.hpp"

namespace snml {
namespace {

nlohmann::json endpoint_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

double endpoint_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw ConfigError("mean_domain endpoint must be a number, \"inf\" or \"-inf\"");
}

double positive_number(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("family key '") + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

nlohmann::json interval_to_json(const Interval& interval) {
  return nlohmann::json::array({endpoint_to_json(interval.lower), endpoint_to_json(interval.upper)});
}

nlohmann::json family_to_json(const FamilySpec& family) {
  nlohmann::json j;
  j["kind"] = to_string(family.kind);
  switch (family.kind) {
    case FamilyKind::GaussianLocation: j["variance"] = family.variance; break;
    case FamilyKind::GammaShape: j["shape"] = family.shape; break;
    case FamilyKind::Transformed: {
      j["base"] = family_to_json(*family.base);
      nlohmann::json t;
      t["type"] = family.transform->name;
      if (family.transform->name == "affine") {
        t["a"] = family.transform->a;
        t["b"] = family.transform->b;
      }
      j["transform"] = t;
      return j;  // the mean domain lives on the base
    }
    default: break;
  }
  j["mean_domain"] = interval_to_json(family.mean_domain);
  j["mean_domain_included"] = {family.mean_domain.lower_included, family.mean_domain.upper_included};
  return j;
}

FamilySpec family_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError("family JSON must be an object with a string 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  FamilySpec family;
  try {
    if (kind == "gaussian_location" || kind == "gaussian") {
      family = gaussian_location(positive_number(j, "variance", 1.0));
    } else if (kind == "gamma_shape" || kind == "gamma") {
      family = gamma_shape(positive_number(j, "shape", 1.0));
    } else if (kind == "tweedie32") {
      family = tweedie32();
    } else if (kind == "bernoulli") {
      family = bernoulli();
    } else if (kind == "poisson") {
      family = poisson();
    } else if (kind == "transformed") {
      if (!j.contains("base") || !j.contains("transform")) throw ConfigError("transformed family needs 'base' and 'transform'");
      const FamilySpec base = family_from_json(j.at("base"));
      const auto& t = j.at("transform");
      if (!t.is_object() || !t.contains("type")) throw ConfigError("transform must be an object with a 'type'");
      const auto type = t.at("type").get<std::string>();
      Transform transform;
      if (type == "affine") {
        transform = affine_transform(t.value("a", 1.0), t.value("b", 0.0));
      } else if (type == "reciprocal") {
        transform = reciprocal_transform();
      } else {
        throw ConfigError("unknown transform type '" + type + "'");
      }
      return make_transformed(base, std::move(transform));
    } else {
      throw ConfigError("unknown family kind '" + kind + "'");
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("mean_domain")) {
    const auto& d = j.at("mean_domain");
    if (!d.is_array() || d.size() != 2) throw ConfigError("mean_domain must be a two-element array");
    Interval dom;
    dom.lower = endpoint_from_json(d[0]);
    dom.upper = endpoint_from_json(d[1]);
    dom.lower_included = std::isfinite(dom.lower);
    dom.upper_included = std::isfinite(dom.upper);
    if (j.contains("mean_domain_included")) {
      const auto& inc = j.at("mean_domain_included");
      if (!inc.is_array() || inc.size() != 2 || !inc[0].is_boolean() || !inc[1].is_boolean())
        throw ConfigError("mean_domain_included must be two booleans");
      dom.lower_included = inc[0].get<bool>() && std::isfinite(dom.lower);
      dom.upper_included = inc[1].get<bool>() && std::isfinite(dom.upper);
    }
    try {
      family = with_mean_domain(family, dom);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
  return family;
}

}  // namespace snml
