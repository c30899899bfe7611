#pragma once

#include <cmath>
#include <limits>
#include <string>

namespace snml {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Interval on the extended real line. Endpoints may be +-infinity; an
/// infinite endpoint is never included.
struct Interval {
  double lower = -kInf;
  double upper = kInf;
  bool lower_included = false;
  bool upper_included = false;

  static Interval open(double lo, double hi) { return {lo, hi, false, false}; }
  static Interval closed(double lo, double hi) {
    return {lo, hi, std::isfinite(lo), std::isfinite(hi)};
  }
  static Interval real_line() { return {}; }

  bool contains(double x) const {
    if (std::isnan(x)) return false;
    bool lo_ok = lower_included ? x >= lower : x > lower;
    bool hi_ok = upper_included ? x <= upper : x < upper;
    return lo_ok && hi_ok;
  }
  bool closure_contains(double x) const { return !std::isnan(x) && x >= lower && x <= upper; }
  bool interior_contains(double x) const { return x > lower && x < upper; }
  bool is_finite() const { return std::isfinite(lower) && std::isfinite(upper); }
  bool has_nonempty_interior() const { return lower < upper; }

  double clamp(double x) const {
    if (x < lower) return lower;
    if (x > upper) return upper;
    return x;
  }

  bool operator==(const Interval&) const = default;

  std::string to_string() const;
};

/// Support interval of a family's base measure; an endpoint is included iff
/// the base measure has an atom there.
using ConvexCore = Interval;

}  // namespace snml
