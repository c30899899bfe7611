#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "snml/interval.hpp"

namespace snml::quad {

using Integrand = std::function<double(double)>;

struct Options {
  double tol_abs = 1e-10;
  double tol_rel = 1e-8;
  int max_subdivisions = 4000;
  // Where the integrand concentrates. Unbounded domains are walked outward
  // from `center` in panels whose widths start at `scale` and double.
  std::optional<double> center;
  std::optional<double> scale;
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  int subdivisions = 0;
  Interval truncated_domain;  // the interval actually integrated
};

/// Adaptive Gauss-Kronrod (7/15) integration with global bisection.
///
/// Finite intervals: the interval with the largest error estimate is bisected
/// until the total estimate meets max(tol_abs, tol_rel*|value|). Endpoint
/// power singularities with exponent > -1 are handled by the repeated
/// bisection toward the endpoint (a geometric mesh).
///
/// Unbounded intervals are truncated: panels of doubling width are added
/// until a panel contributes less than 1% of the target error and the tail is
/// either monotonically decaying or below 1e-16 of the running peak.
///
/// Throws NonConvergence when the subdivision budget is exhausted,
/// DivergentIntegral when an unbounded tail does not decay and
/// NaNEncountered when the integrand returns NaN.
QuadratureResult integrate(const Integrand& f, Interval domain, const Options& opts = {});

struct Atom {
  double location = 0.0;
  double mass = 0.0;
};

/// Density part (w.r.t. Lebesgue) plus atoms.
struct MixedMeasure {
  Integrand density;  // may be empty
  std::vector<Atom> atoms;
};

/// sum_atoms mass * weight(location) + integral of density * weight.
QuadratureResult integrate_mixed(const MixedMeasure& measure, const Integrand& weight, Interval domain,
                                 const Options& opts = {});

/// sqrt(2 pi / n), halved for a one-sided (boundary) Laplace integral.
double laplace_reference(int n, bool boundary);

}  // namespace snml::quad
