#pragma once

#include <cstdint>
#include <utility>
#include <vector>

// Tweedie family of order 3/2 in the canonical scaling V(mu) = 2 mu^{3/2}.
//
// A member with mean mu is the law of Z = X_1 + ... + X_N with
// N ~ Poisson(sqrt(mu)) and X_i i.i.d. exponential with mean sqrt(mu). Z has
// an atom exp(-sqrt(mu)) at zero and a continuous density on (0, inf):
//
//   f(z) = exp(-sqrt(mu) - z/sqrt(mu)) * sum_{j>=1} z^{j-1} / (j! (j-1)!)
//
// The series does not depend on mu, which is what makes the family a natural
// exponential family with theta = -mu^{-1/2} and A(theta) = -1/theta.
namespace snml::tweedie {

struct TweedieDensityValue {
  double atom_mass_at_zero = 0.0;
  double continuous_log_density = 0.0;  // ln f(z); -inf at z == 0
  int series_terms_used = 0;
  double truncation_bound = 0.0;  // bound on the neglected series tail
};

TweedieDensityValue tweedie_log_density(double mu, double z);

/// ln sum_{j>=1} z^{j-1} / (j! (j-1)!), the mu-free part of the density.
/// Returns the log sum, the number of terms used and the tail bound
/// (relative to the sum).
struct SeriesValue {
  double log_sum = 0.0;
  int terms = 0;
  double relative_tail_bound = 0.0;
};
SeriesValue log_base_series(double z);

std::vector<double> tweedie_sample(double mu, std::size_t n, std::uint64_t seed);

/// (mean, variance) = (mu, 2 mu^{3/2}).
std::pair<double, double> tweedie_moments(double mu);

}  // namespace snml::tweedie
