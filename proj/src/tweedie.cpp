#include "snml/tweedie.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "snml/errors.hpp"

namespace snml::tweedie {
namespace {

constexpr double kRelativeCutoff = 1e-16;
// Above this z the Bessel asymptotic expansion is exact to rounding and
// avoids summing ~sqrt(z) terms.
constexpr double kAsymptoticThreshold = 1e6;

double log_term(int j, double log_z) {
  return (j - 1) * log_z - std::lgamma(j + 1.0) - std::lgamma(static_cast<double>(j));
}

}  // namespace

SeriesValue log_base_series(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("tweedie series needs z > 0");
  const double log_z = std::log(z);
  if (z >= kAsymptoticThreshold) {
    // The sum is I_1(x) / sqrt(z) with x = 2 sqrt(z); use the Hankel expansion
    // I_1(x) ~ e^x / sqrt(2 pi x) * sum_k (-1)^k prod_{i<=k} (4 - (2i-1)^2) / (k! (8x)^k).
    const double x = 2.0 * std::sqrt(z);
    double term = 1.0;
    double sum = 1.0;
    int k = 1;
    for (; k <= 12; ++k) {
      const double odd = 2.0 * k - 1.0;
      term *= -(4.0 - odd * odd) / (k * 8.0 * x);
      if (std::abs(term) < kRelativeCutoff * std::abs(sum)) break;
      sum += term;
    }
    const double log_i1 = x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
    return {log_i1 - 0.5 * log_z, k, std::abs(term)};
  }
  // Term ratio t_{j+1}/t_j = z / (j (j+1)); the largest term sits where it
  // crosses one. Summing outward from there keeps every scaled term <= 1.
  int mode = static_cast<int>(std::floor(0.5 * (1.0 + std::sqrt(1.0 + 4.0 * z))));
  if (mode < 1) mode = 1;
  const double log_peak = log_term(mode, log_z);

  double sum = 1.0;
  int terms = 1;
  double tail_bound = 0.0;

  // Upward.
  double term = 1.0;
  for (int j = mode;; ++j) {
    const double ratio = z / (static_cast<double>(j) * (j + 1));
    term *= ratio;
    sum += term;
    ++terms;
    const double next_ratio = z / (static_cast<double>(j + 1) * (j + 2));
    if (next_ratio < 1.0) {
      const double bound = term * next_ratio / (1.0 - next_ratio);
      if (bound < kRelativeCutoff * sum) {
        tail_bound += bound;
        break;
      }
    }
  }
  // Downward to j = 1; below the mode the ratios t_{j-1}/t_j = j (j-1) / z
  // shrink monotonically.
  term = 1.0;
  for (int j = mode; j > 1; --j) {
    const double ratio = static_cast<double>(j) * (j - 1) / z;
    term *= ratio;
    sum += term;
    ++terms;
    const double next_ratio = static_cast<double>(j - 1) * (j - 2) / z;
    if (j - 1 > 1 && next_ratio < 1.0) {
      const double bound = term * next_ratio / (1.0 - next_ratio);
      if (bound < kRelativeCutoff * sum) {
        tail_bound += bound;
        break;
      }
    }
  }
  return {log_peak + std::log(sum), terms, tail_bound / sum};
}

TweedieDensityValue tweedie_log_density(double mu, double z) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("tweedie: mean must be positive and finite");
  if (!(z >= 0.0) || !std::isfinite(z)) throw DomainError("tweedie: observation must be finite and >= 0");
  const double root = std::sqrt(mu);
  TweedieDensityValue out;
  out.atom_mass_at_zero = std::exp(-root);
  if (z == 0.0) {
    out.continuous_log_density = -std::numeric_limits<double>::infinity();
    return out;
  }
  SeriesValue s = log_base_series(z);
  out.continuous_log_density = -root - z / root + s.log_sum;
  out.series_terms_used = s.terms;
  out.truncation_bound = s.relative_tail_bound * std::exp(out.continuous_log_density);
  return out;
}

std::vector<double> tweedie_sample(double mu, std::size_t n, std::uint64_t seed) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("tweedie_sample: mean must be positive and finite");
  if (n < 1) throw DomainError("tweedie_sample: n must be >= 1");
  const double root = std::sqrt(mu);
  std::mt19937_64 rng(seed);
  std::poisson_distribution<long> count(root);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    long k = count(rng);
    if (k == 0) {
      out.push_back(0.0);
      continue;
    }
    // Sum of k exponentials with mean sqrt(mu).
    std::gamma_distribution<double> total(static_cast<double>(k), root);
    out.push_back(total(rng));
  }
  return out;
}

std::pair<double, double> tweedie_moments(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("tweedie_moments: mean must be positive and finite");
  return {mu, 2.0 * std::pow(mu, 1.5)};
}

}  // namespace snml::tweedie
