#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "snml/interval.hpp"

namespace snml {

enum class FamilyKind { GaussianLocation, GammaShape, Tweedie32, Bernoulli, Poisson, Transformed };
enum class BaseMeasure { Lebesgue, Counting, LebesguePlusAtomAtZero };
enum class Chart { Natural, Mean, Geodesic };

std::string to_string(FamilyKind kind);
std::string to_string(Chart chart);

/// A smooth strictly monotone map y = f(x) together with what the change of
/// variables needs: the inverse and |d f^{-1}/dy|.
struct Transform {
  std::string name;  // "affine", "reciprocal" or a user label
  std::function<double(double)> forward;
  std::function<double(double)> inverse;
  std::function<double(double)> inverse_derivative_abs;
  // Parameters for serialization (affine: a, b).
  double a = 1.0;
  double b = 0.0;
};

Transform affine_transform(double a, double b);
/// y = 1/x on (0, inf).
Transform reciprocal_transform();

/// Which natural exponential family: the single source of truth for A, V, h.
struct FamilySpec {
  FamilyKind kind = FamilyKind::GaussianLocation;
  double variance = 1.0;  // GaussianLocation: sigma^2
  double shape = 1.0;     // GammaShape: k
  Interval mean_domain = Interval::real_line();
  BaseMeasure base_measure = BaseMeasure::Lebesgue;
  // Transformed only.
  std::shared_ptr<const FamilySpec> base;
  std::shared_ptr<const Transform> transform;

  /// Family whose parameter (mean chart) lives on; the base for Transformed.
  const FamilySpec& parameter_family() const;
  bool is_discrete() const;
};

FamilySpec gaussian_location(double variance);
FamilySpec gamma_shape(double shape);
FamilySpec tweedie32();
FamilySpec bernoulli();
FamilySpec poisson();
/// The law of f(X) for X from `base`; the mean parameter stays that of the base.
FamilySpec make_transformed(const FamilySpec& base, Transform transform);
/// Same family with a restricted (or otherwise replaced) mean domain.
FamilySpec with_mean_domain(FamilySpec family, Interval mean_domain);

/// The full (maximal) mean-value space of a built-in family.
Interval maximal_mean_domain(const FamilySpec& family);

struct ParamValue {
  double value = 0.0;
  Chart chart = Chart::Mean;
  double reference = 0.0;  // geodesic base point mu0

  static ParamValue mean(double mu) { return {mu, Chart::Mean, 0.0}; }
  static ParamValue natural(double theta) { return {theta, Chart::Natural, 0.0}; }
  static ParamValue geodesic(double beta, double mu0) { return {beta, Chart::Geodesic, mu0}; }
};

struct ObservationSequence {
  std::vector<double> values;
  std::size_t m = 0;

  ObservationSequence() = default;
  ObservationSequence(std::vector<double> v, std::size_t m_);

  std::size_t size() const { return values.size(); }
  std::span<const double> prefix() const { return std::span(values).first(m); }
  std::span<const double> continuation() const { return std::span(values).subspan(m); }
};

/// Half-open index range [begin, end) into an observation sequence.
struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct MleResult {
  double mean = 0.0;
  bool boundary = false;  // on the boundary of the mean domain: non-regular candidate
};

// ---- family operations -----------------------------------------------------

/// ln p(x) with respect to the family's base measure. -inf outside the
/// support; the log atom mass at atoms.
double log_density(const FamilySpec& family, const ParamValue& param, double x);
double log_density_mean(const FamilySpec& family, double mu, double x);

ParamValue convert(const FamilySpec& family, const ParamValue& param, Chart target, double reference = 0.0);
double to_mean(const FamilySpec& family, const ParamValue& param);

/// Cumulant function A(theta) and its derivative mu(theta).
double cumulant(const FamilySpec& family, double theta);
double natural_from_mean(const FamilySpec& family, double mu);
double mean_from_natural(const FamilySpec& family, double theta);

/// Antiderivative of 1/sigma: the geodesic coordinate of mu relative to mu0.
double geodesic_from_mean(const FamilySpec& family, double mu, double mu0);
double mean_from_geodesic(const FamilySpec& family, double beta, double mu0);

/// D(p_mu0 || p_mu1) in nats; +inf where absolute continuity fails.
double kl_divergence(const FamilySpec& family, double mu0, double mu1);

double variance_function(const FamilySpec& family, double mu);
double fisher_information(const FamilySpec& family, const ParamValue& param);

MleResult mle_mean(const FamilySpec& family, const ObservationSequence& seq, Window window);
MleResult mle_mean(const FamilySpec& family, std::span<const double> values);

ConvexCore convex_core(const FamilySpec& family);

/// ln sup_theta p_theta(x^t) over the family's (closed) mean domain.
double log_sup_likelihood(const FamilySpec& family, std::span<const double> values);
/// Sum of log densities at a fixed mean.
double log_likelihood(const FamilySpec& family, double mu, std::span<const double> values);

/// Throws UnsupportedPoint if x lies outside the closure of the convex core.
void require_supported(const FamilySpec& family, double x);

/// Natural scale of the family near mu (standard deviation, floored).
double natural_scale(const FamilySpec& family, double mu);

/// i.i.d. draws from p_mu (the transformed draws for Transformed families).
std::vector<double> sample(const FamilySpec& family, double mu, std::size_t n, std::uint64_t seed);

}  // namespace snml
