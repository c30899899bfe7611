#include "snml/family.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "snml/errors.hpp"
#include "snml/tweedie.hpp"

namespace snml {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kSqrt2 = std::numbers::sqrt2;

// x * ln(y) with the 0 * ln(0) = 0 convention.
double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

bool is_nonnegative_integer(double x) { return x >= 0.0 && std::floor(x) == x && std::isfinite(x); }

std::string describe(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

void require_mean_in_closure(const FamilySpec& family, double mu) {
  const Interval& dom = family.parameter_family().mean_domain;
  if (!dom.closure_contains(mu))
    throw DomainError("mean " + describe(mu) + " outside the mean domain " + dom.to_string() + " of " +
                      to_string(family.kind));
}

void require_interior(const FamilySpec& family, double mu) {
  const Interval dom = maximal_mean_domain(family.parameter_family());
  if (!dom.interior_contains(mu))
    throw DomainError("mean " + describe(mu) + " not in the interior of the mean-value space of " +
                      to_string(family.kind));
}

double log_density_builtin(const FamilySpec& f, double mu, double x) {
  switch (f.kind) {
    case FamilyKind::GaussianLocation: {
      const double d = x - mu;
      return -0.5 * std::log(2.0 * std::numbers::pi * f.variance) - d * d / (2.0 * f.variance);
    }
    case FamilyKind::GammaShape: {
      if (!(mu > 0.0)) throw DomainError("gamma_shape: mean must be > 0");
      const double k = f.shape;
      if (x == 0.0) {
        if (k < 1.0) return std::numeric_limits<double>::infinity();
        if (k > 1.0) return kNegInf;
        return -std::log(mu);
      }
      return (k - 1.0) * std::log(x) + k * std::log(k / mu) - k * x / mu - std::lgamma(k);
    }
    case FamilyKind::Tweedie32: {
      if (mu == 0.0) return x == 0.0 ? 0.0 : kNegInf;  // degenerate point mass at 0
      const auto v = tweedie::tweedie_log_density(mu, x);
      return x == 0.0 ? -std::sqrt(mu) : v.continuous_log_density;
    }
    case FamilyKind::Bernoulli: {
      if (x != 0.0 && x != 1.0) return kNegInf;
      if (mu == 0.0) return x == 0.0 ? 0.0 : kNegInf;
      if (mu == 1.0) return x == 1.0 ? 0.0 : kNegInf;
      return x == 1.0 ? std::log(mu) : std::log1p(-mu);
    }
    case FamilyKind::Poisson: {
      if (!is_nonnegative_integer(x)) return kNegInf;
      if (mu == 0.0) return x == 0.0 ? 0.0 : kNegInf;
      return x * std::log(mu) - mu - std::lgamma(x + 1.0);
    }
    case FamilyKind::Transformed:
      break;
  }
  throw DomainError("log_density_builtin: transformed family");
}

}  // namespace

std::string Interval::to_string() const {
  std::ostringstream out;
  out.precision(17);
  out << (lower_included ? '[' : '(') << lower << ", " << upper << (upper_included ? ']' : ')');
  return out.str();
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::GaussianLocation: return "gaussian_location";
    case FamilyKind::GammaShape: return "gamma_shape";
    case FamilyKind::Tweedie32: return "tweedie32";
    case FamilyKind::Bernoulli: return "bernoulli";
    case FamilyKind::Poisson: return "poisson";
    case FamilyKind::Transformed: return "transformed";
  }
  return "unknown";
}

std::string to_string(Chart chart) {
  switch (chart) {
    case Chart::Natural: return "natural";
    case Chart::Mean: return "mean";
    case Chart::Geodesic: return "geodesic";
  }
  return "unknown";
}

Transform affine_transform(double a, double b) {
  if (a == 0.0 || !std::isfinite(a) || !std::isfinite(b))
    throw NonMonotone("affine transform needs a finite non-zero slope");
  Transform t;
  t.name = "affine";
  t.a = a;
  t.b = b;
  t.forward = [a, b](double x) { return a * x + b; };
  t.inverse = [a, b](double y) { return (y - b) / a; };
  t.inverse_derivative_abs = [a](double) { return 1.0 / std::abs(a); };
  return t;
}

Transform reciprocal_transform() {
  Transform t;
  t.name = "reciprocal";
  t.forward = [](double x) { return 1.0 / x; };
  t.inverse = [](double y) { return 1.0 / y; };
  t.inverse_derivative_abs = [](double y) { return 1.0 / (y * y); };
  return t;
}

const FamilySpec& FamilySpec::parameter_family() const {
  const FamilySpec* f = this;
  while (f->kind == FamilyKind::Transformed) f = f->base.get();
  return *f;
}

bool FamilySpec::is_discrete() const { return parameter_family().base_measure == BaseMeasure::Counting; }

FamilySpec gaussian_location(double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance)) throw DomainError("gaussian_location: variance must be > 0");
  FamilySpec f;
  f.kind = FamilyKind::GaussianLocation;
  f.variance = variance;
  f.mean_domain = Interval::real_line();
  f.base_measure = BaseMeasure::Lebesgue;
  return f;
}

FamilySpec gamma_shape(double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw DomainError("gamma_shape: shape must be > 0");
  FamilySpec f;
  f.kind = FamilyKind::GammaShape;
  f.shape = shape;
  f.mean_domain = Interval::open(0.0, kInf);
  f.base_measure = BaseMeasure::Lebesgue;
  return f;
}

FamilySpec tweedie32() {
  FamilySpec f;
  f.kind = FamilyKind::Tweedie32;
  f.mean_domain = Interval::open(0.0, kInf);
  f.base_measure = BaseMeasure::LebesguePlusAtomAtZero;
  return f;
}

FamilySpec bernoulli() {
  FamilySpec f;
  f.kind = FamilyKind::Bernoulli;
  f.mean_domain = Interval::closed(0.0, 1.0);
  f.base_measure = BaseMeasure::Counting;
  return f;
}

FamilySpec poisson() {
  FamilySpec f;
  f.kind = FamilyKind::Poisson;
  f.mean_domain = Interval{0.0, kInf, true, false};
  f.base_measure = BaseMeasure::Counting;
  return f;
}

FamilySpec make_transformed(const FamilySpec& base, Transform transform) {
  if (!transform.forward || !transform.inverse || !transform.inverse_derivative_abs)
    throw DomainError("make_transformed: transform is missing a function");
  FamilySpec out;
  out.kind = FamilyKind::Transformed;
  out.base = std::make_shared<FamilySpec>(base);
  out.transform = std::make_shared<Transform>(std::move(transform));
  out.mean_domain = base.mean_domain;
  out.base_measure = base.base_measure;
  return out;
}

Interval maximal_mean_domain(const FamilySpec& family) {
  switch (family.kind) {
    case FamilyKind::GaussianLocation: return Interval::real_line();
    case FamilyKind::GammaShape:
    case FamilyKind::Tweedie32: return Interval::open(0.0, kInf);
    case FamilyKind::Bernoulli: return Interval::closed(0.0, 1.0);
    case FamilyKind::Poisson: return Interval{0.0, kInf, true, false};
    case FamilyKind::Transformed: return maximal_mean_domain(*family.base);
  }
  return Interval::real_line();
}

FamilySpec with_mean_domain(FamilySpec family, Interval mean_domain) {
  if (!mean_domain.has_nonempty_interior()) throw DomainError("mean domain must have non-empty interior");
  const Interval maximal = maximal_mean_domain(family);
  if (mean_domain.lower < maximal.lower || mean_domain.upper > maximal.upper)
    throw DomainError("mean domain " + mean_domain.to_string() + " exceeds the mean-value space " +
                      maximal.to_string());
  if (!std::isfinite(mean_domain.lower)) mean_domain.lower_included = false;
  if (!std::isfinite(mean_domain.upper)) mean_domain.upper_included = false;
  // Endpoints the family cannot represent stay excluded.
  if (mean_domain.lower == maximal.lower && !maximal.lower_included) mean_domain.lower_included = false;
  if (mean_domain.upper == maximal.upper && !maximal.upper_included) mean_domain.upper_included = false;
  if (family.kind == FamilyKind::Transformed) {
    auto base = std::make_shared<FamilySpec>(with_mean_domain(*family.base, mean_domain));
    family.base = base;
  }
  family.mean_domain = mean_domain;
  return family;
}

ObservationSequence::ObservationSequence(std::vector<double> v, std::size_t m_) : values(std::move(v)), m(m_) {
  if (m > values.size()) throw DomainError("conditioning length m exceeds the sequence length");
}

ConvexCore convex_core(const FamilySpec& family) {
  switch (family.kind) {
    case FamilyKind::GaussianLocation: return Interval::real_line();
    case FamilyKind::GammaShape: return Interval::open(0.0, kInf);
    case FamilyKind::Tweedie32: return Interval{0.0, kInf, true, false};
    case FamilyKind::Bernoulli: return Interval::closed(0.0, 1.0);
    case FamilyKind::Poisson: return Interval{0.0, kInf, true, false};
    case FamilyKind::Transformed: {
      const ConvexCore base = convex_core(*family.base);
      const Transform& t = *family.transform;
      double lo = t.forward(base.lower);
      double hi = t.forward(base.upper);
      bool lo_in = base.lower_included;
      bool hi_in = base.upper_included;
      if (lo > hi) {
        std::swap(lo, hi);
        std::swap(lo_in, hi_in);
      }
      return Interval{lo, hi, lo_in && std::isfinite(lo), hi_in && std::isfinite(hi)};
    }
  }
  return Interval::real_line();
}

void require_supported(const FamilySpec& family, double x) {
  const ConvexCore cc = convex_core(family);
  if (!cc.closure_contains(x))
    throw UnsupportedPoint("observation " + describe(x) + " outside the convex core " + cc.to_string() + " of " +
                           to_string(family.kind));
}

double log_density_mean(const FamilySpec& family, double mu, double x) {
  require_supported(family, x);
  require_mean_in_closure(family, mu);
  if (family.kind != FamilyKind::Transformed) return log_density_builtin(family, mu, x);

  const FamilySpec& base = *family.base;
  const Transform& t = *family.transform;
  const double source = t.inverse(x);
  // Atoms carry no Jacobian.
  if (base.base_measure == BaseMeasure::Counting ||
      (base.parameter_family().base_measure == BaseMeasure::LebesguePlusAtomAtZero && x == t.forward(0.0)))
    return log_density_mean(base, mu, base.base_measure == BaseMeasure::Counting ? source : 0.0);
  return log_density_mean(base, mu, source) + std::log(t.inverse_derivative_abs(x));
}

double log_density(const FamilySpec& family, const ParamValue& param, double x) {
  return log_density_mean(family, to_mean(family, param), x);
}

double cumulant(const FamilySpec& family, double theta) {
  const FamilySpec& f = family.parameter_family();
  switch (f.kind) {
    case FamilyKind::GaussianLocation: return 0.5 * f.variance * theta * theta;
    case FamilyKind::GammaShape:
      if (!(theta < 0.0)) throw DomainError("gamma_shape: natural parameter must be < 0");
      return -f.shape * std::log(-theta);
    case FamilyKind::Tweedie32:
      if (!(theta < 0.0)) throw DomainError("tweedie32: natural parameter must be < 0");
      return -1.0 / theta;
    case FamilyKind::Bernoulli:
      return theta > 0.0 ? theta + std::log1p(std::exp(-theta)) : std::log1p(std::exp(theta));
    case FamilyKind::Poisson: return std::exp(theta);
    case FamilyKind::Transformed: break;
  }
  throw DomainError("cumulant: unreachable");
}

double natural_from_mean(const FamilySpec& family, double mu) {
  require_mean_in_closure(family, mu);
  const FamilySpec& f = family.parameter_family();
  switch (f.kind) {
    case FamilyKind::GaussianLocation: return mu / f.variance;
    case FamilyKind::GammaShape:
      if (!(mu > 0.0)) throw DomainError("gamma_shape: mean must be > 0");
      return -f.shape / mu;
    case FamilyKind::Tweedie32: return mu == 0.0 ? -kInf : -1.0 / std::sqrt(mu);
    case FamilyKind::Bernoulli: return std::log(mu) - std::log1p(-mu);
    case FamilyKind::Poisson: return std::log(mu);
    case FamilyKind::Transformed: break;
  }
  throw DomainError("natural_from_mean: unreachable");
}

double mean_from_natural(const FamilySpec& family, double theta) {
  const FamilySpec& f = family.parameter_family();
  double mu = 0.0;
  switch (f.kind) {
    case FamilyKind::GaussianLocation: mu = f.variance * theta; break;
    case FamilyKind::GammaShape:
      if (!(theta < 0.0)) throw DomainError("gamma_shape: natural parameter must be < 0");
      mu = -f.shape / theta;
      break;
    case FamilyKind::Tweedie32:
      if (!(theta < 0.0)) throw DomainError("tweedie32: natural parameter must be < 0");
      mu = 1.0 / (theta * theta);
      break;
    case FamilyKind::Bernoulli: mu = 1.0 / (1.0 + std::exp(-theta)); break;
    case FamilyKind::Poisson: mu = std::exp(theta); break;
    case FamilyKind::Transformed: break;
  }
  require_mean_in_closure(family, mu);
  return mu;
}

double geodesic_from_mean(const FamilySpec& family, double mu, double mu0) {
  require_mean_in_closure(family, mu);
  const FamilySpec& f = family.parameter_family();
  switch (f.kind) {
    case FamilyKind::GaussianLocation: return (mu - mu0) / std::sqrt(f.variance);
    case FamilyKind::GammaShape:
      if (!(mu > 0.0) || !(mu0 > 0.0)) throw DomainError("gamma_shape: geodesic chart needs positive means");
      return std::sqrt(f.shape) * std::log(mu / mu0);
    case FamilyKind::Tweedie32:
      if (!(mu0 >= 0.0)) throw DomainError("tweedie32: reference mean must be >= 0");
      return 2.0 * kSqrt2 * (std::pow(mu, 0.25) - std::pow(mu0, 0.25));
    case FamilyKind::Bernoulli:
      if (!(mu0 >= 0.0 && mu0 <= 1.0)) throw DomainError("bernoulli: reference mean must lie in [0, 1]");
      return 2.0 * (std::asin(std::sqrt(mu)) - std::asin(std::sqrt(mu0)));
    case FamilyKind::Poisson:
      if (!(mu0 >= 0.0)) throw DomainError("poisson: reference mean must be >= 0");
      return 2.0 * (std::sqrt(mu) - std::sqrt(mu0));
    case FamilyKind::Transformed: break;
  }
  throw DomainError("geodesic_from_mean: unreachable");
}

double mean_from_geodesic(const FamilySpec& family, double beta, double mu0) {
  const FamilySpec& f = family.parameter_family();
  double mu = 0.0;
  switch (f.kind) {
    case FamilyKind::GaussianLocation: mu = mu0 + std::sqrt(f.variance) * beta; break;
    case FamilyKind::GammaShape:
      if (!(mu0 > 0.0)) throw DomainError("gamma_shape: reference mean must be > 0");
      mu = mu0 * std::exp(beta / std::sqrt(f.shape));
      break;
    case FamilyKind::Tweedie32: {
      const double r = std::pow(mu0, 0.25) + beta / (2.0 * kSqrt2);
      if (!(r >= 0.0)) throw DomainError("tweedie32: geodesic coordinate below the mean-value space");
      mu = r * r * r * r;
      break;
    }
    case FamilyKind::Bernoulli: {
      const double angle = std::asin(std::sqrt(mu0)) + 0.5 * beta;
      if (!(angle >= 0.0 && angle <= std::numbers::pi / 2))
        throw DomainError("bernoulli: geodesic coordinate outside the mean-value space");
      const double s = std::sin(angle);
      mu = s * s;
      break;
    }
    case FamilyKind::Poisson: {
      const double r = std::sqrt(mu0) + 0.5 * beta;
      if (!(r >= 0.0)) throw DomainError("poisson: geodesic coordinate below the mean-value space");
      mu = r * r;
      break;
    }
    case FamilyKind::Transformed: break;
  }
  require_mean_in_closure(family, mu);
  return mu;
}

double to_mean(const FamilySpec& family, const ParamValue& param) {
  switch (param.chart) {
    case Chart::Mean: require_mean_in_closure(family, param.value); return param.value;
    case Chart::Natural: return mean_from_natural(family, param.value);
    case Chart::Geodesic: return mean_from_geodesic(family, param.value, param.reference);
  }
  throw DomainError("to_mean: unknown chart");
}

ParamValue convert(const FamilySpec& family, const ParamValue& param, Chart target, double reference) {
  const double mu = to_mean(family, param);
  switch (target) {
    case Chart::Mean: return ParamValue::mean(mu);
    case Chart::Natural: return ParamValue::natural(natural_from_mean(family, mu));
    case Chart::Geodesic: return ParamValue::geodesic(geodesic_from_mean(family, mu, reference), reference);
  }
  throw DomainError("convert: unknown chart");
}

double kl_divergence(const FamilySpec& family, double mu0, double mu1) {
  require_mean_in_closure(family, mu0);
  require_mean_in_closure(family, mu1);
  const FamilySpec& f = family.parameter_family();
  switch (f.kind) {
    case FamilyKind::GaussianLocation: {
      const double d = mu0 - mu1;
      return d * d / (2.0 * f.variance);
    }
    case FamilyKind::GammaShape: {
      if (mu0 == 0.0 || mu1 == 0.0) return mu0 == mu1 ? 0.0 : kInf;
      const double r = mu0 / mu1;
      return f.shape * (r - 1.0 - std::log(r));
    }
    case FamilyKind::Tweedie32: {
      if (mu1 == 0.0) return mu0 == 0.0 ? 0.0 : kInf;
      const double s1 = std::sqrt(mu1);
      const double d = s1 - std::sqrt(mu0);
      return d * d / s1;
    }
    case FamilyKind::Bernoulli: {
      double d = 0.0;
      if (mu0 > 0.0) d += mu1 == 0.0 ? kInf : mu0 * std::log(mu0 / mu1);
      if (mu0 < 1.0) d += mu1 == 1.0 ? kInf : (1.0 - mu0) * std::log((1.0 - mu0) / (1.0 - mu1));
      return std::max(d, 0.0);
    }
    case FamilyKind::Poisson: {
      if (mu1 == 0.0) return mu0 == 0.0 ? 0.0 : kInf;
      return std::max(xlogy(mu0, mu0 / mu1) - mu0 + mu1, 0.0);
    }
    case FamilyKind::Transformed: break;
  }
  throw DomainError("kl_divergence: unreachable");
}

double variance_function(const FamilySpec& family, double mu) {
  require_interior(family, mu);
  const FamilySpec& f = family.parameter_family();
  switch (f.kind) {
    case FamilyKind::GaussianLocation: return f.variance;
    case FamilyKind::GammaShape: return mu * mu / f.shape;
    case FamilyKind::Tweedie32: return 2.0 * std::pow(mu, 1.5);
    case FamilyKind::Bernoulli: return mu * (1.0 - mu);
    case FamilyKind::Poisson: return mu;
    case FamilyKind::Transformed: break;
  }
  throw DomainError("variance_function: unreachable");
}

double fisher_information(const FamilySpec& family, const ParamValue& param) {
  const double mu = to_mean(family, param);
  switch (param.chart) {
    case Chart::Mean: return 1.0 / variance_function(family, mu);
    case Chart::Natural: return variance_function(family, mu);
    case Chart::Geodesic: require_interior(family, mu); return 1.0;
  }
  throw DomainError("fisher_information: unknown chart");
}

MleResult mle_mean(const FamilySpec& family, std::span<const double> values) {
  if (values.empty()) throw EmptyWindow("maximum likelihood needs at least one observation");
  double sum = 0.0;
  if (family.kind == FamilyKind::Transformed) {
    // Mean of the sufficient statistic in the base family.
    const FamilySpec* f = &family;
    std::vector<double> source(values.begin(), values.end());
    while (f->kind == FamilyKind::Transformed) {
      for (double& v : source) v = f->transform->inverse(v);
      f = f->base.get();
    }
    for (double v : source) sum += v;
  } else {
    for (double v : values) sum += v;
  }
  const Interval& dom = family.parameter_family().mean_domain;
  const double mean = dom.clamp(sum / static_cast<double>(values.size()));
  return {mean, !dom.interior_contains(mean)};
}

MleResult mle_mean(const FamilySpec& family, const ObservationSequence& seq, Window window) {
  if (window.begin >= window.end) throw EmptyWindow("empty observation window");
  if (window.end > seq.size()) throw DomainError("observation window exceeds the sequence");
  return mle_mean(family, std::span(seq.values).subspan(window.begin, window.end - window.begin));
}

double log_likelihood(const FamilySpec& family, double mu, std::span<const double> values) {
  double total = 0.0;
  for (double x : values) {
    total += log_density_mean(family, mu, x);
    if (total == kNegInf) return total;
  }
  return total;
}

double log_sup_likelihood(const FamilySpec& family, std::span<const double> values) {
  if (values.empty()) return 0.0;
  const MleResult mle = mle_mean(family, values);
  const FamilySpec& f = family.parameter_family();
  // Positive data cannot average to 0 in the Gamma family: the supremum is
  // only approached as the mean shrinks, and it is unbounded.
  if (f.kind == FamilyKind::GammaShape && mle.mean == 0.0) return kInf;
  return log_likelihood(family, mle.mean, values);
}

double natural_scale(const FamilySpec& family, double mu) {
  const FamilySpec& f = family.parameter_family();
  const Interval dom = maximal_mean_domain(f);
  double at = mu;
  if (!dom.interior_contains(at)) {
    // Nudge boundary means inside so the scale stays positive.
    if (std::isfinite(dom.lower) && at <= dom.lower) at = dom.lower + (std::isfinite(dom.upper) ? 1e-3 : 1e-2);
    if (std::isfinite(dom.upper) && at >= dom.upper) at = dom.upper - 1e-3;
  }
  double sigma = std::sqrt(variance_function(f, at));
  sigma = std::max(sigma, 1e-6 * std::max(1.0, std::abs(at)));
  if (family.kind != FamilyKind::Transformed) return sigma;

  // Push the scale through the transform: |dy/dx| * sigma.
  const FamilySpec* cur = &family;
  std::vector<const Transform*> chain;
  while (cur->kind == FamilyKind::Transformed) {
    chain.push_back(cur->transform.get());
    cur = cur->base.get();
  }
  double x = at;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const double y = (*it)->forward(x);
    sigma /= (*it)->inverse_derivative_abs(y);
    x = y;
  }
  return std::isfinite(sigma) && sigma > 0.0 ? sigma : 1.0;
}

std::vector<double> sample(const FamilySpec& family, double mu, std::size_t n, std::uint64_t seed) {
  require_mean_in_closure(family, mu);
  if (family.kind == FamilyKind::Transformed) {
    std::vector<double> out = sample(*family.base, mu, n, seed);
    for (double& v : out) v = family.transform->forward(v);
    return out;
  }
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  out.reserve(n);
  switch (family.kind) {
    case FamilyKind::GaussianLocation: {
      std::normal_distribution<double> d(mu, std::sqrt(family.variance));
      for (std::size_t i = 0; i < n; ++i) out.push_back(d(rng));
      break;
    }
    case FamilyKind::GammaShape: {
      std::gamma_distribution<double> d(family.shape, mu / family.shape);
      for (std::size_t i = 0; i < n; ++i) out.push_back(d(rng));
      break;
    }
    case FamilyKind::Tweedie32:
      if (mu == 0.0) return std::vector<double>(n, 0.0);
      return tweedie::tweedie_sample(mu, n, seed);
    case FamilyKind::Bernoulli: {
      std::bernoulli_distribution d(mu);
      for (std::size_t i = 0; i < n; ++i) out.push_back(d(rng) ? 1.0 : 0.0);
      break;
    }
    case FamilyKind::Poisson: {
      std::poisson_distribution<long> d(mu);
      for (std::size_t i = 0; i < n; ++i) out.push_back(mu == 0.0 ? 0.0 : static_cast<double>(d(rng)));
      break;
    }
    case FamilyKind::Transformed: break;
  }
  return out;
}

}  // namespace snml
