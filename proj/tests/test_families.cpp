#include <doctest.h>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "snml/errors.hpp"
#include "snml/family.hpp"
#include "snml/family_json.hpp"

using namespace snml;

namespace {

// KL(mu0 || mu1) = int_{mu0}^{mu1} (mu - mu0) / V(mu) dmu, evaluated independently.
double kl_by_quadrature(double (*V)(double), double mu0, double mu1) {
  auto f = [&](double mu) { return (mu - mu0) / V(mu); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, mu0, mu1, 15, 1e-14);
}

}  // namespace

TEST_CASE("log densities agree with reference distributions") {
  const FamilySpec g = gaussian_location(2.5);
  boost::math::normal_distribution<> n(0.7, std::sqrt(2.5));
  for (double x : {-3.0, 0.0, 0.7, 4.2}) CHECK(log_density_mean(g, 0.7, x) == doctest::Approx(std::log(pdf(n, x))).epsilon(1e-13));

  for (double k : {0.5, 1.0, 2.0}) {
    const FamilySpec gm = gamma_shape(k);
    boost::math::gamma_distribution<> d(k, 1.7 / k);
    for (double x : {0.1, 1.0, 3.0, 9.0})
      CHECK(log_density_mean(gm, 1.7, x) == doctest::Approx(std::log(pdf(d, x))).epsilon(1e-12));
  }

  const FamilySpec p = poisson();
  boost::math::poisson_distribution<> pd(3.2);
  for (int x : {0, 1, 5, 12}) CHECK(log_density_mean(p, 3.2, x) == doctest::Approx(std::log(pdf(pd, x))).epsilon(1e-12));

  const FamilySpec b = bernoulli();
  CHECK(log_density_mean(b, 0.3, 1.0) == doctest::Approx(std::log(0.3)));
  CHECK(log_density_mean(b, 0.3, 0.0) == doctest::Approx(std::log(0.7)));
}

TEST_CASE("closed-form KL divergences match the variance-function integral") {
  struct Case {
    FamilySpec family;
    double (*V)(double);
  };
  const Case cases[] = {
      {gaussian_location(1.0), [](double) { return 1.0; }},
      {gamma_shape(1.0), [](double mu) { return mu * mu; }},
      {tweedie32(), [](double mu) { return 2.0 * std::pow(mu, 1.5); }},
      {poisson(), [](double mu) { return mu; }},
  };
  for (const auto& c : cases)
    for (double mu0 : {0.3, 1.0, 2.5})
      for (double mu1 : {0.5, 1.0, 4.0})
        CHECK(kl_divergence(c.family, mu0, mu1) == doctest::Approx(kl_by_quadrature(c.V, mu0, mu1)).epsilon(1e-10));
  CHECK(kl_divergence(bernoulli(), 0.2, 0.6) ==
        doctest::Approx(0.2 * std::log(0.2 / 0.6) + 0.8 * std::log(0.8 / 0.4)).epsilon(1e-13));
  CHECK(kl_divergence(tweedie32(), 1.0, 4.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(kl_divergence(gamma_shape(3.0), 2.0, 2.0) == 0.0);
}

TEST_CASE("charts round-trip and the Fisher information is 1/V in the mean chart") {
  for (const FamilySpec& f : {gaussian_location(2.0), gamma_shape(2.0), tweedie32(), bernoulli(), poisson()}) {
    for (double mu : {0.2, 0.45, 0.8}) {
      CHECK(mean_from_natural(f, natural_from_mean(f, mu)) == doctest::Approx(mu).epsilon(1e-13));
      CHECK(mean_from_geodesic(f, geodesic_from_mean(f, mu, 0.5), 0.5) == doctest::Approx(mu).epsilon(1e-12));
      CHECK(fisher_information(f, ParamValue::mean(mu)) == doctest::Approx(1.0 / variance_function(f, mu)));
      // dbeta/dmu = 1/sigma.
      const double h = 1e-6;
      const double slope = (geodesic_from_mean(f, mu + h, 0.5) - geodesic_from_mean(f, mu - h, 0.5)) / (2 * h);
      CHECK(slope == doctest::Approx(1.0 / std::sqrt(variance_function(f, mu))).epsilon(1e-7));
    }
  }
  CHECK(variance_function(tweedie32(), 4.0) == doctest::Approx(16.0));
  CHECK(geodesic_from_mean(gamma_shape(4.0), std::exp(1.0), 1.0) == doctest::Approx(2.0));
}

TEST_CASE("the cumulant's derivative is the mean") {
  for (const FamilySpec& f : {gaussian_location(1.5), gamma_shape(0.5), tweedie32(), bernoulli(), poisson()}) {
    const double theta = natural_from_mean(f, 0.6);
    const double h = 1e-5;
    CHECK((cumulant(f, theta + h) - cumulant(f, theta - h)) / (2 * h) == doctest::Approx(0.6).epsilon(1e-8));
  }
}

TEST_CASE("maximum likelihood respects the mean domain") {
  const std::vector<double> xs{-1.0, -2.0, 0.5};
  CHECK(mle_mean(gaussian_location(1.0), xs).mean == doctest::Approx(-2.5 / 3));
  const FamilySpec half = with_mean_domain(gaussian_location(1.0), Interval::closed(0.0, kInf));
  const MleResult r = mle_mean(half, xs);
  CHECK(r.mean == 0.0);
  CHECK(r.boundary);
  CHECK(log_sup_likelihood(half, xs) == doctest::Approx(log_likelihood(gaussian_location(1.0), 0.0, xs)));

  const std::vector<double> ones{1.0, 1.0};
  CHECK(log_sup_likelihood(bernoulli(), ones) == 0.0);
  const std::vector<double> mixed{1.0, 0.0};
  CHECK(log_sup_likelihood(bernoulli(), mixed) == doctest::Approx(std::log(0.25)));

  // Tweedie: all-zero data has supremum 1, reached as mu -> 0.
  const std::vector<double> zeros{0.0, 0.0};
  CHECK(log_sup_likelihood(tweedie32(), zeros) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("convex cores and supports") {
  CHECK(convex_core(bernoulli()) == Interval::closed(0.0, 1.0));
  CHECK(convex_core(poisson()).lower_included);
  CHECK(convex_core(tweedie32()).lower_included);
  CHECK_FALSE(convex_core(gamma_shape(1.0)).lower_included);
  CHECK_THROWS_AS(require_supported(poisson(), -1.0), UnsupportedPoint);
  CHECK_THROWS_AS(require_supported(gamma_shape(1.0), -0.5), UnsupportedPoint);
  CHECK_THROWS_AS(require_supported(bernoulli(), 2.0), UnsupportedPoint);
  // Inside the closure but off the lattice: zero mass rather than an error.
  CHECK(log_density_mean(poisson(), 1.0, 1.5) == -kInf);
  CHECK_NOTHROW(require_supported(tweedie32(), 0.0));
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(gaussian_location(0.0), DomainError);
  CHECK_THROWS_AS(gamma_shape(-1.0), DomainError);
  CHECK_THROWS_AS(log_density_mean(poisson(), -1.0, 2.0), DomainError);
  CHECK_THROWS_AS(with_mean_domain(poisson(), Interval::closed(-2.0, -1.0)), DomainError);
  CHECK_THROWS_AS(affine_transform(0.0, 1.0), NonMonotone);
}

TEST_CASE("transformed families apply the change of variables") {
  const FamilySpec base = gaussian_location(1.0);
  const FamilySpec shifted = make_transformed(base, affine_transform(2.0, 3.0));
  const FamilySpec wide = gaussian_location(4.0);
  for (double y : {-1.0, 3.0, 6.5}) CHECK(log_density_mean(shifted, 0.5, y) == doctest::Approx(log_density_mean(wide, 4.0, y)));

  const FamilySpec identity = make_transformed(base, affine_transform(1.0, 0.0));
  for (double y : {-2.0, 0.1, 5.0}) CHECK(log_density_mean(identity, 0.3, y) == doctest::Approx(log_density_mean(base, 0.3, y)));

  // Reciprocal of Gamma(1/2) with mean mu is Levy(0, c) with c = 1/mu.
  const FamilySpec levy = make_transformed(gamma_shape(0.5), reciprocal_transform());
  const double mu = 0.8;
  const double c = 1.0 / mu;
  for (double y : {0.05, 0.5, 1.0, 7.0}) {
    const double expected = 0.5 * std::log(c / (2 * std::numbers::pi)) - 1.5 * std::log(y) - c / (2 * y);
    CHECK(log_density_mean(levy, mu, y) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("family JSON round-trips") {
  const FamilySpec fams[] = {gaussian_location(2.0), gamma_shape(0.5), tweedie32(), bernoulli(), poisson(),
                             with_mean_domain(gaussian_location(1.0), Interval::closed(0.0, kInf))};
  for (const FamilySpec& f : fams) {
    const FamilySpec back = family_from_json(family_to_json(f));
    CHECK(back.kind == f.kind);
    CHECK(back.mean_domain == f.mean_domain);
    CHECK(log_density_mean(back, 0.4, 1.0) == log_density_mean(f, 0.4, 1.0));
  }
  CHECK_THROWS_AS(family_from_json(nlohmann::json{{"kind", "cauchy"}}), ConfigError);
}

TEST_CASE("sampling is deterministic per seed and has the right mean") {
  for (const FamilySpec& f : {gaussian_location(1.0), gamma_shape(2.0), poisson(), bernoulli()}) {
    const auto a = sample(f, 0.4, 20000, 11);
    CHECK(a == sample(f, 0.4, 20000, 11));
    double s = 0;
    for (double v : a) s += v;
    CHECK(s / a.size() == doctest::Approx(0.4).epsilon(0.05));
  }
}
