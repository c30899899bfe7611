#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "snml/errors.hpp"
#include "snml/exact.hpp"
#include "snml/strategies.hpp"

using namespace snml;
using exact::Rational;

namespace {

const double kPi = std::numbers::pi;

double normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2 * kPi * var);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

std::vector<double> draw(const FamilySpec& f, std::mt19937_64& rng, std::size_t len) {
  std::vector<double> out;
  std::uniform_real_distribution<double> u(0.2, 3.0);
  for (std::size_t i = 0; i < len; ++i) {
    double x = u(rng);
    if (f.kind == FamilyKind::GaussianLocation) x -= 1.5;
    if (f.kind == FamilyKind::Poisson) x = std::floor(x * 2);
    if (f.kind == FamilyKind::Bernoulli) x = x > 1.6 ? 1.0 : 0.0;
    out.push_back(x);
  }
  return out;
}

}  // namespace

TEST_CASE("exact Bernoulli predictives") {
  const int one[] = {1};
  CHECK(exact::snml_next_is_one(one) == Rational(4, 5));
  CHECK(exact::bayes_jeffreys_next_is_one(one) == Rational(3, 4));
  const int a[] = {1, 1, 0};
  const int b[] = {1, 0, 1};
  CHECK(exact::snml_joint(a, 0) == Rational(8, 155));
  CHECK(exact::snml_joint(b, 0) == Rational(1, 20));
  CHECK(exact::to_string(Rational(8, 155)) == "8/155");
}

TEST_CASE("floating Bernoulli strategies agree with the rationals") {
  const FamilySpec b = bernoulli();
  const std::vector<double> h{1.0};
  CHECK(snml_predictive(b, h).value_at(1.0) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(bayes_jeffreys_predictive(b, h).value_at(1.0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(strategy_joint(b, Strategy::SNML, ObservationSequence({1, 1, 0}, 0)) == doctest::Approx(8.0 / 155).epsilon(1e-14));
  CHECK(strategy_joint(b, Strategy::SNML, ObservationSequence({1, 0, 1}, 0)) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(cnml_joint(b, ObservationSequence({1, 1}, 0), 2) == doctest::Approx(0.4));
  const std::vector<double> s10{1, 0};
  CHECK(nml_joint(b, s10) == doctest::Approx(0.1));
  const std::vector<double> s1{1};
  CHECK(nml_joint(b, s1) == doctest::Approx(0.5));
}

TEST_CASE("Gaussian SNML and Bayes predictives are the same normal") {
  const FamilySpec g = gaussian_location(1.0);
  const std::vector<double> h{0.0, 2.0};
  const auto s = snml_predictive(g, h);
  const auto bj = bayes_jeffreys_predictive(g, h);
  for (double x : {-2.0, 0.0, 1.0, 3.5}) {
    CHECK(s.value_at(x) == doctest::Approx(normal_pdf(x, 1.0, 1.5)).epsilon(1e-9));
    CHECK(bj.value_at(x) == doctest::Approx(normal_pdf(x, 1.0, 1.5)).epsilon(1e-9));
  }
  CHECK(s.value_at(1.0) == doctest::Approx(1.0 / std::sqrt(3 * kPi)).epsilon(1e-10));
}

TEST_CASE("Gamma(1) predictives are 1/(1+x)^2 after one observation") {
  const FamilySpec g = gamma_shape(1.0);
  const std::vector<double> h{1.0};
  const auto s = snml_predictive(g, h);
  const auto bj = bayes_jeffreys_predictive(g, h);
  for (double x : {0.01, 0.5, 2.0, 40.0}) {
    CHECK(s.value_at(x) == doctest::Approx(1.0 / ((1 + x) * (1 + x))).epsilon(1e-8));
    CHECK(bj.value_at(x) == doctest::Approx(1.0 / ((1 + x) * (1 + x))).epsilon(1e-8));
  }
}

TEST_CASE("predictive laws normalize") {
  const FamilySpec fams[] = {gaussian_location(2.0), gamma_shape(0.5), tweedie32(), poisson(), bernoulli()};
  for (const FamilySpec& f : fams) {
    const std::vector<double> h = f.kind == FamilyKind::Bernoulli ? std::vector<double>{0.0, 1.0}
                                  : f.kind == FamilyKind::Tweedie32 ? std::vector<double>{0.0, 1.2}
                                                                    : std::vector<double>{1.0, 2.0};
    CAPTURE(to_string(f.kind));
    CHECK(snml_predictive(f, h).total_mass() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(bayes_jeffreys_predictive(f, h).total_mass() == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("SNML equals Bayes-Jeffreys on the exchangeable families") {
  std::mt19937_64 rng(7);
  const FamilySpec fams[] = {gaussian_location(1.0), gamma_shape(0.5), gamma_shape(1.0), gamma_shape(2.0), tweedie32()};
  for (const FamilySpec& f : fams) {
    for (std::size_t len = 1; len <= 4; ++len) {
      const auto h = draw(f, rng, len);
      const auto s = snml_predictive(f, h);
      const auto bj = bayes_jeffreys_predictive(f, h);
      for (double x : {0.0, 0.3, 1.0, 2.7}) {
        if (f.kind == FamilyKind::GammaShape && x == 0.0) continue;
        CAPTURE(to_string(f.kind));
        CAPTURE(x);
        CHECK(rel(s.value_at(x), bj.value_at(x)) < 1e-6);
      }
    }
  }
}

TEST_CASE("Poisson SNML and Bayes-Jeffreys differ") {
  const std::vector<double> h{1.0};
  const double s = snml_predictive(poisson(), h).value_at(0.0);
  const double bj = bayes_jeffreys_predictive(poisson(), h).value_at(0.0);
  CHECK(rel(s, bj) > 0.01);
}

TEST_CASE("one-step CNML is SNML") {
  std::mt19937_64 rng(3);
  const FamilySpec fams[] = {gaussian_location(1.0), gamma_shape(2.0), tweedie32(), poisson(), bernoulli()};
  for (const FamilySpec& f : fams) {
    for (int rep = 0; rep < 3; ++rep) {
      auto xs = draw(f, rng, 3);
      const std::size_t m = 2;
      const double c = cnml_joint(f, ObservationSequence(xs, m), 3);
      const double s = snml_predictive(f, std::span<const double>(xs).first(m)).value_at(xs[m]);
      CAPTURE(to_string(f.kind));
      CHECK(rel(c, s) < 1e-8);
    }
  }
  CHECK(cnml_joint(gaussian_location(1.0), ObservationSequence({0.0, 0.0}, 1), 2) ==
        doctest::Approx(1.0 / std::sqrt(4 * kPi)).epsilon(1e-9));
  CHECK(cnml_joint(gamma_shape(1.0), ObservationSequence({1.0}, 1), 1) == 1.0);
}

TEST_CASE("Gaussian SNML joints are permutation invariant") {
  const FamilySpec g = gaussian_location(1.0);
  const double a = strategy_joint(g, Strategy::SNML, ObservationSequence({0, 0, 2}, 1));
  const double b = strategy_joint(g, Strategy::SNML, ObservationSequence({0, 2, 0}, 1));
  // N(0; 0, 2) * N(2; 0, 3/2)
  const double expected = normal_pdf(0, 0, 2) * normal_pdf(2, 0, 1.5);
  CHECK(a == doctest::Approx(expected).epsilon(1e-9));
  CHECK(b == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("Bernoulli NML is an equalizer") {
  for (unsigned n = 1; n <= 6; ++n) {
    std::vector<Rational> regrets;
    for (unsigned bits = 0; bits < (1u << n); ++bits) {
      std::vector<int> seq;
      unsigned ones = 0;
      for (unsigned i = 0; i < n; ++i) {
        seq.push_back((bits >> i) & 1u);
        ones += seq.back();
      }
      // exp(regret) = sup p / NML
      regrets.push_back(exact::sup_likelihood(ones, n) / exact::nml_joint(seq));
    }
    for (const auto& r : regrets) CHECK(r == regrets.front());
    if (n == 2) CHECK(regrets.front() == Rational(5, 2));
  }
  const auto r = conditional_regret(bernoulli(), Strategy::NML, ObservationSequence({0, 1}, 0));
  CHECK(r.regret == doctest::Approx(std::log(2.5)));
}

TEST_CASE("conditional regret of CNML depends only on the prefix") {
  const FamilySpec g = gaussian_location(1.0);
  const auto a = conditional_regret(g, Strategy::CNML, ObservationSequence({0.0, 0.4}, 1));
  const auto b = conditional_regret(g, Strategy::CNML, ObservationSequence({0.0, -3.0}, 1));
  CHECK(a.regret == doctest::Approx(b.regret).epsilon(1e-9));
  CHECK(a.regret == doctest::Approx(-0.5 * std::log(kPi)).epsilon(1e-9));

  const auto s = conditional_regret(g, Strategy::SNML, ObservationSequence({0, 0, 2}, 1));
  const double joint = normal_pdf(0, 0, 2) * normal_pdf(2, 0, 1.5);
  const double mu_hat = 2.0 / 3;
  const double best = std::log(normal_pdf(0, mu_hat, 1) * normal_pdf(0, mu_hat, 1) * normal_pdf(2, mu_hat, 1));
  CHECK(s.regret == doctest::Approx(-std::log(joint) + best).epsilon(1e-9));
}

TEST_CASE("normalizers that do not exist are refused") {
  const std::vector<double> one{0.5};
  CHECK_THROWS_AS(nml_joint(gaussian_location(1.0), one), DivergentNormalizer);
  CHECK_THROWS_AS(nml_joint(tweedie32(), one), DivergentNormalizer);
  CHECK_THROWS_AS(nml_joint(gamma_shape(1.0), one), DivergentNormalizer);
  try {
    nml_joint(tweedie32(), one);
  } catch (const DivergentNormalizer& e) {
    CHECK(std::string(e.what()).find("tail") != std::string::npos);
  }
  const std::vector<double> none;
  CHECK_THROWS_AS(snml_predictive(gaussian_location(1.0), none), DivergentNormalizer);
  CHECK_THROWS_AS(bayes_jeffreys_predictive(gamma_shape(1.0), none), ImproperPosterior);
  CHECK_THROWS_AS(cnml_joint(gaussian_location(1.0), ObservationSequence({0, 1, 2, 3, 4, 5, 6}, 1), 7),
                  HorizonTooLarge);
}
