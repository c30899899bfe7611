// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "snml/analysis.hpp"
#include "snml/exact.hpp"
#include "snml/strategies.hpp"
#include "snml/tweedie.hpp"

using namespace snml;
using exact::Rational;

namespace {

const double kPi = std::numbers::pi;
int failures = 0;

void criterion(int id, const std::string& title, const std::function<std::string()>& body) {
  const auto start = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    detail = body();
    ok = detail.rfind("FAIL", 0) != 0;
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s %d %s: %s [%.1fs]\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str(), secs);
  std::fflush(stdout);
  failures += !ok;
}

std::string verdict_line(bool ok, const std::string& detail) { return ok ? detail : "FAIL " + detail; }

std::string fmt(const char* f, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

std::vector<double> positive_history(std::mt19937_64& rng, std::size_t len, bool centred) {
  std::uniform_real_distribution<double> u(0.2, 3.0);
  std::vector<double> out;
  for (std::size_t i = 0; i < len; ++i) out.push_back(centred ? u(rng) - 1.5 : u(rng));
  return out;
}

}  // namespace

int main() {
  criterion(1, "Tweedie KL closed form", [] {
    double worst = 0;
    const double grid[] = {0.1, 0.5, 1.0, 3.0, 10.0};
    for (double mu0 : grid)
      for (double mu1 : grid) {
        auto f = [&](double mu) { return (mu - mu0) / (2 * std::pow(mu, 1.5)); };
        const double numeric = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, mu0, mu1, 12, 1e-12);
        worst = std::max(worst, std::abs(kl_divergence(tweedie32(), mu0, mu1) - numeric));
      }
    return verdict_line(worst < 1e-8, fmt("max abs error %.2e on 5x5 grid", worst));
  });

  criterion(2, "constancy of the condition integral", [] {
    double gauss = 0, gam = 0, twd = 0, poisson_spread = 1, bern_spread = 1;
    bool verdicts = true;
    for (int n : {2, 3, 5}) {
      const double laplace = std::sqrt(2 * kPi / n);
      const double gamma_c = std::tgamma(n) * std::exp(n) / std::pow(n, n);
      for (double v : check_constancy(gaussian_location(1.0), n, {-3, 0, 1, 10}).values) gauss = std::max(gauss, std::abs(v - laplace));
      for (double v : check_constancy(gamma_shape(1.0), n, {0.5, 1, 2, 5}).values) gam = std::max(gam, std::abs(v - gamma_c));
      for (double v : check_constancy(tweedie32(), n, {0.2, 1, 3, 9}).values) twd = std::max(twd, std::abs(v - laplace));
      for (const auto& [family, grid, spread] :
           {std::tuple{poisson(), std::vector<double>{0.05, 0.3, 1, 4}, &poisson_spread},
            std::tuple{bernoulli(), std::vector<double>{0.02, 0.1, 0.3, 0.5}, &bern_spread}}) {
        const auto r = check_constancy(family, n, grid);
        verdicts &= r.verdict == Verdict::NonConstant;
        const auto [lo, hi] = std::minmax_element(r.values.begin(), r.values.end());
        *spread = std::min(*spread, (*hi - *lo) / r.reference_value);
      }
    }
    const bool ok = gauss < 1e-10 && gam < 1e-8 && twd < 1e-4 && verdicts && poisson_spread > 0.01 && bern_spread > 0.01;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "errors gaussian %.1e gamma %.1e tweedie %.1e; min relative spread poisson %.3f bernoulli %.3f",
                  gauss, gam, twd, poisson_spread, bern_spread);
    return verdict_line(ok, buf);
  });

  criterion(3, "SNML and Bayes-Jeffreys equivalence", [] {
    std::mt19937_64 rng(2024);
    double worst = 0;
    const FamilySpec fams[] = {gaussian_location(1.0), gamma_shape(0.5), gamma_shape(1.0), gamma_shape(2.0), tweedie32()};
    for (const FamilySpec& f : fams)
      for (std::size_t len = 1; len <= 3; ++len) {
        const auto h = positive_history(rng, len, f.kind == FamilyKind::GaussianLocation);
        const auto s = snml_predictive(f, h);
        const auto b = bayes_jeffreys_predictive(f, h);
        for (double x : {0.0, 0.1, 0.7, 1.5, 4.0}) {
          if (f.kind == FamilyKind::GammaShape && x == 0.0) continue;
          worst = std::max(worst, rel(s.value_at(x), b.value_at(x)));
        }
      }
    const int one[] = {1};
    const bool bern = exact::snml_next_is_one(one) == Rational(4, 5) && exact::bayes_jeffreys_next_is_one(one) == Rational(3, 4);
    double witness = 0;
    const std::vector<double> h1{1.0};
    const auto s = snml_predictive(gamma_shape(1.0), h1);
    const auto b = bayes_jeffreys_predictive(gamma_shape(1.0), h1);
    for (double x : {0.05, 0.5, 1.0, 3.0, 20.0}) {
      const double closed = 1 / ((1 + x) * (1 + x));
      witness = std::max({witness, rel(s.value_at(x), closed), rel(b.value_at(x), closed)});
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "max relative gap %.1e; Bernoulli 4/5 vs 3/4 %s; Gamma 1/(1+x)^2 error %.1e", worst,
                  bern ? "exact" : "WRONG", witness);
    return verdict_line(worst < 1e-6 && bern && witness < 1e-8, buf);
  });

  criterion(4, "exchangeability", [] {
    const int a[] = {1, 1, 0};
    const int b[] = {1, 0, 1};
    const bool bern = exact::snml_joint(a, 0) == Rational(8, 155) && exact::snml_joint(b, 0) == Rational(1, 20);
    double worst = 0;
    for (const FamilySpec& f : {gaussian_location(1.0), gamma_shape(1.0), tweedie32()})
      for (std::size_t len : {2, 3}) {
        const auto r = exchangeability_test(f, 1, 1 + len, TestSet::random(20, 100 + len));
        worst = std::max(worst, r.max_abs_deviation);
      }
    return verdict_line(bern && worst < 1e-6,
                        std::string("Bernoulli 8/155 vs 1/20 ") + (bern ? "exact" : "WRONG") +
                            fmt("; max permuted-joint discrepancy %.1e", worst));
  });

  criterion(5, "Bernoulli NML equalizer", [] {
    bool ok = true;
    Rational n2;
    for (unsigned n = 1; n <= 6; ++n) {
      Rational first = -1;
      for (unsigned bits = 0; bits < (1u << n); ++bits) {
        std::vector<int> seq;
        unsigned ones = 0;
        for (unsigned i = 0; i < n; ++i) {
          seq.push_back((bits >> i) & 1u);
          ones += seq.back();
        }
        const Rational e = exact::sup_likelihood(ones, n) / exact::nml_joint(seq);
        if (first < 0) first = e;
        ok &= e == first;
      }
      if (n == 2) n2 = first;
    }
    ok &= n2 == Rational(5, 2);
    return verdict_line(ok, "exp(regret) at n=2 is " + exact::to_string(n2) + ", sequence-independent for n<=6");
  });

  criterion(6, "Laplace asymptotics", [] {
    const auto g = laplace_asymptotics_check(gamma_shape(1.0), 1.0, LaplacePosition::Interior, {10, 20, 50});
    double worst = 0;
    bool ok = true;
    for (std::size_t i = 0; i < g.grid.size(); ++i) {
      const double n = g.grid[i];
      const double gap = std::abs(g.values[i] - 1 - 1 / (12 * n));
      ok &= gap < 1 / (n * n);
      worst = std::max(worst, gap * n * n);
    }
    const FamilySpec half = with_mean_domain(gaussian_location(1.0), Interval::closed(0.0, kInf));
    const double boundary = laplace_asymptotics_check(half, 0.0, LaplacePosition::Boundary, {100}).values.back();
    ok &= std::abs(boundary - 0.5) < 0.05;
    char buf[200];
    std::snprintf(buf, sizeof buf, "max n^2 |ratio - 1 - 1/(12n)| = %.3f; boundary ratio at n=100 = %.6f", worst, boundary);
    return verdict_line(ok, buf);
  });

  criterion(7, "ODE and higher-order battery", [] {
    struct Row {
      const char* vf;
      bool exchangeable;
    };
    const Row rows[] = {{"const:4", true},           {"power:2,1,2", true},   {"power:1.5874010519681994,0,1.5", true},
                        {"power:1,0,1", false},      {"quadratic:-1,1,0", false}, {"power:1,0,3", false},
                        {"exp:1,1", false}};
    int matched = 0;
    for (const Row& row : rows) {
      const auto vf = parse_variance_function(row.vf);
      const auto grid = default_grid(vf);
      const Verdict want = row.exchangeable ? Verdict::Constant : Verdict::NonConstant;
      matched += sigma_ode_check(vf, grid).verdict == want && higher_order_check(vf, grid).verdict == want;
    }
    return verdict_line(matched == 7, std::to_string(matched) + "/7 rows match");
  });

  criterion(8, "Levy family by transformation", [] {
    const FamilySpec levy = transform_family(gamma_shape(0.5), reciprocal_transform());
    const auto r = exchangeability_test(levy, 1, 3, TestSet::random(20, 8));
    // Gamma(1/2) with mean mu is the Gamma(1/2, c/2) of the Levy example with c = 1/mu.
    double worst = 0;
    for (double c : {0.5, 1.0, 2.0})
      for (double z : {0.01, 0.2, 1.0, 5.0, 50.0}) {
        const double closed = std::sqrt(c / (2 * kPi)) * std::pow(z, -1.5) * std::exp(-c / (2 * z));
        worst = std::max(worst, rel(std::exp(log_density_mean(levy, 1 / c, z)), closed));
      }
    return verdict_line(r.verdict == Verdict::Constant && r.max_abs_deviation < 1e-6 && worst < 1e-10,
                        fmt("exchangeability discrepancy %.1e", r.max_abs_deviation) + fmt(", density error %.1e", worst));
  });

  criterion(9, "Tweedie sampler", [] {
    const std::size_t n = 100000;
    const auto xs = tweedie::tweedie_sample(1.0, n, 20240601);
    double sum = 0;
    std::size_t zeros = 0;
    for (double x : xs) {
      sum += x;
      zeros += x == 0.0;
    }
    const double mean = sum / n;
    const double p0 = std::exp(-1.0);
    const double frac = static_cast<double>(zeros) / n;
    const bool ok = std::abs(mean - 1) < 3 * std::sqrt(2.0 / n) && std::abs(frac - p0) < 3 * std::sqrt(p0 * (1 - p0) / n);
    char buf[160];
    std::snprintf(buf, sizeof buf, "mean %.5f, zero fraction %.5f (expected %.5f)", mean, frac, p0);
    return verdict_line(ok, buf);
  });

  criterion(10, "one-step CNML equals SNML", [] {
    const std::pair<FamilySpec, std::vector<double>> cases[] = {
        {gaussian_location(1.0), {0.3, -1.2, 2.0}},
        {gamma_shape(2.0), {1.5, 0.4, 2.2}},
        {tweedie32(), {0.0, 1.1, 0.0}},
        {tweedie32(), {2.0, 0.6, 3.0}},
        {bernoulli(), {1, 0, 1}},
        {poisson(), {2, 0, 3}},
        {transform_family(gamma_shape(0.5), reciprocal_transform()), {0.5, 2.0, 1.0}},
    };
    double worst = 0;
    for (const auto& [f, xs] : cases) {
      const double c = cnml_joint(f, ObservationSequence(xs, 2), 3);
      const double s = snml_predictive(f, std::span<const double>(xs).first(2)).value_at(xs[2]);
      worst = std::max(worst, rel(c, s));
    }
    return verdict_line(worst < 1e-8, fmt("max relative gap %.1e over all built-in families", worst));
  });

  return failures == 0 ? 0 : 1;
}
