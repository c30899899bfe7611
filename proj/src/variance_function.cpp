#include "snml/variance_function.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "snml/errors.hpp"
#include "snml/jet.hpp"

namespace snml {
namespace {

using J = Jet<4>;

void require_coefficients(const VarianceFunctionSpec& vf, std::size_t count) {
  if (vf.coefficients.size() != count) {
    std::ostringstream msg;
    msg << "variance function " << vf.describe() << " needs " << count << " coefficients";
    throw DomainError(msg.str());
  }
}

J sigma_jet(const VarianceFunctionSpec& vf, double mu) {
  const auto& co = vf.coefficients;
  const J t = J::variable(mu);
  switch (vf.kind) {
    case VarianceFunctionSpec::ClosedKind::Constant: return J::constant(std::sqrt(co[0]));
    case VarianceFunctionSpec::ClosedKind::PowerAffine: return pow(co[0] * t + co[1], 0.5 * co[2]);
    case VarianceFunctionSpec::ClosedKind::Quadratic: return sqrt(co[0] * (t * t) + co[1] * t + co[2]);
    case VarianceFunctionSpec::ClosedKind::Exponential: return std::sqrt(co[0]) * exp(0.5 * co[1] * t);
  }
  throw DomainError("unknown variance function kind");
}

// Fornberg's recursion: weights w[k][j] such that f^(k)(z) ~ sum_j w[k][j] f(x_j).
std::vector<std::array<double, 5>> fornberg(double z, const std::vector<double>& x) {
  const std::size_t n = x.size();
  constexpr std::size_t m = 4;
  std::vector<std::array<double, 5>> c(n, std::array<double, 5>{});
  double c1 = 1.0;
  double c4 = x[0] - z;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k)
          c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  return c;
}

std::array<double, 5> stencil_derivatives(const VarianceFunctionSpec& vf, double mu, std::size_t width) {
  const auto& tab = vf.table;
  const auto upper = std::lower_bound(tab.begin(), tab.end(), mu,
                                      [](const std::pair<double, double>& p, double v) { return p.first < v; });
  const std::ptrdiff_t pos = upper - tab.begin();
  const auto n = static_cast<std::ptrdiff_t>(tab.size());
  const auto w = static_cast<std::ptrdiff_t>(width);
  std::ptrdiff_t start = std::clamp<std::ptrdiff_t>(pos - w / 2, 0, n - w);
  std::vector<double> xs;
  std::vector<double> sig;
  for (std::ptrdiff_t i = start; i < start + w; ++i) {
    xs.push_back(tab[static_cast<std::size_t>(i)].first);
    sig.push_back(std::sqrt(tab[static_cast<std::size_t>(i)].second));
  }
  const auto weights = fornberg(mu, xs);
  std::array<double, 5> out{};
  for (std::size_t j = 0; j < xs.size(); ++j)
    for (std::size_t k = 0; k < 5; ++k) out[k] += weights[j][k] * sig[j];
  return out;
}

std::string format_number(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

double VarianceFunctionSpec::operator()(double mu) const {
  if (form == Form::Tabulated) return std::pow(sigma_derivatives(*this, mu)[0], 2);
  const auto& co = coefficients;
  switch (kind) {
    case ClosedKind::Constant: return co[0];
    case ClosedKind::PowerAffine: return std::pow(co[0] * mu + co[1], co[2]);
    case ClosedKind::Quadratic: return (co[0] * mu + co[1]) * mu + co[2];
    case ClosedKind::Exponential: return co[0] * std::exp(co[1] * mu);
  }
  return 0.0;
}

std::string VarianceFunctionSpec::describe() const {
  if (form == Form::Tabulated) return "tabulated(" + std::to_string(table.size()) + " points)";
  const auto& co = coefficients;
  auto at = [&](std::size_t i) { return i < co.size() ? format_number(co[i]) : std::string("?"); };
  switch (kind) {
    case ClosedKind::Constant: return "V = " + at(0);
    case ClosedKind::PowerAffine: return "V = (" + at(0) + " mu + " + at(1) + ")^" + at(2);
    case ClosedKind::Quadratic: return "V = " + at(0) + " mu^2 + " + at(1) + " mu + " + at(2);
    case ClosedKind::Exponential: return "V = " + at(0) + " exp(" + at(1) + " mu)";
  }
  return "V = ?";
}

VarianceFunctionSpec constant_variance(double v) {
  if (!(v > 0.0)) throw DomainError("constant variance must be positive");
  VarianceFunctionSpec vf;
  vf.kind = VarianceFunctionSpec::ClosedKind::Constant;
  vf.coefficients = {v};
  vf.domain = Interval::real_line();
  return vf;
}

VarianceFunctionSpec power_affine_variance(double k, double l, double p) {
  VarianceFunctionSpec vf;
  vf.kind = VarianceFunctionSpec::ClosedKind::PowerAffine;
  vf.coefficients = {k, l, p};
  if (k > 0.0) {
    vf.domain = Interval::open(-l / k, kInf);
  } else if (k < 0.0) {
    vf.domain = Interval::open(-kInf, -l / k);
  } else {
    if (!(l > 0.0)) throw DomainError("power_affine_variance: V is not positive anywhere");
    vf.domain = Interval::real_line();
  }
  return vf;
}

VarianceFunctionSpec quadratic_variance(double a, double b, double c) {
  VarianceFunctionSpec vf;
  vf.kind = VarianceFunctionSpec::ClosedKind::Quadratic;
  vf.coefficients = {a, b, c};
  if (a == 0.0) {
    if (b == 0.0) {
      if (!(c > 0.0)) throw DomainError("quadratic_variance: V is not positive anywhere");
      vf.domain = Interval::real_line();
    } else {
      vf.domain = b > 0.0 ? Interval::open(-c / b, kInf) : Interval::open(-kInf, -c / b);
    }
    return vf;
  }
  const double disc = b * b - 4.0 * a * c;
  if (a > 0.0) {
    // Positive outside the roots; take the right-hand branch.
    vf.domain = disc < 0.0 ? Interval::real_line() : Interval::open((-b + std::sqrt(disc)) / (2.0 * a), kInf);
    return vf;
  }
  if (!(disc > 0.0)) throw DomainError("quadratic_variance: V is not positive anywhere");
  const double r1 = (-b + std::sqrt(disc)) / (2.0 * a);
  const double r2 = (-b - std::sqrt(disc)) / (2.0 * a);
  vf.domain = Interval::open(std::min(r1, r2), std::max(r1, r2));
  return vf;
}

VarianceFunctionSpec exponential_variance(double a, double b) {
  if (!(a > 0.0)) throw DomainError("exponential_variance: a must be positive");
  VarianceFunctionSpec vf;
  vf.kind = VarianceFunctionSpec::ClosedKind::Exponential;
  vf.coefficients = {a, b};
  vf.domain = Interval::real_line();
  return vf;
}

VarianceFunctionSpec tabulated_variance(std::vector<std::pair<double, double>> table) {
  if (table.size() < 9) throw DifferentiationError("tabulated variance function needs at least 9 points");
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!(table[i].second > 0.0)) throw DomainError("tabulated variance function must be positive");
    if (i > 0 && !(table[i].first > table[i - 1].first))
      throw DomainError("tabulated variance function needs strictly increasing mu");
  }
  VarianceFunctionSpec vf;
  vf.form = VarianceFunctionSpec::Form::Tabulated;
  vf.coefficients.clear();
  vf.domain = Interval::closed(table.front().first, table.back().first);
  vf.table = std::move(table);
  return vf;
}

VarianceFunctionSpec variance_function_of(const FamilySpec& family) {
  const FamilySpec& p = family.parameter_family();
  VarianceFunctionSpec vf;
  switch (p.kind) {
    case FamilyKind::GaussianLocation: vf = constant_variance(p.variance); break;
    case FamilyKind::GammaShape: vf = power_affine_variance(1.0 / std::sqrt(p.shape), 0.0, 2.0); break;
    case FamilyKind::Tweedie32: vf = power_affine_variance(std::pow(2.0, 2.0 / 3.0), 0.0, 1.5); break;
    case FamilyKind::Bernoulli: vf = quadratic_variance(-1.0, 1.0, 0.0); break;
    case FamilyKind::Poisson: vf = power_affine_variance(1.0, 0.0, 1.0); break;
    case FamilyKind::Transformed: throw DomainError("variance_function_of: unreachable");
  }
  vf.domain = Interval::open(maximal_mean_domain(p).lower, maximal_mean_domain(p).upper);
  return vf;
}

VarianceFunctionSpec parse_variance_function(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("variance function '" + text + "' must look like kind:c1,c2,...");
  const std::string kind = text.substr(0, colon);
  std::vector<double> co;
  std::stringstream rest(text.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    try {
      std::size_t used = 0;
      co.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad coefficient '" + item + "' in variance function '" + text + "'");
    }
  }
  auto need = [&](std::size_t count) {
    if (co.size() != count)
      throw ConfigError("variance function '" + kind + "' takes " + std::to_string(count) + " coefficients");
  };
  try {
    if (kind == "const") {
      need(1);
      return constant_variance(co[0]);
    }
    if (kind == "power") {
      need(3);
      return power_affine_variance(co[0], co[1], co[2]);
    }
    if (kind == "quadratic") {
      need(3);
      return quadratic_variance(co[0], co[1], co[2]);
    }
    if (kind == "exp") {
      need(2);
      return exponential_variance(co[0], co[1]);
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown variance function kind '" + kind + "' (const, power, quadratic, exp)");
}

std::array<double, 5> sigma_derivatives(const VarianceFunctionSpec& vf, double mu) {
  if (vf.form == VarianceFunctionSpec::Form::Closed) {
    switch (vf.kind) {
      case VarianceFunctionSpec::ClosedKind::Constant: require_coefficients(vf, 1); break;
      case VarianceFunctionSpec::ClosedKind::Exponential: require_coefficients(vf, 2); break;
      default: require_coefficients(vf, 3); break;
    }
    if (!vf.domain.interior_contains(mu))
      throw DomainError("mu = " + format_number(mu) + " outside the domain " + vf.domain.to_string() + " of " +
                        vf.describe());
    const J s = sigma_jet(vf, mu);
    if (!(s.c[0] > 0.0) || !std::isfinite(s.c[0])) throw DomainError("variance is not positive at mu");
    return {s.derivative(0), s.derivative(1), s.derivative(2), s.derivative(3), s.derivative(4)};
  }
  if (vf.table.size() < 9) throw DifferentiationError("tabulated variance function needs at least 9 points");
  if (!vf.domain.closure_contains(mu))
    throw DifferentiationError("mu = " + format_number(mu) + " outside the table " + vf.domain.to_string());
  const auto fine = stencil_derivatives(vf, mu, 9);
  const auto coarse = stencil_derivatives(vf, mu, 7);
  // The two stencils must agree on the ODE quantity they feed.
  const double g_fine = fine[1] * fine[1] + 3.0 * fine[0] * fine[2];
  const double g_coarse = coarse[1] * coarse[1] + 3.0 * coarse[0] * coarse[2];
  if (std::abs(g_fine - g_coarse) > 1e-3 * std::max(1.0, std::abs(g_fine))) {
    std::ostringstream msg;
    msg << "tabulation too coarse at mu = " << mu << ": 7- and 9-point estimates of (sigma')^2 + 3 sigma sigma'' "
        << "differ by " << std::abs(g_fine - g_coarse);
    throw DifferentiationError(msg.str());
  }
  return fine;
}

}  // namespace snml
