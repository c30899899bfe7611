#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "snml/family.hpp"
#include "snml/interval.hpp"

namespace snml {

/// A variance function V(mu) given either in closed form or as a table.
///
/// Closed kinds and their coefficient vectors:
///   Constant      {v}          V = v
///   PowerAffine   {k, l, p}    V = (k mu + l)^p
///   Quadratic     {a, b, c}    V = a mu^2 + b mu + c
///   Exponential   {a, b}       V = a exp(b mu)
struct VarianceFunctionSpec {
  enum class Form { Closed, Tabulated };
  enum class ClosedKind { Constant, PowerAffine, Quadratic, Exponential };

  Form form = Form::Closed;
  ClosedKind kind = ClosedKind::Constant;
  std::vector<double> coefficients{1.0};
  std::vector<std::pair<double, double>> table;  // (mu, V), strictly increasing mu
  Interval domain = Interval::real_line();

  double operator()(double mu) const;
  std::string describe() const;
};

VarianceFunctionSpec constant_variance(double v);
VarianceFunctionSpec power_affine_variance(double k, double l, double p);
VarianceFunctionSpec quadratic_variance(double a, double b, double c);
VarianceFunctionSpec exponential_variance(double a, double b);
/// Table of (mu, V) pairs; at least 9 points, mu strictly increasing, V > 0.
VarianceFunctionSpec tabulated_variance(std::vector<std::pair<double, double>> table);
/// Variance function of a built-in family (the base family for Transformed).
VarianceFunctionSpec variance_function_of(const FamilySpec& family);

/// Parses "const:v", "power:k,l,p", "quadratic:a,b,c", "exp:a,b". Throws ConfigError.
VarianceFunctionSpec parse_variance_function(const std::string& text);

/// sigma = sqrt(V) and its first four derivatives at mu:
/// {sigma, sigma', sigma'', sigma''', sigma''''}.
/// Closed forms use Taylor-jet arithmetic; tables use finite-difference
/// weights on the nine nearest nodes. Throws DifferentiationError when the
/// table is too coarse or mu lies outside it, DomainError when V <= 0.
std::array<double, 5> sigma_derivatives(const VarianceFunctionSpec& vf, double mu);

}  // namespace snml
