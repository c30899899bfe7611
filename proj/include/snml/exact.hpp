#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <span>
#include <string>

// Exact rational arithmetic for the Bernoulli family. Every quantity the
// strategies need is rational here: sup_theta p_theta(x^n) = (k/n)^k
// ((n-k)/n)^(n-k) with k the number of ones.
namespace snml::exact {

using Rational = boost::multiprecision::cpp_rational;

std::string to_string(const Rational& r);

/// sup_theta p_theta of a sequence with `ones` ones among `n` outcomes.
Rational sup_likelihood(unsigned ones, unsigned n);

/// sum over continuations y in {0,1}^k of sup p(prefix, y).
Rational conditional_shtarkov_sum(unsigned prefix_ones, unsigned prefix_len, unsigned k);

/// Probability that the next outcome is 1.
Rational snml_next_is_one(std::span<const int> history);
Rational bayes_jeffreys_next_is_one(std::span<const int> history);

Rational snml_joint(std::span<const int> seq, unsigned m);
Rational bayes_jeffreys_joint(std::span<const int> seq, unsigned m);
Rational cnml_joint(std::span<const int> seq, unsigned m);
Rational nml_joint(std::span<const int> seq);

}  // namespace snml::exact
