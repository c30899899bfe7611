#include "snml/exact.hpp"

#include "snml/errors.hpp"

namespace snml::exact {
namespace {

Rational power(const Rational& base, unsigned exponent) {
  Rational out = 1;
  for (unsigned i = 0; i < exponent; ++i) out *= base;
  return out;
}

Rational binomial(unsigned n, unsigned k) {
  Rational out = 1;
  for (unsigned i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

unsigned count_ones(std::span<const int> xs) {
  unsigned ones = 0;
  for (int x : xs) {
    if (x != 0 && x != 1) throw UnsupportedPoint("bernoulli outcomes must be 0 or 1");
    ones += static_cast<unsigned>(x);
  }
  return ones;
}

}  // namespace

std::string to_string(const Rational& r) {
  std::string s = numerator(r).str();
  if (denominator(r) != 1) s += "/" + denominator(r).str();
  return s;
}

Rational sup_likelihood(unsigned ones, unsigned n) {
  if (ones > n) throw DomainError("sup_likelihood: more ones than outcomes");
  if (n == 0) return 1;
  const unsigned zeros = n - ones;
  return power(Rational(ones, n), ones) * power(Rational(zeros, n), zeros);
}

Rational conditional_shtarkov_sum(unsigned prefix_ones, unsigned prefix_len, unsigned k) {
  Rational total = 0;
  for (unsigned j = 0; j <= k; ++j) total += binomial(k, j) * sup_likelihood(prefix_ones + j, prefix_len + k);
  return total;
}

Rational snml_next_is_one(std::span<const int> history) {
  const unsigned ones = count_ones(history);
  const auto t = static_cast<unsigned>(history.size()) + 1;
  const Rational one = sup_likelihood(ones + 1, t);
  const Rational zero = sup_likelihood(ones, t);
  return one / (one + zero);
}

Rational bayes_jeffreys_next_is_one(std::span<const int> history) {
  // Beta(1/2, 1/2) prior: posterior mean (k + 1/2) / (t + 1).
  const unsigned ones = count_ones(history);
  return (Rational(ones) + Rational(1, 2)) / (Rational(static_cast<unsigned>(history.size())) + 1);
}

namespace {

template <class NextIsOne>
Rational sequential_joint(std::span<const int> seq, unsigned m, NextIsOne next) {
  if (m > seq.size()) throw DomainError("conditioning length exceeds the sequence");
  count_ones(seq);
  Rational joint = 1;
  for (std::size_t t = m; t < seq.size(); ++t) {
    const Rational p1 = next(seq.first(t));
    joint *= seq[t] == 1 ? p1 : 1 - p1;
  }
  return joint;
}

}  // namespace

Rational snml_joint(std::span<const int> seq, unsigned m) { return sequential_joint(seq, m, snml_next_is_one); }

Rational bayes_jeffreys_joint(std::span<const int> seq, unsigned m) {
  return sequential_joint(seq, m, bayes_jeffreys_next_is_one);
}

Rational cnml_joint(std::span<const int> seq, unsigned m) {
  if (m > seq.size()) throw DomainError("conditioning length exceeds the sequence");
  const auto n = static_cast<unsigned>(seq.size());
  const unsigned ones = count_ones(seq);
  const unsigned prefix_ones = count_ones(seq.first(m));
  return sup_likelihood(ones, n) / conditional_shtarkov_sum(prefix_ones, m, n - m);
}

Rational nml_joint(std::span<const int> seq) { return cnml_joint(seq, 0); }

}  // namespace snml::exact
