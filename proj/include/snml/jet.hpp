#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace snml {

/// Truncated Taylor series f(x0 + e) = sum_j c[j] e^j, j = 0..N.
/// Arithmetic on jets propagates derivatives exactly (up to rounding), which
/// is how closed-form variance functions get their sigma derivatives.
template <std::size_t N>
struct Jet {
  std::array<double, N + 1> c{};

  static Jet constant(double v) {
    Jet j;
    j.c[0] = v;
    return j;
  }
  static Jet variable(double x0) {
    Jet j;
    j.c[0] = x0;
    if constexpr (N >= 1) j.c[1] = 1.0;
    return j;
  }

  /// k-th derivative at x0.
  double derivative(std::size_t k) const {
    double factorial = 1.0;
    for (std::size_t i = 2; i <= k; ++i) factorial *= static_cast<double>(i);
    return c[k] * factorial;
  }

  friend Jet operator+(Jet a, const Jet& b) {
    for (std::size_t i = 0; i <= N; ++i) a.c[i] += b.c[i];
    return a;
  }
  friend Jet operator-(Jet a, const Jet& b) {
    for (std::size_t i = 0; i <= N; ++i) a.c[i] -= b.c[i];
    return a;
  }
  friend Jet operator-(Jet a) {
    for (auto& v : a.c) v = -v;
    return a;
  }
  friend Jet operator*(double s, Jet a) {
    for (auto& v : a.c) v *= s;
    return a;
  }
  friend Jet operator*(Jet a, double s) { return s * a; }
  friend Jet operator+(Jet a, double s) {
    a.c[0] += s;
    return a;
  }
  friend Jet operator+(double s, Jet a) { return a + s; }
  friend Jet operator-(Jet a, double s) {
    a.c[0] -= s;
    return a;
  }
  friend Jet operator-(double s, const Jet& a) { return -a + s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (std::size_t k = 0; k <= N; ++k)
      for (std::size_t i = 0; i <= k; ++i) r.c[k] += a.c[i] * b.c[k - i];
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r;
    for (std::size_t k = 0; k <= N; ++k) {
      double s = a.c[k];
      for (std::size_t i = 1; i <= k; ++i) s -= b.c[i] * r.c[k - i];
      r.c[k] = s / b.c[0];
    }
    return r;
  }
  friend Jet operator/(const Jet& a, double s) { return a * (1.0 / s); }
  friend Jet operator/(double s, const Jet& b) { return Jet::constant(s) / b; }
};

template <std::size_t N>
Jet<N> exp(const Jet<N>& a) {
  // r' = a' r
  Jet<N> r;
  r.c[0] = std::exp(a.c[0]);
  for (std::size_t k = 1; k <= N; ++k) {
    double s = 0.0;
    for (std::size_t i = 1; i <= k; ++i) s += static_cast<double>(i) * a.c[i] * r.c[k - i];
    r.c[k] = s / static_cast<double>(k);
  }
  return r;
}

template <std::size_t N>
Jet<N> log(const Jet<N>& a) {
  // a r' = a'
  Jet<N> r;
  r.c[0] = std::log(a.c[0]);
  for (std::size_t k = 1; k <= N; ++k) {
    double s = static_cast<double>(k) * a.c[k];
    for (std::size_t i = 1; i < k; ++i) s -= static_cast<double>(i) * r.c[i] * a.c[k - i];
    r.c[k] = s / (static_cast<double>(k) * a.c[0]);
  }
  return r;
}

template <std::size_t N>
Jet<N> pow(const Jet<N>& a, double p) {
  // a r' = p a' r
  Jet<N> r;
  r.c[0] = std::pow(a.c[0], p);
  for (std::size_t k = 1; k <= N; ++k) {
    double s = 0.0;
    for (std::size_t i = 1; i <= k; ++i)
      s += (p * static_cast<double>(i) - static_cast<double>(k - i)) * a.c[i] * r.c[k - i];
    r.c[k] = s / (static_cast<double>(k) * a.c[0]);
  }
  return r;
}

template <std::size_t N>
Jet<N> sqrt(const Jet<N>& a) {
  return pow(a, 0.5);
}

}  // namespace snml
