#include "snml/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "snml/errors.hpp"

namespace snml::quad {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = std::numeric_limits<double>::min();

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                        0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

// Tracks the largest |f| seen so the tail walk can compare against the peak.
struct Evaluator {
  const Integrand& f;
  double peak = 0.0;

  double operator()(double x) {
    double y = f(x);
    if (std::isnan(y)) {
      std::ostringstream msg;
      msg << "integrand returned NaN at x = " << x;
      throw NaNEncountered(msg.str());
    }
    if (std::isinf(y)) {
      std::ostringstream msg;
      msg << "integrand is infinite at x = " << x;
      throw NonConvergence(msg.str());
    }
    peak = std::max(peak, std::abs(y));
    return y;
  }
};

Segment gk15(Evaluator& f, double a, double b, double* max_abs_out = nullptr) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double result_gauss = fc * kWg[3];
  double result_kronrod = fc * kWgk[7];
  double result_abs = std::abs(result_kronrod);
  double max_abs = std::abs(fc);
  std::array<double, 7> fv1{};
  std::array<double, 7> fv2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv1[j] = f1;
    fv2[j] = f2;
    max_abs = std::max({max_abs, std::abs(f1), std::abs(f2)});
    result_kronrod += kWgk[j] * (f1 + f2);
    result_abs += kWgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) result_gauss += kWg[j / 2] * (f1 + f2);
  }
  const double mean = 0.5 * result_kronrod;
  double result_asc = kWgk[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j) result_asc += kWgk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));

  const double width = std::abs(half);
  double err = std::abs((result_kronrod - result_gauss) * half);
  result_asc *= width;
  result_abs *= width;
  if (result_asc != 0.0 && err != 0.0) err = result_asc * std::min(1.0, std::pow(200.0 * err / result_asc, 1.5));
  if (result_abs > kTiny / (50.0 * kEps)) err = std::max(50.0 * kEps * result_abs, err);
  if (max_abs_out) *max_abs_out = max_abs;
  return {a, b, result_kronrod * half, err};
}

bool splittable(const Segment& s) {
  const double mid = 0.5 * (s.a + s.b);
  const double scale = std::max(std::abs(s.a), std::abs(s.b));
  return mid > s.a && mid < s.b && (s.b - s.a) > 8.0 * kEps * scale;
}

struct Partial {
  double value = 0.0;
  double error = 0.0;
  int subdivisions = 0;
};

Partial adaptive(Evaluator& f, double a, double b, double tol_abs, double tol_rel, int budget) {
  if (a == b) return {};
  std::vector<Segment> heap;
  std::vector<Segment> frozen;  // too narrow to bisect further
  heap.push_back(gk15(f, a, b));
  double total = heap.front().value;
  double total_err = heap.front().error;
  int subdivisions = 1;
  auto target = [&] { return std::max(tol_abs, tol_rel * std::abs(total)); };

  while (total_err > target()) {
    if (heap.empty()) {
      std::ostringstream msg;
      msg << "roundoff limits accuracy on [" << a << ", " << b << "]: error estimate " << total_err
          << " exceeds target " << target();
      throw NonConvergence(msg.str());
    }
    if (subdivisions >= budget) {
      std::ostringstream msg;
      msg << "subdivision budget (" << budget << ") exhausted on [" << a << ", " << b << "]: error estimate "
          << total_err << " exceeds target " << target();
      throw NonConvergence(msg.str());
    }
    std::pop_heap(heap.begin(), heap.end());
    Segment worst = heap.back();
    heap.pop_back();
    if (!splittable(worst)) {
      frozen.push_back(worst);
      // An unsplittable segment with a negligible error is simply done.
      continue;
    }
    const double mid = 0.5 * (worst.a + worst.b);
    Segment left = gk15(f, worst.a, mid);
    Segment right = gk15(f, mid, worst.b);
    ++subdivisions;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end());
  }
  // Resum to shed accumulated cancellation in the running totals.
  double value = 0.0;
  double error = 0.0;
  for (const auto& s : heap) {
    value += s.value;
    error += s.error;
  }
  for (const auto& s : frozen) {
    value += s.value;
    error += s.error;
  }
  return {value, error, subdivisions};
}

// Walks panels [c, c + s], [c + s, c + 3s], ... (direction +1) or mirrored.
Partial tail(Evaluator& f, double c, double s, int direction, const Options& opts, double running_total,
             double* reached) {
  constexpr int kMaxPanels = 400;
  constexpr int kMinPanels = 4;
  Partial acc;
  double start = c;
  double width = s;
  double previous = kInf;
  for (int panel = 0; panel < kMaxPanels; ++panel) {
    double end = start + direction * width;
    if (!std::isfinite(end)) break;
    double lo = std::min(start, end);
    double hi = std::max(start, end);
    const double peak_before = f.peak;
    double panel_max = 0.0;
    gk15(f, lo, hi, &panel_max);
    Partial p = adaptive(f, lo, hi, opts.tol_abs * 1e-2, opts.tol_rel, opts.max_subdivisions);
    acc.value += p.value;
    acc.error += p.error;
    acc.subdivisions += p.subdivisions + 1;
    *reached = end;
    const double magnitude = std::abs(p.value);
    const double target = std::max(opts.tol_abs, opts.tol_rel * std::abs(running_total + acc.value));
    const double peak = std::max(peak_before, f.peak);
    const bool negligible = magnitude <= 1e-2 * target;
    const bool below_peak = panel_max <= 1e-16 * peak;
    const bool decaying = magnitude <= previous;
    if (panel + 1 >= kMinPanels && negligible && (below_peak || decaying)) {
      acc.error += magnitude;  // the remaining tail is of the order of the last panel
      return acc;
    }
    previous = magnitude;
    start = end;
    width *= 2.0;
  }
  std::ostringstream msg;
  msg << "unbounded tail from " << c << " did not decay within " << kMaxPanels << " panels (reached " << *reached
      << ")";
  throw DivergentIntegral(msg.str());
}

}  // namespace

QuadratureResult integrate(const Integrand& f, Interval domain, const Options& opts) {
  if (!(domain.lower <= domain.upper)) throw DomainError("integrate: empty or invalid domain " + domain.to_string());
  if (!(opts.tol_abs >= 0.0) || !(opts.tol_rel >= 0.0) || (opts.tol_abs == 0.0 && opts.tol_rel == 0.0))
    throw DomainError("integrate: tolerances must be non-negative and not both zero");
  Evaluator eval{f};
  QuadratureResult result;
  if (domain.is_finite()) {
    Partial p = adaptive(eval, domain.lower, domain.upper, opts.tol_abs, opts.tol_rel, opts.max_subdivisions);
    result.value = p.value;
    result.abs_error_estimate = p.error;
    result.subdivisions = p.subdivisions;
    result.truncated_domain = Interval::closed(domain.lower, domain.upper);
    return result;
  }

  double c = opts.center.value_or(std::isfinite(domain.lower) ? domain.lower
                                  : std::isfinite(domain.upper) ? domain.upper
                                                                : 0.0);
  c = domain.clamp(c);
  double s = opts.scale.value_or(1.0);
  if (!(s > 0.0) || !std::isfinite(s)) s = 1.0;

  Partial body;
  double lo_reached = domain.lower;
  double hi_reached = domain.upper;
  if (std::isfinite(domain.lower) && c > domain.lower) {
    body = adaptive(eval, domain.lower, c, opts.tol_abs * 0.5, opts.tol_rel, opts.max_subdivisions);
  }
  if (std::isfinite(domain.upper) && c < domain.upper) {
    Partial p = adaptive(eval, c, domain.upper, opts.tol_abs * 0.5, opts.tol_rel, opts.max_subdivisions);
    body.value += p.value;
    body.error += p.error;
    body.subdivisions += p.subdivisions;
  }
  if (!std::isfinite(domain.upper)) {
    Partial p = tail(eval, c, s, +1, opts, body.value, &hi_reached);
    body.value += p.value;
    body.error += p.error;
    body.subdivisions += p.subdivisions;
  }
  if (!std::isfinite(domain.lower)) {
    Partial p = tail(eval, c, s, -1, opts, body.value, &lo_reached);
    body.value += p.value;
    body.error += p.error;
    body.subdivisions += p.subdivisions;
  }
  result.value = body.value;
  result.abs_error_estimate = body.error;
  result.subdivisions = body.subdivisions;
  result.truncated_domain = Interval::closed(lo_reached, hi_reached);
  return result;
}

QuadratureResult integrate_mixed(const MixedMeasure& measure, const Integrand& weight, Interval domain,
                                 const Options& opts) {
  double atom_sum = 0.0;
  for (const auto& atom : measure.atoms) {
    if (!(atom.mass >= 0.0)) throw DomainError("integrate_mixed: negative atom mass");
    if (!domain.closure_contains(atom.location))
      throw DomainError("integrate_mixed: atom outside the integration domain");
    atom_sum += atom.mass * weight(atom.location);
  }
  QuadratureResult result;
  if (measure.density) {
    result = integrate([&](double x) { return measure.density(x) * weight(x); }, domain, opts);
  } else {
    result.truncated_domain = domain;
  }
  result.value += atom_sum;
  return result;
}

double laplace_reference(int n, bool boundary) {
  if (n < 1) throw DomainError("laplace_reference: n must be >= 1");
  double full = std::sqrt(2.0 * std::numbers::pi / n);
  return boundary ? 0.5 * full : full;
}

}  // namespace snml::quad
