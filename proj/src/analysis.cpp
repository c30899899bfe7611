#include "snml/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "snml/errors.hpp"
#include "snml/exact.hpp"

namespace snml {
namespace {

std::string sequence_label(std::span<const double> prefix, std::span<const double> continuation) {
  std::ostringstream s;
  s << "(";
  for (std::size_t i = 0; i < prefix.size(); ++i) s << (i ? "," : "") << prefix[i];
  s << " | ";
  for (std::size_t i = 0; i < continuation.size(); ++i) s << (i ? "," : "") << continuation[i];
  s << ")";
  return s.str();
}

std::string tuple_label(std::span<const double> xs) {
  std::ostringstream s;
  s << "(";
  for (std::size_t i = 0; i < xs.size(); ++i) s << (i ? "," : "") << xs[i];
  s << ")";
  return s.str();
}

// Fills deviation, reference (mean of values unless given) and verdict.
void finish(AnalysisReport& r, double tol, std::optional<double> reference = std::nullopt) {
  double ref = 0.0;
  if (reference) {
    ref = *reference;
  } else if (!r.values.empty()) {
    for (double v : r.values) ref += v;
    ref /= static_cast<double>(r.values.size());
  }
  double dev = 0.0;
  for (double v : r.values) dev = std::max(dev, std::abs(v - ref));
  r.reference_value = ref;
  r.max_abs_deviation = dev;
  r.tolerance_used = tol;
  // Without an external reference the values are compared with each other.
  std::optional<double> spread;
  if (!reference && !r.values.empty()) {
    const auto [lo, hi] = std::minmax_element(r.values.begin(), r.values.end());
    spread = *hi - *lo;
  }
  r.verdict = judge(dev, ref, tol, spread);
}

bool is_exact_bernoulli(const FamilySpec& family) { return family.kind == FamilyKind::Bernoulli; }

std::vector<int> to_ints(std::span<const double> xs) {
  std::vector<int> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(static_cast<int>(x));
  return out;
}

std::vector<std::vector<double>> distinct_permutations(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  std::vector<std::vector<double>> out;
  do {
    out.push_back(xs);
  } while (std::next_permutation(xs.begin(), xs.end()));
  return out;
}

// A mean to draw random test data from.
double random_mean(const FamilySpec& family, std::mt19937_64& rng) {
  const FamilySpec& p = family.parameter_family();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double mu = 0.0;
  switch (p.kind) {
    case FamilyKind::GaussianLocation: mu = -1.0 + 2.0 * r; break;
    case FamilyKind::Bernoulli: mu = 0.2 + 0.6 * r; break;
    default: mu = 0.5 + 1.5 * r; break;
  }
  return p.mean_domain.interior_contains(mu) ? mu : p.mean_domain.clamp(mu);
}

struct GroupResult {
  double discrepancy = 0.0;
  std::string label;
  std::string witness;
};

GroupResult compare_permutations(const FamilySpec& family, std::span<const double> prefix,
                                 const std::vector<double>& continuation, const StrategyOptions& opts) {
  GroupResult out;
  out.label = sequence_label(prefix, continuation);
  const auto perms = distinct_permutations(continuation);
  if (is_exact_bernoulli(family)) {
    std::vector<exact::Rational> joints;
    for (const auto& p : perms) {
      std::vector<double> seq(prefix.begin(), prefix.end());
      seq.insert(seq.end(), p.begin(), p.end());
      joints.push_back(exact::snml_joint(to_ints(seq), static_cast<unsigned>(prefix.size())));
    }
    const auto [lo, hi] = std::minmax_element(joints.begin(), joints.end());
    if (*hi > 0) out.discrepancy = static_cast<double>(exact::Rational((*hi - *lo) / *hi));
    std::ostringstream w;
    for (std::size_t i = 0; i < perms.size(); ++i) {
      std::vector<double> seq(prefix.begin(), prefix.end());
      seq.insert(seq.end(), perms[i].begin(), perms[i].end());
      w << (i ? ", " : "") << tuple_label(seq) << " -> " << exact::to_string(joints[i]);
    }
    out.witness = w.str();
    return out;
  }
  std::vector<double> logs;
  for (const auto& p : perms) {
    std::vector<double> seq(prefix.begin(), prefix.end());
    seq.insert(seq.end(), p.begin(), p.end());
    logs.push_back(log_strategy_joint(family, Strategy::SNML, ObservationSequence(seq, prefix.size()), opts));
  }
  const auto [lo, hi] = std::minmax_element(logs.begin(), logs.end());
  out.discrepancy = -std::expm1(*lo - *hi);
  std::ostringstream w;
  w.precision(17);
  auto show = [&](std::size_t i) {
    std::vector<double> seq(prefix.begin(), prefix.end());
    seq.insert(seq.end(), perms[i].begin(), perms[i].end());
    w << tuple_label(seq) << " -> " << std::exp(logs[i]);
  };
  show(static_cast<std::size_t>(hi - logs.begin()));
  w << " vs ";
  show(static_cast<std::size_t>(lo - logs.begin()));
  out.witness = w.str();
  return out;
}

}  // namespace

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Constant: return "constant";
    case Verdict::NonConstant: return "nonconstant";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

std::string to_string(ExchangeableClass c) {
  switch (c) {
    case ExchangeableClass::GaussianLocation: return "gaussian_location";
    case ExchangeableClass::GammaLinearSigma: return "gamma_linear_sigma";
    case ExchangeableClass::Tweedie32Class: return "tweedie32_class";
    case ExchangeableClass::NotExchangeable: return "not_exchangeable";
  }
  return "unknown";
}

Verdict judge(double max_abs_deviation, double reference, double tol, std::optional<double> spread) {
  const double scale = std::max(1.0, std::abs(reference));
  if (!std::isfinite(max_abs_deviation)) return Verdict::NonConstant;
  if (max_abs_deviation <= tol * scale) return Verdict::Constant;
  if (spread.value_or(max_abs_deviation) > kNonConstantThreshold * scale) return Verdict::NonConstant;
  return Verdict::Inconclusive;
}

double condition_integral(const FamilySpec& family, double mu0, int n) {
  if (n < 1) throw DomainError("condition_integral: n must be >= 1");
  const FamilySpec& p = family.parameter_family();
  const Interval domain = Interval::closed(p.mean_domain.lower, p.mean_domain.upper);
  if (!domain.contains(mu0)) throw DomainError("condition_integral: mu0 outside the mean domain");
  // dmu / sigma(mu) = dbeta: integrate exp(-n D) in the geodesic chart based
  // at an interior reference, which removes the endpoint singularities of
  // 1/sigma (Poisson and Bernoulli near 0).
  const double ref = p.kind == FamilyKind::GaussianLocation ? 0.0 : p.kind == FamilyKind::Bernoulli ? 0.5 : 1.0;
  auto beta_of = [&](double mu) {
    if (std::isinf(mu)) return mu;
    if (p.kind == FamilyKind::GammaShape && mu == 0.0) return -kInf;
    return geodesic_from_mean(p, mu, ref);
  };
  const Interval range{beta_of(domain.lower), beta_of(domain.upper), std::isfinite(domain.lower),
                       std::isfinite(domain.upper)};
  auto w = [&](double beta) {
    double mu = 0.0;
    try {
      mu = mean_from_geodesic(p, beta, ref);
    } catch (const DomainError&) {
      return 0.0;  // rounding just past an endpoint
    }
    if (!domain.contains(mu)) return 0.0;
    return std::exp(-n * kl_divergence(p, mu0, mu));
  };
  // Near a boundary the integrand can be a cusp sampled through rounding
  // noise (Bernoulli as mu -> 1), so ask for 1e-11 rather than 1e-12.
  quad::Options q{.tol_abs = 1e-13, .tol_rel = 1e-11, .max_subdivisions = 4000};
  q.center = range.clamp(beta_of(mu0));
  q.scale = 1.0 / std::sqrt(static_cast<double>(n));
  try {
    return quad::integrate(w, range, q).value;
  } catch (const DivergentIntegral& e) {
    throw DivergentIntegral(std::string("condition integral diverges: ") + e.what());
  }
}

AnalysisReport check_constancy(const FamilySpec& family, int n, const std::vector<double>& mu0_grid, double tol,
                               Execution exec) {
  AnalysisReport r;
  r.name = "constancy";
  r.grid = mu0_grid;
  r.values = grid_map<double>(exec, mu0_grid.size(), [&](std::size_t i) {
    return condition_integral(family, mu0_grid[i], n);
  });
  finish(r, tol);
  std::ostringstream note;
  note << "n = " << n << ", Laplace reference sqrt(2 pi / n) = " << std::sqrt(2.0 * std::numbers::pi / n);
  r.notes.push_back(note.str());
  return r;
}

AnalysisReport exchangeability_test(const FamilySpec& family, std::size_t m, std::size_t n, const TestSet& tests,
                                    double tol, Execution exec, const StrategyOptions& opts) {
  if (m >= n) throw DomainError("exchangeability_test: need m < n");
  struct Case {
    std::vector<double> prefix;
    std::vector<double> continuation;
  };
  std::vector<Case> cases;
  switch (tests.kind) {
    case TestSet::Kind::AllDiscrete: {
      const FamilySpec& p = family.parameter_family();
      if (p.kind != FamilyKind::Bernoulli)
        throw DomainError("exchangeability_test: AllDiscrete needs a family with finite support");
      std::vector<double> support{0.0, 1.0};
      if (family.kind == FamilyKind::Transformed)
        for (double& s : support) {
          const FamilySpec* cur = &family;
          std::vector<const Transform*> chain;
          while (cur->kind == FamilyKind::Transformed) {
            chain.push_back(cur->transform.get());
            cur = cur->base.get();
          }
          for (auto it = chain.rbegin(); it != chain.rend(); ++it) s = (*it)->forward(s);
        }
      std::sort(support.begin(), support.end());
      // Prefixes in full, continuations as multisets (sorted tuples).
      const std::size_t k = n - m;
      for (std::size_t code = 0; code < (std::size_t{1} << m); ++code) {
        std::vector<double> prefix;
        for (std::size_t j = 0; j < m; ++j) prefix.push_back(support[(code >> (m - 1 - j)) & 1U]);
        for (std::size_t ones = 0; ones <= k; ++ones) {
          std::vector<double> cont(k - ones, support[0]);
          cont.insert(cont.end(), ones, support[1]);
          if (ones == 0 || ones == k) continue;  // a single arrangement
          cases.push_back({prefix, cont});
        }
      }
      break;
    }
    case TestSet::Kind::RandomContinuations: {
      std::mt19937_64 rng(tests.seed);
      for (std::size_t i = 0; i < tests.count; ++i) {
        const double mu = random_mean(family, rng);
        const std::vector<double> draws = sample(family, mu, n, rng());
        Case c;
        c.prefix.assign(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(m));
        c.continuation.assign(draws.begin() + static_cast<std::ptrdiff_t>(m), draws.end());
        cases.push_back(std::move(c));
      }
      break;
    }
    case TestSet::Kind::Explicit:
      for (const auto& s : tests.sequences) {
        if (s.size() != n) throw DomainError("exchangeability_test: explicit sequences must have length n");
        cases.push_back({std::vector<double>(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(m)),
                         std::vector<double>(s.begin() + static_cast<std::ptrdiff_t>(m), s.end())});
      }
      break;
  }

  const auto results = grid_map<GroupResult>(exec, cases.size(), [&](std::size_t i) {
    return compare_permutations(family, cases[i].prefix, cases[i].continuation, opts);
  });
  AnalysisReport r;
  r.name = "exchangeability";
  std::size_t worst = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    r.grid.push_back(static_cast<double>(i));
    r.values.push_back(results[i].discrepancy);
    r.labels.push_back(results[i].label);
    if (results[i].discrepancy > results[worst].discrepancy) worst = i;
  }
  finish(r, tol, 0.0);
  if (!results.empty()) r.notes.push_back("witness: " + results[worst].witness);
  for (std::size_t i = 0; i < results.size(); ++i)
    if (i != worst && results[i].discrepancy > tol) r.notes.push_back("also: " + results[i].witness);
  return r;
}

AnalysisReport bayes_cnml_agreement(const FamilySpec& family, std::size_t m, std::size_t n,
                                    const std::vector<std::vector<double>>& sequences, double tol, Execution exec,
                                    const StrategyOptions& opts) {
  if (m >= n) throw DomainError("bayes_cnml_agreement: need m < n");
  AnalysisReport r;
  r.name = "bayes_cnml_agreement";
  for (const auto& s : sequences) {
    if (s.size() != n) throw DomainError("bayes_cnml_agreement: sequences must have length n");
    r.labels.push_back(sequence_label(std::span(s).first(m), std::span(s).subspan(m)));
  }
  r.values = grid_map<double>(exec, sequences.size(), [&](std::size_t i) {
    const ObservationSequence seq(sequences[i], m);
    const double bayes = log_strategy_joint(family, Strategy::BayesJeffreys, seq, opts);
    const double cnml = log_cnml_joint(family, seq, n, opts);
    return std::abs(std::expm1(bayes - cnml)) / std::max(1.0, std::exp(bayes - cnml));
  });
  for (std::size_t i = 0; i < sequences.size(); ++i) r.grid.push_back(static_cast<double>(i));
  finish(r, tol, 0.0);
  return r;
}

AnalysisReport laplace_asymptotics_check(const FamilySpec& family, double mu0, LaplacePosition position,
                                         const std::vector<int>& n_list, Execution exec) {
  if (n_list.empty()) throw DomainError("laplace_asymptotics_check: empty n list");
  const Interval& dom = family.parameter_family().mean_domain;
  if (position == LaplacePosition::Boundary) {
    const bool at_lower = std::isfinite(dom.lower) && mu0 == dom.lower && dom.lower_included;
    const bool at_upper = std::isfinite(dom.upper) && mu0 == dom.upper && dom.upper_included;
    if (!at_lower && !at_upper)
      throw DomainError("laplace_asymptotics_check: boundary position needs mu0 at an included endpoint of " +
                        dom.to_string());
  } else if (!dom.interior_contains(mu0)) {
    throw DomainError("laplace_asymptotics_check: interior position needs mu0 inside " + dom.to_string());
  }
  AnalysisReport r;
  r.name = "laplace_asymptotics";
  for (int n : n_list) r.grid.push_back(n);
  r.values = grid_map<double>(exec, n_list.size(), [&](std::size_t i) {
    return condition_integral(family, mu0, n_list[i]) / quad::laplace_reference(n_list[i], false);
  });
  const double ref = position == LaplacePosition::Boundary ? 0.5 : 1.0;
  r.reference_value = ref;
  r.max_abs_deviation = std::abs(r.values.back() - ref);
  r.tolerance_used = 5.0 / n_list.back();
  r.verdict = r.max_abs_deviation <= r.tolerance_used ? Verdict::Constant : Verdict::NonConstant;
  for (std::size_t i = 1; i < r.values.size(); ++i)
    if (std::abs(r.values[i] - ref) > std::abs(r.values[i - 1] - ref))
      r.notes.push_back("ratio does not approach the reference monotonically at n = " + std::to_string(n_list[i]));
  return r;
}

DerivativeBundle derivative_bundle(const VarianceFunctionSpec& vf, double mu) {
  const auto d = sigma_derivatives(vf, mu);
  const double s = d[0], s1 = d[1], s2 = d[2], s3 = d[3], s4 = d[4];
  DerivativeBundle b;
  b.mu = mu;
  b.sigma = s;
  b.sigma_derivs = {s1, s2, s3, s4};
  b.D2 = 1.0;
  b.D3 = -s1;
  b.D4 = s1 * s1 - 2.0 * s * s2;
  b.D5 = -s1 * s1 * s1 + 2.0 * s * s1 * s2 - 3.0 * s * s * s3;
  b.D6 = s1 * s1 * s1 * s1 - 4.0 * s * s1 * s1 * s2 - 3.0 * s * s * s1 * s3 + 4.0 * s * s * s2 * s2 -
         4.0 * s * s * s * s4;
  b.g = s1 * s1 + 3.0 * s * s2;
  return b;
}

namespace {

double default_tolerance(const VarianceFunctionSpec& vf) {
  return vf.form == VarianceFunctionSpec::Form::Closed ? 1e-6 : 1e-3;
}

}  // namespace

AnalysisReport sigma_ode_check(const VarianceFunctionSpec& vf, const std::vector<double>& mu_grid,
                               std::optional<double> tol, Execution exec) {
  if (mu_grid.size() < 2) throw DomainError("sigma_ode_check: grid needs at least 2 points");
  AnalysisReport r;
  r.name = "sigma_ode";
  r.grid = mu_grid;
  r.derivatives = grid_map<DerivativeBundle>(exec, mu_grid.size(),
                                             [&](std::size_t i) { return derivative_bundle(vf, mu_grid[i]); });
  for (const auto& b : r.derivatives) r.values.push_back(b.g);
  finish(r, tol.value_or(default_tolerance(vf)));
  if (r.verdict == Verdict::Constant) r.constant = r.reference_value;
  r.notes.push_back(vf.describe());
  return r;
}

AnalysisReport higher_order_check(const VarianceFunctionSpec& vf, const std::vector<double>& mu_grid,
                                  std::optional<double> tol, Execution exec) {
  const AnalysisReport ode = sigma_ode_check(vf, mu_grid, tol, exec);
  const double t = ode.tolerance_used;

  AnalysisReport fifth;
  fifth.name = "5*D3^2-3*D4";
  AnalysisReport sixth;
  sixth.name = "385*D3^4+105*D4^2-24*D6-630*D3^2*D4+168*D3*D5";
  for (const auto& b : ode.derivatives) {
    fifth.grid.push_back(b.mu);
    fifth.values.push_back(5.0 * b.D3 * b.D3 - 3.0 * b.D4);
    sixth.grid.push_back(b.mu);
    const double d3sq = b.D3 * b.D3;
    sixth.values.push_back(385.0 * d3sq * d3sq + 105.0 * b.D4 * b.D4 - 24.0 * b.D6 - 630.0 * d3sq * b.D4 +
                           168.0 * b.D3 * b.D5);
  }
  finish(fifth, t);
  finish(sixth, t);

  AnalysisReport r;
  r.name = "higher_order";
  r.grid = mu_grid;
  r.derivatives = ode.derivatives;
  r.tolerance_used = t;
  r.values = fifth.values;
  r.reference_value = fifth.reference_value;
  r.max_abs_deviation = std::max(fifth.max_abs_deviation, sixth.max_abs_deviation);
  r.components = {fifth, sixth};
  if (ode.constant) {
    // On ODE solutions the sixth-order combination collapses to
    // -(64/3) c (sigma')^2 + 41 c^2, with c two thirds of the ODE constant g.
    const double c = 2.0 * *ode.constant / 3.0;
    AnalysisReport reduced;
    reduced.name = "-(64/3)*c*sigma'^2+41*c^2";
    for (const auto& b : ode.derivatives) {
      reduced.grid.push_back(b.mu);
      reduced.values.push_back(-(64.0 / 3.0) * c * b.sigma_derivs[0] * b.sigma_derivs[0] + 41.0 * c * c);
    }
    finish(reduced, t);
    r.components.push_back(reduced);
    r.constant = ode.constant;
  }
  if (fifth.verdict == Verdict::Constant && sixth.verdict == Verdict::Constant) {
    r.verdict = Verdict::Constant;
  } else if (fifth.verdict == Verdict::NonConstant || sixth.verdict == Verdict::NonConstant) {
    r.verdict = Verdict::NonConstant;
  } else {
    r.verdict = Verdict::Inconclusive;
  }
  r.notes.push_back(vf.describe());
  return r;
}

std::vector<double> default_grid(const VarianceFunctionSpec& vf, std::size_t count) {
  if (count < 2) throw DomainError("default_grid: need at least 2 points");
  double lo = vf.domain.lower;
  double hi = vf.domain.upper;
  if (vf.form == VarianceFunctionSpec::Form::Tabulated) {
    // Stay where a centred nine-point stencil fits.
    lo = vf.table[4].first;
    hi = vf.table[vf.table.size() - 5].first;
    std::vector<double> g;
    for (std::size_t i = 0; i < count; ++i) g.push_back(lo + (hi - lo) * static_cast<double>(i) / (count - 1));
    return g;
  }
  if (std::isfinite(lo) && std::isfinite(hi)) {
    std::vector<double> g;
    for (std::size_t i = 0; i < count; ++i) g.push_back(lo + (hi - lo) * static_cast<double>(i + 1) / (count + 1));
    return g;
  }
  double a = -2.0;
  double b = 2.0;
  if (std::isfinite(lo)) {
    a = lo + 0.5;
    b = lo + 5.0;
  } else if (std::isfinite(hi)) {
    a = hi - 5.0;
    b = hi - 0.5;
  }
  std::vector<double> g;
  for (std::size_t i = 0; i < count; ++i) g.push_back(a + (b - a) * static_cast<double>(i) / (count - 1));
  return g;
}

namespace {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double relative_residual = 0.0;
  double relative_slope = 0.0;  // |slope| * grid span / max |y|
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LinearFit f;
  const double det = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / n;
  double ymax = 0.0;
  double resid = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ymax = std::max(ymax, std::abs(y[i]));
    resid = std::max(resid, std::abs(y[i] - (f.slope * x[i] + f.intercept)));
  }
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  f.relative_residual = resid / ymax;
  f.relative_slope = std::abs(f.slope) * (*xmax - *xmin) / ymax;
  return f;
}

std::string morris_member(const VarianceFunctionSpec& vf) {
  const auto& co = vf.coefficients;
  const double a = co[0], b = co[1], c = co[2];
  if (a == 0.0 && b == 0.0) return "normal";
  if (a == 0.0) return "Poisson";
  const double disc = b * b - 4.0 * a * c;
  if (a < 0.0) return "binomial (Bernoulli)";
  if (disc > 0.0) return "negative binomial";
  if (disc == 0.0) return "gamma";
  return "generalized hyperbolic secant";
}

}  // namespace

Classification classify_family(const VarianceFunctionSpec& vf, const std::vector<double>& mu_grid) {
  Classification out;
  if (vf.form == VarianceFunctionSpec::Form::Closed && vf.kind == VarianceFunctionSpec::ClosedKind::Constant) {
    out.kind = ExchangeableClass::GaussianLocation;
    out.l = std::sqrt(vf.coefficients.at(0));
    return out;
  }
  const std::vector<double> grid = mu_grid.empty() ? default_grid(vf, 21) : mu_grid;
  if (grid.size() < 3) throw DomainError("classify_family: grid needs at least 3 points");
  const double threshold = vf.form == VarianceFunctionSpec::Form::Closed ? 1e-8 : 1e-5;
  std::vector<double> sigma;
  std::vector<double> v23;
  for (double mu : grid) {
    const double v = vf(mu);
    if (!(v > 0.0)) throw DomainError("classify_family: variance function is not positive on the grid");
    sigma.push_back(std::sqrt(v));
    v23.push_back(std::cbrt(v * v));
  }
  const LinearFit fs = fit_line(grid, sigma);
  if (fs.relative_residual < threshold) {
    out.k = fs.slope;
    out.l = fs.intercept;
    out.kind = fs.relative_slope < threshold ? ExchangeableClass::GaussianLocation
                                             : ExchangeableClass::GammaLinearSigma;
    return out;
  }
  const LinearFit ft = fit_line(grid, v23);
  if (ft.relative_residual < threshold && ft.relative_slope >= threshold) {
    out.kind = ExchangeableClass::Tweedie32Class;
    out.k = ft.slope;
    out.l = ft.intercept;
    return out;
  }

  out.kind = ExchangeableClass::NotExchangeable;
  std::ostringstream reason;
  const AnalysisReport ode = sigma_ode_check(vf, grid, std::nullopt, Execution::Serial);
  if (ode.verdict != Verdict::Constant) {
    reason << "ODE (sigma')^2 + 3 sigma sigma'' is " << to_string(ode.verdict) << " (max deviation "
           << ode.max_abs_deviation << ")";
  } else {
    const AnalysisReport higher = higher_order_check(vf, grid, std::nullopt, Execution::Serial);
    if (higher.verdict != Verdict::Constant)
      reason << "the ODE holds with c = " << *ode.constant << " but the higher-order condition is "
             << to_string(higher.verdict);
    else
      reason << "passes the ODE and higher-order checks but matches neither V = (k mu + l)^2 nor "
                "V = (k mu + l)^(3/2)";
  }
  if (vf.form == VarianceFunctionSpec::Form::Closed && vf.kind == VarianceFunctionSpec::ClosedKind::Quadratic)
    reason << "; quadratic but not a perfect square; Morris-list member " << morris_member(vf);
  out.reason = reason.str();
  return out;
}

FamilySpec transform_family(const FamilySpec& family, Transform transform) {
  if (!transform.forward || !transform.inverse || !transform.inverse_derivative_abs)
    throw DomainError("transform_family: transform needs forward, inverse and inverse_derivative_abs");
  const ConvexCore cc = convex_core(family);
  std::vector<double> probes;
  constexpr int kProbes = 41;
  for (int i = 0; i < kProbes; ++i) {
    const double u = static_cast<double>(i + 1) / (kProbes + 1);  // (0, 1)
    double x = 0.0;
    if (cc.is_finite()) {
      x = cc.lower + (cc.upper - cc.lower) * u;
    } else if (std::isfinite(cc.lower)) {
      x = cc.lower + std::pow(10.0, -3.0 + 6.0 * u);
    } else if (std::isfinite(cc.upper)) {
      x = cc.upper - std::pow(10.0, -3.0 + 6.0 * u);
    } else {
      x = std::sinh(12.0 * (u - 0.5));
    }
    probes.push_back(x);
  }
  int direction = 0;
  double previous = transform.forward(probes.front());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double x = probes[i];
    const double y = transform.forward(x);
    if (!std::isfinite(y)) throw NonMonotone("transform is not finite at x = " + std::to_string(x));
    if (i > 0) {
      const int step = y > previous ? 1 : (y < previous ? -1 : 0);
      if (step == 0 || (direction != 0 && step != direction))
        throw NonMonotone("transform '" + transform.name + "' is not strictly monotone near x = " +
                          std::to_string(x));
      direction = step;
    }
    previous = y;
    const double back = transform.inverse(y);
    if (std::abs(back - x) > 1e-9 * std::max(1.0, std::abs(x)))
      throw NonMonotone("transform '" + transform.name + "': inverse does not undo forward at x = " +
                        std::to_string(x));
    const double h = 1e-6 * std::max(1.0, std::abs(y));
    const double numeric = std::abs((transform.inverse(y + h) - transform.inverse(y - h)) / (2.0 * h));
    const double given = transform.inverse_derivative_abs(y);
    if (!(given > 0.0) || std::abs(numeric - given) > 1e-4 * std::max(given, 1e-300) + 1e-12)
      throw NonMonotone("transform '" + transform.name + "': inverse derivative inconsistent at y = " +
                        std::to_string(y));
  }
  return make_transformed(family, std::move(transform));
}

namespace {

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

nlohmann::json report_json(const AnalysisReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["verdict"] = to_string(r.verdict);
  j["reference_value"] = finite_or_null(r.reference_value);
  j["max_abs_deviation"] = finite_or_null(r.max_abs_deviation);
  j["tolerance_used"] = r.tolerance_used;
  auto& pts = j["points"] = nlohmann::json::array();
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    nlohmann::json p;
    p["point"] = r.grid[i];
    p["value"] = finite_or_null(i < r.values.size() ? r.values[i] : std::nan(""));
    if (i < r.labels.size()) p["label"] = r.labels[i];
    pts.push_back(p);
  }
  if (!r.notes.empty()) j["notes"] = r.notes;
  if (r.constant) j["c"] = *r.constant;
  if (!r.derivatives.empty()) {
    auto& ds = j["derivatives"] = nlohmann::json::array();
    for (const auto& b : r.derivatives)
      ds.push_back({{"mu", b.mu},
                    {"D2", b.D2},
                    {"D3", b.D3},
                    {"D4", b.D4},
                    {"D5", b.D5},
                    {"D6", b.D6},
                    {"sigma", b.sigma},
                    {"sigma_derivs", b.sigma_derivs},
                    {"g", b.g}});
  }
  if (!r.components.empty()) {
    auto& cs = j["components"] = nlohmann::json::array();
    for (const auto& c : r.components) cs.push_back(report_json(c));
  }
  return j;
}

}  // namespace

std::string report_to_json(const AnalysisReport& report) { return report_json(report).dump(2); }

std::string report_to_csv(const AnalysisReport& report) {
  std::string out = "point,value,deviation\n";
  char buf[128];
  for (std::size_t i = 0; i < report.grid.size() && i < report.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", report.grid[i], report.values[i],
                  report.values[i] - report.reference_value);
    out += buf;
  }
  return out;
}

std::vector<CsvRow> parse_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "point,value,deviation")
    throw ConfigError("report CSV must start with the header point,value,deviation");
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 3> f{};
    std::size_t start = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t comma = line.find(',', start);
      if ((k < 2) != (comma != std::string::npos)) throw ConfigError("malformed report CSV line: " + line);
      const std::string field = line.substr(start, k < 2 ? comma - start : std::string::npos);
      char* end = nullptr;
      f[k] = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0') throw ConfigError("malformed number in report CSV: " + field);
      start = comma + 1;
    }
    rows.push_back({f[0], f[1], f[2]});
  }
  return rows;
}

}  // namespace snml
