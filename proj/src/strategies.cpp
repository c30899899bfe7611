#include "snml/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "snml/errors.hpp"

namespace snml {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// The base measure of a family expressed in observation coordinates.
struct MeasurePlan {
  enum class Kind { FiniteSet, Lattice, Continuous };
  Kind kind = Kind::Continuous;
  std::vector<double> points;  // FiniteSet support, or the atoms of a continuous measure
  Interval interval;           // Lebesgue part
  std::function<double(double)> to_observation;  // base coordinate -> observation
};

MeasurePlan make_plan(const FamilySpec& family) {
  std::vector<const Transform*> chain;  // outermost first
  const FamilySpec* cur = &family;
  while (cur->kind == FamilyKind::Transformed) {
    chain.push_back(cur->transform.get());
    cur = cur->base.get();
  }
  MeasurePlan plan;
  plan.to_observation = [chain](double x) {
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) x = (*it)->forward(x);
    return x;
  };
  switch (cur->kind) {
    case FamilyKind::Bernoulli:
      plan.kind = MeasurePlan::Kind::FiniteSet;
      plan.points = {plan.to_observation(0.0), plan.to_observation(1.0)};
      break;
    case FamilyKind::Poisson: plan.kind = MeasurePlan::Kind::Lattice; break;
    case FamilyKind::Tweedie32:
      plan.kind = MeasurePlan::Kind::Continuous;
      plan.interval = convex_core(family);
      plan.points = {plan.to_observation(0.0)};
      break;
    default:
      plan.kind = MeasurePlan::Kind::Continuous;
      plan.interval = convex_core(family);
      break;
  }
  return plan;
}

// Typical interior mean used when there is no data to centre on.
double default_center(const FamilySpec& family) {
  const FamilySpec& p = family.parameter_family();
  switch (p.kind) {
    case FamilyKind::GaussianLocation: return p.mean_domain.clamp(0.0);
    case FamilyKind::Bernoulli: return p.mean_domain.clamp(0.5);
    default: return p.mean_domain.clamp(1.0);
  }
}

struct Hint {
  double base_center = 0.0;  // mean-chart centre
  double obs_center = 0.0;   // where the integrand over observations peaks, roughly
  double obs_scale = 1.0;
};

Hint hint_for(const FamilySpec& family, std::span<const double> data) {
  Hint h;
  h.base_center = data.empty() ? default_center(family) : mle_mean(family, data).mean;
  const MeasurePlan plan = make_plan(family);
  h.obs_center = plan.to_observation(h.base_center);
  h.obs_scale = natural_scale(family, h.base_center);
  if (!std::isfinite(h.obs_center)) {
    h.obs_center = default_center(family);
    h.obs_scale = 1.0;
  }
  return h;
}

std::vector<double> concat(std::span<const double> a, double y) {
  std::vector<double> out(a.begin(), a.end());
  out.push_back(y);
  return out;
}

// sum/integral of g over the family's base measure in observation space.
// For lattice measures the visited points and their values are reported
// through `visit`.
double integrate_measure(const MeasurePlan& plan, const std::function<double(double)>& g, const Hint& hint,
                         const quad::Options& base_opts,
                         const std::function<void(double, double)>& visit = nullptr) {
  switch (plan.kind) {
    case MeasurePlan::Kind::FiniteSet: {
      double total = 0.0;
      for (double p : plan.points) {
        const double v = g(p);
        if (visit) visit(p, v);
        total += v;
      }
      return total;
    }
    case MeasurePlan::Kind::Lattice: {
      double total = 0.0;
      double previous = std::numeric_limits<double>::infinity();
      const double mode_bound = hint.base_center + 10.0 * std::sqrt(std::max(hint.base_center, 1.0)) + 10.0;
      constexpr long kMaxPoints = 2'000'000;
      for (long i = 0; i < kMaxPoints; ++i) {
        const double loc = plan.to_observation(static_cast<double>(i));
        const double v = g(loc);
        if (std::isnan(v)) throw NaNEncountered("lattice sum produced NaN");
        if (visit) visit(loc, v);
        total += v;
        if (i > mode_bound && v <= previous && v <= 1e-17 * total) return total;
        previous = v;
      }
      throw DivergentIntegral("lattice sum did not converge: right tail does not decay");
    }
    case MeasurePlan::Kind::Continuous: {
      double total = 0.0;
      for (double p : plan.points) {
        const double v = g(p);
        if (visit) visit(p, v);
        total += v;
      }
      quad::Options opts = base_opts;
      opts.center = plan.interval.clamp(hint.obs_center);
      opts.scale = hint.obs_scale;
      total += quad::integrate(g, plan.interval, opts).value;
      return total;
    }
  }
  return 0.0;
}

void require_all_supported(const FamilySpec& family, std::span<const double> values) {
  for (double x : values) require_supported(family, x);
}

}  // namespace

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::NML: return "nml";
    case Strategy::CNML: return "cnml";
    case Strategy::SNML: return "snml";
    case Strategy::BayesJeffreys: return "bayes_jeffreys";
  }
  return "unknown";
}

std::size_t default_conditioning_length(const FamilySpec& family) {
  return family.parameter_family().kind == FamilyKind::Bernoulli ? 0 : 1;
}

std::string nml_divergence_reason(const FamilySpec& family) {
  const FamilySpec& p = family.parameter_family();
  const Interval& dom = p.mean_domain;
  std::string left;
  std::string right;
  switch (p.kind) {
    case FamilyKind::Bernoulli: return "";
    case FamilyKind::GaussianLocation:
      if (!std::isfinite(dom.lower)) left = "left tail: sup_theta p_theta(y) is constant in y";
      if (!std::isfinite(dom.upper)) right = "right tail: sup_theta p_theta(y) is constant in y";
      break;
    case FamilyKind::GammaShape:
      if (dom.lower == 0.0) left = "left tail: sup_theta p_theta(y) behaves like 1/y near 0";
      if (!std::isfinite(dom.upper)) right = "right tail: sup_theta p_theta(y) behaves like 1/y";
      break;
    case FamilyKind::Tweedie32:
      // The atom at 0 keeps the left tail finite.
      if (!std::isfinite(dom.upper)) right = "right tail: sup_theta p_theta(y) decays only like y^(-3/4)";
      break;
    case FamilyKind::Poisson:
      if (!std::isfinite(dom.upper)) right = "right tail: sup_theta p_theta(y) decays only like y^(-1/2)";
      break;
    case FamilyKind::Transformed: break;
  }
  std::string reason = left;
  if (!right.empty()) reason += (reason.empty() ? "" : "; ") + right;
  if (!reason.empty() && family.kind == FamilyKind::Transformed) reason += " (in the untransformed coordinates)";
  return reason;
}

double PredictiveDistribution::normalizer() const { return std::exp(log_normalizer); }

double PredictiveDistribution::value_at(double x) const {
  for (const auto& a : atoms)
    if (a.location == x) return a.mass;
  if (!support.closure_contains(x)) return 0.0;
  if (density) return density(x);
  return 0.0;
}

double PredictiveDistribution::total_mass(const quad::Options& opts) const {
  double total = tail_mass;
  for (const auto& a : atoms) total += a.mass;
  if (density) {
    quad::Options o = opts;
    // Centre the walk on the bulk: the mean of the atoms is useless, so use
    // the support clamp of 0 unless told otherwise.
    if (!o.center) o.center = support.clamp(0.0);
    total += quad::integrate(density, support, o).value;
  }
  return total;
}

double log_conditional_shtarkov(const FamilySpec& family, std::span<const double> prefix, std::size_t k,
                                const StrategyOptions& opts) {
  require_all_supported(family, prefix);
  if (k == 0) return log_sup_likelihood(family, prefix);
  if (prefix.empty()) {
    const std::string reason = nml_divergence_reason(family);
    if (!reason.empty()) throw DivergentNormalizer("Shtarkov integral is infinite (" + reason + ")");
  }
  const MeasurePlan plan = make_plan(family);
  const bool bernoulli_like = plan.kind == MeasurePlan::Kind::FiniteSet;
  const std::size_t limit = bernoulli_like ? 12 : 4;
  if (k > limit) {
    std::ostringstream msg;
    msg << "conditional Shtarkov integral over " << k << " outcomes exceeds the limit of " << limit << " for "
        << to_string(family.parameter_family().kind);
    throw HorizonTooLarge(msg.str());
  }

  std::vector<double> buf(prefix.begin(), prefix.end());
  if (bernoulli_like) {
    // Exact enumeration of every continuation, accumulated by log-sum-exp.
    const std::size_t count = std::size_t{1} << k;
    std::vector<double> logs;
    logs.reserve(count);
    for (std::size_t code = 0; code < count; ++code) {
      buf.resize(prefix.size());
      for (std::size_t j = 0; j < k; ++j) buf.push_back(plan.points[(code >> j) & 1U]);
      logs.push_back(log_sup_likelihood(family, buf));
    }
    const double top = *std::max_element(logs.begin(), logs.end());
    double sum = 0.0;
    for (double l : logs) sum += std::exp(l - top);
    return top + std::log(sum);
  }

  // Reference: the integrand at the prefix MLE repeated k times.
  const Hint top_hint = hint_for(family, prefix);
  double anchor = top_hint.obs_center;
  if (plan.kind == MeasurePlan::Kind::Lattice) anchor = plan.to_observation(std::round(top_hint.base_center));
  std::vector<double> ref_seq(prefix.begin(), prefix.end());
  ref_seq.insert(ref_seq.end(), k, anchor);
  double ref = log_sup_likelihood(family, ref_seq);
  if (!std::isfinite(ref)) ref = 0.0;

  std::function<double(std::size_t)> level = [&](std::size_t remaining) -> double {
    if (remaining == 0) return std::exp(log_sup_likelihood(family, buf) - ref);
    const Hint hint = hint_for(family, buf);
    const quad::Options& q = remaining == k ? opts.quad : opts.inner_quad;
    auto g = [&](double y) {
      buf.push_back(y);
      const double v = level(remaining - 1);
      buf.pop_back();
      return v;
    };
    return integrate_measure(plan, g, hint, q);
  };
  double z = 0.0;
  try {
    z = level(k);
  } catch (const DivergentIntegral& e) {
    throw DivergentNormalizer(std::string("conditional Shtarkov integral diverges (m too small?): ") + e.what());
  }
  if (!(z > 0.0) || !std::isfinite(z)) throw DivergentNormalizer("conditional Shtarkov integral is not finite");
  return ref + std::log(z);
}

PredictiveDistribution snml_predictive(const FamilySpec& family, std::span<const double> history,
                                       const StrategyOptions& opts) {
  require_all_supported(family, history);
  if (history.empty()) {
    const std::string reason = nml_divergence_reason(family);
    if (!reason.empty())
      throw DivergentNormalizer("one-step Shtarkov integral is infinite without conditioning data (" + reason + ")");
  }
  const MeasurePlan plan = make_plan(family);
  const Hint hint = hint_for(family, history);
  std::vector<double> hist(history.begin(), history.end());

  double anchor = hint.obs_center;
  if (plan.kind == MeasurePlan::Kind::Lattice) anchor = plan.to_observation(std::round(hint.base_center));
  if (plan.kind == MeasurePlan::Kind::FiniteSet) anchor = plan.points.front();
  double ref = log_sup_likelihood(family, concat(hist, anchor));
  if (!std::isfinite(ref)) ref = log_sup_likelihood(family, hist);
  if (!std::isfinite(ref)) ref = 0.0;

  auto g = [&](double y) {
    hist.push_back(y);
    const double v = std::exp(log_sup_likelihood(family, hist) - ref);
    hist.pop_back();
    return v;
  };
  std::vector<quad::Atom> visited;
  double z = 0.0;
  try {
    z = integrate_measure(plan, g, hint, opts.quad, [&](double loc, double v) { visited.push_back({loc, v}); });
  } catch (const DivergentIntegral& e) {
    throw DivergentNormalizer(std::string("one-step Shtarkov integral diverges (m too small?): ") + e.what());
  }
  if (!(z > 0.0) || !std::isfinite(z)) throw DivergentNormalizer("one-step Shtarkov integral is not finite");

  PredictiveDistribution out;
  out.support = convex_core(family);
  out.log_normalizer = ref + std::log(z);
  out.tag = {HorizonKind::OneStep, history.size() + 1};
  for (auto& a : visited) out.atoms.push_back({a.location, a.mass / z});
  if (plan.kind == MeasurePlan::Kind::Continuous) {
    const double log_norm = out.log_normalizer;
    out.density = [family, hist = std::vector<double>(history.begin(), history.end()), log_norm](double x) mutable {
      hist.push_back(x);
      const double v = std::exp(log_sup_likelihood(family, hist) - log_norm);
      hist.pop_back();
      return v;
    };
  }
  return out;
}

PredictiveDistribution snml_predictive(const FamilySpec& family, const ObservationSequence& history,
                                       const StrategyOptions& opts) {
  return snml_predictive(family, std::span<const double>(history.values), opts);
}

namespace {

// Unnormalized Jeffreys posterior machinery in the mean chart.
struct JeffreysPosterior {
  FamilySpec family;
  std::vector<double> history;
  Interval domain;
  double log_z = 0.0;  // ln int p_mu(history) / sigma(mu) dmu
  StrategyOptions opts;

  // ln int p_mu(data) / sigma(mu) dmu, computed as int p_mu(beta)(data) dbeta
  // in the geodesic chart where the Jeffreys weight is flat and endpoint
  // singularities of 1/sigma disappear.
  double log_evidence(std::span<const double> data) const {
    const FamilySpec& p = family.parameter_family();
    const double mu0 = p.kind == FamilyKind::GaussianLocation ? 0.0 : p.kind == FamilyKind::Bernoulli ? 0.5 : 1.0;
    const double center = data.empty() ? default_center(family) : mle_mean(family, data).mean;
    const double peak = data.empty() ? 0.0 : log_likelihood(family, center, data);
    const double ref = std::isfinite(peak) ? peak : 0.0;
    auto beta_of = [&](double mu) {
      if (std::isinf(mu)) return mu;
      if (p.kind == FamilyKind::GammaShape && mu == 0.0) return -kInf;
      return geodesic_from_mean(p, mu, mu0);
    };
    const Interval range{beta_of(domain.lower), beta_of(domain.upper), true, true};
    auto w = [&](double beta) {
      double mu = 0.0;
      try {
        mu = mean_from_geodesic(p, beta, mu0);
      } catch (const DomainError&) {
        return 0.0;  // rounding just past an endpoint
      }
      if (!domain.closure_contains(mu)) return 0.0;
      return std::exp(log_likelihood(family, mu, data) - ref);
    };
    quad::Options q = opts.quad;
    q.center = range.clamp(beta_of(center));
    const double t = static_cast<double>(std::max<std::size_t>(data.size(), 1));
    q.scale = 1.0 / std::sqrt(t);
    const double v = quad::integrate(w, Interval{range.lower, range.upper, std::isfinite(range.lower),
                                                 std::isfinite(range.upper)},
                                     q)
                         .value;
    return ref + std::log(v);
  }
};

}  // namespace

PredictiveDistribution bayes_jeffreys_predictive(const FamilySpec& family, std::span<const double> history,
                                                 const StrategyOptions& opts) {
  require_all_supported(family, history);
  const FamilySpec& p = family.parameter_family();
  JeffreysPosterior post{family, std::vector<double>(history.begin(), history.end()),
                         Interval::closed(p.mean_domain.lower, p.mean_domain.upper), 0.0, opts};
  if (history.empty() && !p.mean_domain.is_finite())
    throw ImproperPosterior("Jeffreys prior is improper on " + p.mean_domain.to_string() +
                            " and there is no data to condition on");
  try {
    post.log_z = post.log_evidence(post.history);
  } catch (const DivergentIntegral& e) {
    throw ImproperPosterior(std::string("Jeffreys posterior does not normalize: ") + e.what());
  }
  if (!std::isfinite(post.log_z)) throw ImproperPosterior("Jeffreys posterior normalizer is not finite");

  PredictiveDistribution out;
  out.support = convex_core(family);
  out.log_normalizer = post.log_z;
  out.tag = {HorizonKind::Bayes, history.size() + 1};

  auto predictive_at = [post](double x) {
    std::vector<double> data = post.history;
    data.push_back(x);
    return std::exp(post.log_evidence(data) - post.log_z);
  };

  const MeasurePlan plan = make_plan(family);
  switch (plan.kind) {
    case MeasurePlan::Kind::FiniteSet:
      for (double loc : plan.points) out.atoms.push_back({loc, predictive_at(loc)});
      break;
    case MeasurePlan::Kind::Lattice: {
      double cumulative = 0.0;
      double previous = std::numeric_limits<double>::infinity();
      const double center = history.empty() ? 1.0 : mle_mean(family, history).mean;
      const double bound = center + 10.0 * std::sqrt(std::max(center, 1.0)) + 10.0;
      for (long i = 0; i < 1'000'000; ++i) {
        const double loc = plan.to_observation(static_cast<double>(i));
        const double mass = predictive_at(loc);
        out.atoms.push_back({loc, mass});
        cumulative += mass;
        if (i > bound && mass <= previous && mass <= 1e-17 * cumulative) break;
        previous = mass;
      }
      out.tail_mass = 0.0;
      out.density = nullptr;
      break;
    }
    case MeasurePlan::Kind::Continuous:
      for (double loc : plan.points) out.atoms.push_back({loc, predictive_at(loc)});
      out.density = predictive_at;
      break;
  }
  return out;
}

PredictiveDistribution bayes_jeffreys_predictive(const FamilySpec& family, const ObservationSequence& history,
                                                 const StrategyOptions& opts) {
  return bayes_jeffreys_predictive(family, std::span<const double>(history.values), opts);
}

double log_cnml_joint(const FamilySpec& family, const ObservationSequence& seq, std::size_t n,
                      const StrategyOptions& opts) {
  if (seq.size() != n) throw DomainError("cnml_joint: sequence length must equal the horizon n");
  if (seq.m > n) throw DomainError("cnml_joint: m exceeds n");
  if (seq.m == n) return 0.0;
  require_all_supported(family, seq.values);
  const double numerator = log_sup_likelihood(family, seq.values);
  if (numerator == kNegInf) return kNegInf;
  return numerator - log_conditional_shtarkov(family, seq.prefix(), n - seq.m, opts);
}

double cnml_joint(const FamilySpec& family, const ObservationSequence& seq, std::size_t n,
                  const StrategyOptions& opts) {
  return std::exp(log_cnml_joint(family, seq, n, opts));
}

double nml_joint(const FamilySpec& family, std::span<const double> seq, const StrategyOptions& opts) {
  const std::string reason = nml_divergence_reason(family);
  if (!reason.empty()) throw DivergentNormalizer("NML is undefined: the Shtarkov integral is infinite (" + reason + ")");
  if (seq.empty()) throw DomainError("nml_joint: empty sequence");
  ObservationSequence s(std::vector<double>(seq.begin(), seq.end()), 0);
  return cnml_joint(family, s, s.size(), opts);
}

double log_strategy_joint(const FamilySpec& family, Strategy strategy, const ObservationSequence& seq,
                          const StrategyOptions& opts) {
  switch (strategy) {
    case Strategy::NML: {
      // The NML conditional of x_{m+1}^n given x^m is the CNML joint; NML
      // itself only exists when the unconditioned normalizer is finite.
      const std::string reason = nml_divergence_reason(family);
      if (!reason.empty()) throw DivergentNormalizer("NML is undefined: the Shtarkov integral is infinite (" + reason + ")");
      return log_cnml_joint(family, seq, seq.size(), opts);
    }
    case Strategy::CNML: return log_cnml_joint(family, seq, seq.size(), opts);
    case Strategy::SNML:
    case Strategy::BayesJeffreys: {
      if (seq.size() < seq.m + 1) throw DomainError("strategy_joint: need at least one predicted outcome");
      double total = 0.0;
      for (std::size_t t = seq.m; t < seq.size(); ++t) {
        const auto history = std::span<const double>(seq.values).first(t);
        const PredictiveDistribution pred = strategy == Strategy::SNML ? snml_predictive(family, history, opts)
                                                                       : bayes_jeffreys_predictive(family, history, opts);
        total += std::log(pred.value_at(seq.values[t]));
      }
      return total;
    }
  }
  throw DomainError("unknown strategy");
}

double strategy_joint(const FamilySpec& family, Strategy strategy, const ObservationSequence& seq,
                      const StrategyOptions& opts) {
  return std::exp(log_strategy_joint(family, strategy, seq, opts));
}

RegretRecord conditional_regret(const FamilySpec& family, Strategy strategy, const ObservationSequence& seq,
                                const StrategyOptions& opts) {
  RegretRecord r;
  r.m = seq.m;
  r.n = seq.size();
  r.strategy_loss = -log_strategy_joint(family, strategy, seq, opts);
  r.best_expert_loglik = log_sup_likelihood(family, seq.values);
  r.regret = r.strategy_loss + r.best_expert_loglik;
  return r;
}

}  // namespace snml
