#pragma once

#include <functional>
#include <span>
#include <vector>

#include "snml/family.hpp"
#include "snml/quadrature.hpp"

namespace snml {

enum class Strategy { NML, CNML, SNML, BayesJeffreys };
std::string to_string(Strategy strategy);

enum class HorizonKind { OneStep, Horizon, Bayes };

struct HorizonTag {
  HorizonKind kind = HorizonKind::OneStep;
  std::size_t n = 0;  // horizon for Horizon, the predicted index t otherwise
};

/// A one-step predictive law: a density w.r.t. Lebesgue measure on the
/// continuous part of the support plus atoms.
struct PredictiveDistribution {
  std::function<double(double)> density;  // empty for purely discrete laws
  std::vector<quad::Atom> atoms;
  Interval support;            // convex core of the family
  double log_normalizer = 0.0;  // ln of the denominator actually computed
  double tail_mass = 0.0;       // mass beyond the last listed atom (lattice laws)
  HorizonTag tag;

  double normalizer() const;
  /// Density w.r.t. the family's base measure: the atom mass at an atom,
  /// the continuous density elsewhere.
  double value_at(double x) const;
  /// atoms + integral of the density.
  double total_mass(const quad::Options& opts = {}) const;
};

struct RegretRecord {
  double strategy_loss = 0.0;       // -ln q(x_{m+1}^n | x^m)
  double best_expert_loglik = 0.0;  // ln sup_theta p_theta(x^n)
  double regret = 0.0;              // strategy_loss + best_expert_loglik
  std::size_t m = 0;
  std::size_t n = 0;
};

/// Quadrature settings used for normalizers. Integrands are scaled to be of
/// order one near their peak, so the absolute tolerance is effectively
/// relative.
struct StrategyOptions {
  quad::Options quad{.tol_abs = 1e-14, .tol_rel = 1e-11, .max_subdivisions = 4000};
  // Tolerances for inner levels of nested CNML integrals.
  quad::Options inner_quad{.tol_abs = 1e-12, .tol_rel = 1e-9, .max_subdivisions = 4000};
};

/// m such that Jeffreys posteriors and conditional Shtarkov integrals are
/// finite after m observations: 0 for Bernoulli, 1 otherwise.
std::size_t default_conditioning_length(const FamilySpec& family);

/// ln of the conditional Shtarkov integral
///   int sup_theta p_theta(prefix, y_1..y_k) d lambda^k(y).
/// Throws DivergentNormalizer when it is infinite and HorizonTooLarge past
/// the nesting limits (k <= 4 for non-Bernoulli families, k <= 12 for Bernoulli).
double log_conditional_shtarkov(const FamilySpec& family, std::span<const double> prefix, std::size_t k,
                                const StrategyOptions& opts = {});

PredictiveDistribution snml_predictive(const FamilySpec& family, std::span<const double> history,
                                       const StrategyOptions& opts = {});
PredictiveDistribution snml_predictive(const FamilySpec& family, const ObservationSequence& history,
                                       const StrategyOptions& opts = {});

PredictiveDistribution bayes_jeffreys_predictive(const FamilySpec& family, std::span<const double> history,
                                                 const StrategyOptions& opts = {});
PredictiveDistribution bayes_jeffreys_predictive(const FamilySpec& family, const ObservationSequence& history,
                                                 const StrategyOptions& opts = {});

/// CNML joint density of x_{m+1}^n given x^m; seq must have length n.
double cnml_joint(const FamilySpec& family, const ObservationSequence& seq, std::size_t n,
                  const StrategyOptions& opts = {});
double log_cnml_joint(const FamilySpec& family, const ObservationSequence& seq, std::size_t n,
                      const StrategyOptions& opts = {});

/// NML joint of the whole sequence (no conditioning). Refused with
/// DivergentNormalizer when the Shtarkov integral is infinite.
double nml_joint(const FamilySpec& family, std::span<const double> seq, const StrategyOptions& opts = {});

/// Product of one-step predictive values from index m+1 to the end, or the
/// CNML/NML joint for the horizon strategies.
double strategy_joint(const FamilySpec& family, Strategy strategy, const ObservationSequence& seq,
                      const StrategyOptions& opts = {});
double log_strategy_joint(const FamilySpec& family, Strategy strategy, const ObservationSequence& seq,
                          const StrategyOptions& opts = {});

RegretRecord conditional_regret(const FamilySpec& family, Strategy strategy, const ObservationSequence& seq,
                                const StrategyOptions& opts = {});

/// Human-readable reason why the unconditioned Shtarkov integral diverges,
/// or an empty string when it is finite.
std::string nml_divergence_reason(const FamilySpec& family);

}  // namespace snml
