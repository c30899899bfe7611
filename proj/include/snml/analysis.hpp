#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "snml/family.hpp"
#include "snml/parallel.hpp"
#include "snml/quadrature.hpp"
#include "snml/strategies.hpp"
#include "snml/variance_function.hpp"

namespace snml {

enum class Verdict { Constant, NonConstant, Inconclusive };
std::string to_string(Verdict verdict);

/// Derivatives of the geodesic-chart divergence D(beta0 || beta) at beta0,
/// expressed through sigma and its derivatives at mu0.
struct DerivativeBundle {
  double mu = 0.0;
  double D2 = 1.0;
  double D3 = 0.0;
  double D4 = 0.0;
  double D5 = 0.0;
  double D6 = 0.0;
  std::array<double, 4> sigma_derivs{};  // sigma' .. sigma''''
  double sigma = 0.0;
  double g = 0.0;  // (sigma')^2 + 3 sigma sigma''
};

struct AnalysisReport {
  std::string name;
  std::vector<double> grid;
  std::vector<double> values;
  double max_abs_deviation = 0.0;
  double reference_value = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  double tolerance_used = 0.0;
  std::vector<std::string> labels;  // optional per-point descriptions (sequences, ...)
  std::vector<std::string> notes;   // witnesses and diagnostics
  std::vector<DerivativeBundle> derivatives;
  std::optional<double> constant;           // the ODE constant c when the ODE check passes
  std::vector<AnalysisReport> components;   // sub-checks of a composite report
};

/// Verdict rule shared by every check: Constant iff deviation <= tol *
/// max(1, |reference|), NonConstant when the spread (max - min of the values,
/// or the deviation itself when no spread is given) exceeds 1% of the same
/// scale, Inconclusive in between.
Verdict judge(double max_abs_deviation, double reference, double tol, std::optional<double> spread = std::nullopt);
constexpr double kNonConstantThreshold = 1e-2;

/// int exp(-n D(mu0 || mu)) / sigma(mu) dmu over the mean domain.
/// Throws DivergentIntegral when a tail does not decay.
double condition_integral(const FamilySpec& family, double mu0, int n);

AnalysisReport check_constancy(const FamilySpec& family, int n, const std::vector<double>& mu0_grid,
                               double tol = 1e-4, Execution exec = Execution::Parallel);

struct TestSet {
  enum class Kind { AllDiscrete, RandomContinuations, Explicit };
  Kind kind = Kind::RandomContinuations;
  std::size_t count = 20;
  std::uint64_t seed = 1;
  std::vector<std::vector<double>> sequences;  // Explicit: full sequences of length n

  static TestSet all_discrete() { return {Kind::AllDiscrete, 0, 0, {}}; }
  static TestSet random(std::size_t count, std::uint64_t seed) { return {Kind::RandomContinuations, count, seed, {}}; }
  static TestSet explicit_sequences(std::vector<std::vector<double>> seqs) {
    return {Kind::Explicit, seqs.size(), 0, std::move(seqs)};
  }
};

/// For every base sequence compares the SNML joint of x_{m+1}^n given x^m
/// across all distinct permutations of the continuation. Values are the
/// per-sequence relative discrepancies (max - min) / max; the reference is 0.
/// Bernoulli joints are computed in exact rational arithmetic.
AnalysisReport exchangeability_test(const FamilySpec& family, std::size_t m, std::size_t n, const TestSet& tests,
                                    double tol = 1e-6, Execution exec = Execution::Parallel,
                                    const StrategyOptions& opts = {});

/// Relative differences between the Bayes-Jeffreys joint and the CNML joint
/// of x_{m+1}^n given x^m for each sequence (each of length n).
AnalysisReport bayes_cnml_agreement(const FamilySpec& family, std::size_t m, std::size_t n,
                                    const std::vector<std::vector<double>>& sequences, double tol = 1e-6,
                                    Execution exec = Execution::Parallel, const StrategyOptions& opts = {});

enum class LaplacePosition { Interior, Boundary };

/// Ratios condition_integral(n) / sqrt(2 pi / n) over n_list. The reference
/// is 1 for interior points and 1/2 at a boundary of the mean domain; the
/// verdict is Constant when the last ratio is within 5 / n_last of it.
AnalysisReport laplace_asymptotics_check(const FamilySpec& family, double mu0, LaplacePosition position,
                                         const std::vector<int>& n_list, Execution exec = Execution::Parallel);

DerivativeBundle derivative_bundle(const VarianceFunctionSpec& vf, double mu);

/// g(mu) = (sigma')^2 + 3 sigma sigma'' over the grid. Tolerance 1e-6 for
/// closed forms and 1e-3 for tables unless given.
AnalysisReport sigma_ode_check(const VarianceFunctionSpec& vf, const std::vector<double>& mu_grid,
                               std::optional<double> tol = std::nullopt, Execution exec = Execution::Parallel);

/// Composite report with components for 5 D3^2 - 3 D4, the sixth-order
/// combination 385 D3^4 + 105 D4^2 - 24 D6 - 630 D3^2 D4 + 168 D3 D5 and,
/// when the ODE holds, its reduced form. The overall verdict is Constant iff
/// the first two are.
AnalysisReport higher_order_check(const VarianceFunctionSpec& vf, const std::vector<double>& mu_grid,
                                  std::optional<double> tol = std::nullopt, Execution exec = Execution::Parallel);

enum class ExchangeableClass { GaussianLocation, GammaLinearSigma, Tweedie32Class, NotExchangeable };
std::string to_string(ExchangeableClass c);

struct Classification {
  ExchangeableClass kind = ExchangeableClass::NotExchangeable;
  std::string reason;  // why NotExchangeable
  double k = 0.0;      // fitted slope (of sigma or of V^(2/3))
  double l = 0.0;      // fitted intercept
};

Classification classify_family(const VarianceFunctionSpec& vf, const std::vector<double>& mu_grid = {});

/// Validates that `transform` is strictly monotone and consistent with its
/// inverse on the base family's support, then returns the transformed family.
/// Throws NonMonotone.
FamilySpec transform_family(const FamilySpec& family, Transform transform);

/// Evenly spaced interior points of a variance function's domain (a default
/// window for unbounded domains).
std::vector<double> default_grid(const VarianceFunctionSpec& vf, std::size_t count = 9);

std::string report_to_json(const AnalysisReport& report);
/// Columns point,value,deviation with 17 significant digits.
std::string report_to_csv(const AnalysisReport& report);

struct CsvRow {
  double point = 0.0;
  double value = 0.0;
  double deviation = 0.0;
};
std::vector<CsvRow> parse_report_csv(const std::string& csv);

}  // namespace snml
