#include "snml/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "snml/analysis.hpp"
#include "snml/errors.hpp"
#include "snml/exact.hpp"
#include "snml/family_json.hpp"
#include "snml/strategies.hpp"
#include "snml/tweedie.hpp"

namespace snml::cli {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end == item.c_str() || *end != '\0')
      throw ConfigError("--" + flag + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("--" + flag + " needs at least one value");
  return out;
}

// Options describing the family, shared by most subcommands.
struct FamilyOptions {
  std::string name;
  double variance = 1.0;
  double shape = 1.0;
  std::string mean_domain;
  std::string family_json;
  std::string family_file;

  void attach(CLI::App* app) {
    app->add_option("--family", name, "gaussian | gamma | tweedie32 | bernoulli | poisson | levy");
    app->add_option("--variance", variance, "Gaussian variance sigma^2");
    app->add_option("--shape", shape, "Gamma shape k");
    app->add_option("--mean-domain", mean_domain, "restricted mean domain lo,hi (inf allowed)");
    app->add_option("--family-json", family_json, "family as a JSON object");
    app->add_option("--family-file", family_file, "path to a JSON family file");
  }

  FamilySpec build() const {
    const int sources = !name.empty() + !family_json.empty() + !family_file.empty();
    if (sources != 1) throw ConfigError("give exactly one of --family, --family-json, --family-file");
    FamilySpec f;
    if (!family_json.empty() || !family_file.empty()) {
      std::string text = family_json;
      if (!family_file.empty()) {
        std::ifstream in(family_file);
        if (!in) throw ConfigError("cannot read --family-file " + family_file);
        std::stringstream ss;
        ss << in.rdbuf();
        text = ss.str();
      }
      json j;
      try {
        j = json::parse(text);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("family JSON does not parse: ") + e.what());
      }
      f = family_from_json(j);
    } else {
      try {
        if (name == "gaussian" || name == "gaussian_location") {
          f = gaussian_location(variance);
        } else if (name == "gamma" || name == "gamma_shape") {
          f = gamma_shape(shape);
        } else if (name == "tweedie32" || name == "tweedie") {
          f = tweedie32();
        } else if (name == "bernoulli") {
          f = bernoulli();
        } else if (name == "poisson") {
          f = poisson();
        } else if (name == "levy") {
          f = transform_family(gamma_shape(0.5), reciprocal_transform());
        } else {
          throw ConfigError("--family: unknown family '" + name + "'");
        }
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
    }
    if (!mean_domain.empty()) {
      std::vector<std::string> parts;
      std::stringstream in(mean_domain);
      std::string item;
      while (std::getline(in, item, ',')) parts.push_back(item);
      if (parts.size() != 2) throw ConfigError("--mean-domain needs lo,hi");
      auto endpoint = [](const std::string& s) {
        if (s == "inf" || s == "+inf") return kInf;
        if (s == "-inf") return -kInf;
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (s.empty() || *end != '\0') throw ConfigError("--mean-domain: bad endpoint '" + s + "'");
        return v;
      };
      const double lo = endpoint(parts[0]);
      const double hi = endpoint(parts[1]);
      try {
        f = with_mean_domain(f, Interval{lo, hi, std::isfinite(lo), std::isfinite(hi)});
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
    }
    return f;
  }
};

struct CommonOutput {
  std::string output;
  std::string format = "json";
  std::string expect;

  void attach(CLI::App* app, bool with_expect) {
    app->add_option("--output", output, "write results to this path instead of stdout");
    app->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    if (with_expect)
      app->add_option("--expect", expect, "constant | nonconstant")->check(CLI::IsMember({"constant", "nonconstant"}));
  }
};

Strategy parse_strategy(const std::string& s) {
  if (s == "snml") return Strategy::SNML;
  if (s == "bayes" || s == "bayes_jeffreys") return Strategy::BayesJeffreys;
  if (s == "cnml") return Strategy::CNML;
  if (s == "nml") return Strategy::NML;
  throw ConfigError("--strategy: unknown strategy '" + s + "' (snml, bayes, cnml, nml)");
}

bool is_plain_bernoulli(const FamilySpec& f) { return f.kind == FamilyKind::Bernoulli; }

std::optional<exact::Rational> exact_joint(const FamilySpec& f, Strategy s, const std::vector<double>& seq,
                                           std::size_t m) {
  if (!is_plain_bernoulli(f) || seq.size() > 12) return std::nullopt;
  std::vector<int> xs;
  for (double v : seq) {
    if (v != 0.0 && v != 1.0) return std::nullopt;
    xs.push_back(static_cast<int>(v));
  }
  switch (s) {
    case Strategy::SNML: return exact::snml_joint(xs, static_cast<unsigned>(m));
    case Strategy::BayesJeffreys: return exact::bayes_jeffreys_joint(xs, static_cast<unsigned>(m));
    case Strategy::CNML:
    case Strategy::NML: return exact::cnml_joint(xs, static_cast<unsigned>(m));
  }
  return std::nullopt;
}

std::string csv_of(const AnalysisReport& r) { return report_to_csv(r); }

std::string render_report(const AnalysisReport& r, const std::string& format) {
  return format == "csv" ? csv_of(r) : report_to_json(r) + "\n";
}

int verdict_exit(const AnalysisReport& r, const std::string& expect, std::ostream& err) {
  if (expect.empty()) return kOk;
  const bool ok = to_string(r.verdict) == expect;
  if (!ok) err << "verdict " << to_string(r.verdict) << " contradicts --expect " << expect << "\n";
  return ok ? kOk : kExpectationFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Log-loss prediction strategies for one-dimensional exponential families", "snml"};
  app.require_subcommand(1);

  FamilyOptions fam;
  CommonOutput io;
  std::string strategy = "snml";
  std::string history_text;
  std::string grid_text;
  std::string seq_text;
  std::string sequences_text;
  std::string vf_text;
  std::string position = "interior";
  std::string n_list_text = "10,20,50";
  double mu0 = 1.0;
  double mu1 = 1.0;
  double mu = 1.0;
  double tol = -1.0;
  int n = 2;
  int m = -1;
  std::size_t count = 20;
  std::uint64_t seed = 1;
  std::size_t samples = 10;

  auto* kl = app.add_subcommand("kl", "KL divergence D(p_mu0 || p_mu1) in nats");
  fam.attach(kl);
  kl->add_option("--mu0", mu0)->required();
  kl->add_option("--mu1", mu1)->required();

  auto* predict = app.add_subcommand("predict", "one-step predictive values on a grid");
  fam.attach(predict);
  io.attach(predict, false);
  predict->add_option("--strategy", strategy, "snml | bayes");
  predict->add_option("--history", history_text, "comma-separated history")->required();
  predict->add_option("--grid", grid_text, "comma-separated evaluation points")->required();

  auto* joint = app.add_subcommand("joint", "joint probability of x_{m+1}^n given x^m");
  fam.attach(joint);
  io.attach(joint, false);
  joint->add_option("--strategy", strategy, "snml | bayes | cnml | nml");
  joint->add_option("--seq", seq_text, "comma-separated sequence")->required();
  joint->add_option("--m", m, "conditioning length (family default when omitted)");

  auto* regret = app.add_subcommand("regret", "conditional regret of a strategy on a sequence");
  fam.attach(regret);
  io.attach(regret, false);
  regret->add_option("--strategy", strategy, "snml | bayes | cnml | nml");
  regret->add_option("--seq", seq_text, "comma-separated sequence")->required();
  regret->add_option("--m", m, "conditioning length (family default when omitted)");

  auto* constancy = app.add_subcommand("check-constancy", "condition-integral constancy over mu0");
  fam.attach(constancy);
  io.attach(constancy, true);
  constancy->add_option("--n", n)->required();
  constancy->add_option("--grid", grid_text, "comma-separated mu0 values")->required();
  constancy->add_option("--tol", tol, "relative tolerance (default 1e-4)");

  auto* exch = app.add_subcommand("check-exchangeability", "SNML permutation invariance");
  fam.attach(exch);
  io.attach(exch, true);
  exch->add_option("--m", m, "conditioning length (family default when omitted)");
  exch->add_option("--n", n)->required();
  exch->add_option("--count", count, "random continuations");
  exch->add_option("--seed", seed);
  exch->add_option("--sequences", sequences_text, "explicit sequences 'a,b,c;d,e,f'");
  exch->add_option("--tol", tol, "tolerance (default 1e-6)");

  auto* ode = app.add_subcommand("check-ode", "sigma ODE and higher-order conditions for a variance function");
  io.attach(ode, true);
  ode->add_option("--vf", vf_text, "const:v | power:k,l,p | quadratic:a,b,c | exp:a,b")->required();
  ode->add_option("--grid", grid_text, "comma-separated mu values");

  auto* classify = app.add_subcommand("classify", "exchangeability class of a variance function");
  io.attach(classify, false);
  classify->add_option("--vf", vf_text, "const:v | power:k,l,p | quadratic:a,b,c | exp:a,b")->required();
  classify->add_option("--grid", grid_text, "comma-separated mu values");

  auto* laplace = app.add_subcommand("laplace", "condition integral against the Laplace approximation");
  fam.attach(laplace);
  io.attach(laplace, true);
  laplace->add_option("--mu0", mu0)->required();
  laplace->add_option("--position", position, "interior | boundary")
      ->check(CLI::IsMember({"interior", "boundary"}));
  laplace->add_option("--n-list", n_list_text, "comma-separated n values");

  auto* sampler = app.add_subcommand("sample-tweedie", "Tweedie-3/2 draws, one per line");
  sampler->add_option("--mu", mu)->required();
  sampler->add_option("--n", samples)->required();
  sampler->add_option("--seed", seed);
  sampler->add_option("--output", io.output);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  std::string result;
  int code = kOk;
  try {
    auto conditioning = [&](const FamilySpec& f) {
      return m >= 0 ? static_cast<std::size_t>(m) : default_conditioning_length(f);
    };

    if (*kl) {
      const FamilySpec f = fam.build();
      result = fmt(kl_divergence(f, mu0, mu1)) + "\n";
    } else if (*predict) {
      const FamilySpec f = fam.build();
      const std::vector<double> history = parse_list(history_text, "history");
      const std::vector<double> grid = parse_list(grid_text, "grid");
      const Strategy s = parse_strategy(strategy);
      if (s != Strategy::SNML && s != Strategy::BayesJeffreys)
        throw ConfigError("--strategy: predict supports snml and bayes");
      const PredictiveDistribution p =
          s == Strategy::SNML ? snml_predictive(f, history) : bayes_jeffreys_predictive(f, history);
      const std::vector<double> values =
          grid_map<double>(Execution::Parallel, grid.size(), [&](std::size_t i) { return p.value_at(grid[i]); });
      if (io.format == "csv") {
        result = "point,value\n";
        for (std::size_t i = 0; i < grid.size(); ++i) result += fmt(grid[i]) + "," + fmt(values[i]) + "\n";
      } else {
        json j;
        j["strategy"] = to_string(s);
        j["history"] = history;
        j["log_normalizer"] = p.log_normalizer;
        auto& atoms = j["atoms"] = json::array();
        for (const auto& a : p.atoms) atoms.push_back({{"location", a.location}, {"mass", a.mass}});
        auto& pts = j["points"] = json::array();
        for (std::size_t i = 0; i < grid.size(); ++i) pts.push_back({{"point", grid[i]}, {"value", values[i]}});
        result = j.dump(2) + "\n";
      }
    } else if (*joint || *regret) {
      const FamilySpec f = fam.build();
      const std::vector<double> seq = parse_list(seq_text, "seq");
      const std::size_t mm = conditioning(f);
      if (mm > seq.size()) throw ConfigError("--m exceeds the sequence length");
      const Strategy s = parse_strategy(strategy);
      const ObservationSequence obs(seq, mm);
      const auto exact_value = exact_joint(f, s, seq, mm);
      if (*joint) {
        const double lj = log_strategy_joint(f, s, obs);
        if (io.format == "csv") {
          result = "joint,log_joint\n" + fmt(std::exp(lj)) + "," + fmt(lj) + "\n";
        } else {
          json j{{"strategy", to_string(s)}, {"m", mm}, {"n", seq.size()}, {"joint", std::exp(lj)}, {"log_joint", lj}};
          if (exact_value) j["exact"] = exact::to_string(*exact_value);
          result = j.dump(2) + "\n";
        }
      } else {
        const RegretRecord r = conditional_regret(f, s, obs);
        if (io.format == "csv") {
          result = "strategy_loss,best_expert_loglik,regret,m,n\n" + fmt(r.strategy_loss) + "," +
                   fmt(r.best_expert_loglik) + "," + fmt(r.regret) + "," + std::to_string(r.m) + "," +
                   std::to_string(r.n) + "\n";
        } else {
          json j{{"strategy", to_string(s)},
                 {"strategy_loss", r.strategy_loss},
                 {"best_expert_loglik", r.best_expert_loglik},
                 {"regret", r.regret},
                 {"m", r.m},
                 {"n", r.n}};
          result = j.dump(2) + "\n";
        }
      }
    } else if (*constancy) {
      const FamilySpec f = fam.build();
      const std::vector<double> grid = parse_list(grid_text, "grid");
      if (grid.size() < 2) throw ConfigError("--grid needs at least 2 points");
      const AnalysisReport r = check_constancy(f, n, grid, tol > 0 ? tol : 1e-4);
      result = render_report(r, io.format);
      code = verdict_exit(r, io.expect, err);
    } else if (*exch) {
      const FamilySpec f = fam.build();
      const std::size_t mm = conditioning(f);
      TestSet tests = TestSet::random(count, seed);
      if (!sequences_text.empty()) {
        std::vector<std::vector<double>> seqs;
        std::stringstream in(sequences_text);
        std::string item;
        while (std::getline(in, item, ';')) seqs.push_back(parse_list(item, "sequences"));
        tests = TestSet::explicit_sequences(std::move(seqs));
      } else if (f.kind == FamilyKind::Bernoulli) {
        tests = TestSet::all_discrete();
      }
      if (n < 1 || static_cast<std::size_t>(n) <= mm) throw ConfigError("--n must exceed m");
      const AnalysisReport r = exchangeability_test(f, mm, static_cast<std::size_t>(n), tests, tol > 0 ? tol : 1e-6);
      result = render_report(r, io.format);
      code = verdict_exit(r, io.expect, err);
    } else if (*ode) {
      const VarianceFunctionSpec vf = parse_variance_function(vf_text);
      const std::vector<double> grid = grid_text.empty() ? default_grid(vf) : parse_list(grid_text, "grid");
      if (grid.size() < 2) throw ConfigError("--grid needs at least 2 points");
      AnalysisReport r;
      r.name = "ode_battery";
      r.grid = grid;
      const AnalysisReport o = sigma_ode_check(vf, grid);
      const AnalysisReport h = higher_order_check(vf, grid);
      r.values = o.values;
      r.reference_value = o.reference_value;
      r.max_abs_deviation = o.max_abs_deviation;
      r.tolerance_used = o.tolerance_used;
      r.constant = o.constant;
      r.verdict = o.verdict == Verdict::Constant && h.verdict == Verdict::Constant ? Verdict::Constant
                  : o.verdict == Verdict::NonConstant || h.verdict == Verdict::NonConstant
                      ? Verdict::NonConstant
                      : Verdict::Inconclusive;
      r.notes.push_back(vf.describe());
      r.components = {o, h};
      result = render_report(r, io.format);
      code = verdict_exit(r, io.expect, err);
    } else if (*classify) {
      const VarianceFunctionSpec vf = parse_variance_function(vf_text);
      const Classification c =
          classify_family(vf, grid_text.empty() ? std::vector<double>{} : parse_list(grid_text, "grid"));
      if (io.format == "csv") {
        result = "class,k,l,reason\n" + to_string(c.kind) + "," + fmt(c.k) + "," + fmt(c.l) + ",\"" + c.reason + "\"\n";
      } else {
        json j{{"class", to_string(c.kind)}, {"k", c.k}, {"l", c.l}, {"variance_function", vf.describe()}};
        if (!c.reason.empty()) j["reason"] = c.reason;
        result = j.dump(2) + "\n";
      }
    } else if (*laplace) {
      const FamilySpec f = fam.build();
      std::vector<int> ns;
      for (double v : parse_list(n_list_text, "n-list")) {
        if (v < 1 || v != std::floor(v)) throw ConfigError("--n-list entries must be positive integers");
        ns.push_back(static_cast<int>(v));
      }
      const AnalysisReport r = laplace_asymptotics_check(
          f, mu0, position == "boundary" ? LaplacePosition::Boundary : LaplacePosition::Interior, ns);
      result = render_report(r, io.format);
      code = verdict_exit(r, io.expect, err);
    } else if (*sampler) {
      for (double v : tweedie::tweedie_sample(mu, samples, seed)) result += fmt(v) + "\n";
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kNumeric;
  }

  if (io.output.empty()) {
    out << result;
  } else {
    std::ofstream file(io.output);
    if (!file) {
      err << "error: cannot write --output " << io.output << "\n";
      return kUsage;
    }
    file << result;
  }
  return code;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace snml::cli
