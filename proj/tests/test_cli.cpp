#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "snml/analysis.hpp"
#include "snml/cli.hpp"

using namespace snml;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("kl") {
  const auto r = run({"kl", "--family", "tweedie32", "--mu0", "1", "--mu1", "4"});
  CHECK(r.code == 0);
  CHECK(std::stod(r.out) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("Bernoulli exchangeability witness") {
  const auto r = run({"check-exchangeability", "--family", "bernoulli", "--m", "0", "--n", "3", "--expect", "nonconstant"});
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["verdict"] == "nonconstant");
  CHECK(j["notes"].dump().find("8/155") != std::string::npos);
  CHECK(j["notes"].dump().find("1/20") != std::string::npos);
}

TEST_CASE("constancy with expectations") {
  const auto ok = run({"check-constancy", "--family", "gamma", "--shape", "1", "--n", "2", "--grid", "0.5,1,2,5", "--expect", "constant"});
  CHECK(ok.code == 0);
  for (const auto& p : nlohmann::json::parse(ok.out)["points"]) CHECK(p["value"].get<double>() == doctest::Approx(std::exp(2.0) / 4).epsilon(1e-10));
  const auto bad = run({"check-constancy", "--family", "poisson", "--n", "2", "--grid", "1,4", "--expect", "constant"});
  CHECK(bad.code == cli::kExpectationFailed);
}

TEST_CASE("usage and numeric errors") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  const auto flag = run({"kl", "--family", "cauchy", "--mu0", "1", "--mu1", "2"});
  CHECK(flag.code == cli::kUsage);
  CHECK(flag.err.find("--family") != std::string::npos);
  CHECK(run({"check-constancy", "--family", "gamma", "--grid", "1,x"}).code == cli::kUsage);
  const auto numeric = run({"joint", "--family", "gaussian", "--strategy", "nml", "--seq", "0,1"});
  CHECK(numeric.code == cli::kNumeric);
  CHECK(numeric.err.find("Shtarkov") != std::string::npos);
}

TEST_CASE("joint reports exact Bernoulli values") {
  const auto r = run({"joint", "--family", "bernoulli", "--seq", "1,1,0", "--m", "0"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["exact"] == "8/155");
  const auto reg = run({"regret", "--family", "bernoulli", "--strategy", "nml", "--seq", "1,0", "--m", "0"});
  REQUIRE(reg.code == 0);
  CHECK(nlohmann::json::parse(reg.out)["regret"].get<double>() == doctest::Approx(std::log(2.5)));
}

TEST_CASE("predict, classify, laplace, ode and sampler") {
  const auto p = run({"predict", "--family", "gaussian", "--history", "0,2", "--grid", "1", "--format", "csv"});
  REQUIRE(p.code == 0);
  CHECK(p.out.find("0.3257350") != std::string::npos);
  const auto c = run({"classify", "--vf", "quadratic:-1,1,0"});
  CHECK(c.code == 0);
  CHECK(nlohmann::json::parse(c.out)["class"] == "not_exchangeable");
  CHECK(run({"laplace", "--family", "gamma", "--mu0", "1", "--expect", "constant"}).code == 0);
  CHECK(run({"check-ode", "--vf", "power:1,0,1", "--expect", "nonconstant"}).code == 0);
  CHECK(run({"check-ode", "--vf", "power:2,1,2", "--expect", "constant"}).code == 0);
  const auto s = run({"sample-tweedie", "--mu", "1", "--n", "5", "--seed", "3"});
  CHECK(s.code == 0);
  CHECK(s.out == run({"sample-tweedie", "--mu", "1", "--n", "5", "--seed", "3"}).out);
}

TEST_CASE("CSV output round-trips through a file") {
  const auto path = std::filesystem::temp_directory_path() / "snml_cli_roundtrip.csv";
  const auto r = run({"check-constancy", "--family", "tweedie32", "--n", "3", "--grid", "0.5,1,2,4", "--format", "csv",
                      "--output", path.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  const auto rows = parse_report_csv(text.str());
  const auto report = check_constancy(tweedie32(), 3, {0.5, 1.0, 2.0, 4.0});
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(rows[i].point == report.grid[i]);
    CHECK(rows[i].value == report.values[i]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("family files") {
  const auto path = std::filesystem::temp_directory_path() / "snml_cli_family.json";
  std::ofstream(path) << R"({"kind": "gamma_shape", "shape": 2.0})";
  const auto r = run({"kl", "--family-file", path.string(), "--mu0", "1", "--mu1", "2"});
  CHECK(r.code == 0);
  CHECK(std::stod(r.out) == doctest::Approx(2.0 * (0.5 - 1 - std::log(0.5))));
  std::filesystem::remove(path);
}
