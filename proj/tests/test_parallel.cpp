#include <doctest.h>

#include <stdexcept>
#include <string>

#include "snml/analysis.hpp"
#include "snml/parallel.hpp"

using namespace snml;

TEST_CASE("parallel map equals the serial reference") {
  auto f = [](std::size_t i) { return std::sin(static_cast<double>(i)) * static_cast<double>(i); };
  CHECK(map_parallel<double>(1000, f) == map_serial<double>(1000, f));
  CHECK(map_parallel<double>(0, f).empty());
}

TEST_CASE("the lowest failing index wins") {
  auto f = [](std::size_t i) -> int {
    if (i % 7 == 3) throw std::runtime_error(std::to_string(i));
    return static_cast<int>(i);
  };
  for (int rep = 0; rep < 20; ++rep) {
    try {
      map_parallel<int>(200, f);
      FAIL("expected a throw");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "3");
    }
  }
}

TEST_CASE("analysis sweeps are identical under both execution modes") {
  const auto grid = std::vector<double>{0.2, 0.7, 1.3, 2.9, 6.0, 11.0};
  const auto s = check_constancy(tweedie32(), 3, grid, 1e-4, Execution::Serial);
  const auto p = check_constancy(tweedie32(), 3, grid, 1e-4, Execution::Parallel);
  CHECK(s.values == p.values);
  CHECK(report_to_json(s) == report_to_json(p));
  const auto vf = parse_variance_function("exp:1,1");
  CHECK(higher_order_check(vf, default_grid(vf), std::nullopt, Execution::Serial).values ==
        higher_order_check(vf, default_grid(vf), std::nullopt, Execution::Parallel).values);
}
