// Serial reference vs OpenMP sweeps over the same grids. Not part of ctest.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "snml/analysis.hpp"

using namespace snml;

namespace {

double seconds(const std::function<void()>& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void compare(const char* name, const std::function<AnalysisReport(Execution)>& sweep) {
  AnalysisReport serial, parallel;
  const double ts = seconds([&] { serial = sweep(Execution::Serial); });
  const double tp = seconds([&] { parallel = sweep(Execution::Parallel); });
  std::printf("%-34s serial %8.3fs  parallel %8.3fs  speedup %5.2fx  identical %s\n", name, ts, tp, ts / tp,
              serial.values == parallel.values ? "yes" : "NO");
}

std::vector<double> grid(double lo, double hi, int count) {
  std::vector<double> g;
  for (int i = 0; i < count; ++i) g.push_back(lo + (hi - lo) * i / (count - 1));
  return g;
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  compare("constancy, Tweedie, n=5, 256 pts", [](Execution e) { return check_constancy(tweedie32(), 5, grid(0.05, 20, 256), 1e-4, e); });
  compare("constancy, Poisson, n=3, 256 pts", [](Execution e) { return check_constancy(poisson(), 3, grid(0.05, 20, 256), 1e-4, e); });
  compare("exchangeability, Gamma, 200 seqs", [](Execution e) {
    return exchangeability_test(gamma_shape(1.0), 1, 4, TestSet::random(200, 1), 1e-6, e);
  });
  compare("exchangeability, Tweedie, 200 seqs", [](Execution e) {
    return exchangeability_test(tweedie32(), 1, 4, TestSet::random(200, 1), 1e-6, e);
  });
  compare("ODE battery, exp, 4096 pts", [](Execution e) {
    return higher_order_check(exponential_variance(1.0, 1.0), grid(-3, 3, 4096), std::nullopt, e);
  });
  return 0;
}
