#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace snml {

enum class Execution { Serial, Parallel };

/// out[i] = f(i) for i in [0, count), evaluated in index order. The
/// reference implementation the parallel kernel is tested against.
template <class T, class F>
std::vector<T> map_serial(std::size_t count, F&& f) {
  std::vector<T> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(f(i));
  return out;
}

/// Same contract as map_serial with the evaluations spread over OpenMP
/// threads. Results land in index order. If evaluations throw, the exception
/// of the lowest failing index is rethrown, so failures are deterministic.
template <class T, class F>
std::vector<T> map_parallel(std::size_t count, F&& f) {
  std::vector<T> out(count);
  std::vector<std::exception_ptr> errors(count);
  const auto n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      out[idx] = f(idx);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

template <class T, class F>
std::vector<T> grid_map(Execution exec, std::size_t count, F&& f) {
  return exec == Execution::Serial ? map_serial<T>(count, f) : map_parallel<T>(count, f);
}

}  // namespace snml
