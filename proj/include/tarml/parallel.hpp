#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include "tarml/exec.hpp"

namespace tarml {

// Runs fn(i) for i in [0, n). Under Exec::kParallel the iterations are spread
// over OpenMP threads; an exception thrown by any iteration is rethrown after
// the loop (the one from the lowest index, so failures are deterministic).
template <typename Fn>
void for_each_index(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::kSerial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace tarml
