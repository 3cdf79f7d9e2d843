#include "tarml/models/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tarml {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace tarml

namespace tarml::models {

Eigen::MatrixXd gram_matrix(const Matrix& x, std::span<const double> inv_sq_length, double signal_variance,
                            Exec exec) {
  const auto n = static_cast<std::ptrdiff_t>(x.rows);
  Eigen::MatrixXd k(n, n);
  auto fill_row = [&](std::ptrdiff_t i) {
    const auto ui = static_cast<std::size_t>(i);
    for (std::ptrdiff_t j = 0; j <= i; ++j) {
      const double v = squared_exponential(x.row(ui), x.row(static_cast<std::size_t>(j)), inv_sq_length,
                                           signal_variance);
      k(i, j) = v;
      k(j, i) = v;
    }
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) fill_row(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) fill_row(i);
  }
  return k;
}

}  // namespace tarml::models
