#pragma once

#include <span>

#include <Eigen/Dense>

#include "tarml/exec.hpp"
#include "tarml/matrix.hpp"

namespace tarml::models {

double squared_exponential(std::span<const double> a, std::span<const double> b,
                           std::span<const double> inv_sq_length, double signal_variance);

// Symmetric Gram matrix of the squared-exponential kernel over the rows of x.
Eigen::MatrixXd gram_matrix(const Matrix& x, std::span<const double> inv_sq_length, double signal_variance,
                            Exec exec);

}  // namespace tarml::models
