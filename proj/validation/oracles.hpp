#pragma once

// Reference computations that share no code with mat-core. Dense Eigen
// decompositions or plain loops; slow and obvious on purpose.

#include <cstddef>
#include <span>
#include <vector>

#include "mtrl/mat_core.hpp"
#include "mtrl/spectral_init.hpp"

namespace mtrl::oracle {

Matrix dense_inverse(const Matrix& a);

// log det via LU with partial pivoting; `a` must have positive determinant.
double log_det_lu(const Matrix& a);

// Plain determinant, for small matrices only.
double determinant(const Matrix& a);

// Left singular vectors 0..r-1 from a full SVD.
Matrix svd_left_basis(const Matrix& m, std::size_t r);

// All singular values, descending.
std::vector<double> singular_values(const Matrix& m);

// ||(I - B1 B1^T) B2||_F with an explicit d x d projector.
double projector_distance(const Matrix& b1, const Matrix& b2);

// (lambda I + sum z z^T)^{-1} sum z y, from the stacked rows.
std::vector<double> batch_ridge(const std::vector<std::vector<double>>& zs,
                                std::span<const double> ys, double lambda);

// x^T theta + radius sqrt(x^T Vbar^{-1} x) with Vbar solved, not inverted.
double ucb_value(std::span<const double> theta_hat, const Matrix& vbar, std::span<const double> x,
                 double radius);

// Neumaier-compensated sum.
double compensated_sum(std::span<const double> xs);

// Theta0 by three nested loops over (i, t, n) with compensated inner sums.
Matrix theta0_triple_loop(const ExplorationLog& log, double alpha);

// c_tilde * sum(y^2) / (N1 T), two passes with compensation.
double alpha_two_pass(const ExplorationLog& log, double c_tilde);

}  // namespace mtrl::oracle
