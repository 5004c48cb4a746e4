#pragma once

// Dense linear algebra for the bandit simulator: a row-major matrix,
// orthonormal bases, Cholesky, cyclic Jacobi eigendecomposition, rank-one
// inverse updates and the subspace distance between two bases.
//
// Everything here is a pure function of its arguments.

#include <cstddef>
#include <span>
#include <vector>

namespace mtrl {

namespace tol {
// Exact-algebra identities (orthonormality, Pythagoras, rank-one updates).
inline constexpr double kExact = 1e-8;
// Results of iterative procedures (Jacobi eigenvectors, drift checks).
inline constexpr double kIterative = 1e-6;
// Sherman-Morrison denominators at or below this signal a non-SPD inverse.
inline constexpr double kRankOneDenominator = 1e-14;
// Cyclic Jacobi gives up after this many sweeps.
inline constexpr int kJacobiMaxSweeps = 100;
}  // namespace tol

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // `entries` is row-major and must hold rows * cols finite values.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Matrix identity(std::size_t n, double scale = 1.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  Vector column(std::size_t j) const;

  std::span<double> entries() { return data_; }
  std::span<const double> entries() const { return data_; }

  Matrix transposed() const;
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// A d x r matrix whose columns are orthonormal to within tol::kExact.
class OrthonormalBasis {
 public:
  OrthonormalBasis() = default;
  // Throws InvalidArgument unless max|M^T M - I| <= tol::kExact.
  explicit OrthonormalBasis(Matrix matrix);

  // Canonical basis spanning coordinates [first, first + rank) of R^dim.
  static OrthonormalBasis coordinate(std::size_t dim, std::size_t rank, std::size_t first = 0);

  std::size_t dim() const { return matrix_.rows(); }
  std::size_t rank() const { return matrix_.cols(); }
  const Matrix& matrix() const { return matrix_; }

  // B^T x (length rank) and B w (length dim).
  Vector project(std::span<const double> x) const;
  Vector lift(std::span<const double> w) const;

 private:
  Matrix matrix_;
};

// Basic products. All check shapes and throw InvalidArgument on mismatch.
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
Matrix multiply(const Matrix& a, const Matrix& b);
// a^T b without forming the transpose.
Matrix multiply_at_b(const Matrix& a, const Matrix& b);
Vector multiply(const Matrix& a, std::span<const double> x);
Vector multiply_transposed(const Matrix& a, std::span<const double> x);
// a += scale * x x^T.
void add_outer_product(Matrix& a, std::span<const double> x, double scale = 1.0);

// x^T a x for a square a.
double quadratic_form(const Matrix& a, std::span<const double> x);
// x_k^T a x_k for every row x_k of `xs`; streams `a` once.
Vector quadratic_forms(const Matrix& a, const Matrix& xs);

// Modified Gram-Schmidt with one reorthogonalisation pass. Throws
// NumericalFailure if the columns are numerically dependent.
OrthonormalBasis orthonormalize_columns(const Matrix& m);

// ||(I - B1 B1^T) B2||_F. Asymmetric in its arguments; bounded by sqrt(b2.rank()).
double subspace_distance(const OrthonormalBasis& b1, const OrthonormalBasis& b2);

class Cholesky {
 public:
  // Throws NumericalFailure if `a` is not (numerically) positive definite.
  explicit Cholesky(const Matrix& a);

  Vector solve(std::span<const double> b) const;
  double log_det() const;
  Matrix inverse() const;
  const Matrix& lower() const { return lower_; }

 private:
  Matrix lower_;
};

Vector solve_spd(const Matrix& a, std::span<const double> b);
Matrix inverse_spd(const Matrix& a);
double log_det_spd(const Matrix& a);
// log det(a + z z^T) from log det(a) via the matrix determinant lemma.
double log_det_rank_one_update(double log_det_a, const Matrix& a, std::span<const double> z);

// (A + x x^T)^{-1} from inv = A^{-1}.
Matrix sherman_morrison_update(const Matrix& inv, std::span<const double> x);
// In-place variant for the online agents; `scratch` is resized as needed.
void sherman_morrison_update_in_place(Matrix& inv, std::span<const double> x, Vector& scratch);

struct SymmetricEigen {
  Vector values;   // descending
  Matrix vectors;  // column j pairs with values[j]
};

// Cyclic Jacobi rotations. Eigenvectors are sign-normalised so their first
// entry with magnitude above 1e-12 is positive; ties in eigenvalue keep the
// original diagonal order.
SymmetricEigen symmetric_eigen(const Matrix& a);

struct SingularSubspace {
  OrthonormalBasis basis;
  Vector singular_values;  // top-r, descending
};

// Top-r left singular subspace through the eigendecomposition of m m^T.
SingularSubspace top_r_left_singular_subspace(const Matrix& m, std::size_t r);
OrthonormalBasis top_r_left_singular_vectors(const Matrix& m, std::size_t r);

}  // namespace mtrl
