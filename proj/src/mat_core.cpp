#include "mtrl/mat_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mtrl/errors.hpp"

namespace mtrl {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

bool finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// y += s * x
inline void axpy(double s, const double* x, double* y, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

inline double dot_raw(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

// -- Matrix -------------------------------------------------------------------

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require(std::isfinite(fill), "Matrix: fill value must be finite");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  require(data_.size() == rows * cols, "Matrix: entries.size() != rows * cols");
  require(finite(data_), "Matrix: entries must be finite");
}

Matrix Matrix::identity(std::size_t n, double scale) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
  return m;
}

Vector Matrix::column(std::size_t j) const {
  Vector out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

bool Matrix::all_finite() const { return finite(data_); }

// -- OrthonormalBasis ---------------------------------------------------------

OrthonormalBasis::OrthonormalBasis(Matrix matrix) : matrix_(std::move(matrix)) {
  require(matrix_.cols() <= matrix_.rows(), "OrthonormalBasis: rank exceeds dimension");
  require(matrix_.all_finite(), "OrthonormalBasis: non-finite entries");
  const Matrix gram = multiply_at_b(matrix_, matrix_);
  const double err = max_abs_diff(gram, Matrix::identity(gram.rows()));
  if (err > tol::kExact) {
    throw InvalidArgument("OrthonormalBasis: columns not orthonormal (max |B^T B - I| = " +
                          std::to_string(err) + ")");
  }
}

OrthonormalBasis OrthonormalBasis::coordinate(std::size_t dim, std::size_t rank,
                                              std::size_t first) {
  require(first + rank <= dim, "OrthonormalBasis::coordinate: span exceeds dimension");
  Matrix m(dim, rank);
  for (std::size_t j = 0; j < rank; ++j) m(first + j, j) = 1.0;
  return OrthonormalBasis(std::move(m));
}

Vector OrthonormalBasis::project(std::span<const double> x) const {
  return multiply_transposed(matrix_, x);
}

Vector OrthonormalBasis::lift(std::span<const double> w) const { return multiply(matrix_, w); }

// -- products -----------------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: length mismatch");
  return dot_raw(a.data(), b.data(), a.size());
}

double norm(std::span<const double> a) { return std::sqrt(dot_raw(a.data(), a.data(), a.size())); }

double frobenius_norm(const Matrix& a) { return norm(a.entries()); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "max_abs_diff: shape mismatch");
  double m = 0.0;
  const auto ea = a.entries();
  const auto eb = b.entries();
  for (std::size_t i = 0; i < ea.size(); ++i) m = std::max(m, std::abs(ea[i] - eb[i]));
  return m;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "multiply: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) axpy(a(i, k), b.row(k).data(), ci, b.cols());
  }
  return c;
}

Matrix multiply_at_b(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "multiply_at_b: row counts differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto ak = a.row(k);
    const double* bk = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) axpy(ak[i], bk, c.row(i).data(), b.cols());
  }
  return c;
}

Vector multiply(const Matrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), "multiply: vector length mismatch");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot_raw(a.row(i).data(), x.data(), x.size());
  return y;
}

Vector multiply_transposed(const Matrix& a, std::span<const double> x) {
  require(a.rows() == x.size(), "multiply_transposed: vector length mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) axpy(x[i], a.row(i).data(), y.data(), y.size());
  return y;
}

void add_outer_product(Matrix& a, std::span<const double> x, double scale) {
  require(a.rows() == x.size() && a.cols() == x.size(), "add_outer_product: shape mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) axpy(scale * x[i], x.data(), a.row(i).data(), x.size());
}

double quadratic_form(const Matrix& a, std::span<const double> x) {
  require(a.rows() == a.cols() && a.cols() == x.size(), "quadratic_form: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * dot_raw(a.row(i).data(), x.data(), x.size());
  return acc;
}

Vector quadratic_forms(const Matrix& a, const Matrix& xs) {
  require(a.rows() == a.cols() && a.cols() == xs.cols(), "quadratic_forms: shape mismatch");
  const std::size_t d = a.rows();
  const std::size_t k = xs.rows();
  // ys row j accumulates a^T x_j one row of `a` at a time.
  Matrix ys(k, d);
  for (std::size_t i = 0; i < d; ++i) {
    const double* ai = a.row(i).data();
    for (std::size_t j = 0; j < k; ++j) axpy(xs(j, i), ai, ys.row(j).data(), d);
  }
  Vector q(k);
  for (std::size_t j = 0; j < k; ++j) q[j] = dot_raw(ys.row(j).data(), xs.row(j).data(), d);
  return q;
}

// -- orthonormalisation and subspace distance ---------------------------------

OrthonormalBasis orthonormalize_columns(const Matrix& m) {
  require(m.cols() <= m.rows(), "orthonormalize_columns: more columns than rows");
  require(m.all_finite(), "orthonormalize_columns: non-finite entries");
  Matrix cols = m.transposed();  // one column per row for contiguous access
  for (std::size_t j = 0; j < cols.rows(); ++j) {
    const double original = norm(cols.row(j));
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        const double c = dot(cols.row(i), cols.row(j));
        axpy(-c, cols.row(i).data(), cols.row(j).data(), cols.cols());
      }
    }
    const double n = norm(cols.row(j));
    if (!(n > 1e-12 * std::max(original, 1.0))) {
      throw NumericalFailure("orthonormalize_columns: column " + std::to_string(j) +
                             " is numerically dependent on earlier columns");
    }
    for (double& v : cols.row(j)) v /= n;
  }
  return OrthonormalBasis(cols.transposed());
}

double subspace_distance(const OrthonormalBasis& b1, const OrthonormalBasis& b2) {
  if (b1.dim() != b2.dim()) {
    throw InvalidArgument("subspace_distance: dimensions differ (" + std::to_string(b1.dim()) +
                          " vs " + std::to_string(b2.dim()) + ")");
  }
  // (I - B1 B1^T) B2 = B2 - B1 (B1^T B2)
  const Matrix overlap = multiply_at_b(b1.matrix(), b2.matrix());
  Matrix residual = b2.matrix();
  const Matrix along = multiply(b1.matrix(), overlap);
  auto r = residual.entries();
  const auto a = along.entries();
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= a[i];
  return frobenius_norm(residual);
}

// -- Cholesky -----------------------------------------------------------------

Cholesky::Cholesky(const Matrix& a) : lower_(a.rows(), a.cols()) {
  require(a.rows() == a.cols(), "Cholesky: matrix must be square");
  require(a.all_finite(), "Cholesky: non-finite entries");
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j) - dot_raw(lower_.row(j).data(), lower_.row(j).data(), j);
    if (!(diag > 0.0)) {
      throw NumericalFailure("Cholesky: matrix is not positive definite (pivot " +
                             std::to_string(j) + " = " + std::to_string(diag) + ")");
    }
    const double ljj = std::sqrt(diag);
    lower_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      lower_(i, j) = (a(i, j) - dot_raw(lower_.row(i).data(), lower_.row(j).data(), j)) / ljj;
    }
  }
}

Vector Cholesky::solve(std::span<const double> b) const {
  const std::size_t n = lower_.rows();
  require(b.size() == n, "Cholesky::solve: right-hand side length mismatch");
  Vector y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = (y[i] - dot_raw(lower_.row(i).data(), y.data(), i)) / lower_(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= lower_(k, ii) * y[k];
    y[ii] = s / lower_(ii, ii);
  }
  return y;
}

double Cholesky::log_det() const {
  double s = 0.0;
  for (std::size_t i = 0; i < lower_.rows(); ++i) s += std::log(lower_(i, i));
  return 2.0 * s;
}

Matrix Cholesky::inverse() const {
  const std::size_t n = lower_.rows();
  // Invert L (lower triangular), then A^{-1} = L^{-T} L^{-1}.
  Matrix linv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    linv(j, j) = 1.0 / lower_(j, j);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s += lower_(i, k) * linv(k, j);
      linv(i, j) = -s / lower_(i, i);
    }
  }
  Matrix inv = multiply_at_b(linv, linv);
  // Symmetrise away rounding asymmetry.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = v;
      inv(j, i) = v;
    }
  return inv;
}

Vector solve_spd(const Matrix& a, std::span<const double> b) {
  require(finite(b), "solve_spd: non-finite right-hand side");
  return Cholesky(a).solve(b);
}

Matrix inverse_spd(const Matrix& a) { return Cholesky(a).inverse(); }

double log_det_spd(const Matrix& a) { return Cholesky(a).log_det(); }

double log_det_rank_one_update(double log_det_a, const Matrix& a, std::span<const double> z) {
  const Vector ainv_z = solve_spd(a, z);
  const double s = 1.0 + dot(z, ainv_z);
  if (!(s > 0.0)) throw NumericalFailure("log_det_rank_one_update: 1 + z^T A^{-1} z <= 0");
  return log_det_a + std::log(s);
}

// -- Sherman-Morrison ---------------------------------------------------------

void sherman_morrison_update_in_place(Matrix& inv, std::span<const double> x, Vector& scratch) {
  const std::size_t n = inv.rows();
  require(inv.cols() == n && x.size() == n, "sherman_morrison_update: shape mismatch");
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i) scratch[i] = dot_raw(inv.row(i).data(), x.data(), n);
  const double denom = 1.0 + dot_raw(x.data(), scratch.data(), n);
  if (!(denom > tol::kRankOneDenominator)) {
    throw NumericalFailure("sherman_morrison_update: denominator " + std::to_string(denom) +
                           " <= 1e-14, inverse lost positive definiteness");
  }
  const double inv_denom = 1.0 / denom;
  for (std::size_t i = 0; i < n; ++i) {
    axpy(-scratch[i] * inv_denom, scratch.data(), inv.row(i).data(), n);
  }
}

Matrix sherman_morrison_update(const Matrix& inv, std::span<const double> x) {
  require(finite(x), "sherman_morrison_update: non-finite update vector");
  Matrix out = inv;
  Vector scratch;
  sherman_morrison_update_in_place(out, x, scratch);
  return out;
}

// -- Jacobi eigendecomposition ------------------------------------------------

SymmetricEigen symmetric_eigen(const Matrix& input) {
  require(input.rows() == input.cols(), "symmetric_eigen: matrix must be square");
  require(input.all_finite(), "symmetric_eigen: non-finite entries");
  const std::size_t n = input.rows();
  Matrix a = input;
  // Symmetrise the input so the off-diagonal bookkeeping is exact.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
  Matrix v = Matrix::identity(n);
  // Rotations act on columns p, q of v; keep v transposed so they act on rows.
  Matrix vt = v;

  const double scale = frobenius_norm(a);
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  int sweep = 0;
  if (scale > 0.0) {
    while (off_norm() > 1e-15 * scale) {
      if (sweep == tol::kJacobiMaxSweeps) {
        throw NumericalFailure("symmetric_eigen: no convergence after " +
                               std::to_string(tol::kJacobiMaxSweeps) + " Jacobi sweeps");
      }
      ++sweep;
      for (std::size_t p = 0; p + 1 < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
          const double apq = a(p, q);
          if (std::abs(apq) <= 1e-300 || std::abs(apq) < 1e-18 * scale) continue;
          const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
          const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;
          for (std::size_t k = 0; k < n; ++k) {
            const double akp = a(k, p);
            const double akq = a(k, q);
            a(k, p) = c * akp - s * akq;
            a(k, q) = s * akp + c * akq;
          }
          for (std::size_t k = 0; k < n; ++k) {
            const double apk = a(p, k);
            const double aqk = a(q, k);
            a(p, k) = c * apk - s * aqk;
            a(q, k) = s * apk + c * aqk;
          }
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          double* vp = vt.row(p).data();
          double* vq = vt.row(q).data();
          for (std::size_t k = 0; k < n; ++k) {
            const double x = vp[k];
            const double y = vq[k];
            vp[k] = c * x - s * y;
            vq[k] = s * x + c * y;
          }
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.values[j] = a(src, src);
    auto col = vt.row(src);
    double sign = 1.0;
    for (double x : col) {
      if (std::abs(x) > 1e-12) {
        sign = x > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sign * col[i];
  }
  return out;
}

SingularSubspace top_r_left_singular_subspace(const Matrix& m, std::size_t r) {
  if (r == 0 || r > std::min(m.rows(), m.cols())) {
    throw InvalidArgument("top_r_left_singular_vectors: r = " + std::to_string(r) +
                          " outside [1, min(rows, cols)] for a " + std::to_string(m.rows()) +
                          "x" + std::to_string(m.cols()) + " matrix");
  }
  require(m.all_finite(), "top_r_left_singular_vectors: non-finite entries");
  const std::size_t d = m.rows();
  Matrix gram(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      const double g = dot_raw(m.row(i).data(), m.row(j).data(), m.cols());
      gram(i, j) = g;
      gram(j, i) = g;
    }
  const SymmetricEigen eig = symmetric_eigen(gram);
  Matrix basis(d, r);
  Vector sv(r);
  for (std::size_t j = 0; j < r; ++j) {
    sv[j] = std::sqrt(std::max(eig.values[j], 0.0));
    for (std::size_t i = 0; i < d; ++i) basis(i, j) = eig.vectors(i, j);
  }
  return {OrthonormalBasis(std::move(basis)), std::move(sv)};
}

OrthonormalBasis top_r_left_singular_vectors(const Matrix& m, std::size_t r) {
  return top_r_left_singular_subspace(m, r).basis;
}

}  // namespace mtrl
