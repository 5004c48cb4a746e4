#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mtrl/errors.hpp"
#include "mtrl/mat_core.hpp"
#include "mtrl/rng.hpp"
#include "oracles.hpp"

namespace mtrl {
namespace {

Rng test_rng(std::uint32_t round) { return Rng(StreamId{2024, 0, StreamPhase::kInstance, round, 0}); }

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.entries()) v = rng.normal();
  return m;
}

Matrix random_spd(std::size_t n, Rng& rng) {
  const Matrix a = gaussian(n, n, rng);
  Matrix m = multiply(a, a.transposed());
  for (std::size_t i = 0; i < n; ++i) m(i, i) += 1.0;
  return m;
}

TEST(Matrix, RejectsNonFiniteAndBadShape) {
  EXPECT_THROW(Matrix(1, 1, std::vector<double>{std::nan("")}), InvalidArgument);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), InvalidArgument);
  EXPECT_THROW(Matrix(1, 1, std::vector<double>{std::numeric_limits<double>::infinity()}),
               InvalidArgument);
}

TEST(OrthonormalBasis, RejectsNonOrthonormalColumns) {
  EXPECT_THROW(OrthonormalBasis(Matrix(2, 1, {1.0, 1.0})), InvalidArgument);
  EXPECT_THROW(OrthonormalBasis(Matrix(1, 2, {1.0, 0.0})), InvalidArgument);
  EXPECT_NO_THROW(OrthonormalBasis(Matrix(2, 1, {0.6, 0.8})));
}

TEST(SubspaceDistance, SelfIsZero) {
  Rng rng = test_rng(1);
  const OrthonormalBasis b = orthonormalize_columns(gaussian(7, 3, rng));
  EXPECT_NEAR(subspace_distance(b, b), 0.0, 1e-12);
}

TEST(SubspaceDistance, DisjointCoordinatesGiveSqrtR) {
  const OrthonormalBasis b1 = OrthonormalBasis::coordinate(8, 3, 0);
  const OrthonormalBasis b2 = OrthonormalBasis::coordinate(8, 3, 3);
  EXPECT_NEAR(subspace_distance(b1, b2), std::sqrt(3.0), 1e-12);
}

TEST(SubspaceDistance, MatchesDenseProjector) {
  Rng rng = test_rng(2);
  const OrthonormalBasis b1 = orthonormalize_columns(gaussian(6, 2, rng));
  const OrthonormalBasis b2 = orthonormalize_columns(gaussian(6, 2, rng));
  EXPECT_NEAR(subspace_distance(b1, b2), oracle::projector_distance(b1.matrix(), b2.matrix()),
              1e-12);
}

TEST(SubspaceDistance, AsymmetricForDifferentRanks) {
  const OrthonormalBasis wide = OrthonormalBasis::coordinate(4, 2, 0);
  const OrthonormalBasis narrow = OrthonormalBasis::coordinate(4, 1, 0);
  EXPECT_NEAR(subspace_distance(wide, narrow), 0.0, 1e-15);
  EXPECT_NEAR(subspace_distance(narrow, wide), 1.0, 1e-15);
}

TEST(SubspaceDistance, DimensionMismatchThrows) {
  EXPECT_THROW(subspace_distance(OrthonormalBasis::coordinate(3, 1), OrthonormalBasis::coordinate(4, 1)),
               InvalidArgument);
}

TEST(TopRSingular, DiagonalMatrix) {
  Matrix m(3, 3);
  m(0, 0) = 3;
  m(1, 1) = 2;
  m(2, 2) = 1;
  const OrthonormalBasis b = top_r_left_singular_vectors(m, 2);
  EXPECT_NEAR(subspace_distance(b, OrthonormalBasis::coordinate(3, 2)), 0.0, 1e-12);
}

TEST(TopRSingular, RankOneOuterProduct) {
  Rng rng = test_rng(3);
  Vector u(5);
  for (double& x : u) x = rng.normal();
  const double nu = norm(u);
  for (double& x : u) x /= nu;
  Matrix m(5, 4);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) m(i, j) = u[i] * (1.0 + static_cast<double>(j));
  const OrthonormalBasis b = top_r_left_singular_vectors(m, 1);
  EXPECT_NEAR(std::abs(dot(b.matrix().column(0), u)), 1.0, 1e-10);
}

TEST(TopRSingular, Random8x5MatchesDenseSvd) {
  Rng rng = test_rng(4);
  const Matrix m = gaussian(8, 5, rng);
  const OrthonormalBasis ours = top_r_left_singular_vectors(m, 3);
  EXPECT_LE(oracle::projector_distance(ours.matrix(), oracle::svd_left_basis(m, 3)), 1e-6);
}

TEST(TopRSingular, SubspaceOptimality) {
  Rng rng = test_rng(5);
  const Matrix m = gaussian(9, 6, rng);
  const OrthonormalBasis ours = top_r_left_singular_vectors(m, 2);
  const Matrix ref = oracle::svd_left_basis(m, 2);
  const double captured = frobenius_norm(multiply_at_b(m, ours.matrix()));
  const double best = frobenius_norm(multiply_at_b(m, ref));
  EXPECT_GE(captured, best - 1e-6 * best);
}

TEST(TopRSingular, SingularValuesMatchOracle) {
  Rng rng = test_rng(6);
  const Matrix m = gaussian(6, 9, rng);
  const SingularSubspace sub = top_r_left_singular_subspace(m, 3);
  const std::vector<double> sv = oracle::singular_values(m);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(sub.singular_values[i], sv[i], 1e-8);
}

TEST(TopRSingular, RankOutOfRangeThrows) {
  const Matrix m(3, 2, 1.0);
  EXPECT_THROW(top_r_left_singular_vectors(m, 0), InvalidArgument);
  EXPECT_THROW(top_r_left_singular_vectors(m, 3), InvalidArgument);
}

TEST(TopRSingular, TiedSpectrumIsDeterministic) {
  const Matrix m = Matrix::identity(4);
  const OrthonormalBasis a = top_r_left_singular_vectors(m, 2);
  const OrthonormalBasis b = top_r_left_singular_vectors(m, 2);
  EXPECT_EQ(a.matrix(), b.matrix());
  EXPECT_LE(max_abs_diff(multiply_at_b(a.matrix(), a.matrix()), Matrix::identity(2)), 1e-12);
}

TEST(ShermanMorrison, ZeroUpdateIsIdentity) {
  const Vector x{0.0, 0.0};
  EXPECT_EQ(sherman_morrison_update(Matrix::identity(2), x), Matrix::identity(2));
}

TEST(ShermanMorrison, ScalarCase) {
  const Matrix inv = sherman_morrison_update(Matrix::identity(1), Vector{1.0});
  EXPECT_DOUBLE_EQ(inv(0, 0), 0.5);
}

TEST(ShermanMorrison, MatchesDenseInverse) {
  Rng rng = test_rng(7);
  const Matrix a = random_spd(4, rng);
  Vector x(4);
  for (double& v : x) v = rng.normal();
  Matrix updated = a;
  add_outer_product(updated, x);
  EXPECT_LE(max_abs_diff(sherman_morrison_update(inverse_spd(a), x), oracle::dense_inverse(updated)),
            1e-8);
}

TEST(ShermanMorrison, NonPositiveDenominatorThrows) {
  EXPECT_THROW(sherman_morrison_update(Matrix::identity(1, -1.0), Vector{1.0}), NumericalFailure);
}

TEST(SolveSpd, IdentityAndScaling) {
  const Vector b{1.0, -2.0, 3.5};
  const Vector x = solve_spd(Matrix::identity(3), b);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(x[i], b[i]);
  const Vector y = solve_spd(Matrix::identity(2, 2.0), Vector{4.0, 6.0});
  EXPECT_DOUBLE_EQ(y[0], 2.0);
  EXPECT_DOUBLE_EQ(y[1], 3.0);
}

TEST(SolveSpd, ResidualOnRandomSystem) {
  Rng rng = test_rng(8);
  const Matrix a = random_spd(5, rng);
  Vector b(5);
  for (double& v : b) v = rng.normal();
  const Vector x = solve_spd(a, b);
  const Vector ax = multiply(a, x);
  double res = 0.0;
  for (std::size_t i = 0; i < 5; ++i) res += (ax[i] - b[i]) * (ax[i] - b[i]);
  EXPECT_LE(std::sqrt(res), 1e-8 * (1.0 + norm(b)));
}

TEST(SolveSpd, IndefiniteThrows) {
  Matrix a = Matrix::identity(2);
  a(1, 1) = -1.0;
  EXPECT_THROW(solve_spd(a, Vector{1.0, 1.0}), NumericalFailure);
}

TEST(LogDet, RankOneLemmaMatchesDeterminant) {
  Rng rng = test_rng(9);
  const Matrix m = random_spd(5, rng);
  Vector z(5);
  for (double& v : z) v = rng.normal();
  Matrix updated = m;
  add_outer_product(updated, z);
  EXPECT_NEAR(log_det_rank_one_update(log_det_spd(m), m, z), std::log(oracle::determinant(updated)),
              1e-8);
  EXPECT_NEAR(log_det_spd(updated), oracle::log_det_lu(updated), 1e-10);
}

TEST(SymmetricEigen, ReconstructsMatrix) {
  Rng rng = test_rng(10);
  const Matrix a = random_spd(6, rng);
  const SymmetricEigen eig = symmetric_eigen(a);
  Matrix rebuilt(6, 6);
  for (std::size_t k = 0; k < 6; ++k) add_outer_product(rebuilt, eig.vectors.column(k), eig.values[k]);
  EXPECT_LE(max_abs_diff(rebuilt, a), 1e-10);
  for (std::size_t k = 1; k < 6; ++k) EXPECT_GE(eig.values[k - 1], eig.values[k]);
}

TEST(QuadraticForms, BatchedMatchesSingle) {
  Rng rng = test_rng(11);
  const Matrix a = random_spd(7, rng);
  const Matrix xs = gaussian(5, 7, rng);
  const Vector batch = quadratic_forms(a, xs);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(batch[i], quadratic_form(a, xs.row(i)), 1e-10);
}

}  // namespace
}  // namespace mtrl
