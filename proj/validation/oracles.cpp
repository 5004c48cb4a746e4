#include "oracles.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace mtrl::oracle {
namespace {

using Dense = Eigen::MatrixXd;

Dense to_eigen(const Matrix& m) {
  Dense e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

Matrix from_eigen(const Dense& e) {
  Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  return m;
}

Eigen::VectorXd to_eigen(std::span<const double> v) {
  Eigen::VectorXd e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e(i) = v[i];
  return e;
}

}  // namespace

Matrix dense_inverse(const Matrix& a) { return from_eigen(to_eigen(a).fullPivLu().inverse()); }

double log_det_lu(const Matrix& a) {
  const Eigen::PartialPivLU<Dense> lu(to_eigen(a));
  const Dense& packed = lu.matrixLU();
  double s = 0.0;
  for (Eigen::Index i = 0; i < packed.rows(); ++i) s += std::log(std::abs(packed(i, i)));
  return s;
}

double determinant(const Matrix& a) { return to_eigen(a).determinant(); }

Matrix svd_left_basis(const Matrix& m, std::size_t r) {
  const Eigen::JacobiSVD<Dense> svd(to_eigen(m), Eigen::ComputeFullU);
  return from_eigen(svd.matrixU().leftCols(static_cast<Eigen::Index>(r)));
}

std::vector<double> singular_values(const Matrix& m) {
  const Eigen::JacobiSVD<Dense> svd(to_eigen(m));
  const Eigen::VectorXd& s = svd.singularValues();
  return std::vector<double>(s.data(), s.data() + s.size());
}

double projector_distance(const Matrix& b1, const Matrix& b2) {
  const Dense e1 = to_eigen(b1);
  const Dense proj = Dense::Identity(e1.rows(), e1.rows()) - e1 * e1.transpose();
  return (proj * to_eigen(b2)).norm();
}

std::vector<double> batch_ridge(const std::vector<std::vector<double>>& zs,
                                std::span<const double> ys, double lambda) {
  const Eigen::Index r = zs.empty() ? 0 : static_cast<Eigen::Index>(zs.front().size());
  Dense z(static_cast<Eigen::Index>(zs.size()), r);
  for (std::size_t i = 0; i < zs.size(); ++i)
    for (Eigen::Index j = 0; j < r; ++j) z(static_cast<Eigen::Index>(i), j) = zs[i][j];
  const Dense gram = z.transpose() * z + lambda * Dense::Identity(r, r);
  const Eigen::VectorXd w = gram.ldlt().solve(z.transpose() * to_eigen(ys));
  return std::vector<double>(w.data(), w.data() + w.size());
}

double ucb_value(std::span<const double> theta_hat, const Matrix& vbar, std::span<const double> x,
                 double radius) {
  const Eigen::VectorXd ex = to_eigen(x);
  const Eigen::VectorXd solved = to_eigen(vbar).llt().solve(ex);
  return ex.dot(to_eigen(theta_hat)) + radius * std::sqrt(ex.dot(solved));
}

double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double carry = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + carry;
}

Matrix theta0_triple_loop(const ExplorationLog& log, double alpha) {
  Matrix out(log.d(), log.t_count());
  std::vector<double> terms(log.n1());
  for (std::size_t i = 0; i < log.d(); ++i) {
    for (std::size_t t = 0; t < log.t_count(); ++t) {
      for (std::size_t n = 0; n < log.n1(); ++n) {
        const double y = log.rewards(t)[n];
        terms[n] = y * y <= alpha ? log.features(t)(n, i) * y : 0.0;
      }
      out(i, t) = compensated_sum(terms) / static_cast<double>(log.n1());
    }
  }
  return out;
}

double alpha_two_pass(const ExplorationLog& log, double c_tilde) {
  std::vector<double> per_task;
  for (std::size_t t = 0; t < log.t_count(); ++t) {
    std::vector<double> sq;
    for (double y : log.rewards(t)) sq.push_back(y * y);
    per_task.push_back(compensated_sum(sq));
  }
  const double total = compensated_sum(per_task);
  return c_tilde * (total / static_cast<double>(log.n1() * log.t_count()));
}

}  // namespace mtrl::oracle
