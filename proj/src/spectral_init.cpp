#include "mtrl/spectral_init.hpp"

#include <cmath>

#include "json_io.hpp"
#include "mtrl/errors.hpp"

namespace mtrl {

ExplorationLog::ExplorationLog(std::size_t d, std::size_t t_count, std::size_t n1)
    : d_(d), n1_(n1) {
  if (d == 0 || t_count == 0 || n1 == 0) {
    throw InvalidArgument("ExplorationLog: d, T and N1 must all be >= 1");
  }
  features_.assign(t_count, Matrix(n1, d));
  rewards_.assign(t_count, Vector(n1, 0.0));
  filled_.assign(t_count, std::vector<bool>(n1, false));
}

ExplorationLog::ExplorationLog(std::vector<Matrix> features, std::vector<Vector> rewards)
    : features_(std::move(features)), rewards_(std::move(rewards)) {
  if (features_.empty() || features_.size() != rewards_.size()) {
    throw InvalidArgument("ExplorationLog: need one reward vector per task and T >= 1");
  }
  n1_ = features_.front().rows();
  d_ = features_.front().cols();
  if (n1_ == 0 || d_ == 0) throw InvalidArgument("ExplorationLog: empty feature matrix");
  for (std::size_t t = 0; t < features_.size(); ++t) {
    if (features_[t].rows() != n1_ || features_[t].cols() != d_ || rewards_[t].size() != n1_) {
      throw InvalidArgument("ExplorationLog: task " + std::to_string(t) +
                            " does not have exactly N1 rows of dimension d");
    }
    for (double y : rewards_[t])
      if (!std::isfinite(y)) throw InvalidArgument("ExplorationLog: non-finite reward");
  }
  filled_.assign(features_.size(), std::vector<bool>(n1_, true));
  recorded_ = n1_ * features_.size();
}

void ExplorationLog::record(std::size_t n, std::size_t t, std::span<const double> x, double y) {
  if (t >= features_.size() || n >= n1_) throw InvalidArgument("ExplorationLog: slot out of range");
  if (x.size() != d_) throw InvalidArgument("ExplorationLog: action has wrong dimension");
  if (filled_[t][n]) throw InvalidArgument("ExplorationLog: slot recorded twice");
  std::copy(x.begin(), x.end(), features_[t].row(n).begin());
  rewards_[t][n] = y;
  filled_[t][n] = true;
  ++recorded_;
}

double compute_alpha(const ExplorationLog& log, double c_tilde) {
  if (!(c_tilde > 0.0)) throw InvalidArgument("compute_alpha: c_tilde must be > 0");
  double sum_sq = 0.0;
  for (std::size_t t = 0; t < log.t_count(); ++t)
    for (double y : log.rewards(t)) sum_sq += y * y;
  const double samples = static_cast<double>(log.n1()) * static_cast<double>(log.t_count());
  return c_tilde * sum_sq / samples;
}

Vector truncate_rewards(std::span<const double> y, double alpha) {
  if (!(alpha >= 0.0)) throw InvalidArgument("truncate_rewards: alpha must be >= 0");
  Vector out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = (y[i] * y[i] <= alpha) ? y[i] : 0.0;
  return out;
}

Matrix assemble_theta0(const ExplorationLog& log, double alpha) {
  if (!log.complete()) throw InvalidArgument("assemble_theta0: exploration log is incomplete");
  const double inv_n1 = 1.0 / static_cast<double>(log.n1());
  Matrix theta0(log.d(), log.t_count());
  for (std::size_t t = 0; t < log.t_count(); ++t) {
    const Vector kept = truncate_rewards(log.rewards(t), alpha);
    const Vector col = multiply_transposed(log.features(t), kept);
    for (std::size_t i = 0; i < log.d(); ++i) theta0(i, t) = inv_n1 * col[i];
  }
  return theta0;
}

SpectralEstimate spectral_init(const ExplorationLog& log, std::size_t r, double c_tilde,
                               const OrthonormalBasis* truth) {
  if (r == 0 || r > std::min(log.d(), log.t_count())) {
    throw InvalidArgument("spectral_init: need 1 <= r <= min(d, T)");
  }
  SpectralEstimate est;
  est.alpha = compute_alpha(log, c_tilde);
  est.theta0 = assemble_theta0(log, est.alpha);
  SingularSubspace sub = top_r_left_singular_subspace(est.theta0, r);
  est.b_hat = std::move(sub.basis);
  est.singular_values = std::move(sub.singular_values);

  const double top = est.singular_values.front();
  std::size_t nonzero = 0;
  for (double s : est.singular_values)
    if (top > 0.0 && s > 1e-7 * top) ++nonzero;
  if (nonzero < r) {
    est.warnings.push_back("spectral_init: theta0 has " + std::to_string(nonzero) +
                           " nonzero singular values, fewer than r = " + std::to_string(r) +
                           "; basis includes null-space directions");
  }
  if (truth != nullptr) est.sd_to_truth = subspace_distance(est.b_hat, *truth);
  return est;
}

double oracle_c_tilde(double kappa, double mu) { return 9.0 * kappa * kappa * mu * mu; }

std::string spectral_estimate_to_json(const SpectralEstimate& est) {
  nlohmann::ordered_json j;
  j["format"] = "mtrl-spectral-estimate";
  j["version"] = 1;
  j["alpha"] = est.alpha;
  j["theta0"] = detail::matrix_to_json(est.theta0);
  j["b_hat"] = detail::matrix_to_json(est.b_hat.matrix());
  j["singular_values"] = est.singular_values;
  if (est.sd_to_truth) j["sd_to_truth"] = *est.sd_to_truth;
  j["warnings"] = est.warnings;
  return j.dump(1) + "\n";
}

}  // namespace mtrl
