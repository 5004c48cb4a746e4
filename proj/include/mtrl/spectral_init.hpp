#pragma once

// Estimate of the shared representation from the random-exploration data:
// truncated moment matrix, then its top-r left singular subspace.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtrl/mat_core.hpp"

namespace mtrl {

// Per-task exploration data. Row n of features(t) is the action task t played
// in exploration round n; rewards(t)[n] is what it observed.
class ExplorationLog {
 public:
  // Empty log to be filled by record().
  ExplorationLog(std::size_t d, std::size_t t_count, std::size_t n1);
  // Complete log from per-task (n1 x d) feature matrices and reward vectors.
  ExplorationLog(std::vector<Matrix> features, std::vector<Vector> rewards);

  // `n` is the 0-based exploration round.
  void record(std::size_t n, std::size_t t, std::span<const double> x, double y);

  std::size_t d() const { return d_; }
  std::size_t t_count() const { return features_.size(); }
  std::size_t n1() const { return n1_; }
  const Matrix& features(std::size_t t) const { return features_.at(t); }
  const Vector& rewards(std::size_t t) const { return rewards_.at(t); }

  // True once every (round, task) slot has been recorded.
  bool complete() const { return recorded_ == n1_ * features_.size(); }

 private:
  std::size_t d_ = 0;
  std::size_t n1_ = 0;
  std::vector<Matrix> features_;
  std::vector<Vector> rewards_;
  std::vector<std::vector<bool>> filled_;
  std::size_t recorded_ = 0;
};

struct SpectralEstimate {
  double alpha = 0.0;
  Matrix theta0;             // d x T truncated moment matrix
  OrthonormalBasis b_hat;    // d x r
  Vector singular_values;    // top-r singular values of theta0
  std::optional<double> sd_to_truth;  // SD(b_hat, truth) when truth was supplied
  std::vector<std::string> warnings;
};

// c_tilde times the mean of y^2 over all N1*T exploration samples.
double compute_alpha(const ExplorationLog& log, double c_tilde);

// y_i kept when y_i^2 <= alpha (boundary kept), zeroed otherwise.
Vector truncate_rewards(std::span<const double> y, double alpha);

// Column t = (1/N1) Phi_t^T truncate_rewards(Y_t, alpha).
Matrix assemble_theta0(const ExplorationLog& log, double alpha);

// compute_alpha -> truncate_rewards -> assemble_theta0 -> top-r subspace.
// A theta0 with fewer than r nonzero singular values still yields a basis and
// adds a warning. Deterministic in its inputs.
SpectralEstimate spectral_init(const ExplorationLog& log, std::size_t r, double c_tilde,
                               const OrthonormalBasis* truth = nullptr);

// The truncation multiplier 9 kappa^2 mu^2 used when the instance is known.
double oracle_c_tilde(double kappa, double mu);

// Theta0 and b_hat (plus alpha and the measured SD) as a JSON fixture.
std::string spectral_estimate_to_json(const SpectralEstimate& est);

}  // namespace mtrl
