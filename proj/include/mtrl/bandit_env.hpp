#pragma once

// Ground-truth environment for T concurrent linear bandit tasks whose reward
// parameters share an r-dimensional subspace: Theta* = B* W*.

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mtrl/mat_core.hpp"
#include "mtrl/rng.hpp"

namespace mtrl {

class BanditInstance {
 public:
  // Validates shapes, r <= min(d, T), noise_std >= 0 and that no column of
  // w_star vanishes (DegenerateInstance). theta_star is computed here.
  BanditInstance(OrthonormalBasis b_star, Matrix w_star, double noise_std);

  std::size_t d() const { return b_star_.dim(); }
  std::size_t t_count() const { return w_star_.cols(); }
  std::size_t r() const { return b_star_.rank(); }
  const OrthonormalBasis& b_star() const { return b_star_; }
  const Matrix& w_star() const { return w_star_; }
  const Matrix& theta_star() const { return theta_star_; }
  double noise_std() const { return noise_std_; }

  // Column t of theta_star.
  Vector theta(std::size_t t) const { return theta_star_.column(t); }

  friend bool operator==(const BanditInstance& a, const BanditInstance& b) {
    return a.b_star_.matrix() == b.b_star_.matrix() && a.w_star_ == b.w_star_ &&
           a.theta_star_ == b.theta_star_ && a.noise_std_ == b.noise_std_;
  }

 private:
  OrthonormalBasis b_star_;
  Matrix w_star_;
  Matrix theta_star_;
  // theta_star transposed, so each task's parameter is contiguous.
  Matrix theta_rows_;
  double noise_std_ = 0.0;

  friend double mean_reward(const BanditInstance&, std::size_t, std::span<const double>);
};

struct InstanceStats {
  double sigma_max = 0.0;  // extreme singular values of W*
  double sigma_min = 0.0;
  double kappa = 1.0;      // sigma_max / sigma_min
  double mu = 1.0;         // max_t ||w*_t|| / min_t ||w*_t||
  double w_max = 0.0;      // max_t ||w*_t||
  double nsr = 0.0;        // T sigma^2 / sigma_min^2
  // Bound L on action norms. instance_stats() leaves this at 0; the harness
  // records the running maximum of observed action norms here.
  double l_bound = 0.0;
};

// Round n's candidate actions for one task, stored row-major (k x d).
struct ActionSet {
  std::size_t round = 0;
  std::size_t task = 0;
  Matrix actions;

  std::size_t k() const { return actions.rows(); }
  std::size_t dim() const { return actions.cols(); }
  std::span<const double> action(std::size_t i) const { return actions.row(i); }
};

struct RewardDraw {
  double mean = 0.0;
  double noise = 0.0;
  double observed = 0.0;
};

// B* orthonormalised from a Gaussian d x r draw, W* i.i.d. N(0, 1), all drawn
// from the stream `id`. Throws InvalidArgument unless 1 <= r <= min(d, T).
BanditInstance sample_instance(std::size_t d, std::size_t t_count, std::size_t r,
                               double noise_std, const StreamId& id);

// Throws DegenerateInstance if a column norm or sigma_min is <= 1e-12.
InstanceStats instance_stats(const BanditInstance& inst);

// k i.i.d. standard-normal actions; k >= 2.
ActionSet sample_action_set(const BanditInstance& inst, std::size_t n, std::size_t t,
                            std::size_t k, Rng& rng);

// x^T theta*_t without noise.
double mean_reward(const BanditInstance& inst, std::size_t t, std::span<const double> x);

RewardDraw draw_reward(const BanditInstance& inst, std::size_t t, std::span<const double> x,
                       Rng& rng);

// (argmax index, value) of x^T theta*_t over the set; lowest index on ties.
std::pair<std::size_t, double> best_action_value(const BanditInstance& inst, std::size_t t,
                                                 const ActionSet& actions);

// Self-describing JSON fixture: field names, dimensions and row-major arrays.
// Doubles are written in shortest round-trip form, so load(save(x)) == x.
std::string instance_to_json(const BanditInstance& inst);
BanditInstance instance_from_json(const std::string& text);
void save_instance(const BanditInstance& inst, const std::filesystem::path& path);
BanditInstance load_instance(const std::filesystem::path& path);

}  // namespace mtrl
