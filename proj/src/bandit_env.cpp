#include "mtrl/bandit_env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "mtrl/errors.hpp"

namespace mtrl {
namespace {

constexpr double kDegenerate = 1e-12;
constexpr const char* kFixtureFormat = "mtrl-bandit-instance";
constexpr int kFixtureVersion = 1;

Vector column_norms(const Matrix& m) {
  Vector norms(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) norms[j] += m(i, j) * m(i, j);
  for (double& v : norms) v = std::sqrt(v);
  return norms;
}

}  // namespace

BanditInstance::BanditInstance(OrthonormalBasis b_star, Matrix w_star, double noise_std)
    : b_star_(std::move(b_star)), w_star_(std::move(w_star)), noise_std_(noise_std) {
  if (w_star_.rows() != b_star_.rank()) {
    throw InvalidArgument("BanditInstance: W* has " + std::to_string(w_star_.rows()) +
                          " rows but B* has rank " + std::to_string(b_star_.rank()));
  }
  const std::size_t r = b_star_.rank();
  if (r == 0 || r > std::min(b_star_.dim(), w_star_.cols())) {
    throw InvalidArgument("BanditInstance: rank r = " + std::to_string(r) +
                          " must satisfy 1 <= r <= min(d, T)");
  }
  if (!(noise_std_ >= 0.0) || !std::isfinite(noise_std_)) {
    throw InvalidArgument("BanditInstance: noise_std must be finite and >= 0");
  }
  const Vector norms = column_norms(w_star_);
  for (std::size_t t = 0; t < norms.size(); ++t) {
    if (norms[t] < kDegenerate) {
      throw DegenerateInstance("BanditInstance: column " + std::to_string(t) +
                               " of W* has norm below 1e-12");
    }
  }
  theta_star_ = multiply(b_star_.matrix(), w_star_);
  theta_rows_ = theta_star_.transposed();
}

BanditInstance sample_instance(std::size_t d, std::size_t t_count, std::size_t r,
                               double noise_std, const StreamId& id) {
  if (r == 0 || r > std::min(d, t_count)) {
    throw InvalidArgument("sample_instance: need 1 <= r <= min(d, T), got d=" +
                          std::to_string(d) + " T=" + std::to_string(t_count) +
                          " r=" + std::to_string(r));
  }
  Rng rng(id);
  Matrix gaussian(d, r);
  for (double& v : gaussian.entries()) v = rng.normal();
  Matrix w(r, t_count);
  for (double& v : w.entries()) v = rng.normal();
  return BanditInstance(orthonormalize_columns(gaussian), std::move(w), noise_std);
}

InstanceStats instance_stats(const BanditInstance& inst) {
  const Matrix& w = inst.w_star();
  InstanceStats s;
  const Vector norms = column_norms(w);
  const auto [lo, hi] = std::minmax_element(norms.begin(), norms.end());
  if (*lo <= kDegenerate) throw DegenerateInstance("instance_stats: W* has a vanishing column");
  s.w_max = *hi;
  s.mu = *hi / *lo;

  // Singular values of the r x T matrix W* from the r x r Gram W* W*^T.
  Matrix gram(w.rows(), w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.rows(); ++j) gram(i, j) = dot(w.row(i), w.row(j));
  const SymmetricEigen eig = symmetric_eigen(gram);
  s.sigma_max = std::sqrt(std::max(eig.values.front(), 0.0));
  s.sigma_min = std::sqrt(std::max(eig.values.back(), 0.0));
  if (s.sigma_min <= kDegenerate) {
    throw DegenerateInstance("instance_stats: sigma_min(W*) <= 1e-12, W* is rank deficient");
  }
  s.kappa = s.sigma_max / s.sigma_min;
  const double sigma = inst.noise_std();
  s.nsr = static_cast<double>(inst.t_count()) * sigma * sigma / (s.sigma_min * s.sigma_min);
  return s;
}

ActionSet sample_action_set(const BanditInstance& inst, std::size_t n, std::size_t t,
                            std::size_t k, Rng& rng) {
  if (k < 2) throw InvalidArgument("sample_action_set: need k >= 2 actions");
  if (t >= inst.t_count()) throw InvalidArgument("sample_action_set: task index out of range");
  ActionSet set{n, t, Matrix(k, inst.d())};
  for (double& v : set.actions.entries()) v = rng.normal();
  return set;
}

double mean_reward(const BanditInstance& inst, std::size_t t, std::span<const double> x) {
  if (t >= inst.t_count()) throw InvalidArgument("mean_reward: task index out of range");
  return dot(inst.theta_rows_.row(t), x);
}

RewardDraw draw_reward(const BanditInstance& inst, std::size_t t, std::span<const double> x,
                       Rng& rng) {
  RewardDraw r;
  r.mean = mean_reward(inst, t, x);
  r.noise = inst.noise_std() * rng.normal();
  r.observed = r.mean + r.noise;
  return r;
}

std::pair<std::size_t, double> best_action_value(const BanditInstance& inst, std::size_t t,
                                                 const ActionSet& actions) {
  if (actions.k() == 0) throw InvalidArgument("best_action_value: empty action set");
  std::size_t best = 0;
  double value = mean_reward(inst, t, actions.action(0));
  for (std::size_t i = 1; i < actions.k(); ++i) {
    const double v = mean_reward(inst, t, actions.action(i));
    if (v > value) {
      value = v;
      best = i;
    }
  }
  return {best, value};
}

// -- fixtures -----------------------------------------------------------------

std::string instance_to_json(const BanditInstance& inst) {
  nlohmann::ordered_json j;
  j["format"] = kFixtureFormat;
  j["version"] = kFixtureVersion;
  j["d"] = inst.d();
  j["t_count"] = inst.t_count();
  j["r"] = inst.r();
  j["noise_std"] = inst.noise_std();
  j["b_star"] = detail::matrix_to_json(inst.b_star().matrix());
  j["w_star"] = detail::matrix_to_json(inst.w_star());
  j["theta_star"] = detail::matrix_to_json(inst.theta_star());
  return j.dump(1) + "\n";
}

BanditInstance instance_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("instance fixture: malformed JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != kFixtureFormat) {
      throw InvalidArgument("instance fixture: missing or unknown 'format' tag");
    }
    BanditInstance inst(OrthonormalBasis(detail::matrix_from_json(j.at("b_star"), "b_star")),
                        detail::matrix_from_json(j.at("w_star"), "w_star"),
                        j.at("noise_std").get<double>());
    if (inst.d() != j.at("d").get<std::size_t>() ||
        inst.t_count() != j.at("t_count").get<std::size_t>() ||
        inst.r() != j.at("r").get<std::size_t>()) {
      throw InvalidArgument("instance fixture: declared dimensions disagree with the matrices");
    }
    const Matrix theta = detail::matrix_from_json(j.at("theta_star"), "theta_star");
    if (theta.rows() != inst.d() || theta.cols() != inst.t_count() ||
        max_abs_diff(theta, inst.theta_star()) > 1e-10) {
      throw InvalidArgument("instance fixture: theta_star != b_star * w_star");
    }
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("instance fixture: ") + e.what());
  }
}

void save_instance(const BanditInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << instance_to_json(inst);
  if (!out) throw IoError("failed writing " + path.string());
}

BanditInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return instance_from_json(ss.str());
}

}  // namespace mtrl
