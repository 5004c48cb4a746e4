#pragma once

// Online policies for the OFUL phase: the multi-task agent that works in the
// estimated shared subspace, independent per-task OFUL, and uniform random.
// All share one Agent interface driven round by round by the harness.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtrl/bandit_env.hpp"
#include "mtrl/mat_core.hpp"
#include "mtrl/rng.hpp"
#include "mtrl/spectral_init.hpp"

namespace mtrl {

// Sherman-Morrison inverses are rebuilt from the raw Gram this often.
inline constexpr std::size_t kResyncInterval = 100;

enum class RadiusKind { kBeta, kBetaPrime, kBaselineOful, kZero };

// Bound delta0 on SD(b_hat, B*) used by the confidence radii.
struct Delta0Policy {
  enum class Kind { kFixed, kMeasuredSd, kScheduleInvSqrt };
  Kind kind = Kind::kMeasuredSd;
  // The fixed value, or (for kMeasuredSd) the measured SD once known.
  double value = 0.0;

  static Delta0Policy fixed(double v) { return {Kind::kFixed, v}; }
  static Delta0Policy measured_sd() { return {Kind::kMeasuredSd, 0.0}; }
  static Delta0Policy schedule_inv_sqrt() { return {Kind::kScheduleInvSqrt, 0.0}; }
};

// Bound L on action norms.
struct LPolicy {
  enum class Kind { kRunningMax, kFixed };
  Kind kind = Kind::kRunningMax;
  double value = 0.0;

  static LPolicy running_max() { return {Kind::kRunningMax, 0.0}; }
  static LPolicy fixed(double v) { return {Kind::kFixed, v}; }
};

// Which sqrt factor the middle term of beta' uses: the post-exploration
// horizon N - N1 (default) or the rounds played so far n - N1.
enum class BetaPrimeForm { kHorizon, kRound };

struct RadiusSpec {
  RadiusKind kind = RadiusKind::kBeta;
  double lambda = 1.0;
  double delta = 1e-3;
  Delta0Policy delta0;
  // mu * sqrt(r / T) * sigma*_max, consumed as one number.
  double mu_sigma_term = 0.0;
  double sigma = 0.0;
  std::size_t r = 1;
  LPolicy l_policy;
  std::size_t horizon = 0;  // N - N1
  BetaPrimeForm beta_prime_form = BetaPrimeForm::kHorizon;
  double s_bound = 0.0;     // bound on ||theta*_t|| for the baseline radius

  // lambda > 0, delta in (0, 1), non-negative scales; throws InvalidArgument.
  void validate() const;
};

double resolve_l(const RadiusSpec& spec, double running_l);
// `samples` is n - N1. The schedule uses max(samples, 1) to stay finite.
double resolve_delta0(const RadiusSpec& spec, std::size_t samples, double l);

// Online state of one task in the multi-task agent.
struct TaskState {
  std::size_t task = 0;
  Matrix vbar_inv;           // (lambda I + sum x x^T)^{-1}, d x d
  Matrix gram;               // sum x x^T, d x d, kept for resyncs
  double vbar_logdet_proj = 0.0;  // log det V, V = lambda I_r + sum z z^T, z = B^T x
  Matrix m_proj;             // V, r x r
  Vector b_proj;             // sum z y
  Vector w_hat;              // V^{-1} b_proj
  Vector theta_hat;          // b_hat w_hat
  std::size_t samples = 0;   // n - N1
  double max_projected_norm = 0.0;    // max ||B^T x|| seen in updates
  double max_projection_drift = 0.0;  // worst max|B^T Vbar B - V| at resyncs
  std::size_t resyncs = 0;
};

TaskState make_task_state(std::size_t task, std::size_t d, std::size_t r, double lambda);

// Independent d-dimensional ridge state for the baseline.
struct BaselineTaskState {
  std::size_t task = 0;
  Matrix vbar_inv;
  Matrix gram;
  Vector b;          // sum x y
  Vector theta_hat;  // vbar_inv b
  std::size_t samples = 0;
  std::size_t resyncs = 0;
};

BaselineTaskState make_baseline_state(std::size_t task, std::size_t d, double lambda);

struct PolicyDecision {
  std::size_t chosen = 0;
  double ucb_value = 0.0;
  double radius_used = 0.0;
  Vector index_values;  // empty for exploration / random choices
};

// sigma sqrt(2 log(det(V)^{1/2} det(lambda I)^{-1/2} / delta))
//   + (1 + delta0) sqrt(lambda) m + 2 sqrt(n - N1) L delta0 m,  m = mu_sigma_term.
double radius_beta(const RadiusSpec& spec, const TaskState& state, double running_l);

// sigma sqrt(r log((1 + (n - N1) L^2 / lambda) / delta))
//   + (sqrt(lambda) + sqrt(lambda) / (L sqrt(N - N1)) + 2) m.
double radius_beta_prime(const RadiusSpec& spec, const TaskState& state, double running_l);

// Classical d-dimensional OFUL radius:
// sigma sqrt(d log((1 + (n - N1) L^2 / lambda) / delta)) + sqrt(lambda) s_bound.
double radius_baseline(const RadiusSpec& spec, const BaselineTaskState& state,
                       double running_l, double s_bound);

// Radius of the kind named by spec.kind (beta, beta' or zero).
double mtl_radius(const RadiusSpec& spec, const TaskState& state, double running_l);

// max over the ellipsoid of x^T theta = x^T theta_hat + radius ||x||_{Vbar^{-1}}.
// A negative quadratic form is clamped to 0; below -1e-10 a warning is
// appended, below -1e-6 NumericalFailure is thrown.
double ucb_index(std::span<const double> theta_hat, const Matrix& vbar_inv,
                 std::span<const double> x, double radius,
                 std::vector<std::string>* warnings = nullptr);

PolicyDecision mtl_select(const TaskState& state, const ActionSet& actions,
                          const RadiusSpec& spec, const OrthonormalBasis& b_hat,
                          double running_l, std::vector<std::string>* warnings = nullptr);

void mtl_update(TaskState& state, std::span<const double> x, double y,
                const OrthonormalBasis& b_hat, const RadiusSpec& spec);

PolicyDecision baseline_select(const BaselineTaskState& state, const ActionSet& actions,
                               const RadiusSpec& spec, double running_l,
                               std::vector<std::string>* warnings = nullptr);

void baseline_update(BaselineTaskState& state, std::span<const double> x, double y,
                     const RadiusSpec& spec);

// -- policy interface ---------------------------------------------------------

enum class Phase { kExploration, kOptimistic };

struct RoundContext {
  Phase phase = Phase::kExploration;
  std::size_t round = 0;  // 1-based
  double running_l = 0.0;
};

// Read-only view of a task's confidence ellipsoid, for diagnostics.
struct EllipsoidView {
  std::span<const double> theta_hat;
  const Matrix* gram = nullptr;  // Vbar = lambda I + gram
  double lambda = 0.0;
};

// Uniform choice over the set; used by every agent during exploration.
PolicyDecision explore_uniformly(const ActionSet& actions, Rng& rng);

class Agent {
 public:
  virtual ~Agent() = default;

  virtual std::string_view name() const = 0;
  // Called once between the exploration and OFUL phases.
  virtual void start_optimistic_phase(const SpectralEstimate& /*estimate*/) {}
  virtual PolicyDecision select(std::size_t task, const ActionSet& actions,
                                const RoundContext& ctx, Rng& rng) = 0;
  virtual void update(std::size_t task, std::span<const double> x, double y,
                      const RoundContext& ctx) = 0;
  virtual std::optional<EllipsoidView> ellipsoid(std::size_t /*task*/) const {
    return std::nullopt;
  }

  const std::vector<std::string>& warnings() const { return warnings_; }

 protected:
  std::vector<std::string> warnings_;
};

class UniformRandomAgent final : public Agent {
 public:
  std::string_view name() const override { return "random"; }
  PolicyDecision select(std::size_t task, const ActionSet& actions, const RoundContext& ctx,
                        Rng& rng) override;
  void update(std::size_t, std::span<const double>, double, const RoundContext&) override {}
};

// Multi-task OFUL in the estimated subspace. spec.kind picks beta, beta' or
// a zero radius.
class MtlOfulAgent final : public Agent {
 public:
  MtlOfulAgent(std::size_t d, std::size_t t_count, std::size_t r, RadiusSpec spec);

  std::string_view name() const override;
  void start_optimistic_phase(const SpectralEstimate& estimate) override;
  PolicyDecision select(std::size_t task, const ActionSet& actions, const RoundContext& ctx,
                        Rng& rng) override;
  void update(std::size_t task, std::span<const double> x, double y,
              const RoundContext& ctx) override;
  std::optional<EllipsoidView> ellipsoid(std::size_t task) const override;

  const TaskState& state(std::size_t task) const { return states_.at(task); }
  const RadiusSpec& spec() const { return spec_; }
  const OrthonormalBasis& b_hat() const;

 private:
  std::size_t d_;
  std::size_t r_;
  RadiusSpec spec_;
  std::optional<OrthonormalBasis> b_hat_;
  std::vector<TaskState> states_;
};

class IndependentOfulAgent final : public Agent {
 public:
  IndependentOfulAgent(std::size_t d, std::size_t t_count, RadiusSpec spec);

  std::string_view name() const override { return "independent_oful"; }
  PolicyDecision select(std::size_t task, const ActionSet& actions, const RoundContext& ctx,
                        Rng& rng) override;
  void update(std::size_t task, std::span<const double> x, double y,
              const RoundContext& ctx) override;
  std::optional<EllipsoidView> ellipsoid(std::size_t task) const override;

  const BaselineTaskState& state(std::size_t task) const { return states_.at(task); }

 private:
  RadiusSpec spec_;
  std::vector<BaselineTaskState> states_;
};

}  // namespace mtrl
