#include "mtrl/agents.hpp"

#include <cmath>
#include <limits>

#include "mtrl/errors.hpp"

namespace mtrl {
namespace {

// Quadratic forms this negative are rounding noise worth reporting; below the
// hard limit the inverse is no longer positive definite.
constexpr double kQuadWarn = -1e-10;
constexpr double kQuadFail = -1e-6;

double confidence_width(double quad, double radius, std::vector<std::string>* warnings) {
  if (quad < 0.0) {
    if (quad < kQuadFail) {
      throw NumericalFailure("ucb_index: x^T Vbar^{-1} x = " + std::to_string(quad) +
                             " is negative beyond rounding");
    }
    if (quad < kQuadWarn && warnings != nullptr) {
      warnings->push_back("ucb_index: clamped negative quadratic form " + std::to_string(quad));
    }
    quad = 0.0;
  }
  return radius * std::sqrt(quad);
}

PolicyDecision argmax_decision(Vector indices, double radius) {
  PolicyDecision dec;
  dec.radius_used = radius;
  dec.chosen = 0;
  for (std::size_t i = 1; i < indices.size(); ++i)
    if (indices[i] > indices[dec.chosen]) dec.chosen = i;
  dec.ucb_value = indices[dec.chosen];
  dec.index_values = std::move(indices);
  return dec;
}

// Optimistic index for every action in the set through one pass over vbar_inv.
Vector optimistic_indices(std::span<const double> theta_hat, const Matrix& vbar_inv,
                          const ActionSet& actions, double radius,
                          std::vector<std::string>* warnings) {
  if (actions.dim() != theta_hat.size() || vbar_inv.rows() != theta_hat.size()) {
    throw InvalidArgument("select: action dimension does not match the task state");
  }
  if (actions.k() == 0) throw InvalidArgument("select: empty action set");
  const Vector quad = quadratic_forms(vbar_inv, actions.actions);
  Vector idx(actions.k());
  for (std::size_t i = 0; i < actions.k(); ++i) {
    idx[i] = dot(actions.action(i), theta_hat) + confidence_width(quad[i], radius, warnings);
  }
  return idx;
}

double require_positive_l(double l) {
  if (!(l > 0.0) || !std::isfinite(l)) {
    throw InvalidArgument("radius: action-norm bound L must be finite and > 0");
  }
  return l;
}

double log_growth_term(double sigma, double dim, std::size_t samples, double l, double lambda,
                       double delta) {
  const double arg = (1.0 + static_cast<double>(samples) * l * l / lambda) / delta;
  return sigma * std::sqrt(dim * std::log(arg));
}

void resync_inverse(Matrix& vbar_inv, const Matrix& gram, double lambda) {
  Matrix vbar = gram;
  for (std::size_t i = 0; i < vbar.rows(); ++i) vbar(i, i) += lambda;
  vbar_inv = inverse_spd(vbar);
}

}  // namespace

// -- radius specification -----------------------------------------------------

void RadiusSpec::validate() const {
  if (!(lambda > 0.0)) throw InvalidArgument("RadiusSpec: lambda must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("RadiusSpec: delta must lie in (0, 1)");
  if (!(sigma >= 0.0)) throw InvalidArgument("RadiusSpec: sigma must be >= 0");
  if (!(mu_sigma_term >= 0.0)) throw InvalidArgument("RadiusSpec: mu_sigma_term must be >= 0");
  if (!(s_bound >= 0.0)) throw InvalidArgument("RadiusSpec: s_bound must be >= 0");
  if (r == 0) throw InvalidArgument("RadiusSpec: r must be >= 1");
  if (delta0.kind != Delta0Policy::Kind::kScheduleInvSqrt && !(delta0.value >= 0.0)) {
    throw InvalidArgument("RadiusSpec: delta0 must be >= 0");
  }
  if (l_policy.kind == LPolicy::Kind::kFixed && !(l_policy.value > 0.0)) {
    throw InvalidArgument("RadiusSpec: fixed L must be > 0");
  }
}

double resolve_l(const RadiusSpec& spec, double running_l) {
  return spec.l_policy.kind == LPolicy::Kind::kFixed ? spec.l_policy.value : running_l;
}

double resolve_delta0(const RadiusSpec& spec, std::size_t samples, double l) {
  switch (spec.delta0.kind) {
    case Delta0Policy::Kind::kFixed:
    case Delta0Policy::Kind::kMeasuredSd:
      return spec.delta0.value;
    case Delta0Policy::Kind::kScheduleInvSqrt:
      return 1.0 / (require_positive_l(l) *
                    std::sqrt(static_cast<double>(std::max<std::size_t>(samples, 1))));
  }
  return spec.delta0.value;
}

// -- radii --------------------------------------------------------------------

double radius_beta(const RadiusSpec& spec, const TaskState& state, double running_l) {
  const double l = resolve_l(spec, running_l);
  const double delta0 = resolve_delta0(spec, state.samples, l);
  const double m = spec.mu_sigma_term;
  // log(det(V)^{1/2} det(lambda I_r)^{-1/2} / delta)
  const double log_arg = 0.5 * (state.vbar_logdet_proj -
                                static_cast<double>(spec.r) * std::log(spec.lambda)) -
                         std::log(spec.delta);
  if (!(log_arg >= 0.0) || !std::isfinite(log_arg)) {
    throw NumericalFailure("radius_beta: determinant ratio below 1 (log-det " +
                           std::to_string(state.vbar_logdet_proj) + "), task state corrupted");
  }
  const double noise_term = spec.sigma * std::sqrt(2.0 * log_arg);
  const double bias_term = (1.0 + delta0) * std::sqrt(spec.lambda) * m;
  const double subspace_term =
      state.samples == 0
          ? 0.0
          : 2.0 * std::sqrt(static_cast<double>(state.samples)) * l * delta0 * m;
  return noise_term + bias_term + subspace_term;
}

double radius_beta_prime(const RadiusSpec& spec, const TaskState& state, double running_l) {
  const double l = require_positive_l(resolve_l(spec, running_l));
  const double noise_term = log_growth_term(spec.sigma, static_cast<double>(spec.r),
                                            state.samples, l, spec.lambda, spec.delta);
  double rounds = 0.0;
  if (spec.beta_prime_form == BetaPrimeForm::kHorizon) {
    if (spec.horizon == 0) throw InvalidArgument("radius_beta_prime: horizon N - N1 must be >= 1");
    rounds = static_cast<double>(spec.horizon);
  } else {
    rounds = static_cast<double>(std::max<std::size_t>(state.samples, 1));
  }
  const double sl = std::sqrt(spec.lambda);
  return noise_term + (sl + sl / (l * std::sqrt(rounds)) + 2.0) * spec.mu_sigma_term;
}

double radius_baseline(const RadiusSpec& spec, const BaselineTaskState& state, double running_l,
                       double s_bound) {
  const double l = resolve_l(spec, running_l);
  const double noise_term =
      log_growth_term(spec.sigma, static_cast<double>(state.theta_hat.size()), state.samples, l,
                      spec.lambda, spec.delta);
  return noise_term + std::sqrt(spec.lambda) * s_bound;
}

double mtl_radius(const RadiusSpec& spec, const TaskState& state, double running_l) {
  switch (spec.kind) {
    case RadiusKind::kBeta:
      return radius_beta(spec, state, running_l);
    case RadiusKind::kBetaPrime:
      return radius_beta_prime(spec, state, running_l);
    case RadiusKind::kZero:
      return 0.0;
    case RadiusKind::kBaselineOful:
      break;
  }
  throw InvalidArgument("mtl_radius: the baseline radius needs a baseline task state");
}

// -- index and states ---------------------------------------------------------

double ucb_index(std::span<const double> theta_hat, const Matrix& vbar_inv,
                 std::span<const double> x, double radius, std::vector<std::string>* warnings) {
  if (!(radius >= 0.0)) throw InvalidArgument("ucb_index: radius must be >= 0");
  return dot(x, theta_hat) + confidence_width(quadratic_form(vbar_inv, x), radius, warnings);
}

TaskState make_task_state(std::size_t task, std::size_t d, std::size_t r, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("make_task_state: lambda must be > 0");
  TaskState s;
  s.task = task;
  s.vbar_inv = Matrix::identity(d, 1.0 / lambda);
  s.gram = Matrix(d, d);
  s.m_proj = Matrix::identity(r, lambda);
  s.vbar_logdet_proj = static_cast<double>(r) * std::log(lambda);
  s.b_proj.assign(r, 0.0);
  s.w_hat.assign(r, 0.0);
  s.theta_hat.assign(d, 0.0);
  return s;
}

BaselineTaskState make_baseline_state(std::size_t task, std::size_t d, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("make_baseline_state: lambda must be > 0");
  BaselineTaskState s;
  s.task = task;
  s.vbar_inv = Matrix::identity(d, 1.0 / lambda);
  s.gram = Matrix(d, d);
  s.b.assign(d, 0.0);
  s.theta_hat.assign(d, 0.0);
  return s;
}

PolicyDecision mtl_select(const TaskState& state, const ActionSet& actions,
                          const RadiusSpec& spec, const OrthonormalBasis& b_hat,
                          double running_l, std::vector<std::string>* warnings) {
  if (b_hat.dim() != state.theta_hat.size() || b_hat.rank() != state.w_hat.size()) {
    throw InvalidArgument("mtl_select: b_hat does not match the task state");
  }
  const double radius = mtl_radius(spec, state, running_l);
  return argmax_decision(
      optimistic_indices(state.theta_hat, state.vbar_inv, actions, radius, warnings), radius);
}

void mtl_update(TaskState& state, std::span<const double> x, double y,
                const OrthonormalBasis& b_hat, const RadiusSpec& spec) {
  if (x.size() != state.theta_hat.size() || b_hat.dim() != x.size() ||
      b_hat.rank() != state.w_hat.size()) {
    throw InvalidArgument("mtl_update: dimension mismatch");
  }
  if (!std::isfinite(y)) throw InvalidArgument("mtl_update: non-finite reward");

  Vector scratch;
  sherman_morrison_update_in_place(state.vbar_inv, x, scratch);
  add_outer_product(state.gram, x);

  const Vector z = b_hat.project(x);
  add_outer_product(state.m_proj, z);
  for (std::size_t i = 0; i < z.size(); ++i) state.b_proj[i] += z[i] * y;

  const Cholesky chol(state.m_proj);
  state.w_hat = chol.solve(state.b_proj);
  state.vbar_logdet_proj = chol.log_det();
  state.theta_hat = b_hat.lift(state.w_hat);
  ++state.samples;
  state.max_projected_norm = std::max(state.max_projected_norm, norm(z));

  if (state.samples % kResyncInterval == 0) {
    resync_inverse(state.vbar_inv, state.gram, spec.lambda);
    // B^T Vbar B = lambda I + B^T G B must agree with the incremental V.
    Matrix projected = multiply_at_b(b_hat.matrix(), multiply(state.gram, b_hat.matrix()));
    for (std::size_t i = 0; i < projected.rows(); ++i) projected(i, i) += spec.lambda;
    state.max_projection_drift =
        std::max(state.max_projection_drift, max_abs_diff(projected, state.m_proj));
    ++state.resyncs;
  }
}

PolicyDecision baseline_select(const BaselineTaskState& state, const ActionSet& actions,
                               const RadiusSpec& spec, double running_l,
                               std::vector<std::string>* warnings) {
  const double radius = radius_baseline(spec, state, running_l, spec.s_bound);
  return argmax_decision(
      optimistic_indices(state.theta_hat, state.vbar_inv, actions, radius, warnings), radius);
}

void baseline_update(BaselineTaskState& state, std::span<const double> x, double y,
                     const RadiusSpec& spec) {
  if (x.size() != state.theta_hat.size()) throw InvalidArgument("baseline_update: dimension mismatch");
  if (!std::isfinite(y)) throw InvalidArgument("baseline_update: non-finite reward");
  Vector scratch;
  sherman_morrison_update_in_place(state.vbar_inv, x, scratch);
  add_outer_product(state.gram, x);
  for (std::size_t i = 0; i < x.size(); ++i) state.b[i] += x[i] * y;
  ++state.samples;
  if (state.samples % kResyncInterval == 0) {
    resync_inverse(state.vbar_inv, state.gram, spec.lambda);
    ++state.resyncs;
  }
  state.theta_hat = multiply(state.vbar_inv, state.b);
}

// -- agents -------------------------------------------------------------------

PolicyDecision explore_uniformly(const ActionSet& actions, Rng& rng) {
  if (actions.k() == 0) throw InvalidArgument("explore_uniformly: empty action set");
  PolicyDecision dec;
  dec.chosen = rng.uniform_index(actions.k());
  return dec;
}

PolicyDecision UniformRandomAgent::select(std::size_t, const ActionSet& actions,
                                          const RoundContext&, Rng& rng) {
  return explore_uniformly(actions, rng);
}

MtlOfulAgent::MtlOfulAgent(std::size_t d, std::size_t t_count, std::size_t r, RadiusSpec spec)
    : d_(d), r_(r), spec_(spec) {
  if (spec_.kind == RadiusKind::kBaselineOful) {
    throw InvalidArgument("MtlOfulAgent: baseline radius is not a multi-task radius");
  }
  spec_.r = r;
  spec_.validate();
  states_.reserve(t_count);
  for (std::size_t t = 0; t < t_count; ++t) states_.push_back(make_task_state(t, d, r, spec_.lambda));
}

std::string_view MtlOfulAgent::name() const {
  switch (spec_.kind) {
    case RadiusKind::kBeta:
      return "mtl_beta";
    case RadiusKind::kBetaPrime:
      return "mtl_beta_prime";
    default:
      return "mtl_zero_radius";
  }
}

void MtlOfulAgent::start_optimistic_phase(const SpectralEstimate& estimate) {
  if (estimate.b_hat.dim() != d_ || estimate.b_hat.rank() != r_) {
    throw InvalidArgument("MtlOfulAgent: spectral estimate has the wrong shape");
  }
  b_hat_ = estimate.b_hat;
  if (spec_.delta0.kind == Delta0Policy::Kind::kMeasuredSd) {
    if (!estimate.sd_to_truth) {
      throw InvalidArgument("MtlOfulAgent: delta0 = measured_sd needs the true basis");
    }
    spec_.delta0.value = *estimate.sd_to_truth;
  }
}

const OrthonormalBasis& MtlOfulAgent::b_hat() const {
  if (!b_hat_) throw InvalidArgument("MtlOfulAgent: no basis before the OFUL phase");
  return *b_hat_;
}

PolicyDecision MtlOfulAgent::select(std::size_t task, const ActionSet& actions,
                                    const RoundContext& ctx, Rng& rng) {
  if (ctx.phase == Phase::kExploration) return explore_uniformly(actions, rng);
  return mtl_select(states_.at(task), actions, spec_, b_hat(), ctx.running_l, &warnings_);
}

void MtlOfulAgent::update(std::size_t task, std::span<const double> x, double y,
                          const RoundContext& ctx) {
  // Exploration data feeds spectral init only.
  if (ctx.phase == Phase::kExploration) return;
  mtl_update(states_.at(task), x, y, b_hat(), spec_);
}

std::optional<EllipsoidView> MtlOfulAgent::ellipsoid(std::size_t task) const {
  const TaskState& s = states_.at(task);
  return EllipsoidView{s.theta_hat, &s.gram, spec_.lambda};
}

IndependentOfulAgent::IndependentOfulAgent(std::size_t d, std::size_t t_count, RadiusSpec spec)
    : spec_(spec) {
  spec_.kind = RadiusKind::kBaselineOful;
  spec_.validate();
  states_.reserve(t_count);
  for (std::size_t t = 0; t < t_count; ++t) states_.push_back(make_baseline_state(t, d, spec_.lambda));
}

PolicyDecision IndependentOfulAgent::select(std::size_t task, const ActionSet& actions,
                                            const RoundContext& ctx, Rng& rng) {
  if (ctx.phase == Phase::kExploration) return explore_uniformly(actions, rng);
  return baseline_select(states_.at(task), actions, spec_, ctx.running_l, &warnings_);
}

void IndependentOfulAgent::update(std::size_t task, std::span<const double> x, double y,
                                  const RoundContext& ctx) {
  if (ctx.phase == Phase::kExploration) return;
  baseline_update(states_.at(task), x, y, spec_);
}

std::optional<EllipsoidView> IndependentOfulAgent::ellipsoid(std::size_t task) const {
  const BaselineTaskState& s = states_.at(task);
  return EllipsoidView{s.theta_hat, &s.gram, spec_.lambda};
}

}  // namespace mtrl
