#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mtrl/agents.hpp"
#include "mtrl/errors.hpp"
#include "oracles.hpp"

namespace mtrl {
namespace {

RadiusSpec unit_spec(RadiusKind kind) {
  RadiusSpec s;
  s.kind = kind;
  s.lambda = 1.0;
  s.delta = 0.1;
  s.sigma = 1.0;
  s.r = 2;
  s.l_policy = LPolicy::fixed(1.0);
  s.delta0 = Delta0Policy::fixed(0.0);
  s.horizon = 1;
  return s;
}

Rng test_rng(std::uint32_t round) { return Rng(StreamId{77, 0, StreamPhase::kInstance, round, 0}); }

Vector gaussian_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.entries()) v = rng.normal();
  return m;
}

TEST(RadiusBeta, OnlyRegularizerTermSurvives) {
  RadiusSpec s = unit_spec(RadiusKind::kBeta);
  s.sigma = 0.0;
  s.mu_sigma_term = 1.0;
  TaskState state = make_task_state(0, 4, 2, 1.0);
  EXPECT_DOUBLE_EQ(radius_beta(s, state, 3.0), 1.0);
  state.samples = 40;
  EXPECT_DOUBLE_EQ(radius_beta(s, state, 3.0), 1.0);
}

TEST(RadiusBeta, NoSamplesValue) {
  RadiusSpec s = unit_spec(RadiusKind::kBeta);
  s.delta0 = Delta0Policy::fixed(0.05);
  s.mu_sigma_term = 2.0;
  const TaskState state = make_task_state(0, 5, 2, 1.0);
  EXPECT_NEAR(radius_beta(s, state, 7.0), 4.2460, 5e-5);
}

TEST(RadiusBeta, LinearInMuTerm) {
  RadiusSpec s = unit_spec(RadiusKind::kBeta);
  s.delta0 = Delta0Policy::fixed(0.2);
  s.mu_sigma_term = 1.5;
  TaskState state = make_task_state(0, 5, 2, 1.0);
  const OrthonormalBasis b = OrthonormalBasis::coordinate(5, 2);
  Rng rng = test_rng(1);
  for (int i = 0; i < 10; ++i) mtl_update(state, gaussian_vector(5, rng), rng.normal(), b, s);
  const double first = radius_beta(s, state, 2.0);
  s.mu_sigma_term = 0.0;
  const double log_term = radius_beta(s, state, 2.0);
  s.mu_sigma_term = 3.0;
  EXPECT_NEAR(radius_beta(s, state, 2.0) - log_term, 2.0 * (first - log_term), 1e-12);
}

TEST(RadiusBeta, CorruptStateThrows) {
  RadiusSpec s = unit_spec(RadiusKind::kBeta);
  TaskState state = make_task_state(0, 3, 2, 1.0);
  state.vbar_logdet_proj = -100.0;
  EXPECT_THROW(radius_beta(s, state, 1.0), NumericalFailure);
}

TEST(RadiusBetaPrime, NoiselessUnitScales) {
  RadiusSpec s = unit_spec(RadiusKind::kBetaPrime);
  s.sigma = 0.0;
  s.mu_sigma_term = 1.0;
  TaskState state = make_task_state(0, 3, 2, 1.0);
  state.samples = 1;
  EXPECT_DOUBLE_EQ(radius_beta_prime(s, state, 1.0), 4.0);
}

TEST(RadiusBetaPrime, FirstTermValue) {
  RadiusSpec s = unit_spec(RadiusKind::kBetaPrime);
  s.horizon = 580;
  TaskState state = make_task_state(0, 3, 2, 1.0);
  state.samples = 99;
  EXPECT_NEAR(radius_beta_prime(s, state, 1.0), 3.7169, 5e-5);
}

TEST(RadiusBetaPrime, NonDecreasingInSamples) {
  RadiusSpec s = unit_spec(RadiusKind::kBetaPrime);
  s.mu_sigma_term = 0.7;
  s.horizon = 580;
  TaskState state = make_task_state(0, 3, 2, 1.0);
  double prev = radius_beta_prime(s, state, 1.0);
  for (std::size_t n = 1; n <= 580; ++n) {
    state.samples = n;
    const double cur = radius_beta_prime(s, state, 1.0);
    ASSERT_GE(cur, prev);
    prev = cur;
  }
}

TEST(RadiusBetaPrime, RequiresHorizonAndPositiveL) {
  RadiusSpec s = unit_spec(RadiusKind::kBetaPrime);
  s.horizon = 0;
  const TaskState state = make_task_state(0, 3, 2, 1.0);
  EXPECT_THROW(radius_beta_prime(s, state, 1.0), InvalidArgument);
  s.horizon = 5;
  s.l_policy = LPolicy::running_max();
  EXPECT_THROW(radius_beta_prime(s, state, 0.0), InvalidArgument);
}

TEST(RadiusBaseline, NoiselessIsRegularizerTerm) {
  RadiusSpec s = unit_spec(RadiusKind::kBaselineOful);
  s.sigma = 0.0;
  s.lambda = 4.0;
  BaselineTaskState state = make_baseline_state(0, 6, 4.0);
  state.samples = 12;
  EXPECT_DOUBLE_EQ(radius_baseline(s, state, 1.0, 1.5), 3.0);
}

TEST(RadiusBaseline, FirstTermValue) {
  const RadiusSpec s = unit_spec(RadiusKind::kBaselineOful);
  BaselineTaskState state = make_baseline_state(0, 100, 1.0);
  state.samples = 99;
  EXPECT_NEAR(radius_baseline(s, state, 1.0, 0.0), 26.2826, 5e-5);
}

TEST(RadiusBaseline, OneDimensionMatchesBetaPrimeFirstTerm) {
  RadiusSpec s = unit_spec(RadiusKind::kBaselineOful);
  s.r = 1;
  s.horizon = 50;
  BaselineTaskState base = make_baseline_state(0, 1, 1.0);
  TaskState mtl = make_task_state(0, 1, 1, 1.0);
  base.samples = mtl.samples = 37;
  EXPECT_NEAR(radius_baseline(s, base, 1.0, 2.0), radius_beta_prime(s, mtl, 1.0) + 2.0, 1e-12);
}

TEST(Delta0, SchedulePolicy) {
  RadiusSpec s = unit_spec(RadiusKind::kBeta);
  s.delta0 = Delta0Policy::schedule_inv_sqrt();
  EXPECT_DOUBLE_EQ(resolve_delta0(s, 25, 2.0), 0.1);
  EXPECT_DOUBLE_EQ(resolve_delta0(s, 0, 2.0), 0.5);
}

TEST(RadiusSpec, Validation) {
  RadiusSpec s = unit_spec(RadiusKind::kBeta);
  EXPECT_NO_THROW(s.validate());
  s.lambda = 0.0;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = unit_spec(RadiusKind::kBeta);
  s.delta = 1.0;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = unit_spec(RadiusKind::kBeta);
  s.sigma = -0.1;
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(UcbIndex, TrivialCases) {
  const Matrix eye = Matrix::identity(3);
  EXPECT_DOUBLE_EQ(ucb_index(Vector(3, 0.0), eye, Vector{1.0, 0.0, 0.0}, 2.0), 2.0);
  const Vector theta{0.5, -1.0, 2.0};
  const Vector x{1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(ucb_index(theta, eye, x, 0.0), 1.5);
  EXPECT_THROW(ucb_index(theta, eye, x, -1.0), InvalidArgument);
}

TEST(UcbIndex, DiagonalValue) {
  const Matrix vbar_inv(2, 2, {0.2, 0.0, 0.0, 1.0});
  EXPECT_NEAR(ucb_index(Vector{1.0, 0.0}, vbar_inv, Vector{2.0, 0.0}, 1.0), 2.8944, 5e-5);
}

TEST(UcbIndex, NegativeQuadraticForm) {
  std::vector<std::string> warnings;
  const Matrix tiny(1, 1, {-1e-8});
  EXPECT_DOUBLE_EQ(ucb_index(Vector{1.0}, tiny, Vector{1.0}, 5.0, &warnings), 1.0);
  EXPECT_EQ(warnings.size(), 1u);
  const Matrix bad(1, 1, {-1e-3});
  EXPECT_THROW(ucb_index(Vector{1.0}, bad, Vector{1.0}, 5.0, &warnings), NumericalFailure);
  warnings.clear();
  const Matrix roundoff(1, 1, {-1e-13});
  EXPECT_DOUBLE_EQ(ucb_index(Vector{1.0}, roundoff, Vector{1.0}, 5.0, &warnings), 1.0);
  EXPECT_TRUE(warnings.empty());
}

TEST(MtlUpdate, FirstScalarUpdate) {
  const RadiusSpec s = unit_spec(RadiusKind::kBeta);
  TaskState state = make_task_state(0, 1, 1, 1.0);
  const OrthonormalBasis b = OrthonormalBasis::coordinate(1, 1);
  mtl_update(state, Vector{1.0}, 1.0, b, s);
  EXPECT_DOUBLE_EQ(state.m_proj(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(state.b_proj[0], 1.0);
  EXPECT_DOUBLE_EQ(state.w_hat[0], 0.5);
  EXPECT_DOUBLE_EQ(state.theta_hat[0], 0.5);
  EXPECT_DOUBLE_EQ(state.vbar_inv(0, 0), 0.5);
  EXPECT_NEAR(state.vbar_logdet_proj, std::log(2.0), 1e-15);
  EXPECT_EQ(state.samples, 1u);
}

TEST(MtlUpdate, ZeroRewardShrinksEstimate) {
  const RadiusSpec s = unit_spec(RadiusKind::kBeta);
  TaskState state = make_task_state(0, 1, 1, 1.0);
  const OrthonormalBasis b = OrthonormalBasis::coordinate(1, 1);
  mtl_update(state, Vector{1.0}, 1.0, b, s);
  mtl_update(state, Vector{1.0}, 0.0, b, s);
  EXPECT_DOUBLE_EQ(state.b_proj[0], 1.0);
  EXPECT_DOUBLE_EQ(state.m_proj(0, 0), 3.0);
  EXPECT_NEAR(state.w_hat[0], 1.0 / 3.0, 1e-15);
}

TEST(MtlUpdate, MatchesBatchRidge) {
  const RadiusSpec s = unit_spec(RadiusKind::kBeta);
  Rng rng = test_rng(2);
  const OrthonormalBasis b = orthonormalize_columns(gaussian(8, 3, rng));
  TaskState state = make_task_state(0, 8, 3, 1.0);
  std::vector<std::vector<double>> zs;
  std::vector<double> ys;
  for (int i = 0; i < 50; ++i) {
    const Vector x = gaussian_vector(8, rng);
    const double y = rng.normal();
    mtl_update(state, x, y, b, s);
    zs.push_back(b.project(x));
    ys.push_back(y);
  }
  const std::vector<double> ref = oracle::batch_ridge(zs, ys, 1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(state.w_hat[i], ref[i], 1e-8);
  const Vector lifted = b.lift(state.w_hat);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(state.theta_hat[i], lifted[i]);
}

TEST(MtlUpdate, DimensionMismatchThrows) {
  const RadiusSpec s = unit_spec(RadiusKind::kBeta);
  TaskState state = make_task_state(0, 3, 1, 1.0);
  EXPECT_THROW(mtl_update(state, Vector{1.0, 2.0}, 1.0, OrthonormalBasis::coordinate(3, 1), s),
               InvalidArgument);
  EXPECT_THROW(mtl_update(state, Vector{1.0, 2.0, 3.0}, std::nan(""), OrthonormalBasis::coordinate(3, 1), s),
               InvalidArgument);
}

TEST(MtlSelect, SingleActionChosen) {
  RadiusSpec s = unit_spec(RadiusKind::kBeta);
  s.mu_sigma_term = 1.0;
  const TaskState state = make_task_state(0, 3, 2, 1.0);
  const ActionSet set{1, 0, Matrix(1, 3, {-5.0, 2.0, 1.0})};
  EXPECT_EQ(mtl_select(state, set, s, OrthonormalBasis::coordinate(3, 2), 1.0).chosen, 0u);
}

TEST(MtlSelect, ZeroRadiusTrueParameterIsGreedy) {
  const BanditInstance inst = sample_instance(6, 2, 2, 0.0, StreamId{3, 0, StreamPhase::kInstance, 0, 0});
  TaskState state = make_task_state(1, 6, 2, 1.0);
  state.theta_hat = inst.theta(1);
  const RadiusSpec s = unit_spec(RadiusKind::kZero);
  for (std::uint32_t n = 0; n < 20; ++n) {
    Rng ar(StreamId{3, 0, StreamPhase::kActions, n, 1});
    const ActionSet set = sample_action_set(inst, n, 1, 20, ar);
    EXPECT_EQ(mtl_select(state, set, s, inst.b_star(), 1.0).chosen,
              best_action_value(inst, 1, set).first);
  }
}

TEST(MtlSelect, MatchesExhaustiveIndexOracle) {
  Rng rng = test_rng(4);
  RadiusSpec s = unit_spec(RadiusKind::kBeta);
  s.delta0 = Delta0Policy::fixed(0.3);
  s.mu_sigma_term = 1.2;
  const OrthonormalBasis b = orthonormalize_columns(gaussian(10, 2, rng));
  TaskState state = make_task_state(0, 10, 2, 1.0);
  for (int i = 0; i < 30; ++i) mtl_update(state, gaussian_vector(10, rng), rng.normal(), b, s);
  const ActionSet set{31, 0, gaussian(20, 10, rng)};
  const PolicyDecision dec = mtl_select(state, set, s, b, 4.0);

  Matrix vbar = state.gram;
  for (std::size_t i = 0; i < 10; ++i) vbar(i, i) += 1.0;
  const double radius = radius_beta(s, state, 4.0);
  EXPECT_DOUBLE_EQ(dec.radius_used, radius);
  std::size_t best = 0;
  double best_value = -1e300;
  for (std::size_t i = 0; i < 20; ++i) {
    const double v = oracle::ucb_value(state.theta_hat, vbar, set.action(i), radius);
    EXPECT_NEAR(dec.index_values[i], v, 1e-9);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  EXPECT_EQ(dec.chosen, best);
  EXPECT_DOUBLE_EQ(dec.ucb_value, dec.index_values[dec.chosen]);
}

TEST(MtlSelect, TiesGoToLowestIndex) {
  RadiusSpec s = unit_spec(RadiusKind::kBeta);
  s.mu_sigma_term = 1.0;
  const TaskState state = make_task_state(0, 2, 1, 1.0);
  const ActionSet set{1, 0, Matrix(3, 2, {0.0, 1.0, 0.0, 1.0, 0.0, 1.0})};
  EXPECT_EQ(mtl_select(state, set, s, OrthonormalBasis::coordinate(2, 1), 1.0).chosen, 0u);
}

TEST(MtlSelect, RadiusScalingKeepsChoiceAtZeroEstimate) {
  Rng rng = test_rng(5);
  RadiusSpec s = unit_spec(RadiusKind::kBeta);
  s.sigma = 0.0;
  const TaskState state = make_task_state(0, 6, 2, 1.0);
  const ActionSet set{1, 0, gaussian(20, 6, rng)};
  const OrthonormalBasis b = OrthonormalBasis::coordinate(6, 2);
  s.mu_sigma_term = 0.3;
  const std::size_t a = mtl_select(state, set, s, b, 1.0).chosen;
  s.mu_sigma_term = 17.0;
  EXPECT_EQ(mtl_select(state, set, s, b, 1.0).chosen, a);
}

TEST(Baseline, EqualsMtlWithFullIdentityBasis) {
  Rng rng = test_rng(6);
  const RadiusSpec s = unit_spec(RadiusKind::kBeta);
  const OrthonormalBasis b = OrthonormalBasis::coordinate(4, 4);
  TaskState mtl = make_task_state(0, 4, 4, 1.0);
  BaselineTaskState base = make_baseline_state(0, 4, 1.0);
  for (int i = 0; i < 120; ++i) {
    const Vector x = gaussian_vector(4, rng);
    const double y = rng.normal();
    mtl_update(mtl, x, y, b, s);
    baseline_update(base, x, y, s);
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(base.theta_hat[i], mtl.theta_hat[i], 1e-10);
  EXPECT_EQ(base.resyncs, 1u);
}

TEST(Baseline, FirstRoundIndicesMatchOracle) {
  Rng rng = test_rng(7);
  RadiusSpec s = unit_spec(RadiusKind::kBaselineOful);
  s.s_bound = 1.3;
  const BaselineTaskState state = make_baseline_state(0, 5, 1.0);
  const ActionSet set{21, 0, gaussian(20, 5, rng)};
  const PolicyDecision dec = baseline_select(state, set, s, 2.0);
  const Matrix vbar = Matrix::identity(5);
  for (std::size_t i = 0; i < 20; ++i)
    EXPECT_NEAR(dec.index_values[i], oracle::ucb_value(state.theta_hat, vbar, set.action(i), dec.radius_used),
                1e-12);
}

TEST(Baseline, NoiselessConverges) {
  const BanditInstance inst = sample_instance(5, 1, 1, 0.0, StreamId{8, 0, StreamPhase::kInstance, 0, 0});
  RadiusSpec s = unit_spec(RadiusKind::kBaselineOful);
  s.sigma = 0.0;
  s.s_bound = instance_stats(inst).w_max;
  s.l_policy = LPolicy::running_max();
  IndependentOfulAgent agent(5, 1, s);
  RoundContext ctx{Phase::kOptimistic, 0, 0.0};
  double late_regret = 0.0;
  for (std::uint32_t n = 0; n < 400; ++n) {
    Rng ar(StreamId{8, 0, StreamPhase::kActions, n, 0});
    const ActionSet set = sample_action_set(inst, n, 0, 20, ar);
    for (std::size_t i = 0; i < set.k(); ++i) ctx.running_l = std::max(ctx.running_l, norm(set.action(i)));
    ctx.round = n + 1;
    Rng er(StreamId{8, 0, StreamPhase::kExploration, n, 0});
    const PolicyDecision dec = agent.select(0, set, ctx, er);
    const double y = mean_reward(inst, 0, set.action(dec.chosen));
    if (n >= 300) late_regret += best_action_value(inst, 0, set).second - y;
    agent.update(0, set.action(dec.chosen), y, ctx);
  }
  const Vector theta = inst.theta(0);
  double err = 0.0;
  for (std::size_t i = 0; i < 5; ++i) err += std::pow(agent.state(0).theta_hat[i] - theta[i], 2);
  EXPECT_LE(std::sqrt(err), 0.05 * norm(theta));
  EXPECT_LE(late_regret / 100.0, 0.05 * norm(theta));
}

TEST(MtlAgent, MeasuredSdNeedsTruth) {
  RadiusSpec s = unit_spec(RadiusKind::kBeta);
  s.delta0 = Delta0Policy::measured_sd();
  MtlOfulAgent agent(3, 2, 1, s);
  SpectralEstimate est{1.0, Matrix(3, 2), OrthonormalBasis::coordinate(3, 1), Vector{1.0}, std::nullopt, {}};
  EXPECT_THROW(agent.start_optimistic_phase(est), InvalidArgument);
  est.sd_to_truth = 0.25;
  agent.start_optimistic_phase(est);
  EXPECT_DOUBLE_EQ(agent.spec().delta0.value, 0.25);
  EXPECT_EQ(agent.name(), "mtl_beta");
}

TEST(MtlAgent, IgnoresExplorationUpdates) {
  RadiusSpec s = unit_spec(RadiusKind::kBeta);
  MtlOfulAgent agent(3, 2, 1, s);
  agent.update(1, Vector{1.0, 0.0, 0.0}, 4.0, RoundContext{Phase::kExploration, 1, 1.0});
  EXPECT_EQ(agent.state(1).samples, 0u);
  EXPECT_THROW(MtlOfulAgent(3, 2, 1, unit_spec(RadiusKind::kBaselineOful)), InvalidArgument);
}

TEST(DetBound, HoldsOverUpdates) {
  Rng rng = test_rng(9);
  const RadiusSpec s = unit_spec(RadiusKind::kBeta);
  const OrthonormalBasis b = orthonormalize_columns(gaussian(12, 3, rng));
  TaskState state = make_task_state(0, 12, 3, 1.0);
  for (int i = 0; i < 250; ++i) {
    mtl_update(state, gaussian_vector(12, rng), rng.normal(), b, s);
    const double l = state.max_projected_norm;
    ASSERT_LE(state.vbar_logdet_proj,
              3.0 * std::log(1.0 + static_cast<double>(state.samples) * l * l) + 1e-9);
  }
  EXPECT_EQ(state.resyncs, 2u);
  EXPECT_LE(state.max_projection_drift, 1e-6);
}

}  // namespace
}  // namespace mtrl
