#include "property_suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>

#include "mtrl/agents.hpp"
#include "mtrl/bandit_env.hpp"
#include "mtrl/harness.hpp"
#include "mtrl/mat_core.hpp"
#include "mtrl/rng.hpp"
#include "mtrl/spectral_init.hpp"
#include "oracles.hpp"

namespace mtrl::validation {
namespace {

// Accumulates per-case errors against one tolerance.
class Tracker {
 public:
  Tracker(std::string name, double tolerance) {
    result_.name = std::move(name);
    result_.tolerance = tolerance;
  }

  void observe(double error, const std::string& where) {
    ++result_.cases;
    if (!std::isfinite(error)) error = std::numeric_limits<double>::infinity();
    result_.worst = std::max(result_.worst, error);
    if (error > result_.tolerance) fail(where + ": error " + std::to_string(error));
  }

  void require(bool ok, const std::string& where) {
    ++result_.cases;
    if (!ok) fail(where);
  }

  // Runs one case, turning an exception into a failure.
  void run(const std::string& where, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      ++result_.cases;
      fail(where + ": threw " + e.what());
    }
  }

  CheckResult result() const { return result_; }

 private:
  void fail(const std::string& why) {
    if (result_.passed) result_.detail = why;
    result_.passed = false;
  }

  CheckResult result_;
};

Rng suite_rng(std::uint64_t seed, std::uint32_t suite) {
  return Rng(StreamId{seed, 0, StreamPhase::kInstance, suite, 0});
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.uniform_index(hi - lo + 1);
}

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.entries()) v = rng.normal();
  return m;
}

Vector gaussian_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

Matrix random_spd(std::size_t n, Rng& rng) {
  const Matrix a = gaussian(n, n, rng);
  Matrix m = multiply(a, a.transposed());
  for (std::size_t i = 0; i < n; ++i) m(i, i) += 0.5 + rng.uniform();
  return m;
}

double orthonormality_error(const Matrix& b) {
  return max_abs_diff(multiply_at_b(b, b), Matrix::identity(b.cols()));
}

std::string case_name(std::size_t i) { return "case " + std::to_string(i); }

ExperimentConfig small_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.d = 8;
  c.t_count = 6;
  c.r = 2;
  c.n1 = 10;
  c.n_total = 250;
  c.k_actions = 5;
  c.trials = 3;
  c.seed = seed;
  c.diagnostics = true;
  return c;
}

// -- oracle equivalence -------------------------------------------------------

CheckResult check_sherman_morrison(std::uint64_t seed, std::size_t instances) {
  Tracker tr("sherman_morrison_vs_dense_inverse", 1e-6);
  Rng rng = suite_rng(seed, 1);
  for (std::size_t i = 0; i < instances; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t d = pick(rng, 1, 50);
      const std::size_t k = pick(rng, 1, 200);
      const double lambda = 0.5 + 1.5 * rng.uniform();
      Matrix inv = Matrix::identity(d, 1.0 / lambda);
      Matrix vbar = Matrix::identity(d, lambda);
      Vector scratch;
      for (std::size_t s = 0; s < k; ++s) {
        const Vector x = gaussian_vector(d, rng);
        sherman_morrison_update_in_place(inv, x, scratch);
        add_outer_product(vbar, x);
      }
      tr.observe(max_abs_diff(inv, oracle::dense_inverse(vbar)),
                 case_name(i) + " d=" + std::to_string(d) + " k=" + std::to_string(k));
    });
  }
  return tr.result();
}

CheckResult check_incremental_ridge(std::uint64_t seed, std::size_t instances) {
  Tracker tr("incremental_vs_batch_ridge", 1e-8);
  Rng rng = suite_rng(seed, 2);
  for (std::size_t i = 0; i < instances; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t d = pick(rng, 1, 20);
      const std::size_t r = pick(rng, 1, std::min<std::size_t>(d, 5));
      const OrthonormalBasis b = orthonormalize_columns(gaussian(d, r, rng));
      RadiusSpec spec;
      spec.lambda = 0.5 + 1.5 * rng.uniform();
      spec.r = r;
      TaskState state = make_task_state(0, d, r, spec.lambda);
      std::vector<Vector> zs;
      Vector ys;
      for (std::size_t s = 0; s < 50; ++s) {
        const Vector x = gaussian_vector(d, rng);
        const double y = rng.normal();
        mtl_update(state, x, y, b, spec);
        zs.push_back(b.project(x));
        ys.push_back(y);
      }
      const Vector w = oracle::batch_ridge(zs, ys, spec.lambda);
      double err = 0.0;
      for (std::size_t j = 0; j < r; ++j) err = std::max(err, std::abs(w[j] - state.w_hat[j]));
      tr.observe(err, case_name(i));
    });
  }
  return tr.result();
}

CheckResult check_top_r_subspace(std::uint64_t seed, std::size_t instances) {
  Tracker tr("top_r_subspace_vs_dense_svd", 1e-6);
  Rng rng = suite_rng(seed, 3);
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < instances; ++i) {
    tr.run(case_name(i), [&] {
      // The subspace is only defined up to the gap; resample near-ties.
      for (;;) {
        const std::size_t d = pick(rng, 2, 12);
        const std::size_t t = pick(rng, 2, 12);
        const std::size_t r = pick(rng, 1, std::min(d, t));
        const Matrix m = gaussian(d, t, rng);
        const std::vector<double> sv = oracle::singular_values(m);
        const double next = r < sv.size() ? sv[r] : 0.0;
        if (r < d && sv[r - 1] - next < 1e-3) {
          ++skipped;
          continue;
        }
        const OrthonormalBasis ours = top_r_left_singular_vectors(m, r);
        const Matrix ref = oracle::svd_left_basis(m, r);
        tr.observe(oracle::projector_distance(ours.matrix(), ref), case_name(i));
        return;
      }
    });
  }
  CheckResult res = tr.result();
  if (res.passed) res.detail = std::to_string(skipped) + " near-tie draws resampled";
  return res;
}

CheckResult check_theta0(std::uint64_t seed, std::size_t instances) {
  Tracker tr("theta0_vs_triple_loop", 1e-12);
  Rng rng = suite_rng(seed, 4);
  for (std::size_t i = 0; i < instances; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t d = pick(rng, 1, 8);
      const std::size_t t_count = pick(rng, 1, 6);
      const std::size_t n1 = pick(rng, 1, 12);
      std::vector<Matrix> feats;
      std::vector<Vector> rewards;
      for (std::size_t t = 0; t < t_count; ++t) {
        feats.push_back(gaussian(n1, d, rng));
        Vector y = gaussian_vector(n1, rng);
        for (double& v : y) v *= 3.0;
        rewards.push_back(std::move(y));
      }
      const ExplorationLog log(std::move(feats), std::move(rewards));
      const double alpha = 9.0 * rng.uniform();
      const Matrix ours = assemble_theta0(log, alpha);
      const Matrix ref = oracle::theta0_triple_loop(log, alpha);
      double scale = 0.0;
      for (double v : ref.entries()) scale = std::max(scale, std::abs(v));
      tr.observe(max_abs_diff(ours, ref) / std::max(scale, 1e-300), case_name(i));
    });
  }
  return tr.result();
}

CheckResult check_rank_one_logdet(std::uint64_t seed, std::size_t instances) {
  Tracker tr("rank_one_logdet_vs_determinant", 1e-8);
  Rng rng = suite_rng(seed, 5);
  for (std::size_t i = 0; i < instances; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t n = pick(rng, 1, 8);
      const Matrix m = random_spd(n, rng);
      const Vector z = gaussian_vector(n, rng);
      const double ours = log_det_rank_one_update(log_det_spd(m), m, z);
      Matrix updated = m;
      add_outer_product(updated, z);
      tr.observe(std::abs(ours - std::log(oracle::determinant(updated))), case_name(i));
    });
  }
  return tr.result();
}

CheckResult check_alpha(std::uint64_t seed, std::size_t instances) {
  Tracker tr("alpha_vs_compensated_sum", 1e-12);
  Rng rng = suite_rng(seed, 6);
  for (std::size_t i = 0; i < instances; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t d = pick(rng, 1, 4);
      const std::size_t t_count = pick(rng, 1, 20);
      const std::size_t n1 = pick(rng, 1, 30);
      std::vector<Matrix> feats(t_count, Matrix(n1, d, 1.0));
      std::vector<Vector> rewards;
      for (std::size_t t = 0; t < t_count; ++t) rewards.push_back(gaussian_vector(n1, rng));
      const ExplorationLog log(std::move(feats), std::move(rewards));
      const double c = 0.1 + 20.0 * rng.uniform();
      const double ref = oracle::alpha_two_pass(log, c);
      tr.observe(std::abs(compute_alpha(log, c) - ref) / std::max(ref, 1e-300), case_name(i));
    });
  }
  return tr.result();
}

CheckResult check_ucb_index(std::uint64_t seed, std::size_t instances) {
  Tracker tr("ucb_index_vs_dense_solve", 1e-9);
  Rng rng = suite_rng(seed, 7);
  for (std::size_t i = 0; i < instances; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t d = pick(rng, 1, 12);
      const Matrix vbar = random_spd(d, rng);
      const Vector theta = gaussian_vector(d, rng);
      const Vector x = gaussian_vector(d, rng);
      const double radius = 5.0 * rng.uniform();
      const double ours = ucb_index(theta, inverse_spd(vbar), x, radius);
      const double ref = oracle::ucb_value(theta, vbar, x, radius);
      tr.observe(std::abs(ours - ref) / std::max(1.0, std::abs(ref)), case_name(i));
    });
  }
  return tr.result();
}

CheckResult check_subspace_distance(std::uint64_t seed, std::size_t instances) {
  Tracker tr("subspace_distance_vs_projector", 1e-10);
  Rng rng = suite_rng(seed, 8);
  for (std::size_t i = 0; i < instances; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t d = pick(rng, 1, 15);
      const OrthonormalBasis b1 = orthonormalize_columns(gaussian(d, pick(rng, 1, d), rng));
      const OrthonormalBasis b2 = orthonormalize_columns(gaussian(d, pick(rng, 1, d), rng));
      tr.observe(std::abs(subspace_distance(b1, b2) -
                          oracle::projector_distance(b1.matrix(), b2.matrix())),
                 case_name(i));
    });
  }
  return tr.result();
}

CheckResult check_solve_spd(std::uint64_t seed, std::size_t instances) {
  Tracker tr("solve_spd_residual", 1e-8);
  Rng rng = suite_rng(seed, 9);
  for (std::size_t i = 0; i < instances; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t n = pick(rng, 1, 20);
      const Matrix a = random_spd(n, rng);
      const Vector b = gaussian_vector(n, rng);
      const Vector x = solve_spd(a, b);
      const Vector ax = multiply(a, x);
      double res = 0.0;
      for (std::size_t j = 0; j < n; ++j) res += (ax[j] - b[j]) * (ax[j] - b[j]);
      tr.observe(std::sqrt(res) / (1.0 + norm(b)), case_name(i));
    });
  }
  return tr.result();
}

// -- invariants ---------------------------------------------------------------

CheckResult check_orthonormal_outputs(std::uint64_t seed) {
  Tracker tr("orthonormal_basis_outputs", tol::kExact);
  Rng rng = suite_rng(seed, 20);
  for (std::size_t i = 0; i < 200; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t d = pick(rng, 1, 30);
      const std::size_t t = pick(rng, 1, 30);
      const std::size_t r = pick(rng, 1, std::min(d, t));
      const Matrix m = gaussian(d, t, rng);
      tr.observe(orthonormality_error(top_r_left_singular_vectors(m, r).matrix()), case_name(i));
      tr.observe(orthonormality_error(orthonormalize_columns(gaussian(d, pick(rng, 1, d), rng)).matrix()),
                 case_name(i));
    });
  }
  return tr.result();
}

CheckResult check_pythagorean(std::uint64_t seed) {
  Tracker tr("subspace_distance_pythagorean_identity", tol::kExact);
  Rng rng = suite_rng(seed, 21);
  for (std::size_t i = 0; i < 200; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t d = pick(rng, 1, 25);
      const OrthonormalBasis b1 = orthonormalize_columns(gaussian(d, pick(rng, 1, d), rng));
      const OrthonormalBasis b2 = orthonormalize_columns(gaussian(d, pick(rng, 1, d), rng));
      const double sd = subspace_distance(b1, b2);
      const double inner = frobenius_norm(multiply_at_b(b1.matrix(), b2.matrix()));
      tr.observe(std::abs(sd * sd + inner * inner - static_cast<double>(b2.rank())), case_name(i));
    });
  }
  return tr.result();
}

CheckResult check_instance_invariants(std::uint64_t seed) {
  Tracker tr("instance_self_consistency_and_incoherence", tol::kExact);
  for (std::size_t i = 0; i < 1000; ++i) {
    tr.run(case_name(i), [&] {
      Rng shape = Rng(StreamId{seed, static_cast<std::uint32_t>(i), StreamPhase::kActions, 22, 0});
      const std::size_t d = pick(shape, 2, 20);
      const std::size_t t = pick(shape, 2, 20);
      const std::size_t r = pick(shape, 1, std::min(d, t));
      const BanditInstance inst = sample_instance(
          d, t, r, 0.1, StreamId{seed, static_cast<std::uint32_t>(i), StreamPhase::kInstance, 22, 0});
      const InstanceStats s = instance_stats(inst);
      // max_t ||w*_t|| <= mu sqrt(r/T) sigma_max
      const double bound = s.mu * std::sqrt(static_cast<double>(r) / static_cast<double>(t)) * s.sigma_max;
      tr.require(s.w_max <= bound + 1e-10, case_name(i) + ": w_max exceeds mu sqrt(r/T) sigma_max");
      if (i % 10 == 0) {
        const OrthonormalBasis top = top_r_left_singular_vectors(inst.theta_star(), r);
        tr.observe(subspace_distance(top, inst.b_star()), case_name(i));
      }
    });
  }
  return tr.result();
}

CheckResult check_reward_linearity_and_oracle_policy(std::uint64_t seed) {
  Tracker tr("reward_linearity_and_zero_oracle_regret", 1e-12);
  Rng rng = suite_rng(seed, 23);
  for (std::size_t i = 0; i < 200; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t d = pick(rng, 2, 12);
      const std::size_t t = pick(rng, 2, 8);
      const BanditInstance inst =
          sample_instance(d, t, 1, 0.0, StreamId{seed, static_cast<std::uint32_t>(i),
                                                 StreamPhase::kInstance, 23, 0});
      const Vector x1 = gaussian_vector(d, rng);
      const Vector x2 = gaussian_vector(d, rng);
      Vector sum(d);
      for (std::size_t j = 0; j < d; ++j) sum[j] = x1[j] + x2[j];
      const double lhs = mean_reward(inst, 0, sum);
      const double rhs = mean_reward(inst, 0, x1) + mean_reward(inst, 0, x2);
      tr.observe(std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)), case_name(i));
      const ActionSet set = sample_action_set(inst, 1, 0, 10, rng);
      const auto [best, value] = best_action_value(inst, 0, set);
      tr.require(value - mean_reward(inst, 0, set.action(best)) == 0.0,
                 case_name(i) + ": oracle policy has nonzero regret");
    });
  }
  return tr.result();
}

CheckResult check_truncation_monotone(std::uint64_t seed) {
  Tracker tr("truncation_monotone_in_alpha", 0.0);
  Rng rng = suite_rng(seed, 24);
  for (std::size_t i = 0; i < 200; ++i) {
    tr.run(case_name(i), [&] {
      const Vector y = gaussian_vector(pick(rng, 1, 30), rng);
      const double a1 = 2.0 * rng.uniform();
      const double a2 = a1 + 2.0 * rng.uniform();
      const Vector k1 = truncate_rewards(y, a1);
      const Vector k2 = truncate_rewards(y, a2);
      const Vector all = truncate_rewards(y, std::numeric_limits<double>::infinity());
      bool ok = all == y;
      for (std::size_t j = 0; j < y.size(); ++j)
        if (k1[j] != 0.0 && k2[j] == 0.0) ok = false;
      tr.require(ok, case_name(i));
    });
  }
  return tr.result();
}

CheckResult check_spectral_determinism(std::uint64_t seed) {
  Tracker tr("spectral_init_deterministic", 0.0);
  ExperimentConfig c = small_config(seed);
  for (std::size_t i = 0; i < 5; ++i) {
    tr.run(case_name(i), [&] {
      const SpectralEstimate a = run_exploration(c, i);
      const SpectralEstimate b = run_exploration(c, i);
      tr.require(a.b_hat.matrix() == b.b_hat.matrix() && a.theta0 == b.theta0 &&
                     a.alpha == b.alpha,
                 case_name(i));
    });
  }
  return tr.result();
}

// Drives one MTL agent by hand so the per-update state is visible.
CheckResult check_agent_state_invariants(std::uint64_t seed) {
  Tracker tr("det_bound_and_projection_consistency", tol::kIterative);
  Rng rng = suite_rng(seed, 25);
  for (std::size_t i = 0; i < 20; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t d = pick(rng, 2, 15);
      const std::size_t r = pick(rng, 1, std::min<std::size_t>(d, 4));
      const OrthonormalBasis b = orthonormalize_columns(gaussian(d, r, rng));
      RadiusSpec spec;
      spec.lambda = 0.5 + rng.uniform();
      spec.r = r;
      TaskState state = make_task_state(0, d, r, spec.lambda);
      for (std::size_t s = 0; s < 350; ++s) {
        const Vector x = gaussian_vector(d, rng);
        mtl_update(state, x, rng.normal(), b, spec);
        const double l = state.max_projected_norm;
        const double bound = static_cast<double>(r) *
                             std::log(spec.lambda + static_cast<double>(state.samples) * l * l);
        tr.require(state.vbar_logdet_proj <= bound + 1e-12,
                   case_name(i) + ": log det V above r log(lambda + n L^2)");
      }
      tr.require(state.resyncs == 3, case_name(i) + ": expected 3 resyncs in 350 updates");
      tr.observe(state.max_projection_drift, case_name(i));
    });
  }
  return tr.result();
}

CheckResult check_selection_scaling(std::uint64_t seed) {
  Tracker tr("selection_invariant_under_radius_scaling", 0.0);
  Rng rng = suite_rng(seed, 26);
  for (std::size_t i = 0; i < 200; ++i) {
    tr.run(case_name(i), [&] {
      const std::size_t d = pick(rng, 2, 10);
      TaskState state = make_task_state(0, d, 1, 1.0);
      state.vbar_inv = inverse_spd(random_spd(d, rng));
      const OrthonormalBasis b = OrthonormalBasis::coordinate(d, 1);
      ActionSet set{1, 0, gaussian(pick(rng, 2, 20), d, rng)};
      RadiusSpec spec;
      spec.kind = RadiusKind::kBetaPrime;
      spec.mu_sigma_term = 0.5 + rng.uniform();
      spec.l_policy = LPolicy::fixed(1.0);
      spec.horizon = 10;
      const std::size_t base = mtl_select(state, set, spec, b, 1.0).chosen;
      spec.mu_sigma_term *= 1.0 + 100.0 * rng.uniform();
      tr.require(mtl_select(state, set, spec, b, 1.0).chosen == base, case_name(i));
    });
  }
  return tr.result();
}

CheckResult check_run_determinism(std::uint64_t seed) {
  Tracker tr("trial_determinism_and_regret_shape", 0.0);
  ExperimentConfig c = small_config(seed);
  for (AgentKind kind : {AgentKind::kMtlBeta, AgentKind::kMtlBetaPrime,
                         AgentKind::kIndependentOful, AgentKind::kRandom}) {
    c.agent = kind;
    const std::string where(to_string(kind));
    tr.run(where, [&] {
      const TrialRecord a = run_trial(c, 1);
      const TrialRecord b = run_trial(c, 1);
      bool same = a.round_regret == b.round_regret && a.diagnostics.size() == b.diagnostics.size();
      for (std::size_t j = 0; same && j < a.diagnostics.size(); ++j)
        same = a.diagnostics[j].chosen == b.diagnostics[j].chosen &&
               a.diagnostics[j].top1 == b.diagnostics[j].top1;
      tr.require(same, where + ": repeated trial differs");
      bool nonneg = true;
      for (double v : a.round_regret) nonneg = nonneg && v >= 0.0;
      tr.require(nonneg, where + ": negative instantaneous regret");
    });
  }
  return tr.result();
}

CheckResult check_parallel_equals_serial(std::uint64_t seed) {
  Tracker tr("parallel_trials_match_serial", 0.0);
  ExperimentConfig c = small_config(seed);
  c.diagnostics = false;
  tr.run("aggregate", [&] {
    c.jobs = 1;
    const RegretLog serial = run_experiment(c);
    c.jobs = 3;
    const RegretLog parallel = run_experiment(c);
    tr.require(serial.mean_curve == parallel.mean_curve &&
                   serial.stderr_curve == parallel.stderr_curve,
               "aggregate curves differ");
    bool monotone = true;
    for (std::size_t n = 1; n < serial.mean_curve.size(); ++n)
      monotone = monotone && serial.mean_curve[n] >= serial.mean_curve[n - 1];
    tr.require(monotone, "cumulative curve decreases");
  });
  return tr.result();
}

}  // namespace

std::vector<CheckResult> oracle_equivalence_suite(std::uint64_t seed, std::size_t instances) {
  return {check_sherman_morrison(seed, instances),  check_incremental_ridge(seed, instances),
          check_top_r_subspace(seed, instances),    check_theta0(seed, instances),
          check_rank_one_logdet(seed, instances),   check_alpha(seed, instances),
          check_ucb_index(seed, instances),         check_subspace_distance(seed, instances),
          check_solve_spd(seed, instances)};
}

std::vector<CheckResult> invariant_suite(std::uint64_t seed) {
  return {check_orthonormal_outputs(seed),
          check_pythagorean(seed),
          check_instance_invariants(seed),
          check_reward_linearity_and_oracle_policy(seed),
          check_truncation_monotone(seed),
          check_spectral_determinism(seed),
          check_agent_state_invariants(seed),
          check_selection_scaling(seed),
          check_run_determinism(seed),
          check_parallel_equals_serial(seed)};
}

std::string format_check(const CheckResult& c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s %-45s cases=%-6zu worst=%.3g tol=%.3g",
                c.passed ? "PASS" : "FAIL", c.name.c_str(), c.cases, c.worst, c.tolerance);
  std::string line = buf;
  if (!c.detail.empty()) line += "  (" + c.detail + ")";
  return line;
}

bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

}  // namespace mtrl::validation
