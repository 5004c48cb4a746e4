#pragma once

// Experiment orchestration: configuration, seeded trials (random exploration,
// spectral init, optimistic phase), regret accounting and aggregation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mtrl/agents.hpp"
#include "mtrl/bandit_env.hpp"
#include "mtrl/spectral_init.hpp"

namespace mtrl {

enum class AgentKind { kMtlBeta, kMtlBetaPrime, kIndependentOful, kRandom };

std::string_view to_string(AgentKind kind);
AgentKind parse_agent_kind(std::string_view text);

// delta0 policy spelled as on the command line: "measured_sd",
// "schedule_inv_sqrt" or a number (fixed value).
Delta0Policy parse_delta0_policy(std::string_view text);
std::string delta0_policy_to_string(const Delta0Policy& policy);
// "running_max" or a number (fixed L).
LPolicy parse_l_policy(std::string_view text);
std::string l_policy_to_string(const LPolicy& policy);
BetaPrimeForm parse_beta_prime_form(std::string_view text);
std::string_view to_string(BetaPrimeForm form);

struct SweepSpec {
  std::string field;  // d, t, r, n1, n, k, sigma, lambda, delta
  std::vector<double> values;
};

struct ExperimentConfig {
  std::size_t d = 100;
  std::size_t t_count = 100;
  std::size_t r = 2;
  std::size_t n1 = 20;
  std::size_t n_total = 600;
  std::size_t k_actions = 20;
  double sigma = 0.1;
  double lambda = 1.0;
  double delta = 1e-3;
  AgentKind agent = AgentKind::kMtlBeta;
  Delta0Policy delta0 = Delta0Policy::measured_sd();
  LPolicy l_policy = LPolicy::running_max();
  std::optional<double> c_tilde;  // unset: 9 kappa^2 mu^2 from the instance
  BetaPrimeForm beta_prime_form = BetaPrimeForm::kHorizon;
  std::size_t trials = 10;
  std::uint64_t seed = 1;
  std::optional<SweepSpec> sweep;
  std::filesystem::path output_dir = "results";
  std::size_t jobs = 1;         // worker threads for trials; 0 = hardware
  bool diagnostics = false;     // per-round containment records
  bool dump_spectral = false;   // write each trial's spectral estimate

  // n1 < n_total, counts >= 1, r <= min(d, T), k >= 2, sigma >= 0, lambda > 0,
  // delta in (0, 1). Throws InvalidArgument naming the field.
  void validate() const;

  // Copy with one sweepable field replaced. Throws InvalidArgument for an
  // unknown field or a value that is not a valid count.
  ExperimentConfig with_field(std::string_view field, double value) const;

  // Fields that determine the simulated numbers, in a fixed order.
  std::string canonical() const;
};

// FNV-1a of canonical(); trials from different configs never mix.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// One OFUL-phase decision, recorded when cfg.diagnostics is set.
struct DiagnosticRow {
  std::size_t trial = 0;
  std::size_t task = 0;
  std::size_t round = 0;  // 1-based
  double radius = 0.0;
  std::size_t chosen = 0;
  double top1 = 0.0;
  double top2 = 0.0;
  double error_norm = 0.0;  // ||theta_hat - theta*||_Vbar before the update
  bool contained = false;   // error_norm <= radius
  bool optimistic = false;  // every index >= x^T theta*
};

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t config_hash = 0;
  InstanceStats stats;
  double c_tilde = 0.0;
  double alpha = 0.0;
  double sd_to_truth = 0.0;
  Vector round_regret;  // per round, summed over tasks
  std::vector<std::string> warnings;
  std::vector<DiagnosticRow> diagnostics;
  std::optional<SpectralEstimate> spectral;  // kept when cfg.dump_spectral
  double wall_seconds = 0.0;

  double total_regret() const;
};

using AgentFactory = std::function<std::unique_ptr<Agent>(
    const ExperimentConfig&, const BanditInstance&, const InstanceStats&)>;

// Oracle-mode radius settings for an instance: mu term and s_bound are
// max_t ||w*_t||, sigma is the configured noise level.
RadiusSpec oracle_radius_spec(const ExperimentConfig& cfg, const InstanceStats& stats);
std::unique_ptr<Agent> make_agent(const ExperimentConfig& cfg, const BanditInstance& inst,
                                  const InstanceStats& stats);

// Draws the trial's instance, plays all n_total rounds and returns the regret
// log. Deterministic in (cfg, trial). Module errors are rethrown with the
// trial, round and task prepended.
TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t trial,
                      const AgentFactory& factory = {});

// Only the exploration rounds and the spectral step of a trial; the
// estimate matches what run_trial would use.
SpectralEstimate run_exploration(const ExperimentConfig& cfg, std::size_t trial);

struct RegretLog {
  ExperimentConfig config;
  std::uint64_t config_hash = 0;
  std::vector<TrialRecord> trials;  // sorted by trial index
  Vector mean_curve;    // per-task cumulative regret, averaged over trials
  Vector stderr_curve;  // sample standard error of the above

  double final_mean() const { return mean_curve.empty() ? 0.0 : mean_curve.back(); }
  double final_stderr() const { return stderr_curve.empty() ? 0.0 : stderr_curve.back(); }
};

// Pointwise mean and standard error of the per-task cumulative curves.
// Throws InvalidArgument on an empty list, mixed configs or ragged curves.
RegretLog aggregate(std::vector<TrialRecord> slices, const ExperimentConfig& cfg);

// All cfg.trials trials on cfg.jobs workers, reduced in trial order.
RegretLog run_experiment(const ExperimentConfig& cfg);

// One log per sweep value, or a single log without a sweep.
std::vector<RegretLog> run_sweep(const ExperimentConfig& cfg);

// Mean per-task per-round regret over rounds [first, first + count), 1-based.
double window_mean_regret(const RegretLog& log, std::size_t first, std::size_t count);

struct ContainmentSummary {
  std::size_t samples = 0;
  std::size_t contained = 0;
  std::size_t optimistic_when_contained = 0;

  double frequency() const {
    return samples == 0 ? 0.0 : static_cast<double>(contained) / static_cast<double>(samples);
  }
};

ContainmentSummary summarize_containment(const RegretLog& log);

}  // namespace mtrl
