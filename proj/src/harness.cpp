#include "mtrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "mtrl/errors.hpp"

namespace mtrl {
namespace {

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw InvalidArgument(std::string(what) + ": cannot parse '" + std::string(text) + "'");
  }
  return v;
}

std::size_t as_count(double v, std::string_view field) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) {
    throw InvalidArgument("sweep value for '" + std::string(field) + "' must be a whole number >= 1");
  }
  return static_cast<std::size_t>(v);
}

// Rethrows module errors with the trial position prepended, keeping the type.
template <class F>
void with_context(std::size_t trial, std::size_t round, std::size_t task, F&& body) {
  auto where = [&] {
    return "trial " + std::to_string(trial) + ", round " + std::to_string(round) + ", task " +
           std::to_string(task) + ": ";
  };
  try {
    body();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(where() + e.what());
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(where() + e.what());
  } catch (const DegenerateInstance& e) {
    throw DegenerateInstance(where() + e.what());
  }
}

StreamId stream(const ExperimentConfig& cfg, std::size_t trial, StreamPhase phase,
                std::size_t round, std::size_t task) {
  return StreamId{cfg.seed, static_cast<std::uint32_t>(trial), phase,
                  static_cast<std::uint32_t>(round), static_cast<std::uint32_t>(task)};
}

BanditInstance trial_instance(const ExperimentConfig& cfg, std::size_t trial) {
  return sample_instance(cfg.d, cfg.t_count, cfg.r, cfg.sigma,
                         stream(cfg, trial, StreamPhase::kInstance, 0, 0));
}

std::vector<ActionSet> round_action_sets(const ExperimentConfig& cfg, const BanditInstance& inst,
                                         std::size_t trial, std::size_t round, double& running_l) {
  std::vector<ActionSet> sets;
  sets.reserve(cfg.t_count);
  for (std::size_t t = 0; t < cfg.t_count; ++t) {
    Rng rng(stream(cfg, trial, StreamPhase::kActions, round, t));
    sets.push_back(sample_action_set(inst, round, t, cfg.k_actions, rng));
    for (std::size_t i = 0; i < cfg.k_actions; ++i)
      running_l = std::max(running_l, norm(sets.back().action(i)));
  }
  return sets;
}

double resolved_c_tilde(const ExperimentConfig& cfg, const InstanceStats& stats) {
  return cfg.c_tilde ? *cfg.c_tilde : oracle_c_tilde(stats.kappa, stats.mu);
}

double ellipsoid_error_norm(const EllipsoidView& view, std::span<const double> theta_star) {
  Vector e(theta_star.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = view.theta_hat[i] - theta_star[i];
  const double q = view.lambda * dot(e, e) + quadratic_form(*view.gram, e);
  return std::sqrt(std::max(q, 0.0));
}

DiagnosticRow diagnose(std::size_t trial, std::size_t task, std::size_t round,
                       const PolicyDecision& dec, const ActionSet& set, const Agent& agent,
                       const BanditInstance& inst) {
  DiagnosticRow row;
  row.trial = trial;
  row.task = task;
  row.round = round;
  row.radius = dec.radius_used;
  row.chosen = dec.chosen;
  if (!dec.index_values.empty()) {
    Vector sorted = dec.index_values;
    std::partial_sort(sorted.begin(), sorted.begin() + std::min<std::size_t>(2, sorted.size()),
                      sorted.end(), std::greater<>());
    row.top1 = sorted[0];
    row.top2 = sorted.size() > 1 ? sorted[1] : sorted[0];
    row.optimistic = true;
    for (std::size_t i = 0; i < set.k(); ++i)
      if (dec.index_values[i] < mean_reward(inst, task, set.action(i))) row.optimistic = false;
  }
  if (const auto view = agent.ellipsoid(task)) {
    const Vector theta = inst.theta(task);
    row.error_norm = ellipsoid_error_norm(*view, theta);
    row.contained = row.error_norm <= dec.radius_used;
  }
  return row;
}

}  // namespace

// -- enums and config ---------------------------------------------------------

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::kMtlBeta:
      return "mtl_beta";
    case AgentKind::kMtlBetaPrime:
      return "mtl_beta_prime";
    case AgentKind::kIndependentOful:
      return "independent_oful";
    case AgentKind::kRandom:
      return "random";
  }
  return "unknown";
}

AgentKind parse_agent_kind(std::string_view text) {
  for (AgentKind k : {AgentKind::kMtlBeta, AgentKind::kMtlBetaPrime, AgentKind::kIndependentOful,
                      AgentKind::kRandom}) {
    if (to_string(k) == text) return k;
  }
  throw InvalidArgument("unknown agent '" + std::string(text) +
                        "' (expected mtl_beta, mtl_beta_prime, independent_oful or random)");
}

Delta0Policy parse_delta0_policy(std::string_view text) {
  if (text == "measured_sd") return Delta0Policy::measured_sd();
  if (text == "schedule_inv_sqrt") return Delta0Policy::schedule_inv_sqrt();
  const double v = parse_number(text, "delta0");
  if (v < 0.0) throw InvalidArgument("delta0 must be >= 0");
  return Delta0Policy::fixed(v);
}

std::string delta0_policy_to_string(const Delta0Policy& policy) {
  switch (policy.kind) {
    case Delta0Policy::Kind::kMeasuredSd:
      return "measured_sd";
    case Delta0Policy::Kind::kScheduleInvSqrt:
      return "schedule_inv_sqrt";
    case Delta0Policy::Kind::kFixed:
      break;
  }
  return format_number(policy.value);
}

LPolicy parse_l_policy(std::string_view text) {
  if (text == "running_max") return LPolicy::running_max();
  const double v = parse_number(text, "l-policy");
  if (!(v > 0.0)) throw InvalidArgument("fixed L must be > 0");
  return LPolicy::fixed(v);
}

std::string l_policy_to_string(const LPolicy& policy) {
  return policy.kind == LPolicy::Kind::kRunningMax ? "running_max" : format_number(policy.value);
}

BetaPrimeForm parse_beta_prime_form(std::string_view text) {
  if (text == "horizon") return BetaPrimeForm::kHorizon;
  if (text == "round") return BetaPrimeForm::kRound;
  throw InvalidArgument("beta-prime-form must be 'horizon' or 'round'");
}

std::string_view to_string(BetaPrimeForm form) {
  return form == BetaPrimeForm::kHorizon ? "horizon" : "round";
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw InvalidArgument(std::string("config: ") + msg);
  };
  need(d >= 1 && t_count >= 1 && r >= 1 && n1 >= 1 && n_total >= 1 && trials >= 1,
       "d, t, r, n1, n and trials must all be >= 1");
  need(n1 < n_total, "n1 must be < n");
  need(r <= std::min(d, t_count), "r must be <= min(d, t)");
  need(k_actions >= 2, "k must be >= 2");
  need(sigma >= 0.0 && std::isfinite(sigma), "sigma must be finite and >= 0");
  need(lambda > 0.0 && std::isfinite(lambda), "lambda must be finite and > 0");
  need(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  need(!c_tilde || *c_tilde > 0.0, "c-tilde must be > 0");
  need(trials < (std::size_t{1} << 30), "trials must be < 2^30");
  need(n_total < (std::size_t{1} << 32) && t_count < (std::size_t{1} << 32),
       "n and t must fit the RNG counter");
  if (delta0.kind == Delta0Policy::Kind::kFixed) need(delta0.value >= 0.0, "delta0 must be >= 0");
  if (l_policy.kind == LPolicy::Kind::kFixed) need(l_policy.value > 0.0, "fixed L must be > 0");
  if (sweep) {
    need(!sweep->values.empty(), "sweep needs at least one value");
    for (double v : sweep->values) with_field(sweep->field, v);
  }
}

ExperimentConfig ExperimentConfig::with_field(std::string_view field, double value) const {
  ExperimentConfig c = *this;
  if (field == "d") {
    c.d = as_count(value, field);
  } else if (field == "t") {
    c.t_count = as_count(value, field);
  } else if (field == "r") {
    c.r = as_count(value, field);
  } else if (field == "n1") {
    c.n1 = as_count(value, field);
  } else if (field == "n") {
    c.n_total = as_count(value, field);
  } else if (field == "k") {
    c.k_actions = as_count(value, field);
  } else if (field == "sigma") {
    c.sigma = value;
  } else if (field == "lambda") {
    c.lambda = value;
  } else if (field == "delta") {
    c.delta = value;
  } else {
    throw InvalidArgument("unknown sweep field '" + std::string(field) +
                          "' (expected d, t, r, n1, n, k, sigma, lambda or delta)");
  }
  c.sweep.reset();
  return c;
}

std::string ExperimentConfig::canonical() const {
  std::string s;
  auto add = [&s](std::string_view key, const std::string& value) {
    s.append(key).append("=").append(value).append(";");
  };
  add("d", std::to_string(d));
  add("t", std::to_string(t_count));
  add("r", std::to_string(r));
  add("n1", std::to_string(n1));
  add("n", std::to_string(n_total));
  add("k", std::to_string(k_actions));
  add("sigma", format_number(sigma));
  add("lambda", format_number(lambda));
  add("delta", format_number(delta));
  add("agent", std::string(to_string(agent)));
  add("delta0", delta0_policy_to_string(delta0));
  add("l_policy", l_policy_to_string(l_policy));
  add("c_tilde", c_tilde ? format_number(*c_tilde) : "oracle");
  add("beta_prime_form", std::string(to_string(beta_prime_form)));
  add("seed", std::to_string(seed));
  return s;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : cfg.canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// -- agents for a trial -------------------------------------------------------

RadiusSpec oracle_radius_spec(const ExperimentConfig& cfg, const InstanceStats& stats) {
  RadiusSpec spec;
  spec.lambda = cfg.lambda;
  spec.delta = cfg.delta;
  spec.delta0 = cfg.delta0;
  spec.mu_sigma_term = stats.w_max;
  spec.sigma = cfg.sigma;
  spec.r = cfg.r;
  spec.l_policy = cfg.l_policy;
  spec.horizon = cfg.n_total - cfg.n1;
  spec.beta_prime_form = cfg.beta_prime_form;
  spec.s_bound = stats.w_max;
  return spec;
}

std::unique_ptr<Agent> make_agent(const ExperimentConfig& cfg, const BanditInstance& inst,
                                  const InstanceStats& stats) {
  RadiusSpec spec = oracle_radius_spec(cfg, stats);
  switch (cfg.agent) {
    case AgentKind::kMtlBeta:
      spec.kind = RadiusKind::kBeta;
      return std::make_unique<MtlOfulAgent>(inst.d(), inst.t_count(), inst.r(), spec);
    case AgentKind::kMtlBetaPrime:
      spec.kind = RadiusKind::kBetaPrime;
      return std::make_unique<MtlOfulAgent>(inst.d(), inst.t_count(), inst.r(), spec);
    case AgentKind::kIndependentOful:
      return std::make_unique<IndependentOfulAgent>(inst.d(), inst.t_count(), spec);
    case AgentKind::kRandom:
      return std::make_unique<UniformRandomAgent>();
  }
  throw InvalidArgument("make_agent: unknown agent kind");
}

// -- trials -------------------------------------------------------------------

double TrialRecord::total_regret() const {
  double s = 0.0;
  for (double v : round_regret) s += v;
  return s;
}

TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t trial,
                      const AgentFactory& factory) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();

  TrialRecord rec;
  rec.trial = trial;
  rec.config_hash = config_hash(cfg);
  rec.round_regret.assign(cfg.n_total, 0.0);

  std::optional<BanditInstance> inst_holder;
  with_context(trial, 0, 0, [&] {
    inst_holder.emplace(trial_instance(cfg, trial));
    rec.stats = instance_stats(*inst_holder);
  });
  const BanditInstance& inst = *inst_holder;
  rec.c_tilde = resolved_c_tilde(cfg, rec.stats);

  std::unique_ptr<Agent> agent =
      factory ? factory(cfg, inst, rec.stats) : make_agent(cfg, inst, rec.stats);
  if (!agent) throw InvalidArgument("run_trial: agent factory returned null");

  ExplorationLog log(cfg.d, cfg.t_count, cfg.n1);
  double running_l = 0.0;

  for (std::size_t n = 1; n <= cfg.n_total; ++n) {
    const Phase phase = n <= cfg.n1 ? Phase::kExploration : Phase::kOptimistic;
    const std::vector<ActionSet> sets = round_action_sets(cfg, inst, trial, n, running_l);
    const RoundContext ctx{phase, n, running_l};
    double round_regret = 0.0;

    for (std::size_t t = 0; t < cfg.t_count; ++t) {
      with_context(trial, n, t, [&] {
        const ActionSet& set = sets[t];
        Rng select_rng(stream(cfg, trial, StreamPhase::kExploration, n, t));
        const PolicyDecision dec = agent->select(t, set, ctx, select_rng);
        if (dec.chosen >= set.k()) throw InvalidArgument("agent chose an action outside the set");
        const std::span<const double> x = set.action(dec.chosen);

        Rng noise_rng(stream(cfg, trial, StreamPhase::kNoise, n, t));
        const RewardDraw reward = draw_reward(inst, t, x, noise_rng);
        round_regret += best_action_value(inst, t, set).second - reward.mean;

        if (phase == Phase::kExploration) {
          log.record(n - 1, t, x, reward.observed);
        } else if (cfg.diagnostics && agent->ellipsoid(t)) {
          rec.diagnostics.push_back(diagnose(trial, t, n, dec, set, *agent, inst));
        }
        agent->update(t, x, reward.observed, ctx);
      });
    }
    rec.round_regret[n - 1] = round_regret;

    if (n == cfg.n1) {
      with_context(trial, n, 0, [&] {
        SpectralEstimate est = spectral_init(log, cfg.r, rec.c_tilde, &inst.b_star());
        rec.alpha = est.alpha;
        rec.sd_to_truth = est.sd_to_truth.value_or(0.0);
        for (const auto& w : est.warnings) rec.warnings.push_back(w);
        agent->start_optimistic_phase(est);
        if (cfg.dump_spectral) rec.spectral = std::move(est);
      });
    }
  }

  rec.stats.l_bound = running_l;
  for (const auto& w : agent->warnings()) rec.warnings.push_back(w);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

SpectralEstimate run_exploration(const ExperimentConfig& cfg, std::size_t trial) {
  cfg.validate();
  const BanditInstance inst = trial_instance(cfg, trial);
  const InstanceStats stats = instance_stats(inst);
  ExplorationLog log(cfg.d, cfg.t_count, cfg.n1);
  double running_l = 0.0;
  for (std::size_t n = 1; n <= cfg.n1; ++n) {
    const std::vector<ActionSet> sets = round_action_sets(cfg, inst, trial, n, running_l);
    for (std::size_t t = 0; t < cfg.t_count; ++t) {
      Rng select_rng(stream(cfg, trial, StreamPhase::kExploration, n, t));
      const std::span<const double> x = sets[t].action(explore_uniformly(sets[t], select_rng).chosen);
      Rng noise_rng(stream(cfg, trial, StreamPhase::kNoise, n, t));
      log.record(n - 1, t, x, draw_reward(inst, t, x, noise_rng).observed);
    }
  }
  return spectral_init(log, cfg.r, resolved_c_tilde(cfg, stats), &inst.b_star());
}

// -- aggregation --------------------------------------------------------------

RegretLog aggregate(std::vector<TrialRecord> slices, const ExperimentConfig& cfg) {
  if (slices.empty()) throw InvalidArgument("aggregate: no trials");
  const std::uint64_t hash = config_hash(cfg);
  for (const auto& s : slices) {
    if (s.config_hash != hash) {
      throw InvalidArgument("aggregate: trial " + std::to_string(s.trial) +
                            " was produced by a different config");
    }
    if (s.round_regret.size() != slices.front().round_regret.size()) {
      throw InvalidArgument("aggregate: trials have different round counts");
    }
  }
  std::sort(slices.begin(), slices.end(),
            [](const TrialRecord& a, const TrialRecord& b) { return a.trial < b.trial; });

  const std::size_t rounds = slices.front().round_regret.size();
  const double per_task = 1.0 / static_cast<double>(cfg.t_count);
  std::vector<Vector> curves;
  curves.reserve(slices.size());
  for (const auto& s : slices) {
    Vector c(rounds);
    double acc = 0.0;
    for (std::size_t n = 0; n < rounds; ++n) {
      acc += s.round_regret[n];
      c[n] = acc * per_task;
    }
    curves.push_back(std::move(c));
  }

  RegretLog out;
  out.config = cfg;
  out.config_hash = hash;
  out.mean_curve.assign(rounds, 0.0);
  out.stderr_curve.assign(rounds, 0.0);
  const double k = static_cast<double>(curves.size());
  for (std::size_t n = 0; n < rounds; ++n) {
    double mean = 0.0;
    for (const auto& c : curves) mean += c[n];
    mean /= k;
    out.mean_curve[n] = mean;
    if (curves.size() > 1) {
      double ss = 0.0;
      for (const auto& c : curves) ss += (c[n] - mean) * (c[n] - mean);
      out.stderr_curve[n] = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
    }
  }
  out.trials = std::move(slices);
  return out;
}

RegretLog run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::size_t jobs = cfg.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.jobs;
  jobs = std::min(jobs, cfg.trials);

  std::vector<TrialRecord> records(cfg.trials);
  std::vector<std::exception_ptr> errors(cfg.trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.trials; i = next++) {
      try {
        records[i] = run_trial(cfg, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return aggregate(std::move(records), cfg);
}

std::vector<RegretLog> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<RegretLog> logs;
  if (!cfg.sweep) {
    logs.push_back(run_experiment(cfg));
    return logs;
  }
  for (double v : cfg.sweep->values) logs.push_back(run_experiment(cfg.with_field(cfg.sweep->field, v)));
  return logs;
}

double window_mean_regret(const RegretLog& log, std::size_t first, std::size_t count) {
  const std::size_t rounds = log.mean_curve.size();
  if (first == 0 || count == 0 || first + count - 1 > rounds) {
    throw InvalidArgument("window_mean_regret: window outside the recorded rounds");
  }
  const double before = first == 1 ? 0.0 : log.mean_curve[first - 2];
  return (log.mean_curve[first + count - 2] - before) / static_cast<double>(count);
}

ContainmentSummary summarize_containment(const RegretLog& log) {
  ContainmentSummary s;
  for (const auto& trial : log.trials) {
    for (const auto& row : trial.diagnostics) {
      ++s.samples;
      if (row.contained) {
        ++s.contained;
        if (row.optimistic) ++s.optimistic_when_contained;
      }
    }
  }
  return s;
}

}  // namespace mtrl
