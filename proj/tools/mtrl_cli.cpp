// mtrl: run, sweep and validate multi-task low-rank bandit experiments.
//
//   mtrl run   --d 100 --t 100 --r 2 --n1 20 --n 600 --trials 10 --seed 7 --out results
//   mtrl sweep --field r --values 2,4,8 --out sweep_r
//   mtrl validate
//
// Exit codes: 0 success, 1 validation or runtime failure, 2 bad arguments.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mtrl/errors.hpp"
#include "mtrl/harness.hpp"
#include "mtrl/report.hpp"
#include "property_suite.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kBadArgs = 2;

struct RawFlags {
  std::string agent = "mtl_beta";
  std::string delta0 = "measured_sd";
  std::string l_policy = "running_max";
  std::string beta_prime_form = "horizon";
  double c_tilde = 0.0;
  std::string field;
  std::vector<double> values;
  std::string out = "results";
  std::size_t instances = 100;
};

void print_arm(const mtrl::RegretLog& arm) {
  const mtrl::ExperimentConfig& c = arm.config;
  std::printf("%-16s d=%zu T=%zu r=%zu trials=%zu  final per-task regret %.4f +- %.4f\n",
              std::string(mtrl::to_string(c.agent)).c_str(), c.d, c.t_count, c.r,
              arm.trials.size(), arm.final_mean(), arm.final_stderr());
}

int run_validate(std::uint64_t seed, std::size_t instances) {
  bool ok = true;
  std::printf("oracle equivalence (%zu instances per check)\n", instances);
  for (const auto& c : mtrl::validation::oracle_equivalence_suite(seed, instances)) {
    std::printf("  %s\n", mtrl::validation::format_check(c).c_str());
    ok = ok && c.passed;
  }
  std::printf("invariants\n");
  for (const auto& c : mtrl::validation::invariant_suite(seed)) {
    std::printf("  %s\n", mtrl::validation::format_check(c).c_str());
    ok = ok && c.passed;
  }
  std::printf("%s\n", ok ? "all checks passed" : "validation FAILED");
  return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task low-rank linear bandits: simulation harness"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value file; command-line flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);

  mtrl::ExperimentConfig cfg;
  RawFlags raw;
  app.add_option("--d", cfg.d, "feature dimension")->capture_default_str();
  app.add_option("--t", cfg.t_count, "number of tasks T")->capture_default_str();
  app.add_option("--r", cfg.r, "shared rank")->capture_default_str();
  app.add_option("--n1", cfg.n1, "exploration rounds N1")->capture_default_str();
  app.add_option("--n", cfg.n_total, "total rounds N")->capture_default_str();
  app.add_option("--k", cfg.k_actions, "actions per round and task")->capture_default_str();
  app.add_option("--sigma", cfg.sigma, "reward noise standard deviation")->capture_default_str();
  app.add_option("--lambda", cfg.lambda, "ridge regularizer")->capture_default_str();
  app.add_option("--delta", cfg.delta, "confidence level")->capture_default_str();
  app.add_option("--agent", raw.agent, "mtl_beta | mtl_beta_prime | independent_oful | random")
      ->capture_default_str();
  app.add_option("--delta0", raw.delta0, "measured_sd | schedule_inv_sqrt | <value>")
      ->capture_default_str();
  app.add_option("--l-policy", raw.l_policy, "running_max | <fixed L>")->capture_default_str();
  auto* c_tilde = app.add_option("--c-tilde", raw.c_tilde,
                                 "truncation multiplier (default 9 kappa^2 mu^2 of the instance)");
  app.add_option("--beta-prime-form", raw.beta_prime_form, "horizon | round")
      ->capture_default_str();
  app.add_option("--trials", cfg.trials, "independent trials")->capture_default_str();
  app.add_option("--seed", cfg.seed, "base seed")->capture_default_str();
  app.add_option("--out", raw.out, "output directory")->capture_default_str();
  app.add_option("--jobs", cfg.jobs, "worker threads for trials (0 = all cores)")
      ->capture_default_str();
  auto* field = app.add_option("--field", raw.field, "sweep field: d, t, r, n1, n, k, sigma, lambda, delta");
  auto* values = app.add_option("--values", raw.values, "comma-separated sweep values")
                     ->delimiter(',');
  app.add_flag("--diagnostics", cfg.diagnostics, "write per-round containment records");
  app.add_flag("--dump-spectral", cfg.dump_spectral, "write each trial's spectral estimate");
  app.add_option("--instances", raw.instances, "random cases per oracle check (validate)")
      ->capture_default_str();

  auto* run_cmd = app.add_subcommand("run", "run one configuration")->fallthrough();
  auto* sweep_cmd = app.add_subcommand("sweep", "vary one field over several values")->fallthrough();
  auto* validate_cmd =
      app.add_subcommand("validate", "run the invariant and oracle suites")->fallthrough();

  try {
    app.parse(argc, argv);
    if (sweep_cmd->parsed() && (field->count() == 0 || values->count() == 0)) {
      throw CLI::RequiredError("sweep needs --field and --values");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return kOk;
    std::cerr << app.help();
    return kBadArgs;
  }

  if (validate_cmd->parsed()) return run_validate(cfg.seed, raw.instances);

  try {
    cfg.agent = mtrl::parse_agent_kind(raw.agent);
    cfg.delta0 = mtrl::parse_delta0_policy(raw.delta0);
    cfg.l_policy = mtrl::parse_l_policy(raw.l_policy);
    cfg.beta_prime_form = mtrl::parse_beta_prime_form(raw.beta_prime_form);
    if (c_tilde->count() > 0) cfg.c_tilde = raw.c_tilde;
    cfg.output_dir = raw.out;
    if (sweep_cmd->parsed()) cfg.sweep = mtrl::SweepSpec{raw.field, raw.values};
    cfg.validate();
  } catch (const mtrl::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kBadArgs;
  }
  (void)run_cmd;

  try {
    const std::vector<mtrl::RegretLog> arms = mtrl::run_sweep(cfg);
    for (const auto& arm : arms) print_arm(arm);
    for (const auto& path : mtrl::emit_reports(arms, cfg)) std::printf("wrote %s\n", path.c_str());
  } catch (const mtrl::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kOk;
}
