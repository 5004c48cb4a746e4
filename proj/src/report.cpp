#include "mtrl/report.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mtrl/errors.hpp"

namespace mtrl {
namespace {

using ojson = nlohmann::ordered_json;

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string arm_label(const RegretLog& arm, const ExperimentConfig& base) {
  if (!base.sweep) return std::string(to_string(arm.config.agent));
  const std::string& f = base.sweep->field;
  const ExperimentConfig& c = arm.config;
  if (f == "d") return "d=" + std::to_string(c.d);
  if (f == "t") return "T=" + std::to_string(c.t_count);
  if (f == "r") return "r=" + std::to_string(c.r);
  if (f == "n1") return "N1=" + std::to_string(c.n1);
  if (f == "n") return "N=" + std::to_string(c.n_total);
  if (f == "k") return "K=" + std::to_string(c.k_actions);
  if (f == "sigma") return "sigma=" + num(c.sigma);
  if (f == "lambda") return "lambda=" + num(c.lambda);
  return "delta=" + num(c.delta);
}

ojson config_json(const ExperimentConfig& c) {
  ojson j;
  j["d"] = c.d;
  j["t"] = c.t_count;
  j["r"] = c.r;
  j["n1"] = c.n1;
  j["n"] = c.n_total;
  j["k"] = c.k_actions;
  j["sigma"] = c.sigma;
  j["lambda"] = c.lambda;
  j["delta"] = c.delta;
  j["agent"] = std::string(to_string(c.agent));
  j["delta0"] = delta0_policy_to_string(c.delta0);
  j["l_policy"] = l_policy_to_string(c.l_policy);
  j["c_tilde"] = c.c_tilde ? ojson(*c.c_tilde) : ojson("oracle");
  j["beta_prime_form"] = std::string(to_string(c.beta_prime_form));
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string utc_stamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// "Nice" tick step covering `span` in about `target` intervals.
double tick_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::string regret_csv(const std::vector<RegretLog>& arms) {
  std::string out = "round,mean_per_task_cum_regret,stderr,agent,d,T,r,seed\n";
  for (const auto& arm : arms) {
    const ExperimentConfig& c = arm.config;
    const std::string tail = "," + std::string(to_string(c.agent)) + "," + std::to_string(c.d) +
                             "," + std::to_string(c.t_count) + "," + std::to_string(c.r) + "," +
                             std::to_string(c.seed) + "\n";
    for (std::size_t n = 0; n < arm.mean_curve.size(); ++n) {
      out += std::to_string(n + 1) + "," + num(arm.mean_curve[n]) + "," +
             num(arm.stderr_curve[n]) + tail;
    }
  }
  return out;
}

std::string summary_json(const std::vector<RegretLog>& arms, const ExperimentConfig& base) {
  ojson j;
  j["format"] = "mtrl-summary";
  j["version"] = 1;
  j["config"] = config_json(base);
  if (base.sweep) {
    j["sweep"] = {{"field", base.sweep->field}, {"values", base.sweep->values}};
  } else {
    j["sweep"] = nullptr;
  }
  j["action_set_size"] = base.k_actions;
  j["instances"] = "fresh instance per trial";
  j["regret_counts_exploration"] = true;

  ojson arm_list = ojson::array();
  for (const auto& arm : arms) {
    const ExperimentConfig& c = arm.config;
    ojson a;
    a["label"] = arm_label(arm, base);
    a["config"] = config_json(c);
    a["config_hash"] = hex64(arm.config_hash);
    a["trials"] = arm.trials.size();
    a["final_per_task_regret_mean"] = arm.final_mean();
    a["final_per_task_regret_stderr"] = arm.final_stderr();
    double total = 0.0;
    for (const auto& t : arm.trials) total += t.total_regret();
    a["final_total_regret_mean"] = total / static_cast<double>(arm.trials.size());
    const std::size_t oful = c.n_total - c.n1;
    const std::size_t window = std::min<std::size_t>(100, oful);
    a["first_oful_window_mean_regret"] = window_mean_regret(arm, c.n1 + 1, window);
    a["last_window_mean_regret"] = window_mean_regret(arm, c.n_total - window + 1, window);
    a["window_rounds"] = window;

    ojson per_trial = ojson::array();
    for (const auto& t : arm.trials) {
      ojson tr;
      tr["trial"] = t.trial;
      tr["final_per_task_regret"] = t.total_regret() / static_cast<double>(c.t_count);
      tr["total_regret"] = t.total_regret();
      tr["sd_to_truth"] = t.sd_to_truth;
      tr["alpha"] = t.alpha;
      tr["c_tilde"] = t.c_tilde;
      tr["instance"] = {{"sigma_max", t.stats.sigma_max}, {"sigma_min", t.stats.sigma_min},
                        {"kappa", t.stats.kappa},         {"mu", t.stats.mu},
                        {"w_max", t.stats.w_max},         {"nsr", t.stats.nsr},
                        {"l_bound", t.stats.l_bound}};
      tr["warnings"] = t.warnings.size();
      per_trial.push_back(std::move(tr));
    }
    a["per_trial"] = std::move(per_trial);

    if (c.diagnostics) {
      const ContainmentSummary s = summarize_containment(arm);
      a["containment"] = {{"samples", s.samples},
                          {"contained", s.contained},
                          {"frequency", s.frequency()},
                          {"optimistic_when_contained", s.optimistic_when_contained}};
    }
    arm_list.push_back(std::move(a));
  }
  j["arms"] = std::move(arm_list);
  return j.dump(1) + "\n";
}

std::string timing_json(const std::vector<RegretLog>& arms) {
  ojson j;
  ojson list = ojson::array();
  double total = 0.0;
  for (const auto& arm : arms) {
    ojson per = ojson::array();
    for (const auto& t : arm.trials) {
      per.push_back(t.wall_seconds);
      total += t.wall_seconds;
    }
    list.push_back({{"config_hash", hex64(arm.config_hash)}, {"trial_seconds", per}});
  }
  j["total_trial_seconds"] = total;
  j["arms"] = std::move(list);
  return j.dump(1) + "\n";
}

std::string diagnostics_csv(const std::vector<RegretLog>& arms) {
  std::ostringstream out;
  out << "config_hash,trial,task,round,radius,chosen,top1,top2,error_norm,contained,optimistic\n";
  for (const auto& arm : arms) {
    const std::string hash = hex64(arm.config_hash);
    for (const auto& t : arm.trials) {
      for (const auto& d : t.diagnostics) {
        out << hash << ',' << d.trial << ',' << d.task << ',' << d.round << ',' << num(d.radius)
            << ',' << d.chosen << ',' << num(d.top1) << ',' << num(d.top2) << ','
            << num(d.error_norm) << ',' << (d.contained ? 1 : 0) << ','
            << (d.optimistic ? 1 : 0) << '\n';
      }
    }
  }
  return out.str();
}

std::string regret_svg(const std::vector<RegretLog>& arms, const ExperimentConfig& base,
                       const std::string& stamp) {
  constexpr double kW = 760, kH = 460, kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
  constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                     "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;

  std::size_t max_round = 1;
  double max_y = 0.0;
  for (const auto& arm : arms) {
    max_round = std::max(max_round, arm.mean_curve.size());
    for (double v : arm.mean_curve) max_y = std::max(max_y, v);
  }
  if (!(max_y > 0.0)) max_y = 1.0;
  const double y_step = tick_step(max_y, 5);
  const double y_top = std::ceil(max_y / y_step) * y_step;
  const double x_step = tick_step(static_cast<double>(max_round), 6);
  auto sx = [&](double round) { return kLeft + pw * (round / static_cast<double>(max_round)); };
  auto sy = [&](double v) { return kTop + ph * (1.0 - v / y_top); };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kW
    << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n";
  s << "<!-- generated " << stamp << " -->\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<g font-family=\"sans-serif\" font-size=\"12\">\n";

  // Axes and ticks.
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\""
    << kTop + ph << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
    << kTop + ph << "\" stroke=\"black\"/>\n";
  for (double x = 0.0; x <= static_cast<double>(max_round) + 1e-9; x += x_step) {
    s << "<line x1=\"" << fixed(sx(x), 2) << "\" y1=\"" << kTop + ph << "\" x2=\""
      << fixed(sx(x), 2) << "\" y2=\"" << kTop + ph + 5 << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << fixed(sx(x), 2) << "\" y=\"" << kTop + ph + 18
      << "\" text-anchor=\"middle\">" << tick_label(x) << "</text>\n";
  }
  for (double y = 0.0; y <= y_top + 1e-9 * y_top; y += y_step) {
    s << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fixed(sy(y), 2) << "\" x2=\"" << kLeft
      << "\" y2=\"" << fixed(sy(y), 2) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << kLeft - 8 << "\" y=\"" << fixed(sy(y) + 4, 2)
      << "\" text-anchor=\"end\">" << tick_label(y) << "</text>\n";
  }
  s << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 15
    << "\" text-anchor=\"middle\">round</text>\n";
  s << "<text x=\"20\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
    << kTop + ph / 2 << ")\">per-task cumulative regret</text>\n";

  // Exploration boundary of the base config.
  s << "<line x1=\"" << fixed(sx(static_cast<double>(base.n1)), 2) << "\" y1=\"" << kTop
    << "\" x2=\"" << fixed(sx(static_cast<double>(base.n1)), 2) << "\" y2=\"" << kTop + ph
    << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";

  for (std::size_t a = 0; a < arms.size(); ++a) {
    const char* color = kColors[a % std::size(kColors)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const Vector& curve = arms[a].mean_curve;
    for (std::size_t n = 0; n < curve.size(); ++n) {
      if (n) s << ' ';
      s << fixed(sx(static_cast<double>(n + 1)), 2) << ',' << fixed(sy(curve[n]), 2);
    }
    s << "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(a);
    s << "<line x1=\"" << kLeft + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 40
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << kLeft + pw + 46 << "\" y=\"" << ly + 4 << "\">"
      << arm_label(arms[a], base) << "</text>\n";
  }
  s << "</g>\n</svg>\n";
  return s.str();
}

std::vector<std::filesystem::path> emit_reports(const std::vector<RegretLog>& arms,
                                                const ExperimentConfig& base) {
  if (arms.empty()) throw InvalidArgument("emit_reports: nothing to report");
  const std::filesystem::path& dir = base.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }

  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_file(dir / name, text);
    written.push_back(dir / name);
  };
  emit("regret.csv", regret_csv(arms));
  emit("summary.json", summary_json(arms, base));
  emit("regret.svg", regret_svg(arms, base, utc_stamp()));
  emit("timing.json", timing_json(arms));
  if (base.diagnostics) emit("diagnostics.csv", diagnostics_csv(arms));
  if (base.dump_spectral) {
    for (std::size_t a = 0; a < arms.size(); ++a) {
      for (const auto& t : arms[a].trials) {
        if (!t.spectral) continue;
        emit("spectral_arm" + std::to_string(a) + "_trial" + std::to_string(t.trial) + ".json",
             spectral_estimate_to_json(*t.spectral));
      }
    }
  }
  return written;
}

}  // namespace mtrl
