// kinedispatch: calibrate / profile / simulate / dispatch / report.
//
// Every command is a pure function of its flags and input files, so reruns
// produce byte-identical outputs. Failures exit nonzero with a JSON error
// object on stderr.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kinedispatch/calibration.hpp"
#include "kinedispatch/harness.hpp"
#include "kinedispatch/io.hpp"
#include "kinedispatch/profiler.hpp"

namespace fs = std::filesystem;
namespace kd = kinedispatch;
using kd::io::Json;

namespace {

enum ExitCode : int { kOk = 0, kInternal = 1, kUsage = 2, kInput = 3, kContract = 4 };

int fail(std::string_view kind, const std::string& message, int code) {
  Json err{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
  std::cerr << err.dump() << '\n';
  return code;
}

struct Common {
  std::optional<std::string> env_path;
  std::uint64_t seed_base = 0;

  kd::EnvConfig env() const {
    return env_path ? kd::io::env_config_from_json(kd::io::read_json_file(*env_path))
                    : kd::EnvConfig{};
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--env", c.env_path, "Environment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed-base", c.seed_base, "First seed of the range");
}

std::string num(double v) { return Json(v).dump(); }

void print_summary(const Json& j) { std::cout << j.dump(2) << '\n'; }

// --- calibrate --------------------------------------------------------------

struct CalibrateArgs {
  Common common;
  std::size_t seeds = 0;
  std::string out;
  double d_acc = 1.0;
  double eta = 0.01;
  std::size_t bins = 32;
  std::size_t min_per_bin = 50;
  double theta_fp = 0.5;
  double lambda = 0.5;
  int k = 3;
  std::string statistic = "mean";
  std::optional<std::string> samples_in;
  std::optional<std::string> samples_out;
};

int run_calibrate(const CalibrateArgs& a) {
  kd::HarnessConfig cfg;
  cfg.env = a.common.env();
  cfg.table.d_acc = a.d_acc;
  cfg.table.eta = a.eta;
  cfg.table.theta_fp = a.theta_fp;
  cfg.table.lambda = a.lambda;
  cfg.table.K = a.k;
  cfg.table.validate();

  kd::CalibrationOptions opts;
  opts.bins = a.bins;
  opts.min_per_bin = a.min_per_bin;
  opts.statistic = a.statistic == "p90" ? kd::BinStatistic::kP90 : kd::BinStatistic::kMean;

  std::vector<kd::CalibrationSample> samples;
  Json provenance;
  if (a.samples_in) {
    samples = kd::io::read_samples(*a.samples_in);
    provenance = {{"samples_file", *a.samples_in}};
  } else {
    if (a.seeds == 0) throw kd::InvalidInput("--seeds must be positive");
    const auto seeds = kd::seed_range(a.common.seed_base, a.seeds);
    auto col = kd::collect_calibration(seeds, cfg);
    for (auto s : col.excluded_seeds) {
      std::cerr << "warning: seed " << s << " failed at full precision; excluded\n";
    }
    samples = std::move(col.samples);
    provenance = {{"seeds_used", col.used_seeds.size()},
                  {"seeds_excluded", col.excluded_seeds}};
  }
  if (a.samples_out) {
    std::vector<Json> lines;
    lines.reserve(samples.size());
    for (const auto& s : samples) lines.push_back(kd::io::to_json(s));
    kd::io::write_text_file(*a.samples_out, kd::io::to_jsonl(lines));
  }

  const auto result = kd::derive_thresholds(samples, cfg.table, opts);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  kd::io::write_json_file(a.out, kd::io::to_json(result.table));

  const auto audit = kd::validate_table(result.table, samples, opts);
  Json summary{{"command", "calibrate"},
               {"out", a.out},
               {"samples", samples.size()},
               {"theta_24", *result.table.theta_24},
               {"theta_48", *result.table.theta_48},
               {"theta_fp", result.table.theta_fp},
               {"sparse_bins", result.sparse_bins},
               {"bound_satisfaction", audit.satisfaction},
               {"all_bins_within_bound", audit.all_bins_within_bound()}};
  summary.update(provenance);
  print_summary(summary);
  return kOk;
}

// --- profile ----------------------------------------------------------------

struct ProfileArgs {
  Common common;
  std::size_t seeds = 0;
  int bits = 2;
  std::string out;
};

int run_profile(const ProfileArgs& a) {
  const kd::BitWidth bits = kd::bit_width_from_int(a.bits);
  if (kd::is_full_precision(bits)) throw kd::InvalidInput("--bits must be 2, 4 or 8");
  if (a.seeds == 0) throw kd::InvalidInput("--seeds must be positive");
  const auto env = a.common.env();
  const auto run = kd::profile(kd::seed_range(a.common.seed_base, a.seeds), bits, env);
  for (const auto& d : run.diagnostics) std::cerr << "warning: " << d << '\n';

  std::vector<Json> lines;
  lines.reserve(run.records.size());
  for (const auto& r : run.records) lines.push_back(kd::io::to_json(r));
  kd::io::write_text_file(a.out, kd::io::to_jsonl(lines));

  std::map<std::string, std::pair<double, std::size_t>> by_phase;
  for (const auto& r : run.records) {
    auto& [sum, n] = by_phase[std::string(kd::phase_name(r.phase))];
    sum += r.terminal_deviation;
    ++n;
  }
  Json phases = Json::object();
  for (const auto& [name, v] : by_phase) phases[name] = v.first / static_cast<double>(v.second);

  Json summary{{"command", "profile"},
               {"out", a.out},
               {"bits", a.bits},
               {"records", run.records.size()},
               {"skipped_seeds", run.skipped_seeds},
               {"mean_D_T_by_phase", phases}};
  const auto usable = std::count_if(run.records.begin(), run.records.end(),
                                    [](const kd::ProfileRecord& r) { return !r.excluded; });
  if (static_cast<std::size_t>(usable) >= kd::kMinCorrelationRecords) {
    const auto corr = kd::proxy_correlation(run.records);
    summary["r_M"] = corr.r_motion;
    summary["r_J"] = corr.r_jerk;
  } else {
    summary["r_M"] = nullptr;
    summary["r_J"] = nullptr;
  }
  print_summary(summary);
  return kOk;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::size_t seeds = 0;
  std::string mode;
  std::optional<std::string> table;
  std::optional<double> theta_fp;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  const kd::RunMode mode = kd::RunMode::parse(a.mode);
  if (a.seeds == 0) throw kd::InvalidInput("--seeds must be positive");
  kd::HarnessConfig cfg;
  cfg.env = a.common.env();
  if (a.table) {
    cfg.table = kd::io::table_from_json(kd::io::read_json_file(*a.table));
  } else if (mode.dynamic) {
    throw kd::InvalidInput("dynamic mode needs --table");
  }
  if (a.theta_fp) cfg.table = cfg.table.with_theta_fp(*a.theta_fp);
  if (mode.dynamic && !cfg.table.calibrated()) {
    throw kd::InvalidInput("table is not calibrated (theta_24/theta_48 are null)");
  }

  const auto seeds = kd::seed_range(a.common.seed_base, a.seeds);
  std::vector<kd::EpisodeTrace> episodes;
  episodes.reserve(seeds.size());
  for (auto s : seeds) episodes.push_back(kd::simulate_episode(s, mode, cfg));
  kd::io::write_text_file(a.out, kd::io::to_jsonl(mode, cfg.table, episodes, a.common.seed_base));

  const auto m = kd::summarize(mode.name(), cfg.table.theta_fp, episodes);
  Json summary = kd::io::to_json(m);
  summary["command"] = "simulate";
  summary["out"] = a.out;
  print_summary(summary);
  return kOk;
}

// --- dispatch ---------------------------------------------------------------

struct DispatchArgs {
  std::string log;
  std::string table;
  std::string out;
};

int run_dispatch(const DispatchArgs& a) {
  const auto table = kd::io::table_from_json(kd::io::read_json_file(a.table));
  if (!table.calibrated()) throw kd::InvalidInput("table is not calibrated (theta_24/theta_48 are null)");
  const auto actions = kd::io::read_action_log(a.log);
  const auto schedule = kd::replay_dispatch(actions, table);
  std::vector<Json> lines;
  lines.reserve(schedule.size());
  std::array<std::size_t, 4> hist{0, 0, 0, 0};
  for (const auto& e : schedule) {
    lines.push_back(kd::io::to_json(e));
    ++hist[kd::bit_index(e.active)];
  }
  kd::io::write_text_file(a.out, kd::io::to_jsonl(lines));

  Json counts = Json::object();
  for (kd::BitWidth b : kd::kAllBitWidths) counts[std::to_string(kd::bits_of(b))] = hist[kd::bit_index(b)];
  print_summary({{"command", "dispatch"}, {"out", a.out}, {"steps", schedule.size()}, {"active_bits", counts}});
  return kOk;
}

// --- report -----------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out;
  std::optional<std::string> csv_prefix;
};

int run_report(const ReportArgs& a) {
  kd::SuiteReport report;
  std::vector<kd::io::RunLog> logs;
  logs.reserve(a.runs.size());
  for (const auto& path : a.runs) {
    logs.push_back(kd::io::read_run_log(path));
    const auto& log = logs.back();
    if (logs.size() == 1) {
      report.cost_model = log.cost_model;
    } else if (log.cost_model.cost != report.cost_model.cost) {
      throw kd::InvalidInput(path + ": cost model differs from '" + a.runs.front() + "'");
    }
    report.modes.push_back(kd::summarize(log.mode, log.theta_fp, log.episodes));
  }
  kd::attach_speedups(report);

  Json j = kd::io::to_json(report);
  j["runs"] = a.runs;
  kd::io::write_json_file(a.out, j);

  const fs::path prefix = a.csv_prefix ? fs::path(*a.csv_prefix)
                                       : fs::path(a.out).replace_extension();
  const std::string summary_csv = prefix.string() + "_summary.csv";
  const std::string steps_csv = prefix.string() + "_steps.csv";

  std::ostringstream s;
  s << "run,mode,theta_fp,episodes,success_rate,mean_cost,speedup,mean_steps,"
       "mean_terminal_deviation,frac_2,frac_4,frac_8,frac_16\n";
  for (std::size_t i = 0; i < report.modes.size(); ++i) {
    const auto& m = report.modes[i];
    s << i << ',' << m.mode << ',' << num(m.theta_fp) << ',' << m.episodes << ','
      << num(m.success_rate) << ',' << num(m.mean_cost) << ','
      << (m.speedup ? num(*m.speedup) : std::string()) << ',' << num(m.mean_steps) << ','
      << num(m.mean_deviation);
    for (double f : m.bits_fraction) s << ',' << num(f);
    s << '\n';
  }
  kd::io::write_text_file(summary_csv, s.str());

  std::ostringstream t;
  t << "run,mode,theta_fp,seed,t,phase,S,M_bar,J_bar,target,bits,cost\n";
  for (std::size_t i = 0; i < logs.size(); ++i) {
    for (const auto& e : logs[i].episodes) {
      for (const auto& r : e.records) {
        t << i << ',' << logs[i].mode << ',' << num(logs[i].theta_fp) << ',' << e.seed << ','
          << r.t << ',' << kd::phase_name(r.phase) << ',' << num(r.sensitivity) << ','
          << num(r.motion_mean) << ',' << num(r.jerk_mean) << ',' << kd::bits_of(r.target) << ','
          << kd::bits_of(r.bits) << ',' << num(r.cost) << '\n';
      }
    }
  }
  kd::io::write_text_file(steps_csv, t.str());

  std::cout << report.to_text();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinematics-driven mixed-precision dispatch toolkit"};
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Derive precision thresholds from full-precision rollouts");
  add_common(c, cal.common);
  c->add_option("--seeds", cal.seeds, "Number of calibration seeds");
  c->add_option("--out", cal.out, "Output table (JSON)")->required();
  c->add_option("--d-acc", cal.d_acc, "Terminal accuracy budget")->check(CLI::PositiveNumber);
  c->add_option("--eta", cal.eta, "Bound regularizer")->check(CLI::PositiveNumber);
  c->add_option("--bins", cal.bins, "Sensitivity bins")->check(CLI::PositiveNumber);
  c->add_option("--min-per-bin", cal.min_per_bin, "Samples for a bin to count as occupied");
  c->add_option("--theta-fp", cal.theta_fp, "Full-precision fallback threshold");
  c->add_option("--lambda", cal.lambda, "Motion/jerk fusion weight");
  c->add_option("--k", cal.k, "Downgrade delay window");
  c->add_option("--statistic", cal.statistic, "Per-bin error statistic")
      ->check(CLI::IsMember({"mean", "p90"}));
  c->add_option("--samples", cal.samples_in, "Use a recorded sample file instead of rollouts")
      ->check(CLI::ExistingFile);
  c->add_option("--samples-out", cal.samples_out, "Also write the calibration samples (JSONL)");

  ProfileArgs prof;
  auto* p = app.add_subcommand("profile", "Single-step low-bit injection sweep");
  add_common(p, prof.common);
  p->add_option("--seeds", prof.seeds, "Number of seeds")->required();
  p->add_option("--bits", prof.bits, "Injected bit width (2, 4 or 8)")->required();
  p->add_option("--out", prof.out, "Output records (JSONL)")->required();

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Closed-loop rollouts in one precision mode");
  add_common(s, sim.common);
  s->add_option("--seeds", sim.seeds, "Number of seeds")->required();
  s->add_option("--mode", sim.mode, "static:16|static:8|static:4|static:2|dynamic")->required();
  s->add_option("--table", sim.table, "Calibration table (JSON)")->check(CLI::ExistingFile);
  s->add_option("--theta-fp", sim.theta_fp, "Override the table's fallback threshold");
  s->add_option("--out", sim.out, "Output run log (JSONL)")->required();

  DispatchArgs dis;
  auto* d = app.add_subcommand("dispatch", "Replay an action log through the dispatcher");
  d->add_option("--log", dis.log, "Action log (JSONL)")->required()->check(CLI::ExistingFile);
  d->add_option("--table", dis.table, "Calibration table (JSON)")->required()->check(CLI::ExistingFile);
  d->add_option("--out", dis.out, "Output schedule (JSONL)")->required();

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Summarize run logs into JSON and CSV");
  r->add_option("--runs", rep.runs, "Run logs from simulate")->required()->check(CLI::ExistingFile);
  r->add_option("--out", rep.out, "Output report (JSON)")->required();
  r->add_option("--csv-prefix", rep.csv_prefix,
                "Prefix for <prefix>_summary.csv and <prefix>_steps.csv (default: --out without extension)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kUsage);
  }

  try {
    if (c->parsed()) {
      if (!cal.samples_in && cal.seeds == 0) throw kd::InvalidInput("calibrate needs --seeds or --samples");
      return run_calibrate(cal);
    }
    if (p->parsed()) return run_profile(prof);
    if (s->parsed()) return run_simulate(sim);
    if (d->parsed()) return run_dispatch(dis);
    if (r->parsed()) return run_report(rep);
  } catch (const kd::InvalidInput& e) {
    return fail("invalid_input", e.what(), kInput);
  } catch (const kd::ContractViolation& e) {
    return fail("contract_violation", e.what(), kContract);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kInternal);
  }
  return fail("usage", "no subcommand given", kUsage);
}
