#include "kinedispatch/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace kinedispatch {

std::string RunMode::name() const {
  return dynamic ? "dynamic" : "static:" + std::to_string(bits_of(bits));
}

RunMode RunMode::parse(std::string_view text) {
  if (text == "dynamic") return dynamic_dispatch();
  constexpr std::string_view prefix = "static:";
  if (text.substr(0, prefix.size()) == prefix) {
    const std::string digits(text.substr(prefix.size()));
    if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos &&
        digits.size() <= 2) {
      return static_bits(bit_width_from_int(std::stoi(digits)));
    }
  }
  throw InvalidInput("unknown mode '" + std::string(text) +
                     "' (expected static:16|static:8|static:4|static:2|dynamic)");
}

EpisodeTrace simulate_episode(std::uint64_t seed, const RunMode& mode, const HarnessConfig& cfg) {
  cfg.table.validate();
  std::optional<PrecisionScheduler> scheduler;
  std::optional<KinematicTracker> logger;
  if (mode.dynamic) {
    if (!cfg.table.calibrated()) {
      throw InvalidInput("dynamic mode requires a calibrated table (theta_24/theta_48 unset)");
    }
    scheduler.emplace(cfg.table);
  } else {
    logger.emplace(cfg.table.kinematics_config());
  }

  EpisodeTrace trace;
  trace.seed = seed;
  EnvState s = reset(seed, cfg.env);
  while (!episode_status(s, cfg.env).done) {
    TrajectoryRecord rec;
    rec.t = s.step_index;
    rec.phase = s.phase;
    if (scheduler) {
      const DispatchDecision d = scheduler->decide();
      rec.bits = d.active;
      rec.target = d.target;
      rec.warmup = d.warmup;
      rec.sensitivity = d.sensitivity;
      rec.motion_mean = d.motion_mean;
      rec.jerk_mean = d.jerk_mean;
    } else {
      const SensitivityState& k = logger->current();
      rec.bits = mode.bits;
      rec.target = mode.bits;
      rec.warmup = logger->warmup();
      rec.sensitivity = k.fused;
      rec.motion_mean = k.motion_mean;
      rec.jerk_mean = k.jerk_mean;
    }
    rec.action = policy_forward(s, rec.bits, cfg.env);
    rec.cost = cfg.table.cost_model(rec.bits);
    s = env_step(s, rec.action, cfg.env);
    if (scheduler) {
      scheduler->observe(rec.action);
    } else {
      logger->observe(rec.action);
    }
    trace.result.total_cost += rec.cost;
    trace.records.push_back(rec);
  }
  const EpisodeStatus st = episode_status(s, cfg.env);
  trace.result.success = st.success;
  trace.result.terminal_deviation = st.terminal_deviation;
  trace.result.steps = s.step_index;
  return trace;
}

const ModeSummary* SuiteReport::find(std::string_view mode) const {
  const auto it = std::find_if(modes.begin(), modes.end(),
                               [&](const ModeSummary& m) { return m.mode == mode; });
  return it == modes.end() ? nullptr : &*it;
}

std::string SuiteReport::to_text() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "cost model: 2=%.2f 4=%.2f 8=%.2f 16=%.2f\n",
                cost_model.cost[0], cost_model.cost[1], cost_model.cost[2], cost_model.cost[3]);
  os << line;
  std::snprintf(line, sizeof line, "%-10s %8s %6s %9s %10s %8s %8s %6s %6s %6s %6s\n", "mode",
                "theta_fp", "eps", "success%", "mean_cost", "speedup", "steps", "b2", "b4", "b8",
                "b16");
  os << line;
  for (const ModeSummary& m : modes) {
    char speed[32];
    if (m.speedup) {
      std::snprintf(speed, sizeof speed, "%.2fx", *m.speedup);
    } else {
      std::snprintf(speed, sizeof speed, "-");
    }
    std::snprintf(line, sizeof line,
                  "%-10s %8.3f %6zu %9.1f %10.3f %8s %8.1f %6.3f %6.3f %6.3f %6.3f\n",
                  m.mode.c_str(), m.theta_fp, m.episodes, m.success_rate, m.mean_cost, speed,
                  m.mean_steps, m.bits_fraction[0], m.bits_fraction[1], m.bits_fraction[2],
                  m.bits_fraction[3]);
    os << line;
  }
  return os.str();
}

ModeSummary summarize(std::string mode, double theta_fp, std::span<const EpisodeTrace> episodes) {
  ModeSummary m;
  m.mode = std::move(mode);
  m.theta_fp = theta_fp;
  m.episodes = episodes.size();
  if (episodes.empty()) return m;
  std::array<std::size_t, 4> hist{0, 0, 0, 0};
  std::size_t steps = 0;
  for (const EpisodeTrace& e : episodes) {
    m.successes += e.result.success ? 1 : 0;
    m.mean_cost += e.result.total_cost;
    m.mean_deviation += e.result.terminal_deviation;
    steps += e.records.size();
    for (const TrajectoryRecord& r : e.records) ++hist[bit_index(r.bits)];
  }
  const auto n = static_cast<double>(episodes.size());
  m.success_rate = 100.0 * static_cast<double>(m.successes) / n;
  m.mean_cost /= n;
  m.mean_deviation /= n;
  m.mean_steps = static_cast<double>(steps) / n;
  if (steps > 0) {
    for (std::size_t i = 0; i < 4; ++i) {
      m.bits_fraction[i] = static_cast<double>(hist[i]) / static_cast<double>(steps);
    }
  }
  return m;
}

void attach_speedups(SuiteReport& report) {
  const ModeSummary* fp = report.find("static:16");
  if (fp == nullptr) return;
  const double base = fp->mean_cost;
  for (ModeSummary& m : report.modes) {
    if (m.mean_cost > 0.0) m.speedup = base / m.mean_cost;
  }
}

SuiteReport run_suite(std::span<const std::uint64_t> seeds, std::span<const RunMode> modes,
                      const HarnessConfig& cfg) {
  SuiteReport report;
  report.cost_model = cfg.table.cost_model;
  for (const RunMode& mode : modes) {
    std::vector<EpisodeTrace> episodes;
    episodes.reserve(seeds.size());
    for (std::uint64_t seed : seeds) episodes.push_back(simulate_episode(seed, mode, cfg));
    report.modes.push_back(summarize(mode.name(), cfg.table.theta_fp, episodes));
  }
  attach_speedups(report);
  return report;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = first + i;
  return seeds;
}

CalibrationCollection collect_calibration(std::span<const std::uint64_t> seeds,
                                          const HarnessConfig& cfg) {
  CalibrationCollection out;
  for (std::uint64_t seed : seeds) {
    KinematicTracker tracker(cfg.table.kinematics_config());
    std::vector<CalibrationSample> episode;
    EnvState s = reset(seed, cfg.env);
    while (!episode_status(s, cfg.env).done) {
      const Action reference = policy_forward(s, BitWidth::k16, cfg.env);
      CalibrationSample sample;
      for (BitWidth b : kQuantizedBitWidths) {
        sample.error[bit_index(b)] = action_error(policy_forward(s, b, cfg.env), reference);
      }
      sample.sensitivity = tracker.observe(reference).fused;
      episode.push_back(sample);
      s = env_step(s, reference, cfg.env);
    }
    if (episode_status(s, cfg.env).success) {
      out.samples.insert(out.samples.end(), episode.begin(), episode.end());
      out.used_seeds.push_back(seed);
    } else {
      out.excluded_seeds.push_back(seed);
    }
  }
  return out;
}

std::vector<ScheduleEntry> replay_dispatch(std::span<const Action> actions,
                                           const CalibrationTable& table) {
  PrecisionScheduler scheduler(table);
  std::vector<ScheduleEntry> schedule;
  schedule.reserve(actions.size());
  for (std::size_t t = 0; t < actions.size(); ++t) {
    const DispatchDecision d = scheduler.decide();
    schedule.push_back(ScheduleEntry{static_cast<int>(t), d.sensitivity, d.warmup, d.target,
                                     d.active});
    scheduler.observe(actions[t]);
  }
  return schedule;
}

}  // namespace kinedispatch
