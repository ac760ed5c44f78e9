#include "kinedispatch/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace kinedispatch {
namespace {

// Finishes the episode from `s` under full precision.
EnvState finish_full_precision(EnvState s, const EnvConfig& env) {
  while (!episode_status(s, env).done) {
    s = env_step(s, policy_forward(s, BitWidth::k16, env), env);
  }
  return s;
}

}  // namespace

BaselineOutcome rollout_baseline(std::uint64_t seed, const EnvConfig& env,
                                 const KinematicsConfig& kin) {
  BaselineTrace trace;
  trace.seed = seed;
  KinematicTracker tracker(kin);
  EnvState s = reset(seed, env);
  while (!episode_status(s, env).done) {
    const Action a = policy_forward(s, BitWidth::k16, env);
    trace.states.push_back(s);
    trace.actions.push_back(a);
    trace.kinematics.push_back(tracker.observe(a));
    s = env_step(s, a, env);
  }
  trace.states.push_back(s);
  trace.status = episode_status(s, env);

  BaselineOutcome out;
  if (!trace.status.success) {
    out.reason = "seed " + std::to_string(seed) + ": full-precision baseline failed (D_T=" +
                 std::to_string(trace.status.terminal_deviation) + ", steps=" +
                 std::to_string(s.step_index) + ")";
    return out;
  }
  out.trace = std::move(trace);
  return out;
}

Perturbation perturb_at(const BaselineTrace& baseline, int t, BitWidth bits, const EnvConfig& env) {
  if (t < 0 || static_cast<std::size_t>(t) >= baseline.actions.size()) {
    throw InvalidInput("perturb_at: step " + std::to_string(t) + " outside the baseline trace of " +
                       std::to_string(baseline.actions.size()) + " steps");
  }
  if (is_full_precision(bits)) {
    throw InvalidInput("perturb_at: injection needs a quantized bit-width");
  }
  const auto i = static_cast<std::size_t>(t);
  const EnvState& before = baseline.states[i];
  const Action injected = policy_forward(before, bits, env);
  const EnvState end = finish_full_precision(env_step(before, injected, env), env);
  const EpisodeStatus st = episode_status(end, env);
  return Perturbation{action_error(injected, baseline.actions[i]), st.terminal_deviation,
                      st.success};
}

Perturbation perturb_at(std::uint64_t seed, int t, BitWidth bits, const EnvConfig& env) {
  const BaselineOutcome base = rollout_baseline(seed, env);
  if (!base.trace) {
    throw InvalidInput("perturb_at: " + base.reason);
  }
  return perturb_at(*base.trace, t, bits, env);
}

std::vector<EnvState> perturbed_states(std::uint64_t seed, int t, BitWidth bits,
                                       const EnvConfig& env) {
  std::vector<EnvState> states;
  EnvState s = reset(seed, env);
  while (!episode_status(s, env).done) {
    states.push_back(s);
    const BitWidth b = s.step_index == t ? bits : BitWidth::k16;
    s = env_step(s, policy_forward(s, b, env), env);
  }
  states.push_back(s);
  return states;
}

ProfileRun profile(std::span<const std::uint64_t> seeds, BitWidth bits, const EnvConfig& env,
                   const KinematicsConfig& kin) {
  ProfileRun run;
  for (std::uint64_t seed : seeds) {
    const BaselineOutcome base = rollout_baseline(seed, env, kin);
    if (!base.trace) {
      run.skipped_seeds.push_back(seed);
      run.diagnostics.push_back(base.reason);
      continue;
    }
    const BaselineTrace& trace = *base.trace;
    for (std::size_t t = 0; t < trace.actions.size(); ++t) {
      const Perturbation p = perturb_at(trace, static_cast<int>(t), bits, env);
      ProfileRecord r;
      r.seed = seed;
      r.t = static_cast<int>(t);
      r.phase = trace.states[t].phase;
      r.action_error = p.action_error;
      r.terminal_deviation = p.terminal_deviation;
      r.success = p.success;
      r.excluded = p.action_error <= kMinActionError;
      r.sensitivity = r.excluded ? 0.0 : p.terminal_deviation / p.action_error;
      r.motion_mean = trace.kinematics[t].motion_mean;
      r.jerk_mean = trace.kinematics[t].jerk_mean;
      run.records.push_back(r);
    }
  }
  const auto included = std::count_if(run.records.begin(), run.records.end(),
                                      [](const ProfileRecord& r) { return !r.excluded; });
  if (!run.records.empty() && included == 0) {
    run.diagnostics.push_back("every profiled step had zero action error; no correlation input");
  }
  return run;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InvalidInput("pearson: input sizes differ");
  }
  const std::size_t n = x.size();
  if (n == 0) return 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ProxyCorrelation proxy_correlation(std::span<const ProfileRecord> records) {
  std::vector<double> m;
  std::vector<double> j;
  std::vector<double> log_s;
  for (const ProfileRecord& r : records) {
    if (r.excluded) continue;
    m.push_back(r.motion_mean);
    j.push_back(r.jerk_mean);
    log_s.push_back(std::log(r.sensitivity + kLogFloor));
  }
  if (log_s.size() < kMinCorrelationRecords) {
    throw InvalidInput("proxy_correlation: " + std::to_string(log_s.size()) +
                       " included records, need at least " +
                       std::to_string(kMinCorrelationRecords));
  }
  return ProxyCorrelation{pearson(m, log_s), pearson(j, log_s), log_s.size()};
}

std::vector<std::pair<std::uint64_t, ProxyCorrelation>> per_trajectory_correlation(
    std::span<const ProfileRecord> records, std::size_t min_records) {
  std::map<std::uint64_t, std::vector<ProfileRecord>> by_seed;
  for (const ProfileRecord& r : records) {
    if (!r.excluded) by_seed[r.seed].push_back(r);
  }
  std::vector<std::pair<std::uint64_t, ProxyCorrelation>> out;
  for (const auto& [seed, recs] : by_seed) {
    if (recs.size() < min_records) continue;
    std::vector<double> m, j, ls;
    for (const ProfileRecord& r : recs) {
      m.push_back(r.motion_mean);
      j.push_back(r.jerk_mean);
      ls.push_back(std::log(r.sensitivity + kLogFloor));
    }
    out.emplace_back(seed, ProxyCorrelation{pearson(m, ls), pearson(j, ls), recs.size()});
  }
  return out;
}

}  // namespace kinedispatch
