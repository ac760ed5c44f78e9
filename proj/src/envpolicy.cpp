#include "kinedispatch/envpolicy.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kinedispatch/quantcore.hpp"

namespace kinedispatch {
namespace {

// Feature layout.
constexpr std::size_t kDir = 0;       // 6: x+, x-, y+, y-, z+, z-
constexpr std::size_t kSpeed = 6;
constexpr std::size_t kCommit = 7;
constexpr std::size_t kRot = 8;       // 6: rx+, rx-, ry+, ry-, rz+, rz-
constexpr std::size_t kGripper = 14;
constexpr std::size_t kPhase = 15;    // 5: one-hot

double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

// Where the fine stages are heading: the object before the grasp, the goal after.
const Vec3& task_target(const EnvState& s) {
  return s.phase == Phase::kTransit || s.phase == Phase::kAlign ? s.object_pos : s.goal_pos;
}

const Vec3& stroke(const EnvState& s, const EnvConfig& cfg) {
  return s.phase == Phase::kTransit || s.phase == Phase::kAlign ? cfg.commit_stroke : cfg.place_stroke;
}

Vec3 pre_grasp(const EnvState& s, const EnvConfig& cfg) { return task_target(s) - stroke(s, cfg); }

Vec3 hover_point(const EnvState& s, const EnvConfig& cfg) {
  Vec3 p = pre_grasp(s, cfg);
  p[2] += cfg.hover_height;
  return p;
}

bool is_fine(const EnvState& s) {
  return s.phase == Phase::kAlign || s.phase == Phase::kGrasp ||
         (s.phase == Phase::kPlace && s.stage != Stage::kApproach);
}

// Height left to descend, expressed as distance along the commit stroke.
double stroke_remaining(const EnvState& s, const EnvConfig& cfg) {
  const Vec3& st = stroke(s, cfg);
  return std::max(0.0, s.ee_pos[2] - task_target(s)[2]) * norm(st) / -st[2];
}

void put_signed(std::array<double, kFeatureDim>& f, std::size_t at, double v) {
  f[at] = std::max(v, 0.0);
  f[at + 1] = std::max(-v, 0.0);
}

double get_signed(const std::array<double, kFeatureDim>& f, std::size_t at) {
  return f[at] - f[at + 1];
}

Vec3 clamp_to_workspace(const Vec3& p, const EnvConfig& cfg) {
  return {std::clamp(p[0], cfg.workspace_lo, cfg.workspace_hi),
          std::clamp(p[1], cfg.workspace_lo, cfg.workspace_hi),
          std::clamp(p[2], cfg.workspace_lo, cfg.workspace_hi)};
}

}  // namespace

std::string_view phase_name(Phase p) noexcept {
  switch (p) {
    case Phase::kTransit: return "Transit";
    case Phase::kAlign: return "Align";
    case Phase::kGrasp: return "Grasp";
    case Phase::kPlace: return "Place";
    case Phase::kDone: return "Done";
  }
  return "Done";
}

Phase phase_from_name(std::string_view name) {
  for (Phase p : {Phase::kTransit, Phase::kAlign, Phase::kGrasp, Phase::kPlace, Phase::kDone}) {
    if (phase_name(p) == name) return p;
  }
  throw InvalidInput("unknown phase '" + std::string(name) + "'");
}

void EnvConfig::validate() const {
  if (!(workspace_lo < workspace_hi)) throw InvalidInput("env: empty workspace");
  if (!(max_step_translation > 0.0) || !(grasp_radius > 0.0) || !(success_tolerance >= 0.0)) {
    throw InvalidInput("env: step clip and grasp radius must be positive");
  }
  if (max_steps <= 0 || center_budget <= 0 || commit_budget <= 0 || grasp_steps <= 0) {
    throw InvalidInput("env: step counts must be positive");
  }
  if (grasp_budget < grasp_steps) {
    throw InvalidInput("env: grasp budget must cover the nominal grasp length");
  }
  if (!(transit_slow_radius > 0.0) || !(fine_slow_radius > 0.0) || !(rot_scale > 0.0) ||
      !(hover_height > 0.0) || !(handoff_radius > 0.0) || !(commit_speed > 0.0) ||
      !(center_tolerance > 0.0)) {
    throw InvalidInput("env: controller normalizers must be positive");
  }
  if (!(commit_stroke[2] < 0.0) || !(place_stroke[2] < 0.0)) {
    throw InvalidInput("env: commit strokes must descend");
  }
  const double margin = 0.2;
  if (table_height - margin < workspace_lo || start_height > workspace_hi ||
      table_height - std::min(commit_stroke[2], place_stroke[2]) + hover_height > workspace_hi ||
      workspace_hi - workspace_lo <= 2.0 * margin + min_separation) {
    throw InvalidInput("env: task geometry does not fit inside the workspace");
  }
}

EnvState reset(std::uint64_t seed, const EnvConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const double margin = 0.2;
  std::uniform_real_distribution<double> coord(cfg.workspace_lo + margin,
                                               cfg.workspace_hi - margin);
  std::uniform_real_distribution<double> yaw(-0.5, 0.5);

  const auto planar = [&](double z) { return Vec3{coord(rng), coord(rng), z}; };
  const auto far_from = [&](const Vec3& anchor, double z) {
    Vec3 p = planar(z);
    for (int tries = 0; tries < 1000; ++tries) {
      if (std::hypot(p[0] - anchor[0], p[1] - anchor[1]) >= cfg.min_separation) break;
      p = planar(z);
    }
    return p;
  };

  EnvState s;
  s.rng_seed = seed;
  s.object_pos = planar(cfg.table_height);
  s.goal_pos = far_from(s.object_pos, cfg.table_height);
  s.ee_pos = far_from(s.object_pos, cfg.start_height);
  s.object_yaw = yaw(rng);
  return s;
}

EnvState env_step(const EnvState& s, const Action& a, const EnvConfig& cfg) {
  const auto flat = a.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (!std::isfinite(flat[i])) {
      throw InvalidInput("env_step: action component " + std::to_string(i) + " is not finite");
    }
  }
  EnvState n = s;
  Vec3 move = a.xyz;
  const double m = norm(move);
  if (m > cfg.max_step_translation) move = (cfg.max_step_translation / m) * move;
  n.ee_pos = clamp_to_workspace(s.ee_pos + move, cfg);
  n.ee_rot = s.ee_rot + a.rot;
  n.gripper = std::clamp(a.gripper, 0.0, 1.0);
  if (s.grasped) {
    n.object_pos = s.object_pos + (n.ee_pos - s.ee_pos);
  }
  n.step_index = s.step_index + 1;

  const auto enter = [&n](Phase p, Stage st) {
    n.phase = p;
    n.stage = st;
    n.phase_start = n.step_index;
    n.stage_start = n.step_index;
  };
  const auto advance = [&n](Stage st) {
    n.stage = st;
    n.stage_start = n.step_index;
  };
  const Vec3& target = task_target(n);
  const auto centred = [&] {
    return distance(n.ee_pos, pre_grasp(n, cfg)) <= cfg.center_tolerance ||
           n.stage_steps() >= cfg.center_budget;
  };
  const auto landed = [&] {
    return n.ee_pos[2] - target[2] <= cfg.z_tolerance || n.stage_steps() >= cfg.commit_budget;
  };
  switch (s.phase) {
    case Phase::kTransit:
      if (distance(n.ee_pos, hover_point(n, cfg)) <= cfg.handoff_radius) {
        enter(Phase::kAlign, Stage::kCenter);
      }
      break;
    case Phase::kAlign:
      if (n.stage == Stage::kCenter) {
        if (centred()) advance(Stage::kCommit);
      } else if (landed()) {
        enter(Phase::kGrasp, Stage::kApproach);
      }
      break;
    case Phase::kGrasp: {
      const bool closed = n.gripper >= 0.9;
      if (closed && !n.grasped && distance(n.ee_pos, n.object_pos) <= cfg.grasp_radius) {
        n.grasped = true;
      }
      if ((closed && n.phase_steps() >= cfg.grasp_steps) || n.phase_steps() >= cfg.grasp_budget) {
        enter(Phase::kPlace, Stage::kApproach);
      }
      break;
    }
    case Phase::kPlace:
      if (n.stage == Stage::kApproach) {
        if (distance(n.ee_pos, hover_point(n, cfg)) <= cfg.handoff_radius) {
          advance(Stage::kCenter);
        }
      } else if (n.stage == Stage::kCenter) {
        if (centred()) advance(Stage::kCommit);
      } else if (landed()) {
        n.grasped = false;
        enter(Phase::kDone, Stage::kApproach);
      }
      break;
    case Phase::kDone:
      break;
  }
  return n;
}

EpisodeStatus episode_status(const EnvState& s, const EnvConfig& cfg) {
  EpisodeStatus st;
  st.terminal_deviation = distance(s.object_pos, s.goal_pos);
  st.done = s.phase == Phase::kDone || s.step_index >= cfg.max_steps;
  st.success = s.phase == Phase::kDone && st.terminal_deviation <= cfg.success_tolerance;
  return st;
}

std::array<double, kFeatureDim> policy_features(const EnvState& s, const EnvConfig& cfg) {
  std::array<double, kFeatureDim> f{};
  Vec3 dir{0.0, 0.0, 0.0};
  double speed = 0.0;
  if (s.stage == Stage::kCommit) {
    // Blind stroke: fixed axis, only the remaining height is sensed.
    const Vec3& st = stroke(s, cfg);
    dir = (1.0 / norm(st)) * st;
    speed = std::min(1.0, stroke_remaining(s, cfg) / cfg.commit_speed);
    f[kCommit] = 1.0;
  } else if (s.phase != Phase::kGrasp) {
    const bool centring = s.stage == Stage::kCenter;
    const Vec3 err = (centring ? pre_grasp(s, cfg) : hover_point(s, cfg)) - s.ee_pos;
    const double dist = norm(err);
    if (dist > 0.0) dir = (1.0 / dist) * err;
    speed = std::min(1.0, dist / (centring ? cfg.fine_slow_radius : cfg.transit_slow_radius));
  }
  for (std::size_t i = 0; i < 3; ++i) put_signed(f, kDir + 2 * i, dir[i]);
  f[kSpeed] = speed;

  if (is_fine(s)) {
    const double sign = s.step_index % 2 == 0 ? 1.0 : -1.0;
    const Vec3 rot{cfg.dither_amplitude * sign, -cfg.dither_amplitude * sign,
                   cfg.yaw_gain * (s.object_yaw - s.ee_rot[2])};
    for (std::size_t i = 0; i < 3; ++i) {
      put_signed(f, kRot + 2 * i, std::clamp(rot[i] / cfg.rot_scale, -1.0, 1.0));
    }
  }

  if (s.phase == Phase::kGrasp || s.phase == Phase::kPlace) f[kGripper] = 1.0;
  f[kPhase + static_cast<std::size_t>(s.phase)] = 1.0;
  return f;
}

Action policy_readout(const std::array<double, kFeatureDim>& f, const EnvState& s,
                      const EnvConfig& cfg) {
  Action a;
  Vec3 dir{get_signed(f, kDir), get_signed(f, kDir + 2), get_signed(f, kDir + 4)};
  const double n = norm(dir);
  if (n > 0.0) dir = (1.0 / n) * dir;
  double step = cfg.transit_speed;
  if (f[kCommit] > 0.5) {
    step = cfg.commit_speed;
  } else if (is_fine(s)) {
    step = cfg.fine_speed;
  }
  a.xyz = (step * f[kSpeed]) * dir;
  a.rot = {cfg.rot_scale * get_signed(f, kRot), cfg.rot_scale * get_signed(f, kRot + 2),
           cfg.rot_scale * get_signed(f, kRot + 4)};
  a.gripper = std::clamp(f[kGripper], 0.0, 1.0);
  return a;
}

Action policy_forward(const EnvState& s, BitWidth bits, const EnvConfig& cfg) {
  if (s.phase == Phase::kDone) {
    throw ContractViolation("policy_forward: episode already finished");
  }
  auto f = policy_features(s, cfg);
  fake_quant_inplace(f, bits);
  return policy_readout(f, s, cfg);
}

}  // namespace kinedispatch
