#include "kinedispatch/io.hpp"

#include <fstream>
#include <set>
#include <span>
#include <sstream>

namespace kinedispatch::io {
namespace {

template <typename T>
T get(const Json& j, const char* key) {
  if (!j.contains(key)) {
    throw InvalidInput(std::string("missing key '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::optional<double> optional_number(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get<double>(j, key);
}

Json vec3(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

Vec3 vec3_from(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw InvalidInput(std::string(what) + ": expected an array of 3 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json sensitivity_json(const SensitivityState& s) {
  return Json{{"M", s.motion},        {"J", s.jerk},     {"M_bar", s.motion_mean},
              {"J_bar", s.jerk_mean}, {"S", s.fused},    {"mu_max", s.mu_max},
              {"nu_max", s.nu_max},   {"warmup", s.warmup}};
}

SensitivityState sensitivity_from(const Json& j) {
  SensitivityState s;
  s.motion = get<double>(j, "M");
  s.jerk = get<double>(j, "J");
  s.motion_mean = get<double>(j, "M_bar");
  s.jerk_mean = get<double>(j, "J_bar");
  s.fused = get<double>(j, "S");
  s.mu_max = get<double>(j, "mu_max");
  s.nu_max = get<double>(j, "nu_max");
  s.warmup = get<bool>(j, "warmup");
  return s;
}

}  // namespace

Json to_json(const CostModel& c) {
  Json j = Json::object();
  for (BitWidth b : kAllBitWidths) j[std::to_string(bits_of(b))] = c(b);
  return j;
}

CostModel cost_model_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidInput("cost_model must be an object keyed by bit-width");
  CostModel c;
  for (const auto& [key, value] : j.items()) {
    int bits = 0;
    try {
      bits = std::stoi(key);
    } catch (const std::exception&) {
      throw InvalidInput("cost_model key '" + key + "' is not a bit-width");
    }
    c.at(bit_width_from_int(bits)) = value.get<double>();
  }
  c.validate();
  return c;
}

Json to_json(const CalibrationTable& t) {
  Json j;
  j["theta_24"] = t.theta_24 ? Json(*t.theta_24) : Json(nullptr);
  j["theta_48"] = t.theta_48 ? Json(*t.theta_48) : Json(nullptr);
  j["theta_fp"] = t.theta_fp;
  j["lambda"] = t.lambda;
  j["K"] = t.K;
  j["D_acc"] = t.d_acc;
  j["eta"] = t.eta;
  j["W_macro"] = t.w_macro;
  j["W_micro"] = t.w_micro;
  j["H"] = t.history;
  j["cost_model"] = to_json(t.cost_model);
  return j;
}

CalibrationTable table_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidInput("calibration table must be a JSON object");
  static const std::set<std::string> known = {"theta_24", "theta_48", "theta_fp", "lambda",
                                              "K",        "D_acc",    "eta",      "W_macro",
                                              "W_micro",  "H",        "cost_model"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw InvalidInput("calibration table: unknown key '" + key + "'");
  }
  CalibrationTable t;
  t.theta_24 = optional_number(j, "theta_24");
  t.theta_48 = optional_number(j, "theta_48");
  t.theta_fp = get<double>(j, "theta_fp");
  t.lambda = get<double>(j, "lambda");
  t.K = get<int>(j, "K");
  t.d_acc = get<double>(j, "D_acc");
  t.eta = get<double>(j, "eta");
  t.w_macro = get<std::size_t>(j, "W_macro");
  t.w_micro = get<std::size_t>(j, "W_micro");
  t.history = get<std::size_t>(j, "H");
  t.cost_model = cost_model_from_json(j.at("cost_model"));
  t.validate();
  return t;
}

#define KD_ENV_FIELDS(X)                                                                    \
  X(workspace_lo) X(workspace_hi) X(max_step_translation) X(grasp_radius)                   \
  X(success_tolerance) X(max_steps) X(table_height) X(start_height) X(min_separation)       \
  X(hover_height) X(handoff_radius) X(transit_speed) X(transit_slow_radius) X(fine_speed)   \
  X(fine_slow_radius) X(center_tolerance) X(center_budget) X(commit_stroke) X(place_stroke) \
  X(commit_speed) X(commit_budget) X(grasp_steps) X(grasp_budget) X(z_tolerance)            \
  X(dither_amplitude) X(rot_scale) X(yaw_gain)

Json to_json(const EnvConfig& c) {
  Json j;
#define KD_PUT(name) j[#name] = c.name;
  KD_ENV_FIELDS(KD_PUT)
#undef KD_PUT
  return j;
}

EnvConfig env_config_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidInput("environment config must be a JSON object");
  EnvConfig c;
  std::set<std::string> seen;
#define KD_GET(name)                                                    \
  if (j.contains(#name)) {                                              \
    c.name = get<decltype(c.name)>(j, #name);                           \
    seen.insert(#name);                                                 \
  }
  KD_ENV_FIELDS(KD_GET)
#undef KD_GET
  for (const auto& [key, value] : j.items()) {
    if (!seen.contains(key)) throw InvalidInput("environment config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

#undef KD_ENV_FIELDS

Json to_json(const Action& a) {
  const auto v = a.flat();
  return Json(std::vector<double>(v.begin(), v.end()));
}

Action action_from_json(const Json& j) {
  if (j.is_object()) {
    if (j.contains("xyz")) {
      Action a;
      a.xyz = vec3_from(j.at("xyz"), "xyz");
      a.rot = vec3_from(j.at("rot"), "rot");
      a.gripper = get<double>(j, "gripper");
      validate_action(a);
      return a;
    }
    throw InvalidInput("action object needs xyz/rot/gripper");
  }
  if (!j.is_array() || j.size() != Action::kDim) {
    throw InvalidInput("action must be an array of 7 numbers");
  }
  std::array<double, Action::kDim> v{};
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!j[i].is_number()) throw InvalidInput("action component " + std::to_string(i) + " is not a number");
    v[i] = j[i].get<double>();
  }
  const Action a = Action::from_flat(v);
  validate_action(a);
  return a;
}

Json to_json(const TrajectoryRecord& r, std::uint64_t seed) {
  return Json{{"type", "step"},
              {"seed", seed},
              {"t", r.t},
              {"phase", phase_name(r.phase)},
              {"action", to_json(r.action)},
              {"bits", bits_of(r.bits)},
              {"target", bits_of(r.target)},
              {"warmup", r.warmup},
              {"S", r.sensitivity},
              {"M_bar", r.motion_mean},
              {"J_bar", r.jerk_mean},
              {"cost", r.cost}};
}

TrajectoryRecord trajectory_record_from_json(const Json& j) {
  TrajectoryRecord r;
  r.t = get<int>(j, "t");
  r.phase = phase_from_name(get<std::string>(j, "phase"));
  r.action = action_from_json(j.at("action"));
  r.bits = bit_width_from_int(get<int>(j, "bits"));
  r.target = bit_width_from_int(get<int>(j, "target"));
  r.warmup = get<bool>(j, "warmup");
  r.sensitivity = get<double>(j, "S");
  r.motion_mean = get<double>(j, "M_bar");
  r.jerk_mean = get<double>(j, "J_bar");
  r.cost = get<double>(j, "cost");
  return r;
}

EpisodeResult episode_result_from_json(const Json& j) {
  EpisodeResult r;
  r.success = get<bool>(j, "success");
  r.terminal_deviation = get<double>(j, "terminal_deviation");
  r.steps = get<int>(j, "steps");
  r.total_cost = get<double>(j, "total_cost");
  return r;
}

Json to_json(const EpisodeResult& r, std::uint64_t seed) {
  return Json{{"type", "episode"},
              {"seed", seed},
              {"success", r.success},
              {"terminal_deviation", r.terminal_deviation},
              {"steps", r.steps},
              {"total_cost", r.total_cost}};
}

Json to_json(const ProfileRecord& r) {
  return Json{{"seed", r.seed},
              {"t", r.t},
              {"phase", phase_name(r.phase)},
              {"e_t", r.action_error},
              {"D_T", r.terminal_deviation},
              {"success", r.success},
              {"s_t", r.excluded ? Json(nullptr) : Json(r.sensitivity)},
              {"M_bar", r.motion_mean},
              {"J_bar", r.jerk_mean},
              {"excluded", r.excluded}};
}

Json to_json(const CalibrationSample& s) {
  return Json{{"S", s.sensitivity}, {"e2", s.error[0]}, {"e4", s.error[1]}, {"e8", s.error[2]}};
}

CalibrationSample sample_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidInput("calibration sample must be an object");
  CalibrationSample s;
  s.sensitivity = get<double>(j, "S");
  s.error = {get<double>(j, "e2"), get<double>(j, "e4"), get<double>(j, "e8")};
  if (!(s.sensitivity >= 0.0)) throw InvalidInput("calibration sample: S must be >= 0");
  for (double e : s.error) {
    if (!(e >= 0.0)) throw InvalidInput("calibration sample: errors must be >= 0");
  }
  return s;
}

Json to_json(const ScheduleEntry& e) {
  return Json{{"t", e.t},
              {"S", e.sensitivity},
              {"warmup", e.warmup},
              {"target", bits_of(e.target)},
              {"active", bits_of(e.active)}};
}

Json to_json(const ModeSummary& m) {
  Json hist = Json::object();
  for (BitWidth b : kAllBitWidths) hist[std::to_string(bits_of(b))] = m.bits_fraction[bit_index(b)];
  return Json{{"mode", m.mode},
              {"theta_fp", m.theta_fp},
              {"episodes", m.episodes},
              {"successes", m.successes},
              {"success_rate", m.success_rate},
              {"mean_cost", m.mean_cost},
              {"mean_steps", m.mean_steps},
              {"mean_terminal_deviation", m.mean_deviation},
              {"speedup", m.speedup ? Json(*m.speedup) : Json(nullptr)},
              {"bits_fraction", hist}};
}

Json to_json(const SuiteReport& r) {
  Json modes = Json::array();
  for (const ModeSummary& m : r.modes) modes.push_back(to_json(m));
  return Json{{"cost_model", to_json(r.cost_model)}, {"modes", modes}};
}

Json state_to_json(const KinematicTracker& tracker, const DispatcherState& dispatcher) {
  const KinematicsConfig& c = tracker.config();
  Json t{{"W_macro", c.macro_window},
         {"W_micro", c.micro_window},
         {"H", c.history},
         {"lambda", c.lambda},
         {"J_cap", c.jerk_cap},
         {"magnitudes", tracker.magnitude_history()},
         {"jerks", tracker.jerk_history()},
         {"macro_window", tracker.macro_window()},
         {"micro_window", tracker.micro_window()},
         {"prev_rot", vec3(tracker.previous_rotation())},
         {"steps_seen", tracker.steps_seen()},
         {"state", sensitivity_json(tracker.current())}};
  Json d{{"counter", dispatcher.counter},
         {"active", bits_of(dispatcher.active)},
         {"max_candidate", bits_of(dispatcher.max_candidate)}};
  return Json{{"tracker", t}, {"dispatcher", d}};
}

std::pair<KinematicTracker, DispatcherState> state_from_json(const Json& j) {
  const Json& t = j.at("tracker");
  KinematicsConfig c;
  c.macro_window = get<std::size_t>(t, "W_macro");
  c.micro_window = get<std::size_t>(t, "W_micro");
  c.history = get<std::size_t>(t, "H");
  c.lambda = get<double>(t, "lambda");
  c.jerk_cap = get<double>(t, "J_cap");
  const auto mags = get<std::vector<double>>(t, "magnitudes");
  const auto jerks = get<std::vector<double>>(t, "jerks");
  const auto macro = get<std::vector<double>>(t, "macro_window");
  const auto micro = get<std::vector<double>>(t, "micro_window");
  KinematicTracker tracker = KinematicTracker::restore(
      c, mags, jerks, macro, micro, vec3_from(t.at("prev_rot"), "prev_rot"),
      get<std::size_t>(t, "steps_seen"), sensitivity_from(t.at("state")));
  const Json& d = j.at("dispatcher");
  DispatcherState ds;
  ds.counter = get<int>(d, "counter");
  ds.active = bit_width_from_int(get<int>(d, "active"));
  ds.max_candidate = bit_width_from_int(get<int>(d, "max_candidate"));
  return {std::move(tracker), ds};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw InvalidInput("write failed for '" + path.string() + "'");
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<Json> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw InvalidInput(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::string to_jsonl(const std::vector<Json>& lines) {
  std::string out;
  for (const Json& j : lines) {
    out += j.dump();
    out += '\n';
  }
  return out;
}

Json run_header(const RunMode& mode, const CalibrationTable& table, std::size_t seeds,
                std::uint64_t seed_base) {
  return Json{{"type", "run"},         {"mode", mode.name()}, {"theta_fp", table.theta_fp},
              {"seeds", seeds},        {"seed_base", seed_base},
              {"cost_model", to_json(table.cost_model)}};
}

std::string to_jsonl(const RunMode& mode, const CalibrationTable& table,
                     std::span<const EpisodeTrace> episodes, std::uint64_t seed_base) {
  std::string out = run_header(mode, table, episodes.size(), seed_base).dump() + "\n";
  for (const EpisodeTrace& e : episodes) {
    for (const TrajectoryRecord& r : e.records) out += to_json(r, e.seed).dump() + "\n";
    out += to_json(e.result, e.seed).dump() + "\n";
  }
  return out;
}

RunLog read_run_log(const std::filesystem::path& path) {
  const auto lines = read_jsonl(path);
  RunLog log;
  bool have_header = false;
  EpisodeTrace current;
  bool open = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const Json& j = lines[i];
    try {
      if (!j.is_object() || !j.contains("type")) throw InvalidInput("expected an object with a 'type'");
      const std::string type = get<std::string>(j, "type");
      if (type == "run") {
        if (have_header) throw InvalidInput("duplicate run header");
        log.mode = RunMode::parse(get<std::string>(j, "mode")).name();
        log.theta_fp = get<double>(j, "theta_fp");
        log.cost_model = cost_model_from_json(j.at("cost_model"));
        have_header = true;
        continue;
      }
      if (!have_header) throw InvalidInput("run header must come first");
      const auto seed = get<std::uint64_t>(j, "seed");
      if (open && seed != current.seed) throw InvalidInput("episode line missing for previous seed");
      if (!open) {
        current = EpisodeTrace{};
        current.seed = seed;
        open = true;
      }
      if (type == "step") {
        current.records.push_back(trajectory_record_from_json(j));
      } else if (type == "episode") {
        current.result = episode_result_from_json(j);
        if (current.result.steps != static_cast<int>(current.records.size())) {
          throw InvalidInput("episode step count does not match its records");
        }
        log.episodes.push_back(std::move(current));
        open = false;
      } else {
        throw InvalidInput("unknown record type '" + type + "'");
      }
    } catch (const std::exception& e) {
      throw InvalidInput(path.string() + ": record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (!have_header) throw InvalidInput(path.string() + ": no run header");
  if (open) throw InvalidInput(path.string() + ": truncated episode for seed " + std::to_string(current.seed));
  return log;
}

std::vector<CalibrationSample> read_samples(const std::filesystem::path& path) {
  const auto lines = read_jsonl(path);
  std::vector<CalibrationSample> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(sample_from_json(lines[i]));
    } catch (const std::exception& e) {
      throw InvalidInput(path.string() + ": record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Action> read_action_log(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<Action> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      if (j.is_object()) {
        if (j.contains("type") && j.at("type") != "step") continue;
        if (!j.contains("action")) throw InvalidInput("object has no 'action' field");
        out.push_back(action_from_json(j.at("action")));
      } else {
        out.push_back(action_from_json(j));
      }
    } catch (const std::exception& e) {
      throw InvalidInput(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace kinedispatch::io
