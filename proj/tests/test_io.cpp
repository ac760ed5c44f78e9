#include <doctest.h>

#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>

#include "kinedispatch/io.hpp"

using namespace kinedispatch;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kinedispatch_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

bool throws_with(const std::function<void()>& f, const std::string& needle) {
  try {
    f();
  } catch (const InvalidInput& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_CASE("calibration table round trip and exact keys") {
  CalibrationTable t;
  t.theta_24 = 0.1 + 0.2;  // not a short decimal
  t.theta_48 = 1.0 / 3.0;
  t.theta_fp = 0.5;
  t.K = 4;
  t.cost_model.at(BitWidth::k2) = 0.4;
  const auto j = io::to_json(t);
  std::set<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.insert(k);
  CHECK(keys == std::set<std::string>{"theta_24", "theta_48", "theta_fp", "lambda", "K", "D_acc",
                                      "eta", "W_macro", "W_micro", "H", "cost_model"});
  const auto back = io::table_from_json(io::Json::parse(j.dump()));
  CHECK(*back.theta_24 == *t.theta_24);
  CHECK(*back.theta_48 == *t.theta_48);
  CHECK(back.K == 4);
  CHECK(back.cost_model.cost == t.cost_model.cost);

  const auto blank = io::to_json(CalibrationTable{});
  CHECK(blank["theta_24"].is_null());
  CHECK_FALSE(io::table_from_json(blank).calibrated());

  auto bad = j;
  bad["extra"] = 1;
  CHECK(throws_with([&] { io::table_from_json(bad); }, "extra"));
  bad = j;
  bad.erase("eta");
  CHECK(throws_with([&] { io::table_from_json(bad); }, "eta"));
  bad = j;
  bad["theta_24"] = 0.9;
  CHECK_THROWS_AS(io::table_from_json(bad), InvalidInput);
}

TEST_CASE("environment config round trip") {
  EnvConfig c;
  c.max_steps = 123;
  c.place_stroke = {-0.05, 0.01, -0.07};
  const auto back = io::env_config_from_json(io::Json::parse(io::to_json(c).dump()));
  CHECK(back.max_steps == 123);
  CHECK(back.place_stroke == c.place_stroke);
  CHECK(io::env_config_from_json(io::Json::object()).max_steps == EnvConfig{}.max_steps);
  CHECK(throws_with([] { io::env_config_from_json(io::Json{{"bogus", 1}}); }, "bogus"));
}

TEST_CASE("actions") {
  const Action a{{0.1, -0.2, 0.3}, {1e-17, 0.5, -0.5}, 1.0};
  CHECK(io::action_from_json(io::Json::parse(io::to_json(a).dump())) == a);
  CHECK_THROWS_AS(io::action_from_json(io::Json::array({1, 2, 3})), InvalidInput);
  CHECK(throws_with([] { io::action_from_json(io::Json::array({0, 0, "x", 0, 0, 0, 0})); },
                    "component 2"));
}

TEST_CASE("run log round trip is exact") {
  HarnessConfig cfg;
  std::vector<EpisodeTrace> episodes;
  for (std::uint64_t s = 5; s < 8; ++s) {
    episodes.push_back(simulate_episode(s, RunMode::static_bits(BitWidth::k4), cfg));
  }
  const auto path = scratch("run.jsonl");
  const auto text = io::to_jsonl(RunMode::static_bits(BitWidth::k4), cfg.table, episodes, 5);
  io::write_text_file(path, text);
  const auto log = io::read_run_log(path);
  CHECK(log.mode == "static:4");
  CHECK(log.theta_fp == cfg.table.theta_fp);
  REQUIRE(log.episodes.size() == episodes.size());
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto& a = episodes[e];
    const auto& b = log.episodes[e];
    CHECK(b.seed == a.seed);
    CHECK(b.result.total_cost == a.result.total_cost);
    CHECK(b.result.terminal_deviation == a.result.terminal_deviation);
    REQUIRE(b.records.size() == a.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      REQUIRE(b.records[i].action == a.records[i].action);
      REQUIRE(b.records[i].sensitivity == a.records[i].sensitivity);
      REQUIRE(b.records[i].bits == a.records[i].bits);
      REQUIRE(b.records[i].phase == a.records[i].phase);
    }
  }
  // The action-log reader takes step records from a run log directly.
  CHECK(io::read_action_log(path).size() == episodes[0].records.size() + episodes[1].records.size() +
                                                episodes[2].records.size());

  // Drop the last episode line: truncated.
  io::write_text_file(path, text.substr(0, text.rfind('{')));
  CHECK(throws_with([&] { io::read_run_log(path); }, "truncated"));
  io::write_text_file(path, text.substr(text.find('\n') + 1));
  CHECK(throws_with([&] { io::read_run_log(path); }, "record 1"));
}

TEST_CASE("jsonl errors name the line") {
  const auto path = scratch("bad.jsonl");
  io::write_text_file(path, "[0,0,0,0,0,0,0]\n\n[0,0,0,0,0,0,0]\n{not json\n");
  CHECK(throws_with([&] { io::read_jsonl(path); }, ":4:"));
  io::write_text_file(path, "[0,0,0,0,0,0,0]\n[0,0,0]\n");
  CHECK(throws_with([&] { io::read_action_log(path); }, ":2:"));
  CHECK(throws_with([&] { io::read_jsonl(scratch("missing.jsonl")); }, "cannot open"));
}

TEST_CASE("samples round trip") {
  const CalibrationSample s{0.123456789012345, {0.3, 0.2, 1e-5}};
  const auto back = io::sample_from_json(io::Json::parse(io::to_json(s).dump()));
  CHECK(back.sensitivity == s.sensitivity);
  CHECK(back.error == s.error);
  CHECK_THROWS_AS(io::sample_from_json(io::Json{{"S", -1.0}, {"e2", 0}, {"e4", 0}, {"e8", 0}}),
                  InvalidInput);
}

TEST_CASE("runtime state serialization is small and exact") {
  CalibrationTable t;
  t.theta_24 = 0.2;
  t.theta_48 = 0.35;
  PrecisionScheduler p(t);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int i = 0; i < 1000; ++i) {
    p.decide();
    Action a;
    for (auto& v : a.xyz) v = u(rng);
    for (auto& v : a.rot) v = u(rng);
    p.observe(a);
  }
  const std::string text = io::state_to_json(p.tracker(), p.state()).dump();
  MESSAGE("serialized state: " << text.size() << " bytes");
  CHECK(text.size() <= 64 * 1024);
  auto [tracker, state] = io::state_from_json(io::Json::parse(text));
  CHECK(state == p.state());
  CHECK(tracker.magnitude_history() == p.tracker().magnitude_history());
  PrecisionScheduler q(t);
  q.restore(tracker, state);
  Action a;
  a.xyz = {0.01, 0.0, 0.0};
  p.observe(a);
  q.observe(a);
  CHECK(p.decide().sensitivity == q.decide().sensitivity);
}
