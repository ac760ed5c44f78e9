#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "kinedispatch/calibration.hpp"
#include "kinedispatch/dispatcher.hpp"
#include "kinedispatch/harness.hpp"
#include "kinedispatch/io.hpp"
#include "kinedispatch/profiler.hpp"
#include "kinedispatch/quantcore.hpp"

namespace py = pybind11;
using namespace kinedispatch;
using io::Json;

namespace {

// Structured values cross the boundary as JSON text; the Python package
// converts them to and from dicts.

CalibrationTable table_arg(const std::string& text) {
  return text.empty() ? CalibrationTable{} : io::table_from_json(Json::parse(text));
}

EnvConfig env_arg(const std::string& text) {
  return text.empty() ? EnvConfig{} : io::env_config_from_json(Json::parse(text));
}

Action action_arg(const std::vector<double>& v) { return io::action_from_json(Json(v)); }

std::vector<Action> actions_arg(const std::vector<std::vector<double>>& v) {
  std::vector<Action> out;
  out.reserve(v.size());
  for (const auto& a : v) out.push_back(action_arg(a));
  return out;
}

Json decision_json(const DispatchDecision& d) {
  return Json{{"S", d.sensitivity},     {"M_bar", d.motion_mean},        {"J_bar", d.jerk_mean},
              {"warmup", d.warmup},     {"target", bits_of(d.target)}, {"active", bits_of(d.active)}};
}

class Scheduler {
 public:
  explicit Scheduler(const std::string& table) : impl_(table_arg(table)) {}
  std::string decide() { return decision_json(impl_.decide()).dump(); }
  void observe(const std::vector<double>& action) { impl_.observe(action_arg(action)); }
  std::string state() const { return io::state_to_json(impl_.tracker(), impl_.state()).dump(); }

 private:
  PrecisionScheduler impl_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Kinematics-driven mixed-precision dispatch";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_RuntimeError);

  m.def("fake_quant", [](const std::vector<double>& x, int bits) {
    return fake_quant(x, bit_width_from_int(bits));
  }, py::arg("x"), py::arg("bits"));

  m.def("affine_params", [](const std::vector<double>& x, int bits) {
    const QuantParams p = affine_params(x, bit_width_from_int(bits));
    return py::make_tuple(p.scale, p.zero_point);
  }, py::arg("x"), py::arg("bits"));

  m.def("action_error", [](const std::vector<double>& a, const std::vector<double>& b) {
    return action_error(action_arg(a), action_arg(b));
  }, py::arg("a_hat"), py::arg("a_star"));

  m.def("step_stateful", [](int counter, int active, int max_candidate, int target, int K) {
    DispatcherState s{counter, bit_width_from_int(active), bit_width_from_int(max_candidate)};
    const BitWidth a = step_stateful(s, bit_width_from_int(target), K);
    return py::make_tuple(bits_of(a), s.counter, bits_of(s.active), bits_of(s.max_candidate));
  }, py::arg("counter"), py::arg("active"), py::arg("max_candidate"), py::arg("target"), py::arg("K"));

  m.def("step_reference", [](const std::vector<int>& targets, int prev_active, int K) {
    std::vector<BitWidth> t;
    for (int b : targets) t.push_back(bit_width_from_int(b));
    return bits_of(step_reference(t, bit_width_from_int(prev_active), K));
  }, py::arg("targets"), py::arg("prev_active"), py::arg("K"));

  m.def("default_table", [] { return io::to_json(CalibrationTable{}).dump(); });
  m.def("default_env", [] { return io::to_json(EnvConfig{}).dump(); });

  m.def("collect_and_calibrate", [](const std::vector<std::uint64_t>& seeds, const std::string& table,
                                    const std::string& env, std::size_t bins) {
    HarnessConfig cfg{env_arg(env), table_arg(table)};
    const auto data = collect_calibration(seeds, cfg);
    CalibrationOptions opt;
    opt.bins = bins;
    const auto r = derive_thresholds(data.samples, cfg.table, opt);
    return py::make_tuple(io::to_json(r.table).dump(), r.warnings, data.excluded_seeds);
  }, py::arg("seeds"), py::arg("table"), py::arg("env"), py::arg("bins") = 32);

  m.def("derive_thresholds", [](const std::vector<std::array<double, 4>>& samples,
                                const std::string& table, std::size_t bins) {
    std::vector<CalibrationSample> s;
    for (const auto& r : samples) s.push_back({r[0], {r[1], r[2], r[3]}});
    CalibrationOptions opt;
    opt.bins = bins;
    const auto r = derive_thresholds(s, table_arg(table), opt);
    return py::make_tuple(io::to_json(r.table).dump(), r.warnings);
  }, py::arg("samples"), py::arg("table"), py::arg("bins") = 32);

  m.def("simulate", [](std::uint64_t seed, const std::string& mode, const std::string& table,
                       const std::string& env) {
    const auto tr = simulate_episode(seed, RunMode::parse(mode), {env_arg(env), table_arg(table)});
    Json records = Json::array();
    for (const auto& r : tr.records) records.push_back(io::to_json(r, seed));
    return Json{{"result", io::to_json(tr.result, seed)}, {"records", records}}.dump();
  }, py::arg("seed"), py::arg("mode"), py::arg("table"), py::arg("env"));

  m.def("run_suite", [](const std::vector<std::uint64_t>& seeds, const std::vector<std::string>& modes,
                        const std::string& table, const std::string& env) {
    std::vector<RunMode> parsed;
    for (const auto& s : modes) parsed.push_back(RunMode::parse(s));
    const auto rep = run_suite(seeds, parsed, {env_arg(env), table_arg(table)});
    return py::make_tuple(io::to_json(rep).dump(), rep.to_text());
  }, py::arg("seeds"), py::arg("modes"), py::arg("table"), py::arg("env"));

  m.def("profile", [](const std::vector<std::uint64_t>& seeds, int bits, const std::string& env) {
    const auto run = profile(seeds, bit_width_from_int(bits), env_arg(env));
    Json records = Json::array();
    for (const auto& r : run.records) records.push_back(io::to_json(r));
    double r_m = 0.0, r_j = 0.0;
    bool have_r = false;
    try {
      const auto c = proxy_correlation(run.records);
      r_m = c.r_motion;
      r_j = c.r_jerk;
      have_r = true;
    } catch (const InvalidInput&) {
    }
    Json out{{"records", records}, {"skipped_seeds", run.skipped_seeds}, {"diagnostics", run.diagnostics}};
    out["r_M"] = have_r ? Json(r_m) : Json(nullptr);
    out["r_J"] = have_r ? Json(r_j) : Json(nullptr);
    return out.dump();
  }, py::arg("seeds"), py::arg("bits"), py::arg("env"));

  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(x, y);
  }, py::arg("x"), py::arg("y"));

  m.def("replay_dispatch", [](const std::vector<std::vector<double>>& actions, const std::string& table) {
    const auto schedule = replay_dispatch(actions_arg(actions), table_arg(table));
    Json out = Json::array();
    for (const auto& e : schedule) out.push_back(io::to_json(e));
    return out.dump();
  }, py::arg("actions"), py::arg("table"));

  py::class_<Scheduler>(m, "_Scheduler")
      .def(py::init<const std::string&>())
      .def("decide", &Scheduler::decide)
      .def("observe", &Scheduler::observe)
      .def("state", &Scheduler::state);
}
