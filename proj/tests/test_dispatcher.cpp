#include <doctest.h>

#include <random>
#include <vector>

#include "kinedispatch/dispatcher.hpp"

using namespace kinedispatch;

namespace {

CalibrationTable table(double t24, double t48, double tfp) {
  CalibrationTable t;
  t.theta_24 = t24;
  t.theta_48 = t48;
  t.theta_fp = tfp;
  return t;
}

std::vector<BitWidth> widths(std::initializer_list<int> v) {
  std::vector<BitWidth> out;
  for (int b : v) out.push_back(bit_width_from_int(b));
  return out;
}

std::vector<BitWidth> random_targets(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 3);
  // Sticky runs so downgrades actually commit.
  std::geometric_distribution<int> run(0.3);
  std::vector<BitWidth> out;
  while (out.size() < n) {
    const BitWidth b = kAllBitWidths[static_cast<std::size_t>(pick(rng))];
    for (int k = 0, len = 1 + run(rng); k < len && out.size() < n; ++k) out.push_back(b);
  }
  return out;
}

}  // namespace

TEST_CASE("bit width ordering and parsing") {
  CHECK(BitWidth::k2 < BitWidth::k4);
  CHECK(BitWidth::k4 < BitWidth::k8);
  CHECK(BitWidth::k8 < BitWidth::k16);
  CHECK(bit_width_from_int(8) == BitWidth::k8);
  CHECK_THROWS_AS(bit_width_from_int(3), InvalidInput);
  CHECK_THROWS_AS(bit_width_from_int(32), InvalidInput);
}

TEST_CASE("phi_lookup interval closure") {
  const auto t = table(0.1, 0.3, 0.5);
  CHECK(phi_lookup(0.1, t) == BitWidth::k2);
  CHECK(phi_lookup(0.0, t) == BitWidth::k2);
  CHECK(phi_lookup(0.31, t) == BitWidth::k8);
  CHECK(phi_lookup(0.3, t) == BitWidth::k4);
  CHECK(phi_lookup(0.2, t) == BitWidth::k4);
  CHECK(phi_lookup(0.5, t) == BitWidth::k8);
  CHECK_THROWS_AS(phi_lookup(0.51, t), ContractViolation);
  CHECK_THROWS_AS(phi_lookup(0.1, CalibrationTable{}), ContractViolation);
}

TEST_CASE("target_bits") {
  const auto t = table(0.1, 0.3, 0.5);
  CHECK(target_bits(0.6, t, false) == BitWidth::k16);
  CHECK(target_bits(0.5, t, false) == BitWidth::k8);
  CHECK(target_bits(0.0, t, true) == BitWidth::k16);
}

TEST_CASE("stateful golden trace") {
  DispatcherState s;
  std::vector<BitWidth> active;
  for (BitWidth b : widths({8, 4, 4, 4})) active.push_back(step_stateful(s, b, 3));
  CHECK(active == widths({16, 16, 8, 8}));
}

TEST_CASE("sliding-window golden trace") {
  ReferenceDispatcher r(3);
  std::vector<BitWidth> active;
  for (BitWidth b : widths({8, 4, 4, 4})) active.push_back(r.step(b));
  CHECK(active == widths({16, 16, 16, 4}));
}

TEST_CASE("stateful single-step cases") {
  DispatcherState s{1, BitWidth::k4, BitWidth::k4};
  CHECK(step_stateful(s, BitWidth::k16, 3) == BitWidth::k16);
  CHECK(s.counter == 0);
  CHECK(s.max_candidate == BitWidth::k16);

  DispatcherState f{0, BitWidth::k8, BitWidth::k8};
  for (int i = 0; i < 5; ++i) {
    CHECK(step_stateful(f, BitWidth::k8, 3) == BitWidth::k8);
    CHECK(f == DispatcherState{0, BitWidth::k8, BitWidth::k8});
  }

  DispatcherState k1;
  CHECK(step_stateful(k1, BitWidth::k2, 1) == BitWidth::k2);
}

TEST_CASE("reference single-step cases") {
  CHECK(step_reference(widths({4, 4, 4}), BitWidth::k8, 3) == BitWidth::k4);
  CHECK(step_reference(widths({2, 2, 16}), BitWidth::k8, 3) == BitWidth::k16);
  CHECK(step_reference(widths({8, 4, 4}), BitWidth::k8, 3) == BitWidth::k8);
  CHECK(step_reference(widths({4, 4}), BitWidth::k8, 3) == BitWidth::k8);  // short history holds
  CHECK(step_reference(widths({2, 8, 4, 4, 4}), BitWidth::k8, 3) == BitWidth::k4);
}

TEST_CASE("dispatcher properties over random targets") {
  const int K = 3;
  const auto targets = random_targets(99, 100000);
  DispatcherState s;
  ReferenceDispatcher ref(K);
  BitWidth prev_s = BitWidth::k16, prev_r = BitWidth::k16;
  long last_hold = -1;  // most recent step whose target reached the then-active width
  std::size_t co_commits = 0, divergent_steps = 0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const BitWidth b = targets[t];
    if (b >= prev_s) last_hold = static_cast<long>(t);
    const BitWidth a = step_stateful(s, b, K);
    const BitWidth r = ref.step(b);

    REQUIRE(a >= b);
    REQUIRE(r >= b);
    if (b > prev_s) REQUIRE(a == b);
    if (b > prev_r) REQUIRE(r == b);
    REQUIRE(s.counter >= 0);
    REQUIRE(s.counter < K);
    if (a < prev_s) REQUIRE(static_cast<long>(t) - last_hold >= K);
    if (a < prev_s && r < prev_r) {
      ++co_commits;
      REQUIRE(a >= r);
    }
    if (a != r) ++divergent_steps;
    prev_s = a;
    prev_r = r;
  }
  CHECK(co_commits > 0);
  MESSAGE("co-occurring downgrades: " << co_commits << ", steps where the two rules disagree: "
                                      << divergent_steps << " / " << targets.size());
}

TEST_CASE("fallback latch through the scheduler") {
  auto t = table(0.1, 0.3, 0.5);
  PrecisionScheduler p(t);
  CHECK(p.decide().active == BitWidth::k16);  // warmup
  Action still;
  for (int i = 0; i < 30; ++i) {
    p.decide();
    p.observe(still);  // zero motion: M̄ = 1, S = 0.5 → quantized branch at the boundary
  }
  auto d = p.decide();
  CHECK_FALSE(d.warmup);
  CHECK(d.sensitivity == doctest::Approx(0.5));
  CHECK(d.active == BitWidth::k8);

  // Any S above θ_fp latches 16 within the same step regardless of state.
  t.theta_fp = 0.45;
  t.theta_48 = 0.3;
  PrecisionScheduler q(t);
  for (int i = 0; i < 30; ++i) {
    q.decide();
    q.observe(still);
  }
  CHECK(q.decide().active == BitWidth::k16);
}

TEST_CASE("scheduler decisions only see earlier actions") {
  const auto t = table(0.2, 0.35, 0.5);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<Action> xs(80);
  for (auto& x : xs) {
    for (auto& v : x.xyz) v = u(rng);
    for (auto& v : x.rot) v = 4.0 * u(rng);
  }
  const auto run = [&](const std::vector<Action>& actions) {
    PrecisionScheduler p(t);
    std::vector<double> s;
    for (const Action& a : actions) {
      s.push_back(p.decide().sensitivity);
      p.observe(a);
    }
    return s;
  };
  const auto base = run(xs);
  for (std::size_t k : {12u, 40u, 70u}) {
    auto changed = xs;
    changed[k].xyz = {0.0, 0.0, 0.0};
    changed[k].rot = {1.0, -1.0, 1.0};
    const auto s = run(changed);
    for (std::size_t i = 0; i <= k; ++i) REQUIRE(s[i] == base[i]);
    CHECK(s[k + 1] != base[k + 1]);
  }
}

TEST_CASE("table validation and theta_fp override") {
  CHECK_THROWS_AS(table(0.3, 0.1, 0.5).validate(), InvalidInput);
  CHECK_THROWS_AS(table(0.1, 0.6, 0.5).validate(), InvalidInput);
  CalibrationTable t = table(0.1, 0.3, 0.5);
  t.K = 0;
  CHECK_THROWS_AS(t.validate(), InvalidInput);
  t = table(0.1, 0.3, 0.5);
  t.eta = 0.0;
  CHECK_THROWS_AS(t.validate(), InvalidInput);

  const auto low = table(0.1, 0.3, 0.5).with_theta_fp(0.2);
  CHECK(*low.theta_24 == 0.1);
  CHECK(*low.theta_48 == 0.2);
  CHECK(low.theta_fp == 0.2);
  const auto high = table(0.1, 0.3, 0.5).with_theta_fp(2.0);
  CHECK(*high.theta_48 == 0.3);

  CostModel c;
  c.at(BitWidth::k2) = 0.9;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}
