#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kinedispatch/harness.hpp"
#include "kinedispatch/profiler.hpp"

using namespace kinedispatch;

namespace {

const ProfileRun& profile20() {
  static const ProfileRun run = [] {
    const auto seeds = seed_range(0, 20);
    return profile(seeds, BitWidth::k2);
  }();
  return run;
}

}  // namespace

TEST_CASE("baseline rollout") {
  const auto a = rollout_baseline(42);
  REQUIRE(a.trace.has_value());
  CHECK(a.trace->status.success);
  CHECK(a.trace->actions.size() <= 300);
  CHECK(a.trace->states.size() == a.trace->actions.size() + 1);
  const auto b = rollout_baseline(42);
  CHECK(b.trace->actions == a.trace->actions);

  EnvConfig impossible;
  impossible.max_steps = 5;
  const auto fail = rollout_baseline(42, impossible);
  CHECK_FALSE(fail.trace.has_value());
  CHECK(fail.reason.find("seed 42") != std::string::npos);
}

TEST_CASE("perturb_at contract") {
  const auto base = rollout_baseline(7);
  REQUIRE(base.trace);
  const int n = static_cast<int>(base.trace->actions.size());
  CHECK_THROWS_AS(perturb_at(*base.trace, n, BitWidth::k2), InvalidInput);
  CHECK_THROWS_AS(perturb_at(*base.trace, -1, BitWidth::k2), InvalidInput);
  CHECK_THROWS_AS(perturb_at(*base.trace, 0, BitWidth::k16), InvalidInput);

  const auto p = perturb_at(*base.trace, n / 2, BitWidth::k2);
  const auto q = perturb_at(std::uint64_t{7}, n / 2, BitWidth::k2);
  CHECK(p.action_error == q.action_error);
  CHECK(p.terminal_deviation == q.terminal_deviation);
  CHECK(p.success == q.success);
}

TEST_CASE("injection leaves the prefix untouched") {
  for (std::uint64_t seed : {3u, 11u, 19u}) {
    const auto base = rollout_baseline(seed);
    REQUIRE(base.trace);
    const auto& ref = base.trace->states;
    for (int t : {0, 10, 25, static_cast<int>(ref.size()) - 2}) {
      const auto states = perturbed_states(seed, t, BitWidth::k2);
      for (int i = 0; i <= t; ++i) REQUIRE(states[static_cast<std::size_t>(i)] == ref[static_cast<std::size_t>(i)]);
    }
  }
}

TEST_CASE("transit injections are tolerated") {
  int total = 0, ok = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto base = rollout_baseline(seed);
    if (!base.trace) continue;
    const auto& st = base.trace->states;
    for (std::size_t t = 0; t + 1 < st.size(); ++t) {
      if (st[t].phase != Phase::kTransit) continue;
      ++total;
      ok += perturb_at(*base.trace, static_cast<int>(t), BitWidth::k2).success ? 1 : 0;
    }
  }
  REQUIRE(total > 0);
  MESSAGE("transit injection success: " << ok << " / " << total);
  CHECK(static_cast<double>(ok) >= 0.9 * static_cast<double>(total));
}

TEST_CASE("profile records") {
  const auto& run = profile20();
  CHECK(run.skipped_seeds.empty());
  REQUIRE(!run.records.empty());
  for (const auto& r : run.records) {
    if (r.excluded) {
      REQUIRE(r.action_error <= kMinActionError);
      continue;
    }
    REQUIRE(std::abs(r.sensitivity * r.action_error - r.terminal_deviation) <=
            1e-9 * std::max(1.0, r.terminal_deviation));
  }
  CHECK(profile(std::vector<std::uint64_t>{}, BitWidth::k2).records.empty());
}

TEST_CASE("fine phases are more sensitive than transit") {
  double fine = 0.0, coarse = 0.0;
  std::size_t nf = 0, nc = 0;
  for (const auto& r : profile20().records) {
    if (r.excluded) continue;
    if (r.phase == Phase::kTransit) {
      coarse += r.sensitivity;
      ++nc;
    } else if (r.phase == Phase::kAlign || r.phase == Phase::kGrasp) {
      fine += r.sensitivity;
      ++nf;
    }
  }
  REQUIRE(nc > 0);
  REQUIRE(nf > 0);
  const double ratio = (fine / static_cast<double>(nf)) / (coarse / static_cast<double>(nc));
  MESSAGE("Align+Grasp / Transit mean s_t: " << ratio);
  CHECK(ratio > 1.0);
}

TEST_CASE("proxy correlation on the profile") {
  const auto c = proxy_correlation(profile20().records);
  MESSAGE("r_M = " << c.r_motion << ", r_J = " << c.r_jerk << " over " << c.records);
  CHECK(c.r_motion > 0.5);
  CHECK(c.r_jerk > 0.3);
  const auto per = per_trajectory_correlation(profile20().records);
  CHECK(!per.empty());
  for (const auto& [seed, pc] : per) {
    CHECK(pc.r_motion >= -1.0);
    CHECK(pc.r_motion <= 1.0);
  }
}

TEST_CASE("pearson") {
  std::vector<double> x(50), y(50), z(50);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<double>(i);
    y[i] = 3.0 * x[i] - 7.0;
    z[i] = -0.5 * x[i] + 1.0;
  }
  CHECK(std::abs(pearson(x, y) - 1.0) <= 1e-9);
  CHECK(std::abs(pearson(x, z) + 1.0) <= 1e-9);
  CHECK(pearson(x, std::vector<double>(50, 2.0)) == 0.0);
  CHECK_THROWS_AS(pearson(x, std::vector<double>(3, 1.0)), InvalidInput);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(40), b(40), a2(40);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = g(rng);
      b[i] = 0.3 * a[i] + g(rng);
      a2[i] = 2.0 * a[i] + 3.0;
    }
    const double r = pearson(a, b);
    REQUIRE(r >= -1.0);
    REQUIRE(r <= 1.0);
    REQUIRE(std::abs(pearson(a2, b) - r) <= 1e-12);
  }
}

TEST_CASE("proxy_correlation needs enough records") {
  std::vector<ProfileRecord> recs(29);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    recs[i].sensitivity = 1.0 + static_cast<double>(i);
    recs[i].motion_mean = static_cast<double>(i);
    recs[i].action_error = 1.0;
  }
  CHECK_THROWS_AS(proxy_correlation(recs), InvalidInput);
  recs.push_back(recs.back());
  recs.back().excluded = true;
  CHECK_THROWS_AS(proxy_correlation(recs), InvalidInput);
  recs.back().excluded = false;
  CHECK(proxy_correlation(recs).records == 30);
}
