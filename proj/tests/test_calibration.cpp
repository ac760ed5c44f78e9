#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "kinedispatch/calibration.hpp"

using namespace kinedispatch;

namespace {

// Evenly spread samples over [0, theta_fp] with constant per-bit errors.
std::vector<CalibrationSample> constant_samples(double e2, double e4, double e8,
                                                double theta_fp = 0.5, std::size_t per_bin = 60,
                                                std::size_t bins = 32) {
  std::vector<CalibrationSample> out;
  const double w = theta_fp / static_cast<double>(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t i = 0; i < per_bin; ++i) {
      const double s = w * (static_cast<double>(k) + (static_cast<double>(i) + 0.5) / static_cast<double>(per_bin));
      out.push_back({s, {e2, e4, e8}});
    }
  }
  return out;
}

// Scan every bin's upper edge from scratch: first edge where e exceeds the
// bound, reported as that bin's lower edge.
double brute_force_crossing(double e, double d_acc, double eta, double theta_fp, std::size_t bins) {
  const double w = theta_fp / static_cast<double>(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double upper = w * static_cast<double>(k + 1);
    if (e > d_acc / (upper + eta)) return w * static_cast<double>(k);
  }
  return theta_fp;
}

// Weighted isotonic fit via the max-min formula: value at i is
// max over j <= i of min over k >= i of the weighted mean of y[j..k].
std::vector<double> isotonic_oracle(const std::vector<double>& y, const std::vector<double>& w) {
  const std::size_t n = y.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -INFINITY;
    for (std::size_t j = 0; j <= i; ++j) {
      double worst = INFINITY;
      for (std::size_t k = i; k < n; ++k) {
        double sy = 0.0, sw = 0.0;
        for (std::size_t m = j; m <= k; ++m) {
          sy += y[m] * w[m];
          sw += w[m];
        }
        worst = std::min(worst, sy / sw);
      }
      best = std::max(best, worst);
    }
    out[i] = best;
  }
  return out;
}

CalibrationTable base_table(double d_acc, double eta = 0.01, double theta_fp = 0.5) {
  CalibrationTable t;
  t.d_acc = d_acc;
  t.eta = eta;
  t.theta_fp = theta_fp;
  return t;
}

}  // namespace

TEST_CASE("error_bound") {
  CHECK(error_bound(0.0, 1.0, 0.01) == doctest::Approx(100.0));
  CHECK(error_bound(0.49, 1.0, 0.01) == doctest::Approx(2.0));
  CHECK(error_bound(10.0, 1.0, 0.01) < error_bound(1.0, 1.0, 0.01));
  for (double s = 0.0; s < 5.0; s += 0.01) {
    REQUIRE(error_bound(s + 0.01, 0.3, 0.02) < error_bound(s, 0.3, 0.02));
  }
  CHECK_THROWS_AS(error_bound(0.1, 0.0, 0.01), InvalidInput);
  CHECK_THROWS_AS(error_bound(0.1, 1.0, 0.0), InvalidInput);
}

TEST_CASE("isotonic fit") {
  const std::vector<double> y{1, 3, 2, 4};
  const std::vector<double> w{1, 1, 1, 1};
  CHECK(isotonic_non_decreasing(y, w) == std::vector<double>{1, 2.5, 2.5, 4});
  const std::vector<double> y2{3, 1};
  const std::vector<double> w2{1, 3};
  const auto f = isotonic_non_decreasing(y2, w2);
  CHECK(f[0] == doctest::Approx(1.5));
  CHECK(f[1] == doctest::Approx(1.5));
  CHECK_THROWS_AS(isotonic_non_decreasing(y2, std::vector<double>{1, 0}), InvalidInput);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 12;
    std::vector<double> yy(n), ww(n);
    for (std::size_t i = 0; i < n; ++i) {
      yy[i] = u(rng) + 0.05 * static_cast<double>(i);
      ww[i] = 0.1 + 5.0 * u(rng);
    }
    const auto fit = isotonic_non_decreasing(yy, ww);
    const auto ref = isotonic_oracle(yy, ww);
    for (std::size_t i = 0; i < n; ++i) REQUIRE(fit[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    REQUIRE(std::is_sorted(fit.begin(), fit.end()));
  }
}

TEST_CASE("closed-form crossing with constant errors") {
  // D_acc = 0.1, e2 = 0.5: 0.5 = 0.1 / (S + 0.01) at S = 0.19, inside bin 12
  // of 32 over [0, 0.5] (width 0.015625), lower edge 0.1875. e4 = 0.1 would
  // cross at S = 0.99 > θ_fp, so 4 bits serve the rest of the range.
  const auto samples = constant_samples(0.5, 0.1, 0.01);
  const auto r = derive_thresholds(samples, base_table(0.1));
  const double crossing = 0.1 / 0.5 - 0.01;
  CHECK(crossing == doctest::Approx(0.19));
  CHECK(std::floor(crossing / (0.5 / 32)) == 12.0);
  CHECK(*r.table.theta_24 == doctest::Approx(0.1875).epsilon(1e-15));
  CHECK(*r.table.theta_24 == brute_force_crossing(0.5, 0.1, 0.01, 0.5, 32));
  CHECK(*r.table.theta_48 == 0.5);
  CHECK(r.warnings.empty());

  // D_acc = 1: crossing at 1.99 > θ_fp for every width.
  const auto r1 = derive_thresholds(samples, base_table(1.0));
  CHECK(*r1.table.theta_24 == 0.5);
  CHECK(*r1.table.theta_48 == 0.5);

  // Pass-through fields.
  auto in = base_table(0.1);
  in.lambda = 0.3;
  in.K = 5;
  const auto r2 = derive_thresholds(samples, in);
  CHECK(r2.table.lambda == 0.3);
  CHECK(r2.table.K == 5);
  CHECK(r2.table.theta_fp == 0.5);
}

TEST_CASE("thresholds agree with the brute-force search over many constant-error cases") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> e(0.01, 2.0);
  std::uniform_real_distribution<double> d(0.01, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const double e2 = e(rng), e4 = e(rng) * 0.5, d_acc = d(rng);
    const auto samples = constant_samples(e2, e4, 0.0, 0.5, 50);
    const auto r = derive_thresholds(samples, base_table(d_acc));
    const double b24 = brute_force_crossing(e2, d_acc, 0.01, 0.5, 32);
    const double b48 = std::max(brute_force_crossing(e4, d_acc, 0.01, 0.5, 32), b24);
    REQUIRE(*r.table.theta_24 == doctest::Approx(b24).epsilon(1e-12));
    REQUIRE(*r.table.theta_48 == doctest::Approx(b48).epsilon(1e-12));
    REQUIRE(0.0 <= *r.table.theta_24);
    REQUIRE(*r.table.theta_24 <= *r.table.theta_48);
    REQUIRE(*r.table.theta_48 <= r.table.theta_fp);
  }
}

TEST_CASE("degenerate error profiles") {
  const auto zero = derive_thresholds(constant_samples(0, 0, 0), base_table(1.0));
  CHECK(*zero.table.theta_24 == 0.5);
  CHECK(*zero.table.theta_48 == 0.5);

  const auto always = derive_thresholds(constant_samples(1e3, 1e-3, 0), base_table(1.0));
  CHECK(*always.table.theta_24 == 0.0);
  CHECK(*always.table.theta_48 == 0.5);

  // 4-bit crossing earlier than 2-bit: θ_{4|8} is clamped up to θ_{2|4}.
  const auto crossed = derive_thresholds(constant_samples(0.5, 5.0, 0), base_table(0.1));
  CHECK(*crossed.table.theta_48 == *crossed.table.theta_24);

  CHECK_THROWS_AS(derive_thresholds(std::vector<CalibrationSample>{}, base_table(1.0)), InvalidInput);
  const std::vector<CalibrationSample> above{{0.9, {1, 1, 1}}};
  CHECK_THROWS_AS(derive_thresholds(above, base_table(1.0)), InvalidInput);
}

TEST_CASE("sparse coverage warns and interpolates") {
  auto samples = constant_samples(0.5, 0.1, 0.01);
  // Empty out bins 5..9.
  const double w = 0.5 / 32;
  samples.erase(std::remove_if(samples.begin(), samples.end(),
                               [&](const CalibrationSample& s) {
                                 return s.sensitivity >= 5 * w && s.sensitivity < 10 * w;
                               }),
                samples.end());
  const auto r = derive_thresholds(samples, base_table(0.1));
  CHECK(r.sparse_bins == std::vector<std::size_t>{5, 6, 7, 8, 9});
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("5 6 7 8 9") != std::string::npos);
  for (std::size_t k = 5; k < 10; ++k) CHECK(r.bins.smoothed[0][k] == doctest::Approx(0.5));
  CHECK(*r.table.theta_24 == doctest::Approx(0.1875));
}

TEST_CASE("noisy increasing errors: ordering, minimality and determinism") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> s(0.0, 0.6);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<CalibrationSample> samples(5000);
  for (auto& c : samples) {
    c.sensitivity = s(rng);
    const double base = 0.05 + 0.4 * c.sensitivity;
    c.error = {std::max(0.0, base + noise(rng)), std::max(0.0, 0.3 * base + noise(rng) * 0.3),
               std::max(0.0, 0.02 * base)};
  }
  for (double d_acc : {0.005, 0.01, 0.02, 0.05}) {
    const auto r = derive_thresholds(samples, base_table(d_acc));
    const auto& t = r.table;
    REQUIRE(0.0 <= *t.theta_24);
    REQUIRE(*t.theta_24 <= *t.theta_48);
    REQUIRE(*t.theta_48 <= t.theta_fp);
    for (std::size_t k = 0; k < 32; ++k) {
      const double upper = r.bins.upper_edge(k);
      const double bound = error_bound(upper, d_acc, 0.01);
      if (upper <= *t.theta_24 + 1e-12) REQUIRE(r.bins.smoothed[0][k] <= bound);
      if (r.bins.lower_edge(k) >= *t.theta_24 - 1e-12 && upper <= *t.theta_48 + 1e-12) {
        REQUIRE(r.bins.smoothed[1][k] <= bound);
      }
    }
    const auto again = derive_thresholds(samples, base_table(d_acc));
    CHECK(*again.table.theta_24 == *t.theta_24);
    CHECK(*again.table.theta_48 == *t.theta_48);
  }
}

TEST_CASE("validate_table") {
  const auto samples = constant_samples(0.5, 0.1, 0.01);
  const auto r = derive_thresholds(samples, base_table(0.1));
  const auto audit = validate_table(r.table, samples);
  CHECK(audit.total == samples.size());
  CHECK(audit.all_bins_within_bound());
  CHECK(audit.satisfaction > 0.9);
  for (const auto& b : audit.bins) {
    if (b.count > 0 && b.bits == BitWidth::k2) CHECK(b.worst_ratio <= 1.0);
  }

  const auto empty = validate_table(r.table, std::vector<CalibrationSample>{});
  CHECK(empty.total == 0);
  CHECK(empty.satisfied == 0);

  CalibrationTable no2 = r.table;
  no2.theta_24 = 0.0;
  const auto a0 = validate_table(no2, samples);
  CHECK(a0.audited_at[0] == 0);
  CHECK(a0.audited_at[1] + a0.audited_at[2] == samples.size());

  CHECK_THROWS_AS(validate_table(CalibrationTable{}, samples), InvalidInput);
}

TEST_CASE("p90 statistic is at least the mean") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  std::exponential_distribution<double> e(10.0);
  std::vector<CalibrationSample> samples(4000);
  for (auto& c : samples) c = {u(rng), {e(rng), e(rng) * 0.2, e(rng) * 0.01}};
  CalibrationOptions p90;
  p90.statistic = BinStatistic::kP90;
  const auto mean = bin_errors(samples, 0.5, {});
  const auto high = bin_errors(samples, 0.5, p90);
  for (std::size_t k = 0; k < 32; ++k) CHECK(high.smoothed[0][k] >= mean.smoothed[0][k] - 1e-12);
}
