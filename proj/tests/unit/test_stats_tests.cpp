#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "catch_amalgamated.hpp"

#include "nearex/distributions.hpp"
#include "nearex/random.hpp"
#include "nearex/stats_tests.hpp"

using namespace nearex;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
double uniform_cdf(double r) { return std::clamp(r, 0.0, 1.0); }

// Dense-grid sup distance between a step ECDF and a continuous CDF.
template <class Cdf>
double brute_force_d(Cdf cdf, const std::vector<double>& sample, double step) {
  // Counts by direct scan at every sample point and on a grid between them.
  const double n = static_cast<double>(sample.size());
  auto at = [&](double r) {
    double below = 0.0;
    double at_or_below = 0.0;
    for (double x : sample) {
      below += x < r ? 1.0 : 0.0;
      at_or_below += x <= r ? 1.0 : 0.0;
    }
    return std::max(std::abs(cdf(r) - at_or_below / n), std::abs(cdf(r) - below / n));
  };
  double d = 0.0;
  for (double x : sample) d = std::max(d, at(x));
  const auto [lo, hi] = std::minmax_element(sample.begin(), sample.end());
  for (double r = *lo - step; r <= *hi + step; r += step) d = std::max(d, at(r));
  return d;
}
}  // namespace

TEST_CASE("single point sample") {
  const std::vector<double> sample{0.5};
  const auto r = ks_statistic(uniform_cdf, sample);
  CHECK_THAT(r.d, WithinAbs(0.5, 1e-15));
  CHECK_THAT(r.scaled, WithinAbs(0.5, 1e-15));
  CHECK_FALSE(r.reject_5pct);
  CHECK_FALSE(r.reject_1pct);
  CHECK_THROWS_AS(ks_statistic(uniform_cdf, std::vector<double>{}), DomainError);
}

TEST_CASE("decision boundaries") {
  CHECK(kKsCritical5 == 1.333);
  CHECK(kKsCritical1 == 1.625);
  const auto at = [](double scaled) { return ks_verdict(scaled / 100.0, 10000); };
  CHECK_FALSE(at(1.33).reject_5pct);
  CHECK(at(1.34).reject_5pct);
  CHECK_FALSE(at(1.34).reject_1pct);
  CHECK(at(1.62).reject_5pct);
  CHECK_FALSE(at(1.62).reject_1pct);
  CHECK(at(1.63).reject_1pct);
  CHECK(at(1.4).reject_5pct);
  CHECK_FALSE(at(1.4).reject_1pct);
  // Exactly at the critical value is not a rejection.
  CHECK_FALSE(ks_verdict(1.333, 1).reject_5pct);
  CHECK_FALSE(ks_verdict(1.625, 1).reject_1pct);
  for (double s = 0.0; s < 3.0; s += 0.01) {
    const auto v = at(s);
    CHECK(v.scaled == std::sqrt(10000.0) * v.d);
    if (v.reject_1pct) CHECK(v.reject_5pct);
  }
}

TEST_CASE("both sides of every jump, against a brute-force scan") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto engine = make_engine(seed);
    std::vector<double> sample(40);
    for (double& x : sample) x = open_unit(engine) * 0.8 + 0.1 * open_unit(engine);
    const auto fast = ks_statistic(uniform_cdf, sample);
    CHECK_THAT(fast.d, WithinAbs(brute_force_d(uniform_cdf, sample, 1e-2), 1e-15));
  }
}

TEST_CASE("scale invariance and worker independence") {
  auto engine = make_engine(3);
  std::vector<double> sample(500);
  for (double& x : sample) x = -std::log(open_unit(engine));
  const auto expo = [](double r) { return r <= 0.0 ? 0.0 : -std::expm1(-r); };
  const auto base = ks_statistic(expo, sample);
  std::vector<double> scaled = sample;
  for (double& x : scaled) x *= 7.5;
  const auto scaled_result = ks_statistic([&](double r) { return expo(r / 7.5); }, scaled);
  CHECK_THAT(scaled_result.d, WithinAbs(base.d, 1e-14));
  CHECK(ks_statistic(expo, sample, 4).d == base.d);
}

TEST_CASE("rejection rate is near the nominal level") {
  // 1000 repeats of n = 10^4 uniforms.
  std::size_t rejections = 0;
  constexpr std::size_t kRepeats = 1000;
  for (std::size_t i = 0; i < kRepeats; ++i) {
    auto engine = make_engine(1234, i);
    std::vector<double> sample(10000);
    for (double& x : sample) x = open_unit(engine);
    rejections += ks_statistic(uniform_cdf, sample).reject_5pct ? 1 : 0;
  }
  const double rate = static_cast<double>(rejections) / kRepeats;
  INFO("rejection rate " << rate);
  // Binomial(1000, 0.05) has sd 0.0069 in rate; allow 3 sd.
  CHECK(rate > 0.05 - 3 * 0.0069);
  CHECK(rate < 0.05 + 3 * 0.0069);
}

TEST_CASE("ecdf") {
  const auto e = ecdf(std::vector<double>{1, 2});
  CHECK(e(1.5) == 0.5);
  CHECK(e(0.0) == 0.0);
  CHECK(e(2.0) == 1.0);
  CHECK(e(1.0) == 0.5);
  CHECK(ecdf(std::vector<double>{1, 1})(1.0) == 1.0);
  CHECK_THROWS_AS(ecdf(std::vector<double>{}), DomainError);
}

TEST_CASE("empirical quantiles") {
  const std::vector<double> sorted{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(empirical_quantile(sorted, 0.0) == 1.0);
  CHECK(empirical_quantile(sorted, 0.1) == 1.0);
  CHECK(empirical_quantile(sorted, 0.11) == 2.0);
  CHECK(empirical_quantile(sorted, 0.5) == 5.0);
  CHECK(empirical_quantile(sorted, 1.0) == 10.0);
  // 0.02 * 12000 is not exactly 240 in binary.
  std::vector<double> big(12000);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<double>(i + 1);
  CHECK(empirical_quantile(big, 0.02) == 240.0);
  CHECK(empirical_quantile(big, 0.98) == 11760.0);
  CHECK_THROWS_AS(empirical_quantile(sorted, 1.1), DomainError);
}

TEST_CASE("q-q data") {
  const auto grid = default_qq_grid();
  REQUIRE(grid.size() == 50);
  CHECK(grid.front() == 0.0);
  CHECK_THAT(grid.back(), WithinAbs(0.98, 1e-15));

  const auto inverse = [](double p) { return -std::log1p(-p); };
  std::vector<double> sample;
  for (std::size_t i = 1; i <= 1000; ++i) sample.push_back(inverse((static_cast<double>(i) - 0.5) / 1000.0));
  std::reverse(sample.begin(), sample.end());
  const auto qq = qq_data(inverse, sample, grid);
  CHECK(qq.theoretical_q.front() == 0.0);
  REQUIRE(qq.empirical_q.size() == 50);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    // Within one order-statistic gap.
    CHECK(std::abs(qq.empirical_q[i] - qq.theoretical_q[i]) <= inverse(std::min(grid[i] + 0.001, 0.999)) - inverse(grid[i]) + 1e-12);
    if (i > 0) {
      CHECK(qq.empirical_q[i] >= qq.empirical_q[i - 1]);
      CHECK(qq.theoretical_q[i] >= qq.theoretical_q[i - 1]);
    }
  }
  CHECK_THROWS_AS(qq_data(inverse, sample, std::vector<double>{0.1, 1.0}), DomainError);
  CHECK_THROWS_AS(qq_data(inverse, sample, std::vector<double>{0.2, 0.1}), DomainError);
  CHECK_THROWS_AS(qq_data(inverse, std::vector<double>{}, grid), DomainError);
}

TEST_CASE("histogram") {
  const auto one = histogram(std::vector<double>{0.5}, 1.0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].center == 0.5);
  CHECK(one[0].density == 1.0);
  CHECK(histogram(std::vector<double>{}, 1.0).empty());
  CHECK_THROWS_AS(histogram(std::vector<double>{1.0}, 0.0), DomainError);
  CHECK_THROWS_AS(histogram(std::vector<double>{1.0}, -1.0), DomainError);

  // Empty interior bins are kept; origin anchors the edges.
  const auto gaps = histogram(std::vector<double>{0.05, 0.35}, 0.1, 0.0);
  REQUIRE(gaps.size() == 4);
  CHECK(gaps[1].density == 0.0);
  const auto shifted = histogram(std::vector<double>{0.05}, 0.1, 0.02);
  CHECK_THAT(shifted[0].center, WithinAbs(0.07, 1e-15));

  auto engine = make_engine(77);
  std::vector<double> u(1000000);
  for (double& x : u) x = open_unit(engine);
  const auto bins = histogram(u, 0.01);
  REQUIRE(bins.size() == 100);
  double mass = 0.0;
  const double n = 1e6;
  const double bound = 3.0 * std::sqrt(n * 0.01) / (n * 0.01);
  for (const auto& b : bins) {
    mass += b.density * 0.01;
    CHECK(std::abs(b.density - 1.0) < bound);
  }
  CHECK_THAT(mass, WithinAbs(1.0, 1e-12));
}

TEST_CASE("freedman-diaconis width") {
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(i);
  CHECK_THAT(freedman_diaconis_width(v), WithinRel(2.0 * 500.0 / 10.0, 0.01));
  CHECK(freedman_diaconis_width(std::vector<double>{1, 1, 1, 2}) > 0.0);
  CHECK_THROWS_AS(freedman_diaconis_width(std::vector<double>{1}), DomainError);
}
