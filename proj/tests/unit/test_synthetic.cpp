#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "catch_amalgamated.hpp"

#include "nearex/market_pipeline.hpp"
#include "nearex/synthetic.hpp"

using namespace nearex;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
double variance(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}
}  // namespace

TEST_CASE("maxima experiment, Gaussian parent") {
  const auto e = maxima_experiment(ParentSpec::gaussian(1.0), 1000, 1000, 7, 4);
  CHECK(e.maxima.size() == 1000);
  CHECK(e.family.is<Gumbel>());
  CHECK(e.grid.size() == kCurvePoints);
  CHECK(e.bin_width > 0.0);
  CHECK_FALSE(e.ks_finite_sample.reject_5pct);
  double mass = 0.0;
  for (const auto& b : e.histogram) mass += b.density * e.bin_width;
  CHECK_THAT(mass, WithinAbs(1.0, 1e-12));
  // Same seed, different worker count.
  CHECK(maxima_experiment(ParentSpec::gaussian(1.0), 1000, 1000, 7, 1).maxima == e.maxima);
  CHECK_THROWS_AS(maxima_experiment(ParentSpec::gaussian(1.0), 1, 10, 7), DomainError);
  CHECK_THROWS_AS(maxima_experiment(ParentSpec::gaussian(1.0), 10, 0, 7), DomainError);
}

TEST_CASE("mean of the maxima approaches the finite-sample mean") {
  // E[max of 100 standard normals] = 2.5075937 (independent quadrature).
  const auto e = maxima_experiment(ParentSpec::gaussian(1.0), 100, 20000, 3);
  double mean = 0.0;
  for (double x : e.maxima) mean += x;
  mean /= static_cast<double>(e.maxima.size());
  const double se = std::sqrt(variance(e.maxima) / static_cast<double>(e.maxima.size()));
  CHECK(std::abs(mean - 2.5075937) < 3.0 * se);
}

TEST_CASE("model series") {
  const std::vector<double> one{1.0};
  const auto r = model_series(one, 100000, 5);
  CHECK_THAT(variance(r), WithinRel(1.0, 0.02));

  const std::vector<double> two{0.01, 0.03};
  const auto s = model_series(two, 10000, 6, 2);
  CHECK_THAT(std::sqrt(variance(std::span(s).first(10000))), WithinRel(0.01, 0.03));
  CHECK_THAT(std::sqrt(variance(std::span(s).subspan(10000))), WithinRel(0.03, 0.03));
  CHECK(model_series(two, 100, 6, 1) == model_series(two, 100, 6, 2));

  const std::vector<double> zero{0.0};
  CHECK_THROWS_AS(model_series(zero, 10, 1), ParameterError);
}

TEST_CASE("discretization") {
  CHECK_THAT(discretize(std::vector<double>{10.004}, 0.01)[0], WithinAbs(10.00, 1e-12));
  const std::vector<double> aligned{10.0, 10.25, 10.5};
  CHECK(discretize(aligned, 0.25) == aligned);
  CHECK_THROWS_AS(discretize(aligned, 0.0), DomainError);
}

TEST_CASE("discretized minima clump on a lattice") {
  // Gaussian walk around 30 with step sd 0.0003 relative, about one tick, blocks of 25 returns.
  const std::vector<double> sigmas(400, 0.0003);
  const auto returns = model_series(sigmas, 25, 9);
  const auto prices = price_path(returns, 30.0);
  const auto ticked = discretize(prices, 0.01);

  auto distances = [](const std::vector<double>& p) {
    std::vector<double> r;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) r.push_back(std::log(p[i + 1] / p[i]));
    std::vector<double> kept;
    for (double x : r)
      if (x != 0.0) kept.push_back(x);
    const auto blocked = block_returns(kept, 25);
    return aggregate_near_extreme(blocked, ExtremeMode::FromMin).distances;
  };
  auto occupied = [](const std::vector<double>& d) {
    std::set<long long> bins;
    for (double x : d) bins.insert(std::llround(x * 1e9));
    return bins.size();
  };
  const auto continuous = occupied(distances(prices));
  const auto lattice = occupied(distances(ticked));
  INFO(continuous << " vs " << lattice);
  CHECK(static_cast<double>(lattice) < 0.2 * static_cast<double>(continuous));
  CHECK(continuous > 9000);
}

TEST_CASE("quotes from prices keep every return") {
  const std::vector<double> sigmas{0.01, 0.02, 0.03};
  const auto returns = model_series(sigmas, 25, 4);
  const auto prices = price_path(returns, 30.0);
  const auto quotes = quotes_from_prices(prices, 20);
  std::ostringstream text;
  write_tick_csv(text, quotes);
  std::istringstream in(text.str());
  FilterConfig config;
  config.drop_jumps = false;
  const auto ingested = ingest_ticks(in, "q.csv", config, 1);
  REQUIRE(ingested.returns.size() == returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i) CHECK_THAT(ingested.returns[i], WithinAbs(returns[i], 1e-13));
  CHECK(ingested.days.size() > 1);
}

TEST_CASE("tick stream generator") {
  TickStreamConfig config;
  config.records = 1000;
  config.records_per_day = 300;
  TickStreamBuf a(config);
  TickStreamBuf b(config);
  std::istream sa(&a);
  std::istream sb(&b);
  std::stringstream ta;
  std::stringstream tb;
  ta << sa.rdbuf();
  tb << sb.rdbuf();
  CHECK(ta.str() == tb.str());
  std::istringstream in(ta.str());
  const auto records = read_tick_csv(in, "gen.csv");
  CHECK(records.size() == 1000);
  CHECK(format_date(records.back().timestamp.day) == "2007-03-04");

  TickStreamConfig none;
  none.records = 0;
  TickStreamBuf c(none);
  std::istream sc(&c);
  std::stringstream tc;
  tc << sc.rdbuf();
  CHECK(tc.str() == "timestamp,bid,ask,trade_price\n");
}

TEST_CASE("log-uniform volatilities") {
  const auto s = log_uniform_sigmas(1000, 0.005, 0.03, 1);
  for (double x : s) {
    CHECK(x >= 0.005);
    CHECK(x <= 0.03);
  }
  CHECK(log_uniform_sigmas(10, 0.005, 0.03, 1) == log_uniform_sigmas(10, 0.005, 0.03, 1));
}
