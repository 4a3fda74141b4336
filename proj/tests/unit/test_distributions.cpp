#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "catch_amalgamated.hpp"

#include "nearex/distributions.hpp"

using namespace nearex;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<ParentSpec> all_specs() {
  return {ParentSpec::gaussian(1.0), ParentSpec::gaussian(0.02), ParentSpec::qexponential(1.3),
          ParentSpec::qexponential(2.0), ParentSpec::uniform(0.0, 1.0),
          ParentSpec::uniform(-2.0, 3.0)};
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(ParentSpec::gaussian(0.0), ParameterError);
  CHECK_THROWS_AS(ParentSpec::gaussian(-1.0), ParameterError);
  CHECK_THROWS_AS(ParentSpec::gaussian(std::nan("")), ParameterError);
  CHECK_THROWS_AS(ParentSpec::qexponential(1.0), ParameterError);
  CHECK_THROWS_AS(ParentSpec::qexponential(0.5), ParameterError);
  CHECK_THROWS_AS(ParentSpec::uniform(1.0, 1.0), ParameterError);
  CHECK_THROWS_AS(ParentSpec::uniform(2.0, 1.0), ParameterError);
  CHECK_NOTHROW(ParentSpec::qexponential(1.3));
}

TEST_CASE("pdf examples") {
  CHECK_THAT(pdf(ParentSpec::gaussian(1.0), 0.0), WithinAbs(1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15));
  CHECK_THAT(pdf(ParentSpec::qexponential(1.3), 0.0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(pdf(ParentSpec::uniform(0.0, 1.0), 0.5), WithinAbs(1.0, 1e-15));
  CHECK(pdf(ParentSpec::qexponential(1.3), -0.1) == 0.0);
  CHECK(pdf(ParentSpec::uniform(0.0, 1.0), 1.5) == 0.0);
}

TEST_CASE("cdf examples") {
  CHECK_THAT(cdf(ParentSpec::gaussian(1.0), 0.0), WithinAbs(0.5, 1e-15));
  CHECK_THAT(cdf(ParentSpec::qexponential(2.0), 1.0), WithinAbs(0.5, 1e-15));
  CHECK_THAT(cdf(ParentSpec::uniform(0.0, 1.0), 0.25), WithinAbs(0.25, 1e-15));
  // Phi(-1) and Phi(3) to 17 digits.
  CHECK_THAT(cdf(ParentSpec::gaussian(1.0), -1.0), WithinRel(0.15865525393145705, 1e-14));
  CHECK_THAT(ccdf(ParentSpec::gaussian(1.0), 3.0), WithinRel(0.0013498980316300946, 1e-13));
  CHECK_THAT(ccdf(ParentSpec::gaussian(1.0), 30.0), WithinRel(4.906713927148187e-198, 1e-12));
}

TEST_CASE("quantile examples and errors") {
  CHECK_THAT(quantile(ParentSpec::gaussian(1.0), 0.5), WithinAbs(0.0, 1e-15));
  CHECK_THAT(quantile(ParentSpec::qexponential(2.0), 0.5), WithinAbs(1.0, 1e-14));
  CHECK(quantile(ParentSpec::uniform(0.0, 1.0), 0.0) == 0.0);
  CHECK(quantile(ParentSpec::uniform(0.0, 1.0), 1.0) == 1.0);
  CHECK(std::isinf(quantile(ParentSpec::gaussian(1.0), 1.0)));
  CHECK(std::isinf(quantile(ParentSpec::gaussian(1.0), 0.0)));
  CHECK_THROWS_AS(quantile(ParentSpec::gaussian(1.0), 1.5), DomainError);
  CHECK_THROWS_AS(quantile(ParentSpec::gaussian(1.0), -0.1), DomainError);
  CHECK_THAT(quantile(ParentSpec::gaussian(1.0), 0.9), WithinRel(1.2815515655446004, 1e-14));
  CHECK_THAT(upper_quantile(ParentSpec::gaussian(1.0), 1e-300), WithinRel(37.047096299361199, 1e-12));
}

TEST_CASE("pdf integrates to one") {
  for (const auto& spec : all_specs()) {
    double total = 0.0;
    if (spec.is<Gaussian>()) {
      boost::math::quadrature::tanh_sinh<double> ts;
      total = ts.integrate([&](double x) { return pdf(spec, x); },
                           -std::numeric_limits<double>::infinity(),
                           std::numeric_limits<double>::infinity());
    } else if (spec.is<QExponential>()) {
      boost::math::quadrature::exp_sinh<double> es;
      total = es.integrate([&](double x) { return pdf(spec, x); }, 0.0,
                           std::numeric_limits<double>::infinity());
    } else {
      boost::math::quadrature::tanh_sinh<double> ts;
      total = ts.integrate([&](double x) { return pdf(spec, x); }, support_lower(spec),
                           support_upper(spec));
    }
    INFO(spec.name());
    CHECK_THAT(total, WithinAbs(1.0, 1e-8));
  }
}

TEST_CASE("derivative of cdf matches pdf") {
  for (const auto& spec : all_specs()) {
    for (double p = 0.05; p < 0.96; p += 0.05) {
      const double x = quantile(spec, p);
      const double h = 1e-5 * std::max(1.0, std::abs(x)) *
                       (spec.is<Gaussian>() ? spec.as<Gaussian>().sigma : 1.0);
      const double d = (cdf(spec, x + h) - cdf(spec, x - h)) / (2.0 * h);
      INFO(spec.name() << " x=" << x);
      CHECK_THAT(d, WithinRel(pdf(spec, x), 1e-6));
    }
  }
}

TEST_CASE("quantile inverts cdf") {
  for (const auto& spec : all_specs()) {
    for (double p = 0.001; p < 1.0; p += 0.0371) {
      INFO(spec.name() << " p=" << p);
      CHECK_THAT(cdf(spec, quantile(spec, p)), WithinAbs(p, 1e-10));
    }
    for (double p = 0.05; p < 0.96; p += 0.05) {
      const double x = quantile(spec, p);
      CHECK_THAT(quantile(spec, cdf(spec, x)), WithinAbs(x, 1e-9 * std::max(1.0, std::abs(x))));
    }
  }
}

TEST_CASE("q-exponential tail slope") {
  const auto spec = ParentSpec::qexponential(1.3);
  const double slope = (std::log(ccdf(spec, 1e5)) - std::log(ccdf(spec, 1e3))) /
                       (std::log(1e5) - std::log(1e3));
  CHECK_THAT(slope, WithinRel(-10.0 / 3.0, 0.02));
  CHECK_THAT(tail_index(spec.as<QExponential>()), WithinRel(10.0 / 3.0, 1e-15));
}

TEST_CASE("sampling moments and determinism") {
  const auto u = sample(ParentSpec::uniform(0.0, 1.0), 11, 100000);
  CHECK_THAT(mean(u), WithinAbs(0.5, 0.01));

  const auto g = sample(ParentSpec::gaussian(2.0), 12, 100000);
  const double m = mean(g);
  double ss = 0.0;
  for (double x : g) ss += (x - m) * (x - m);
  CHECK_THAT(ss / static_cast<double>(g.size() - 1), WithinRel(4.0, 0.02));

  for (const auto& spec : all_specs()) CHECK(sample(spec, 99, 1000) == sample(spec, 99, 1000));
  CHECK(sample(ParentSpec::gaussian(1.0), 1, 100) != sample(ParentSpec::gaussian(1.0), 2, 100));
  CHECK_THROWS_AS(sample(ParentSpec::gaussian(1.0), 1, 0), DomainError);

  // q = 2: G(x) = x / (1 + x), so the median is 1.
  auto q = sample(ParentSpec::qexponential(2.0), 5, 100001);
  std::nth_element(q.begin(), q.begin() + 50000, q.end());
  CHECK_THAT(q[50000], WithinAbs(1.0, 0.03));
}

TEST_CASE("spec equality and names") {
  CHECK(ParentSpec::gaussian(1.0) == ParentSpec::gaussian(1.0));
  CHECK_FALSE(ParentSpec::gaussian(1.0) == ParentSpec::gaussian(2.0));
  CHECK(ParentSpec::gaussian(1.0).name() == "gaussian");
  CHECK(ParentSpec::qexponential(1.3).name() == "qexp");
  CHECK(ParentSpec::uniform(0, 1).name() == "uniform");
}
