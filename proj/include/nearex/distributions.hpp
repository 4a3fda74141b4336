#pragma once

// Parent distributions g / G for the extreme-value and near-extreme code:
// zero-mean Gaussian, q-exponential (generalized Pareto) and uniform.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "nearex/errors.hpp"
#include "nearex/random.hpp"

namespace nearex {

namespace detail {
using FastPolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;
inline double erfc_inv(double z) { return boost::math::erfc_inv(z, FastPolicy()); }
}  // namespace detail

struct Gaussian {
  double sigma = 1.0;
};

// g(x) = (1 + (q-1) x)^(q / (1-q)) on x >= 0, q > 1.
struct QExponential {
  double q = 2.0;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

class ParentSpec {
 public:
  using Family = std::variant<Gaussian, QExponential, Uniform>;

  static ParentSpec gaussian(double sigma) { return ParentSpec(Gaussian{sigma}); }
  static ParentSpec qexponential(double q) { return ParentSpec(QExponential{q}); }
  static ParentSpec uniform(double lo, double hi) { return ParentSpec(Uniform{lo, hi}); }

  explicit ParentSpec(Family family) : family_(family) { validate(); }

  [[nodiscard]] const Family& family() const noexcept { return family_; }

  template <class T>
  [[nodiscard]] bool is() const noexcept {
    return std::holds_alternative<T>(family_);
  }

  template <class T>
  [[nodiscard]] const T& as() const {
    return std::get<T>(family_);
  }

  [[nodiscard]] std::string name() const {
    return std::visit(
        [](const auto& f) -> std::string {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Gaussian>) return "gaussian";
          if constexpr (std::is_same_v<T, QExponential>) return "qexp";
          if constexpr (std::is_same_v<T, Uniform>) return "uniform";
        },
        family_);
  }

  friend bool operator==(const ParentSpec& a, const ParentSpec& b) {
    return std::visit(
        [&](const auto& fa) {
          using T = std::decay_t<decltype(fa)>;
          if (!b.is<T>()) return false;
          const auto& fb = b.as<T>();
          if constexpr (std::is_same_v<T, Gaussian>) return fa.sigma == fb.sigma;
          if constexpr (std::is_same_v<T, QExponential>) return fa.q == fb.q;
          if constexpr (std::is_same_v<T, Uniform>) return fa.lo == fb.lo && fa.hi == fb.hi;
        },
        a.family_);
  }

 private:
  void validate() const {
    std::visit(
        [](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Gaussian>) {
            if (!(f.sigma > 0.0) || !std::isfinite(f.sigma))
              throw ParameterError("gaussian: sigma must be finite and > 0");
          } else if constexpr (std::is_same_v<T, QExponential>) {
            if (!(f.q > 1.0) || !std::isfinite(f.q))
              throw ParameterError("qexp: q must be finite and > 1");
          } else {
            if (!std::isfinite(f.lo) || !std::isfinite(f.hi) || !(f.lo < f.hi))
              throw ParameterError("uniform: requires finite lo < hi");
          }
        },
        family_);
  }

  Family family_;
};

// Tail index eta = 1/(q-1) of the q-exponential.
inline double tail_index(const QExponential& f) { return 1.0 / (f.q - 1.0); }

inline double support_lower(const ParentSpec& spec) {
  if (spec.is<Gaussian>()) return -std::numeric_limits<double>::infinity();
  if (spec.is<QExponential>()) return 0.0;
  return spec.as<Uniform>().lo;
}

inline double support_upper(const ParentSpec& spec) {
  if (spec.is<Uniform>()) return spec.as<Uniform>().hi;
  return std::numeric_limits<double>::infinity();
}

inline double pdf(const ParentSpec& spec, double x) {
  return std::visit(
      [x](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          const double z = x / f.sigma;
          return std::exp(-0.5 * z * z) / (f.sigma * std::sqrt(2.0 * std::numbers::pi));
        } else if constexpr (std::is_same_v<T, QExponential>) {
          if (x < 0.0) return 0.0;
          return std::exp(f.q / (1.0 - f.q) * std::log1p((f.q - 1.0) * x));
        } else {
          return (x >= f.lo && x <= f.hi) ? 1.0 / (f.hi - f.lo) : 0.0;
        }
      },
      spec.family());
}

// G(x).
inline double cdf(const ParentSpec& spec, double x) {
  return std::visit(
      [x](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          // 0.5 (1 + erf(x / (sqrt(2) sigma))), written with erfc to keep
          // the lower tail accurate.
          return 0.5 * std::erfc(-x / (std::numbers::sqrt2 * f.sigma));
        } else if constexpr (std::is_same_v<T, QExponential>) {
          if (x <= 0.0) return 0.0;
          return -std::expm1(-std::log1p((f.q - 1.0) * x) / (f.q - 1.0));
        } else {
          if (x <= f.lo) return 0.0;
          if (x >= f.hi) return 1.0;
          return (x - f.lo) / (f.hi - f.lo);
        }
      },
      spec.family());
}

// 1 - G(x), computed without cancellation.
inline double ccdf(const ParentSpec& spec, double x) {
  return std::visit(
      [x](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return 0.5 * std::erfc(x / (std::numbers::sqrt2 * f.sigma));
        } else if constexpr (std::is_same_v<T, QExponential>) {
          if (x <= 0.0) return 1.0;
          return std::exp(-std::log1p((f.q - 1.0) * x) / (f.q - 1.0));
        } else {
          if (x <= f.lo) return 1.0;
          if (x >= f.hi) return 0.0;
          return (f.hi - x) / (f.hi - f.lo);
        }
      },
      spec.family());
}

// G^{-1}(p). p = 0 and p = 1 return the support bounds (possibly infinite).
inline double quantile(const ParentSpec& spec, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p must lie in [0, 1]");
  if (p == 0.0) return support_lower(spec);
  if (p == 1.0) return support_upper(spec);
  return std::visit(
      [p](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return -std::numbers::sqrt2 * f.sigma * detail::erfc_inv(2.0 * p);
        } else if constexpr (std::is_same_v<T, QExponential>) {
          return std::expm1(-(f.q - 1.0) * std::log1p(-p)) / (f.q - 1.0);
        } else {
          return f.lo + p * (f.hi - f.lo);
        }
      },
      spec.family());
}

// G^{-1}(1 - v), accurate for small v.
inline double upper_quantile(const ParentSpec& spec, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError("upper_quantile: v must lie in [0, 1]");
  if (v == 0.0) return support_upper(spec);
  if (v == 1.0) return support_lower(spec);
  return std::visit(
      [v](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return std::numbers::sqrt2 * f.sigma * detail::erfc_inv(2.0 * v);
        } else if constexpr (std::is_same_v<T, QExponential>) {
          return std::expm1(-(f.q - 1.0) * std::log(v)) / (f.q - 1.0);
        } else {
          return f.hi - v * (f.hi - f.lo);
        }
      },
      spec.family());
}

// Fills `out` with iid draws from `spec`.
inline void sample_into(const ParentSpec& spec, Engine& engine, std::span<double> out) {
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          std::normal_distribution<double> normal(0.0, f.sigma);
          for (double& x : out) x = normal(engine);
        } else if constexpr (std::is_same_v<T, QExponential>) {
          // Inverse transform through the closed-form upper quantile.
          for (double& x : out)
            x = std::expm1(-(f.q - 1.0) * std::log(open_unit(engine))) / (f.q - 1.0);
        } else {
          for (double& x : out) x = f.lo + open_unit(engine) * (f.hi - f.lo);
        }
      },
      spec.family());
}

inline std::vector<double> sample(const ParentSpec& spec, std::uint64_t seed, std::size_t n) {
  if (n == 0) throw DomainError("sample: n must be >= 1");
  std::vector<double> out(n);
  auto engine = make_engine(seed);
  sample_into(spec, engine, out);
  return out;
}

}  // namespace nearex
