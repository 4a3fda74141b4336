#pragma once

// Classical extreme-value statistics: the finite-sample law of the maximum
// F = G^N, the Weibull / Frechet / Gumbel limit laws, their normalizing
// weights and the parent -> limit classification.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>

#include "nearex/distributions.hpp"
#include "nearex/errors.hpp"

namespace nearex {

// L_W(x) = exp(-(-x)^beta), x <= 0.
struct Weibull {
  double beta = 1.0;
};

// L_F(x) = exp(-x^-alpha), x > 0.
struct Frechet {
  double alpha = 1.0;
};

// L_G(x) = exp(-exp(-x)).
struct Gumbel {};

// Point mass at the support supremum w; reached when G approaches w with an
// exponent below one. None of the bundled parents produce it.
struct Degenerate {
  double w = 0.0;
};

class LimitFamily {
 public:
  using Law = std::variant<Weibull, Frechet, Gumbel, Degenerate>;

  static LimitFamily weibull(double beta) { return LimitFamily(Weibull{beta}); }
  static LimitFamily frechet(double alpha) { return LimitFamily(Frechet{alpha}); }
  static LimitFamily gumbel() { return LimitFamily(Gumbel{}); }
  static LimitFamily degenerate(double w) { return LimitFamily(Degenerate{w}); }

  explicit LimitFamily(Law law) : law_(law) {
    if (const auto* w = std::get_if<Weibull>(&law_); w && !(w->beta >= 1.0))
      throw ParameterError("weibull: beta must be >= 1");
    if (const auto* f = std::get_if<Frechet>(&law_); f && !(f->alpha > 0.0))
      throw ParameterError("frechet: alpha must be > 0");
  }

  [[nodiscard]] const Law& law() const noexcept { return law_; }

  template <class T>
  [[nodiscard]] bool is() const noexcept {
    return std::holds_alternative<T>(law_);
  }

  template <class T>
  [[nodiscard]] const T& as() const {
    return std::get<T>(law_);
  }

  [[nodiscard]] std::string name() const {
    static constexpr const char* kNames[] = {"weibull", "frechet", "gumbel", "degenerate"};
    return kNames[law_.index()];
  }

 private:
  Law law_;
};

struct NormalizingWeights {
  double scale = 1.0;     // a_N
  double location = 0.0;  // b_N
  std::size_t n = 0;
};

inline void require_block_size(std::size_t n, std::size_t minimum, const char* what) {
  if (n < minimum)
    throw DomainError(std::string(what) + ": N must be >= " + std::to_string(minimum));
}

// F(x) = G(x)^N.
inline double finite_sample_max_cdf(const ParentSpec& spec, std::size_t n, double x) {
  require_block_size(n, 1, "finite_sample_max_cdf");
  const double g = cdf(spec, x);
  if (g <= 0.0) return 0.0;
  // N log G with log1p(-ccdf) near the upper tail.
  const double log_g = g > 0.5 ? std::log1p(-ccdf(spec, x)) : std::log(g);
  return std::exp(static_cast<double>(n) * log_g);
}

// dF/dx = N g(x) G(x)^(N-1).
inline double finite_sample_max_pdf(const ParentSpec& spec, std::size_t n, double x) {
  require_block_size(n, 1, "finite_sample_max_pdf");
  const double density = pdf(spec, x);
  if (density == 0.0) return 0.0;
  if (n == 1) return density;
  const double g = cdf(spec, x);
  if (g <= 0.0) return 0.0;
  const double log_g = g > 0.5 ? std::log1p(-ccdf(spec, x)) : std::log(g);
  return static_cast<double>(n) * density * std::exp(static_cast<double>(n - 1) * log_g);
}

inline double limiting_cdf(const LimitFamily& family, double x) {
  return std::visit(
      [x](const auto& law) -> double {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Weibull>) {
          return x > 0.0 ? 1.0 : std::exp(-std::pow(-x, law.beta));
        } else if constexpr (std::is_same_v<T, Frechet>) {
          return x <= 0.0 ? 0.0 : std::exp(-std::pow(x, -law.alpha));
        } else if constexpr (std::is_same_v<T, Gumbel>) {
          return std::exp(-std::exp(-x));
        } else {
          return x >= law.w ? 1.0 : 0.0;
        }
      },
      family.law());
}

// L'(x). The degenerate law has no density; 0 is returned.
inline double limiting_pdf(const LimitFamily& family, double x) {
  return std::visit(
      [x](const auto& law) -> double {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Weibull>) {
          if (x >= 0.0) return 0.0;
          const double t = std::pow(-x, law.beta);
          return law.beta * t / (-x) * std::exp(-t);
        } else if constexpr (std::is_same_v<T, Frechet>) {
          if (x <= 0.0) return 0.0;
          const double t = std::pow(x, -law.alpha);
          return law.alpha * t / x * std::exp(-t);
        } else if constexpr (std::is_same_v<T, Gumbel>) {
          return std::exp(-x - std::exp(-x));
        } else {
          return 0.0;
        }
      },
      family.law());
}

inline LimitFamily classify_domain(const ParentSpec& spec) {
  if (spec.is<Gaussian>()) return LimitFamily::gumbel();
  if (spec.is<QExponential>()) return LimitFamily::frechet(tail_index(spec.as<QExponential>()));
  // Uniform: G(x) ~ (w - x)^1 near the upper end point.
  return LimitFamily::weibull(1.0);
}

// a_N and b_N. The inf / sup sets reduce to quantiles because every parent
// has a continuous CDF that is strictly increasing on its support.
inline NormalizingWeights weights(const ParentSpec& spec, const LimitFamily& family,
                                  std::size_t n) {
  require_block_size(n, 2, "weights");
  if (family.law().index() != classify_domain(spec).law().index())
    throw ClassificationError("weights: " + family.name() + " is not the limit law of a " +
                              spec.name() + " parent");

  const double inv_n = 1.0 / static_cast<double>(n);
  NormalizingWeights w;
  w.n = n;
  if (family.is<Weibull>()) {
    w.location = support_upper(spec);
    w.scale = w.location - upper_quantile(spec, inv_n);
  } else if (family.is<Frechet>()) {
    w.location = 0.0;
    w.scale = upper_quantile(spec, inv_n);
  } else {
    w.location = upper_quantile(spec, inv_n);
    w.scale = upper_quantile(spec, inv_n / std::numbers::e) - w.location;
  }
  if (!(w.scale > 0.0)) throw NumericalError("weights: non-positive scale", w.scale);
  return w;
}

inline double rescaled_limit_cdf(const LimitFamily& family, const NormalizingWeights& w,
                                 double x) {
  return limiting_cdf(family, (x - w.location) / w.scale);
}

// d/dx L((x - b_N) / a_N).
inline double rescaled_limit_density(const LimitFamily& family, const NormalizingWeights& w,
                                     double x) {
  if (!(w.scale > 0.0)) throw DomainError("rescaled_limit_density: a_N must be > 0");
  return limiting_pdf(family, (x - w.location) / w.scale) / w.scale;
}

// sup_x |G(a_N x + b_N)^N - L(x)| over `points` abscissae whose
// finite-sample probabilities span [1e-6, 1 - 1e-6].
inline double sup_distance_to_limit(const ParentSpec& spec, std::size_t n,
                                    std::size_t points = 10000) {
  const auto family = classify_domain(spec);
  const auto w = weights(spec, family, n);
  constexpr double kLo = 1e-6;
  constexpr double kHi = 1.0 - 1e-6;
  double sup = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double p = kLo + (kHi - kLo) * static_cast<double>(i) / static_cast<double>(points - 1);
    // F^{-1}(p) = G^{-1}(p^{1/N}) = upper_quantile(1 - p^{1/N}).
    const double v = -std::expm1(std::log(p) / static_cast<double>(n));
    const double x = (upper_quantile(spec, v) - w.location) / w.scale;
    const double finite = finite_sample_max_cdf(spec, n, w.scale * x + w.location);
    sup = std::max(sup, std::abs(finite - limiting_cdf(family, x)));
  }
  return sup;
}

}  // namespace nearex
