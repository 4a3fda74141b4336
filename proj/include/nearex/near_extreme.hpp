#pragma once

// Near-extreme statistics: distances r = x_M - x_i from the maximum of a
// finite set, their exact density / CDF for an iid parent, the equal-weight
// Gaussian mixture over blocks, and the empirical estimator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nearex/distributions.hpp"
#include "nearex/errors.hpp"
#include "nearex/parallel.hpp"
#include "nearex/quadrature.hpp"

namespace nearex {

enum class ExtremeMode { FromMax, FromMin };

inline const char* to_string(ExtremeMode mode) {
  return mode == ExtremeMode::FromMax ? "max" : "min";
}

// ---------------------------------------------------------------------------
// Empirical estimator
// ---------------------------------------------------------------------------

// Appends the N-1 distances of `block` from its maximum (or, for FromMin, of
// the negated block from its maximum). Exactly one extremal element is
// removed when the extreme is tied.
inline void append_near_extreme(std::span<const double> block, ExtremeMode mode,
                                std::vector<double>& out) {
  if (block.size() < 2) throw DomainError("empirical_near_extreme: block needs N >= 2");
  const auto it = mode == ExtremeMode::FromMax ? std::max_element(block.begin(), block.end())
                                               : std::min_element(block.begin(), block.end());
  const auto skip = static_cast<std::size_t>(it - block.begin());
  const double extreme = *it;
  for (std::size_t i = 0; i < block.size(); ++i) {
    if (i == skip) continue;
    out.push_back(mode == ExtremeMode::FromMax ? extreme - block[i] : block[i] - extreme);
  }
}

inline std::vector<double> empirical_near_extreme(std::span<const double> block,
                                                  ExtremeMode mode) {
  std::vector<double> out;
  out.reserve(block.size());
  append_near_extreme(block, mode, out);
  return out;
}

// Pooled distances of h equal-size blocks, every block weighted 1/h.
struct EmpiricalNearExtreme {
  std::vector<double> distances;
  std::size_t block_count = 0;
  std::size_t per_block_size = 0;
  ExtremeMode mode = ExtremeMode::FromMax;

  [[nodiscard]] std::size_t sample_size() const noexcept { return distances.size(); }
};

// ---------------------------------------------------------------------------
// Exact near-extreme density and CDF for a single parent
// ---------------------------------------------------------------------------
//
//   rho(r, N) = Int N g(x) G(x)^(N-2) g(x - r) dx
//   P(r, N)   = Int N g(x) G(x)^(N-2) [G(x) - G(x - r)] dx
//
// evaluated after substituting u = G(x). The lower half u in (0, 1/2] uses
// the quantile directly; the upper half is parametrized by v = 1 - u with
// the complementary quantile so that u -> 1 keeps full precision.

inline quadrature::Options default_near_extreme_options() {
  quadrature::Options options;
  options.abs_tol = 1e-12;
  return options;
}

inline void require_n(std::size_t n) {
  if (n < 2) throw DomainError("near-extreme: N must be >= 2");
}

namespace detail {

enum class NearExtremeKernel { Density, Cdf };

inline double mode_of(const ParentSpec& spec) {
  return spec.is<Uniform>() ? spec.as<Uniform>().lo : 0.0;
}

template <NearExtremeKernel Kernel>
double near_extreme_integral(const ParentSpec& spec, std::size_t n, double r,
                             const quadrature::Options& options) {
  require_n(n);
  if (!(r >= 0.0)) throw DomainError("near-extreme: r must be >= 0");
  constexpr bool kDensity = Kernel == NearExtremeKernel::Density;
  if (std::isinf(r)) return kDensity ? 0.0 : 1.0;
  if (!kDensity && r == 0.0) return 0.0;

  const double lo = support_lower(spec);
  const double hi = support_upper(spec);
  if (std::isfinite(lo) && std::isfinite(hi) && r >= hi - lo) return kDensity ? 0.0 : 1.0;

  const double nn = static_cast<double>(n);
  const double power = static_cast<double>(n - 2);

  // Lower half, u in (0, 1/2].
  auto lower = [&](double u) {
    const double x = quantile(spec, u);
    const double w = nn * std::pow(u, power);
    if constexpr (kDensity) {
      return w * pdf(spec, x - r);
    } else {
      return w * (u - cdf(spec, x - r));
    }
  };
  // Upper half, u = 1 - v with v = exp(-t), t in [ln 2, t_max].
  auto upper = [&](double t) {
    const double v = std::exp(-t);
    const double x = upper_quantile(spec, v);
    const double w = nn * std::exp(power * std::log1p(-v)) * v;
    if constexpr (kDensity) {
      return w * pdf(spec, x - r);
    } else {
      return w * (ccdf(spec, x - r) - v);
    }
  };

  // The kernel is bounded by `kernel_max`, so the part of the upper half
  // beyond t_max contributes at most N kernel_max exp(-t_max).
  const double kernel_max = kDensity ? pdf(spec, mode_of(spec)) : 1.0;
  const double t_min = std::numbers::ln2;
  const double t_max =
      std::max(t_min + 1.0, std::log(nn * kernel_max / (1e-3 * options.abs_tol)));

  // Breakpoints: the jump where x - r leaves a bounded-below support, the
  // kernel's peak at x - r = mode, and the bulk of u^(N-2) near u = 1 - 1/N.
  std::vector<double> u_points{0.0, 0.5};
  std::vector<double> t_points{t_min, t_max};
  auto add_x_point = [&](double x) {
    if (cdf(spec, x) <= 0.5) {
      u_points.push_back(cdf(spec, x));
    } else {
      const double c = ccdf(spec, x);
      if (c > 0.0) t_points.push_back(-std::log(c));
    }
  };
  if (std::isfinite(lo)) add_x_point(lo + r);
  add_x_point(mode_of(spec) + r);
  t_points.push_back(std::log(nn));
  for (auto* points : {&u_points, &t_points}) {
    const double first = points->front();
    const double last = (*points)[1];
    std::erase_if(*points, [&](double p) { return !(p >= first && p <= last); });
    std::sort(points->begin(), points->end());
    points->erase(std::unique(points->begin(), points->end()), points->end());
  }

  quadrature::Options part = options;
  part.abs_tol = 0.5 * options.abs_tol;
  const double total = quadrature::integrate(lower, u_points, part).value +
                       quadrature::integrate(upper, t_points, part).value;
  if constexpr (kDensity) {
    return std::max(total, 0.0);
  } else {
    return std::clamp(total, 0.0, 1.0);
  }
}

}  // namespace detail

// rho(r, N) for N iid draws from `spec`.
inline double exact_density(const ParentSpec& spec, std::size_t n, double r,
                            const quadrature::Options& options = default_near_extreme_options()) {
  return detail::near_extreme_integral<detail::NearExtremeKernel::Density>(spec, n, r, options);
}

// P(r, N) = Int_0^r rho(s, N) ds.
inline double exact_cdf(const ParentSpec& spec, std::size_t n, double r,
                        const quadrature::Options& options = default_near_extreme_options()) {
  return detail::near_extreme_integral<detail::NearExtremeKernel::Cdf>(spec, n, r, options);
}

// ---------------------------------------------------------------------------
// Gaussian mixture over blocks
// ---------------------------------------------------------------------------

class MixtureModel {
 public:
  MixtureModel(std::vector<double> sigmas, std::size_t block_size)
      : sigmas_(std::move(sigmas)), block_size_(block_size) {
    if (sigmas_.empty()) throw ParameterError("mixture: needs at least one component");
    for (double s : sigmas_)
      if (!(s > 0.0) || !std::isfinite(s))
        throw ParameterError("mixture: every sigma must be finite and > 0");
    if (block_size_ < 2) throw ParameterError("mixture: N must be >= 2");
  }

  [[nodiscard]] const std::vector<double>& sigmas() const noexcept { return sigmas_; }
  [[nodiscard]] std::size_t block_size() const noexcept { return block_size_; }
  [[nodiscard]] std::size_t components() const noexcept { return sigmas_.size(); }

 private:
  std::vector<double> sigmas_;
  std::size_t block_size_;
};

namespace detail {
template <class Component>
double mixture_average(const MixtureModel& model, std::size_t workers, Component&& component) {
  std::vector<double> values(model.components());
  parallel_for(values.size(), workers,
               [&](std::size_t j) { values[j] = component(model.sigmas()[j]); });
  return pairwise_sum(values) / static_cast<double>(values.size());
}
}  // namespace detail

// (1/h) sum_j rho_j(r, N) with Gaussian(sigma_j) components.
inline double mixture_density(const MixtureModel& model, double r, std::size_t workers = 1,
                              const quadrature::Options& options = default_near_extreme_options()) {
  return detail::mixture_average(model, workers, [&](double s) {
    return exact_density(ParentSpec::gaussian(s), model.block_size(), r, options);
  });
}

// (1/h) sum_j P_j(r, N).
inline double mixture_cdf(const MixtureModel& model, double r, std::size_t workers = 1,
                          const quadrature::Options& options = default_near_extreme_options()) {
  return detail::mixture_average(model, workers, [&](double s) {
    return exact_cdf(ParentSpec::gaussian(s), model.block_size(), r, options);
  });
}

// ---------------------------------------------------------------------------
// Tabulated standard-Gaussian profile
// ---------------------------------------------------------------------------
//
// For a Gaussian parent the near-extreme law scales with sigma:
// P_sigma(r) = P_1(r / sigma) and rho_sigma(r) = rho_1(r / sigma) / sigma.
// The profile stores P_1 and rho_1 for one N as piecewise Chebyshev
// interpolants built from exact_cdf / exact_density, which makes mixtures
// with thousands of components cheap to evaluate at many points.

namespace detail {

// Chebyshev interpolation on one panel with points of the second kind,
// t_k = cos(k pi / D); values[k] is the function at t_k.
template <std::size_t D>
std::array<double, D + 1> chebyshev_fit(const std::array<double, D + 1>& values) {
  constexpr double n = static_cast<double>(D);
  std::array<double, D + 1> coeffs{};
  for (std::size_t j = 0; j <= D; ++j) {
    double sum = 0.0;
    for (std::size_t k = 0; k <= D; ++k) {
      const double w = (k == 0 || k == D) ? 0.5 : 1.0;
      sum += w * values[k] * std::cos(std::numbers::pi * static_cast<double>(j * k) / n);
    }
    coeffs[j] = 2.0 / n * sum;
  }
  coeffs[0] *= 0.5;
  coeffs[D] *= 0.5;
  return coeffs;
}

inline double chebyshev_node(std::size_t k, std::size_t degree) {
  return std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(degree));
}

// Clenshaw recurrence at t in [-1, 1].
template <std::size_t D>
double chebyshev_eval(const std::array<double, D + 1>& c, double t) {
  double b1 = 0.0;
  double b2 = 0.0;
  for (std::size_t j = D; j >= 1; --j) {
    const double b0 = 2.0 * t * b1 - b2 + c[j];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + c[0];
}

}  // namespace detail

class GaussianProfile {
 public:
  static constexpr double kPanelWidth = 0.5;
  static constexpr std::size_t kPanels = 48;  // covers [0, 24]
  static constexpr std::size_t kDegree = 24;
  static constexpr double kUpper = kPanelWidth * static_cast<double>(kPanels);

  explicit GaussianProfile(std::size_t n) : n_(n) {
    require_n(n);
    quadrature::Options options;
    options.abs_tol = 1e-13;
    const auto unit = ParentSpec::gaussian(1.0);
    std::array<double, kDegree + 1> cdf_values{};
    std::array<double, kDegree + 1> density_values{};
    for (std::size_t p = 0; p < kPanels; ++p) {
      const double a = kPanelWidth * static_cast<double>(p);
      for (std::size_t k = 0; k <= kDegree; ++k) {
        const double z = a + kPanelWidth * 0.5 * (1.0 - node(k));
        cdf_values[k] = exact_cdf(unit, n, z, options);
        density_values[k] = exact_density(unit, n, z, options);
      }
      fit(cdf_values, cdf_coeffs_[p]);
      fit(density_values, density_coeffs_[p]);
    }
  }

  // Shared, lazily built profile for block size n.
  static std::shared_ptr<const GaussianProfile> get(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, std::shared_ptr<const GaussianProfile>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_shared<const GaussianProfile>(n);
    return slot;
  }

  [[nodiscard]] std::size_t block_size() const noexcept { return n_; }

  // P_1(z).
  [[nodiscard]] double cdf(double z) const {
    if (!(z > 0.0)) return 0.0;
    if (z >= kUpper) return 1.0;
    return std::clamp(evaluate(cdf_coeffs_, z), 0.0, 1.0);
  }

  // rho_1(z).
  [[nodiscard]] double density(double z) const {
    if (z < 0.0 || z >= kUpper) return 0.0;
    return std::max(evaluate(density_coeffs_, z), 0.0);
  }

 private:
  using Coefficients = std::array<double, kDegree + 1>;

  static double node(std::size_t k) { return detail::chebyshev_node(k, kDegree); }

  static void fit(const std::array<double, kDegree + 1>& values, Coefficients& coeffs) {
    coeffs = detail::chebyshev_fit<kDegree>(values);
  }

  static double evaluate(const std::array<Coefficients, kPanels>& table, double z) {
    auto p = static_cast<std::size_t>(z / kPanelWidth);
    p = std::min(p, kPanels - 1);
    const double a = kPanelWidth * static_cast<double>(p);
    // Node k maps to z = a + w (1 - t_k) / 2, so t = 1 - 2 (z - a) / w.
    return detail::chebyshev_eval<kDegree>(table[p], 1.0 - 2.0 * (z - a) / kPanelWidth);
  }

  std::size_t n_;
  std::array<Coefficients, kPanels> cdf_coeffs_{};
  std::array<Coefficients, kPanels> density_coeffs_{};
};

// Fast evaluation of a MixtureModel through the shared Gaussian profile.
// Mixtures with at least kTabulateFrom components also tabulate their CDF,
// so a K-S pass over h (N - 1) distances costs O(h) per table node instead
// of O(h) per distance. On [0, sigma_min / 2] every component lies in the
// profile's first panel and the mixture is a single polynomial of the
// profile's degree in r, held as one Chebyshev panel; above it the table
// runs in s = ln r up to the saturation point.
class MixtureEvaluator {
 public:
  static constexpr std::size_t kTabulateFrom = 256;
  static constexpr std::size_t kDegree = 24;
  static constexpr double kLogPanelWidth = 0.125;

  explicit MixtureEvaluator(const MixtureModel& model, std::size_t workers = 1)
      : profile_(GaussianProfile::get(model.block_size())) {
    inv_sigmas_.reserve(model.components());
    double largest = 0.0;
    double smallest = std::numeric_limits<double>::infinity();
    for (double s : model.sigmas()) {
      inv_sigmas_.push_back(1.0 / s);
      largest = std::max(largest, s);
      smallest = std::min(smallest, s);
    }
    upper_ = largest * GaussianProfile::kUpper;
    scale_ = largest;
    if (inv_sigmas_.size() >= kTabulateFrom) tabulate(smallest, workers);
  }

  [[nodiscard]] double cdf(double r) const {
    if (!(r > 0.0)) return 0.0;
    if (r >= upper_) return 1.0;
    if (!table_.empty() && r < table_lo_r_) {
      const double t = 1.0 - 2.0 * r / table_lo_r_;
      return std::clamp(detail::chebyshev_eval<kDegree>(near_zero_, t), 0.0, 1.0);
    }
    if (!table_.empty()) {
      const double s = std::max(std::log(r) - table_lo_, 0.0);
      auto p = static_cast<std::size_t>(s / kLogPanelWidth);
      p = std::min(p, table_.size() - 1);
      const double a = kLogPanelWidth * static_cast<double>(p);
      const double t = 1.0 - 2.0 * (s - a) / kLogPanelWidth;
      return std::clamp(detail::chebyshev_eval<kDegree>(table_[p], std::clamp(t, -1.0, 1.0)),
                        0.0, 1.0);
    }
    return direct_cdf(r);
  }

  // Sum over components, no table.
  [[nodiscard]] double direct_cdf(double r) const {
    double sum = 0.0;
    for (double inv : inv_sigmas_) sum += profile_->cdf(r * inv);
    return sum / static_cast<double>(inv_sigmas_.size());
  }

  [[nodiscard]] double density(double r) const {
    double sum = 0.0;
    for (double inv : inv_sigmas_) sum += profile_->density(r * inv) * inv;
    return sum / static_cast<double>(inv_sigmas_.size());
  }

  [[nodiscard]] bool tabulated() const noexcept { return !table_.empty(); }

  // Inverse of cdf by bisection; the bracket shrinks below 1e-9 times the
  // largest component sigma.
  [[nodiscard]] double quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("mixture quantile: p must lie in [0, 1]");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return upper_;
    double lo = 0.0;
    double hi = upper_;
    const double tol = 1e-9 * scale_;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < p) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  [[nodiscard]] std::size_t components() const noexcept { return inv_sigmas_.size(); }

 private:
  using Coefficients = std::array<double, kDegree + 1>;

  void tabulate(double smallest, std::size_t workers) {
    static_assert(kDegree >= GaussianProfile::kDegree);
    table_lo_r_ = smallest * GaussianProfile::kPanelWidth;
    table_lo_ = std::log(table_lo_r_);
    std::array<double, kDegree + 1> near_values{};
    for (std::size_t k = 0; k <= kDegree; ++k)
      near_values[k] = direct_cdf(table_lo_r_ * 0.5 * (1.0 - detail::chebyshev_node(k, kDegree)));
    near_zero_ = detail::chebyshev_fit<kDegree>(near_values);
    const double span = std::log(upper_) - table_lo_;
    const auto panels = static_cast<std::size_t>(std::ceil(span / kLogPanelWidth));
    table_.resize(panels);
    parallel_for(panels, workers, [&](std::size_t p) {
      const double a = table_lo_ + kLogPanelWidth * static_cast<double>(p);
      std::array<double, kDegree + 1> values{};
      for (std::size_t k = 0; k <= kDegree; ++k)
        values[k] = direct_cdf(
            std::exp(a + kLogPanelWidth * 0.5 * (1.0 - detail::chebyshev_node(k, kDegree))));
      table_[p] = detail::chebyshev_fit<kDegree>(values);
    });
  }

  std::shared_ptr<const GaussianProfile> profile_;
  std::vector<double> inv_sigmas_;
  double upper_ = 0.0;
  double scale_ = 1.0;
  double table_lo_ = 0.0;
  double table_lo_r_ = 0.0;
  Coefficients near_zero_{};
  std::vector<Coefficients> table_;
};

}  // namespace nearex
