#pragma once

// Goodness-of-fit tools for near-extreme samples: one-sample
// Kolmogorov-Smirnov with fixed asymptotic critical values, Q-Q data,
// the empirical CDF and density histograms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "nearex/errors.hpp"
#include "nearex/parallel.hpp"

namespace nearex {

// Critical values of sqrt(n) D (Stephens 1974).
inline constexpr double kKsCritical5 = 1.333;
inline constexpr double kKsCritical1 = 1.625;

struct KSResult {
  double d = 0.0;
  std::size_t sample_size = 0;
  double scaled = 0.0;
  bool reject_5pct = false;
  bool reject_1pct = false;
};

// Verdict for a sup-distance d over n points. The null is rejected when the
// scaled statistic is strictly larger than the critical value.
inline KSResult ks_verdict(double d, std::size_t n) {
  KSResult r;
  r.d = d;
  r.sample_size = n;
  r.scaled = std::sqrt(static_cast<double>(n)) * d;
  r.reject_5pct = r.scaled > kKsCritical5;
  r.reject_1pct = r.scaled > kKsCritical1;
  return r;
}

// sup_r |F(r) - F_e(r)| evaluated on both sides of every ECDF jump. The
// CDF values at the sample points are computed in parallel; the max
// reduction does not depend on the worker count.
template <class Cdf>
KSResult ks_statistic(Cdf&& theoretical_cdf, std::span<const double> sample,
                      std::size_t workers = 1) {
  if (sample.empty()) throw DomainError("ks_statistic: empty sample");
  std::vector<double> sorted;
  if (!std::is_sorted(sample.begin(), sample.end())) {
    sorted.assign(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    sample = sorted;
  }
  const std::size_t n = sample.size();
  const double nn = static_cast<double>(n);
  std::vector<double> values(n);
  parallel_for_chunks(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) values[i] = theoretical_cdf(sample[i]);
  });
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = values[i];
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / nn));
    d = std::max(d, std::abs(f - static_cast<double>(i) / nn));
  }
  return ks_verdict(d, n);
}

// Right-continuous step function of a sample.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> sample) : sorted_(std::move(sample)) {
    if (sorted_.empty()) throw DomainError("ecdf: empty sample");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double r) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), r);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  [[nodiscard]] const std::vector<double>& sorted() const noexcept { return sorted_; }

 private:
  std::vector<double> sorted_;
};

inline EmpiricalCdf ecdf(std::span<const double> sample) {
  return EmpiricalCdf(std::vector<double>(sample.begin(), sample.end()));
}

// Order statistic at 1-based index ceil(p n); p = 0 gives the minimum.
inline double empirical_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("empirical_quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("empirical_quantile: p must lie in [0, 1]");
  const double n = static_cast<double>(sorted.size());
  // Guard against p n landing a hair above an integer (0.02 * 12000).
  auto k = static_cast<std::size_t>(std::ceil(p * n * (1.0 - 1e-12)));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

struct QQPlotData {
  std::vector<double> probabilities;
  std::vector<double> theoretical_q;
  std::vector<double> empirical_q;
};

// 0, 0.02, ..., 0.98.
inline std::vector<double> default_qq_grid() {
  std::vector<double> grid(50);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i) / 50.0;
  return grid;
}

template <class Inverse>
QQPlotData qq_data(Inverse&& theoretical_inverse, std::span<const double> sample,
                   std::span<const double> grid) {
  if (sample.empty()) throw DomainError("qq_data: empty sample");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] < 1.0)) throw DomainError("qq_data: grid must lie in [0, 1)");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw DomainError("qq_data: grid must be strictly increasing");
  }
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());

  QQPlotData out;
  out.probabilities.assign(grid.begin(), grid.end());
  out.theoretical_q.reserve(grid.size());
  out.empirical_q.reserve(grid.size());
  for (double p : grid) {
    out.theoretical_q.push_back(theoretical_inverse(p));
    out.empirical_q.push_back(empirical_quantile(sorted, p));
  }
  return out;
}

struct HistogramBin {
  double center = 0.0;
  double density = 0.0;
};

// Density histogram with bins [origin + k w, origin + (k+1) w) covering the
// data range, empty bins included. Sum of density * width is one.
inline std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width,
                                           double origin = 0.0) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width))
    throw DomainError("histogram: bin width must be > 0");
  if (values.empty()) return {};
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double first = std::floor((*min_it - origin) / bin_width);
  const double last = std::floor((*max_it - origin) / bin_width);
  constexpr double kMaxBins = 5e7;
  if (!(last - first < kMaxBins)) throw DomainError("histogram: too many bins for the data range");
  const auto bins = static_cast<std::size_t>(last - first) + 1;

  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    auto k = static_cast<std::ptrdiff_t>(std::floor((v - origin) / bin_width) - first);
    k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    ++counts[static_cast<std::size_t>(k)];
  }
  const double norm = 1.0 / (static_cast<double>(values.size()) * bin_width);
  std::vector<HistogramBin> out(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    out[k].center = origin + (first + static_cast<double>(k) + 0.5) * bin_width;
    out[k].density = static_cast<double>(counts[k]) * norm;
  }
  return out;
}

// Freedman-Diaconis width 2 IQR n^(-1/3); falls back to the range / sqrt(n)
// when the IQR is zero.
inline double freedman_diaconis_width(std::span<const double> values) {
  if (values.size() < 2) throw DomainError("freedman_diaconis_width: needs two values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = empirical_quantile(sorted, 0.75) - empirical_quantile(sorted, 0.25);
  const double n = static_cast<double>(sorted.size());
  double width = 2.0 * iqr / std::cbrt(n);
  if (!(width > 0.0)) width = (sorted.back() - sorted.front()) / std::sqrt(n);
  if (!(width > 0.0)) width = 1.0;
  return width;
}

}  // namespace nearex
