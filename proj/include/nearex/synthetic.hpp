#pragma once

// Monte Carlo drivers: block maxima against their finite-sample and limiting
// laws, the block-constant volatility model r_i = sigma_j eps_i, price
// discretization and synthetic tick streams.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <streambuf>
#include <string>
#include <vector>

#include "nearex/distributions.hpp"
#include "nearex/errors.hpp"
#include "nearex/evs.hpp"
#include "nearex/parallel.hpp"
#include "nearex/random.hpp"
#include "nearex/stats_tests.hpp"
#include "nearex/ticks.hpp"

namespace nearex {

// ---------------------------------------------------------------------------
// Maxima experiment
// ---------------------------------------------------------------------------

struct MaximaExperiment {
  ParentSpec spec = ParentSpec::gaussian(1.0);
  std::size_t n = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  LimitFamily family = LimitFamily::gumbel();
  NormalizingWeights weights;

  std::vector<double> maxima;  // in sample order

  // Freedman-Diaconis histogram of the maxima.
  double bin_width = 0.0;
  std::vector<HistogramBin> histogram;

  // Shared grid for the two theoretical densities.
  std::vector<double> grid;
  std::vector<double> finite_sample_density;
  std::vector<double> limiting_density;

  KSResult ks_finite_sample;
  KSResult ks_limit;
};

inline constexpr std::size_t kCurvePoints = 400;

// Sample s draws its N values from substream s of `seed`.
inline MaximaExperiment maxima_experiment(const ParentSpec& spec, std::size_t n,
                                          std::size_t samples, std::uint64_t seed,
                                          std::size_t workers = 1) {
  require_block_size(n, 2, "maxima_experiment");
  if (samples == 0) throw DomainError("maxima_experiment: samples must be >= 1");

  MaximaExperiment out;
  out.spec = spec;
  out.n = n;
  out.samples = samples;
  out.seed = seed;
  out.family = classify_domain(spec);
  out.weights = weights(spec, out.family, n);

  out.maxima.resize(samples);
  parallel_for_chunks(samples, workers, [&](std::size_t begin, std::size_t end) {
    std::vector<double> block(n);
    for (std::size_t s = begin; s < end; ++s) {
      auto engine = make_engine(seed, s);
      sample_into(spec, engine, block);
      out.maxima[s] = *std::max_element(block.begin(), block.end());
    }
  });

  if (samples >= 2) {
    out.bin_width = freedman_diaconis_width(out.maxima);
    out.histogram = histogram(out.maxima, out.bin_width);
  }

  // Grid between the 1e-4 and 1 - 1e-4 quantiles of G^N, widened to cover
  // the sample.
  auto max_quantile = [&](double p) {
    return upper_quantile(spec, -std::expm1(std::log(p) / static_cast<double>(n)));
  };
  const auto [lo_it, hi_it] = std::minmax_element(out.maxima.begin(), out.maxima.end());
  const double lo = std::min(max_quantile(1e-4), *lo_it);
  const double hi = std::max(max_quantile(1.0 - 1e-4), *hi_it);
  out.grid.resize(kCurvePoints);
  out.finite_sample_density.resize(kCurvePoints);
  out.limiting_density.resize(kCurvePoints);
  for (std::size_t i = 0; i < kCurvePoints; ++i) {
    const double x =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kCurvePoints - 1);
    out.grid[i] = x;
    out.finite_sample_density[i] = finite_sample_max_pdf(spec, n, x);
    out.limiting_density[i] = rescaled_limit_density(out.family, out.weights, x);
  }

  out.ks_finite_sample = ks_statistic(
      [&](double x) { return finite_sample_max_cdf(spec, n, x); }, out.maxima, workers);
  out.ks_limit = ks_statistic(
      [&](double x) { return rescaled_limit_cdf(out.family, out.weights, x); }, out.maxima,
      workers);
  return out;
}

// ---------------------------------------------------------------------------
// Block-constant volatility model
// ---------------------------------------------------------------------------

// Block j holds N draws sigma_j eps, eps standard normal, from substream j.
inline std::vector<double> model_series(std::span<const double> sigma_path, std::size_t n,
                                        std::uint64_t seed, std::size_t workers = 1) {
  if (n == 0) throw DomainError("model_series: N must be >= 1");
  for (double s : sigma_path)
    if (!(s > 0.0) || !std::isfinite(s))
      throw ParameterError("model_series: every sigma must be finite and > 0");
  std::vector<double> out(sigma_path.size() * n);
  parallel_for(sigma_path.size(), workers, [&](std::size_t j) {
    auto engine = make_engine(seed, j);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) out[j * n + i] = sigma_path[j] * normal(engine);
  });
  return out;
}

// h volatilities log-uniform on [lo, hi].
inline std::vector<double> log_uniform_sigmas(std::size_t h, double lo, double hi,
                                              std::uint64_t seed) {
  if (!(lo > 0.0 && hi >= lo)) throw ParameterError("log_uniform_sigmas: need 0 < lo <= hi");
  auto engine = make_engine(seed, 0x5167'0a7bULL);
  std::vector<double> out(h);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (double& s : out) s = std::exp(a + (b - a) * open_unit(engine));
  return out;
}

// Rounds every price to the nearest multiple of `tick`.
inline std::vector<double> discretize(std::span<const double> prices, double tick) {
  if (!(tick > 0.0) || !std::isfinite(tick)) throw DomainError("discretize: tick must be > 0");
  std::vector<double> out(prices.size());
  for (std::size_t i = 0; i < prices.size(); ++i) out[i] = std::round(prices[i] / tick) * tick;
  return out;
}

inline std::vector<double> price_path(std::span<const double> returns, double s0) {
  std::vector<double> out;
  out.reserve(returns.size() + 1);
  double log_s = std::log(s0);
  out.push_back(s0);
  for (double r : returns) {
    log_s += r;
    out.push_back(std::exp(log_s));
  }
  return out;
}

// Quotes whose mids follow `prices`, spread over trading days of at most
// `events_per_day` quotes inside [session_start, session_end]. Each day
// opens with the previous day's closing mid so no return is lost to the
// daily reset of the event series.
inline std::vector<TickRecord> quotes_from_prices(std::span<const double> prices,
                                                  std::size_t events_per_day = 10000,
                                                  std::int32_t first_day = 13573,  // 2007-03-01
                                                  std::int64_t session_start = time_of_day(10, 0),
                                                  std::int64_t session_end = time_of_day(15, 45),
                                                  double half_spread = 5e-5) {
  if (events_per_day < 2) throw DomainError("quotes_from_prices: events_per_day must be >= 2");
  std::vector<TickRecord> out;
  if (prices.empty()) return out;
  const std::size_t per_day = events_per_day;
  const std::int64_t span = session_end - session_start;
  std::size_t i = 0;
  std::int32_t day = first_day;
  while (true) {
    const std::size_t count = std::min(per_day, prices.size() - i);
    const std::int64_t step = span / static_cast<std::int64_t>(per_day);
    for (std::size_t k = 0; k < count; ++k) {
      const double s = prices[i + k];
      TickRecord r;
      r.timestamp = Timestamp{day, session_start + static_cast<std::int64_t>(k) * step};
      r.bid = s * (1.0 - half_spread);
      r.ask = s * (1.0 + half_spread);
      r.trade_price = s;
      out.push_back(std::move(r));
    }
    i += count - 1;
    if (i + 1 >= prices.size()) break;
    ++day;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic tick streams
// ---------------------------------------------------------------------------

struct TickStreamConfig {
  std::size_t records = 1'000'000;
  std::size_t records_per_day = 100'000;
  std::uint64_t seed = 1;
  std::int64_t start_cents = 3000;
  std::int32_t first_day = 13573;  // 2007-03-01
};

// Integer-cent quote stream for throughput and determinism runs. About a
// third of the records leave the mid unchanged; a few fall outside the
// session or are crossed so that the filter has work to do.
class TickStreamGenerator {
 public:
  explicit TickStreamGenerator(const TickStreamConfig& config)
      : config_(config), engine_(make_engine(config.seed)), mid_cents_(config.start_cents * 2) {
    if (config.records_per_day == 0) throw DomainError("tick stream: records_per_day must be >= 1");
  }

  [[nodiscard]] bool done() const noexcept {
    return header_done_ && emitted_ >= config_.records;
  }

  // Appends the header (first call) or the next record as one CSV line.
  void append_line(std::string& out) {
    if (!header_done_) {
      out.append(kTickCsvHeader).push_back('\n');
      header_done_ = true;
      return;
    }
    const std::size_t in_day = emitted_ % config_.records_per_day;
    const auto day = config_.first_day + static_cast<std::int32_t>(emitted_ / config_.records_per_day);
    // 09:45 to 16:00 so a few percent of the records fall outside the session.
    constexpr std::int64_t kOpen = time_of_day(9, 45);
    constexpr std::int64_t kClose = time_of_day(16, 0);
    const std::int64_t micros =
        kOpen + (kClose - kOpen) * static_cast<std::int64_t>(in_day) /
                    static_cast<std::int64_t>(config_.records_per_day);
    const std::uint64_t u = engine_();
    const unsigned move = static_cast<unsigned>(u % 6);
    // Half-cent mid steps: bid or ask moves by one cent.
    if (move == 0 && mid_cents_ > 400) mid_cents_ -= 1;
    if (move == 1) mid_cents_ += 1;
    if (move == 2 && mid_cents_ > 400) mid_cents_ -= 2;
    if (move == 3) mid_cents_ += 2;
    const std::int64_t bid = mid_cents_ / 2;
    std::int64_t ask = mid_cents_ - bid;
    if (ask == bid) ask += 1;
    std::int64_t shown_bid = bid;
    std::int64_t shown_ask = ask;
    if ((u >> 32) % 1000 == 0) std::swap(shown_bid, shown_ask);  // crossed misprint
    ++emitted_;

    append_timestamp(out, day, micros);
    out.push_back(',');
    append_cents(out, shown_bid);
    out.push_back(',');
    append_cents(out, shown_ask);
    out.push_back(',');
    append_cents(out, (u >> 40) % 2 == 0 ? bid : ask);
    out.push_back('\n');
  }

 private:
  void append_timestamp(std::string& out, std::int32_t day, std::int64_t micros) {
    if (day != cached_day_) {
      cached_day_ = day;
      cached_date_ = format_date(day);
    }
    const std::int64_t ms = micros / 1000;
    char buf[16];
    const auto two = [&](std::size_t at, std::int64_t v) {
      buf[at] = static_cast<char>('0' + v / 10);
      buf[at + 1] = static_cast<char>('0' + v % 10);
    };
    two(0, ms / 3'600'000);
    buf[2] = ':';
    two(3, ms / 60'000 % 60);
    buf[5] = ':';
    two(6, ms / 1000 % 60);
    buf[8] = '.';
    const std::int64_t frac = ms % 1000;
    buf[9] = static_cast<char>('0' + frac / 100);
    buf[10] = static_cast<char>('0' + frac / 10 % 10);
    buf[11] = static_cast<char>('0' + frac % 10);
    out.append(cached_date_).push_back('T');
    out.append(buf, 12);
  }

  static void append_cents(std::string& out, std::int64_t cents) {
    char buf[24];
    auto res = std::to_chars(buf, buf + sizeof buf, cents / 100);
    *res.ptr++ = '.';
    *res.ptr++ = static_cast<char>('0' + cents % 100 / 10);
    *res.ptr++ = static_cast<char>('0' + cents % 10);
    out.append(buf, res.ptr);
  }

  TickStreamConfig config_;
  Engine engine_;
  std::int64_t mid_cents_;  // twice the mid, in cents
  std::size_t emitted_ = 0;
  bool header_done_ = false;
  std::int32_t cached_day_ = -1;
  std::string cached_date_;
};

// Input stream buffer that generates the CSV text on demand, so large
// synthetic inputs never touch the disk.
class TickStreamBuf : public std::streambuf {
 public:
  explicit TickStreamBuf(const TickStreamConfig& config) : generator_(config) {
    buffer_.reserve(kChunk + 128);
  }

 protected:
  int_type underflow() override {
    if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
    buffer_.clear();
    while (buffer_.size() < kChunk && !generator_.done()) generator_.append_line(buffer_);
    if (buffer_.empty()) return traits_type::eof();
    setg(buffer_.data(), buffer_.data(), buffer_.data() + buffer_.size());
    return traits_type::to_int_type(*gptr());
  }

 private:
  static constexpr std::size_t kChunk = 1 << 20;
  TickStreamGenerator generator_;
  std::string buffer_;
};

}  // namespace nearex
