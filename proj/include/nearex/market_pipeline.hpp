#pragma once

// From ticks to blocked tau-lag returns:
//
//   ticks --filter--> quotes in the session window
//         --mid changes--> event-time price series S_k (reset every day)
//         --tau lag--> non-overlapping log-returns ln(S_{(i+1)tau} / S_{i tau})
//         --blocks of N--> per-block sigma_j, maximum and minimum
//
// Ingestion is streaming: only the current day's event series is retained.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nearex/errors.hpp"
#include "nearex/near_extreme.hpp"
#include "nearex/parallel.hpp"
#include "nearex/ticks.hpp"

namespace nearex {

struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

// ---------------------------------------------------------------------------
// Filtering
// ---------------------------------------------------------------------------

struct SessionWindow {
  std::int64_t start = time_of_day(10, 0);
  std::int64_t end = time_of_day(15, 45);

  [[nodiscard]] bool contains(std::int64_t micros_of_day) const noexcept {
    return micros_of_day >= start && micros_of_day <= end;
  }
};

struct FilterConfig {
  SessionWindow session;
  double jump_threshold = 0.10;
  bool enforce_session = true;
  bool drop_crossed = true;
  bool drop_nonpositive = true;
  bool drop_jumps = true;
};

struct FilterStats {
  std::size_t seen = 0;
  std::size_t kept = 0;
  std::size_t outside_session = 0;
  std::size_t crossed = 0;
  std::size_t nonpositive = 0;
  std::size_t jumps = 0;
  std::size_t empty_days = 0;

  FilterStats& operator+=(const FilterStats& o) {
    seen += o.seen;
    kept += o.kept;
    outside_session += o.outside_session;
    crossed += o.crossed;
    nonpositive += o.nonpositive;
    jumps += o.jumps;
    empty_days += o.empty_days;
    return *this;
  }
};

// Record-at-a-time filter for one time-ordered day. The jump rule compares
// the mid with the previous surviving mid of the same day.
class TickFilter {
 public:
  explicit TickFilter(const FilterConfig& config) : config_(config) {}

  void start_day() { previous_mid_.reset(); }

  bool accept(const TickRecord& r) {
    ++stats_.seen;
    if (config_.enforce_session && !config_.session.contains(r.timestamp.micros_of_day)) {
      ++stats_.outside_session;
      return false;
    }
    if (config_.drop_nonpositive &&
        !(r.bid > 0.0 && r.ask > 0.0 && r.trade_price > 0.0 && std::isfinite(r.bid) &&
          std::isfinite(r.ask) && std::isfinite(r.trade_price))) {
      ++stats_.nonpositive;
      return false;
    }
    if (config_.drop_crossed && r.bid > r.ask) {
      ++stats_.crossed;
      return false;
    }
    const double mid = r.mid();
    if (config_.drop_jumps && previous_mid_ &&
        std::abs(mid - *previous_mid_) > config_.jump_threshold * *previous_mid_) {
      ++stats_.jumps;
      return false;
    }
    previous_mid_ = mid;
    ++stats_.kept;
    return true;
  }

  [[nodiscard]] FilterStats& stats() noexcept { return stats_; }
  [[nodiscard]] const FilterStats& stats() const noexcept { return stats_; }

 private:
  FilterConfig config_;
  FilterStats stats_;
  std::optional<double> previous_mid_;
};

// Sorts (stably, by timestamp) when needed and applies the filter day by
// day. Days with no surviving record are reported in `diagnostics`.
inline std::vector<TickRecord> filter_ticks(std::vector<TickRecord> records,
                                            const FilterConfig& config,
                                            Diagnostics* diagnostics = nullptr,
                                            FilterStats* stats = nullptr) {
  const auto by_time = [](const TickRecord& a, const TickRecord& b) {
    return a.timestamp < b.timestamp;
  };
  if (!std::is_sorted(records.begin(), records.end(), by_time))
    std::stable_sort(records.begin(), records.end(), by_time);

  TickFilter filter(config);
  std::vector<TickRecord> out;
  out.reserve(records.size());
  std::size_t i = 0;
  while (i < records.size()) {
    const std::int32_t day = records[i].timestamp.day;
    filter.start_day();
    std::size_t kept = 0;
    for (; i < records.size() && records[i].timestamp.day == day; ++i) {
      if (filter.accept(records[i])) {
        out.push_back(std::move(records[i]));
        ++kept;
      }
    }
    if (kept == 0) {
      ++filter.stats().empty_days;
      if (diagnostics) diagnostics->warn("day " + format_date(day) + ": no records after filtering, skipped");
    }
  }
  if (stats) *stats += filter.stats();
  return out;
}

// ---------------------------------------------------------------------------
// Event time
// ---------------------------------------------------------------------------

struct EventSeries {
  std::vector<double> mids;

  [[nodiscard]] std::size_t event_count() const noexcept { return mids.size(); }
};

// Appends a mid only when it differs from the last appended one.
class EventSeriesBuilder {
 public:
  void push(double bid, double ask) {
    const double mid = 0.5 * (bid + ask);
    if (series_.mids.empty() || mid != series_.mids.back()) series_.mids.push_back(mid);
  }

  [[nodiscard]] const EventSeries& series() const noexcept { return series_; }
  void clear() { series_.mids.clear(); }
  EventSeries take() { return std::exchange(series_, {}); }

 private:
  EventSeries series_;
};

inline EventSeries build_event_series(std::span<const TickRecord> records) {
  EventSeriesBuilder builder;
  for (const auto& r : records) builder.push(r.bid, r.ask);
  return builder.take();
}

// Non-overlapping tau-lag log-returns r_i = ln(S[(i+1) tau] / S[i tau]),
// i = 0 .. floor((L-1)/tau) - 1.
inline void append_returns(const EventSeries& series, std::size_t tau, std::vector<double>& out) {
  if (tau == 0) throw DomainError("compute_returns: tau must be >= 1");
  const std::size_t length = series.mids.size();
  if (length <= tau) return;
  const std::size_t count = (length - 1) / tau;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(std::log(series.mids[(i + 1) * tau] / series.mids[i * tau]));
}

inline std::vector<double> compute_returns(const EventSeries& series, std::size_t tau,
                                           Diagnostics* diagnostics = nullptr) {
  std::vector<double> out;
  append_returns(series, tau, out);
  if (out.empty() && diagnostics)
    diagnostics->warn("event series of length " + std::to_string(series.mids.size()) +
                      " is too short for tau = " + std::to_string(tau));
  return out;
}

// ---------------------------------------------------------------------------
// Blocking
// ---------------------------------------------------------------------------

enum class VarianceConvention {
  ZeroMean,  // mean of squares (no drift)
  Centered,  // sample variance with N-1 denominator
};

inline const char* to_string(VarianceConvention c) {
  return c == VarianceConvention::ZeroMean ? "zero_mean" : "centered";
}

struct ReturnBlock {
  std::vector<double> returns;
  double sigma = 0.0;
  double max = 0.0;
  double min = 0.0;
  bool constant = false;  // all returns equal: every distance is zero
  std::size_t first_day = 0;
  std::size_t last_day = 0;
};

struct BlockedReturns {
  std::size_t tau = 0;
  std::size_t n = 0;
  VarianceConvention convention = VarianceConvention::ZeroMean;
  std::vector<ReturnBlock> blocks;
  std::size_t total_returns = 0;
  std::size_t dropped_tail = 0;
  std::size_t excluded_zero_sigma = 0;

  [[nodiscard]] std::size_t block_count() const noexcept { return blocks.size(); }
};

inline double block_sigma(std::span<const double> block, VarianceConvention convention) {
  const double n = static_cast<double>(block.size());
  if (convention == VarianceConvention::ZeroMean) {
    double sq = 0.0;
    for (double r : block) sq += r * r;
    return std::sqrt(sq / n);
  }
  double mean = 0.0;
  for (double r : block) mean += r;
  mean /= n;
  double ss = 0.0;
  for (double r : block) ss += (r - mean) * (r - mean);
  return std::sqrt(ss / (n - 1.0));
}

// Consecutive blocks of exactly N returns. Blocks may span days; the
// optional `day_starts` (index of each day's first return) only annotates
// them. Blocks with sigma = 0 are excluded and counted.
inline BlockedReturns block_returns(std::span<const double> returns, std::size_t n,
                                    VarianceConvention convention = VarianceConvention::ZeroMean,
                                    std::span<const std::size_t> day_starts = {},
                                    Diagnostics* diagnostics = nullptr, std::size_t workers = 1) {
  if (n < 2) throw DomainError("block_returns: N must be >= 2");
  BlockedReturns out;
  out.n = n;
  out.convention = convention;
  out.total_returns = returns.size();
  const std::size_t h = returns.size() / n;
  out.dropped_tail = returns.size() - h * n;
  if (h == 0 && diagnostics)
    diagnostics->warn("only " + std::to_string(returns.size()) + " returns, fewer than N = " +
                      std::to_string(n) + ": no blocks");

  std::vector<ReturnBlock> all(h);
  parallel_for(h, workers, [&](std::size_t j) {
    auto& b = all[j];
    const auto slice = returns.subspan(j * n, n);
    b.returns.assign(slice.begin(), slice.end());
    b.sigma = block_sigma(slice, convention);
    const auto [lo, hi] = std::minmax_element(slice.begin(), slice.end());
    b.min = *lo;
    b.max = *hi;
    b.constant = b.min == b.max;
    if (!day_starts.empty()) {
      auto day_of = [&](std::size_t index) {
        const auto it = std::upper_bound(day_starts.begin(), day_starts.end(), index);
        return static_cast<std::size_t>(it - day_starts.begin()) - 1;
      };
      b.first_day = day_of(j * n);
      b.last_day = day_of(j * n + n - 1);
    }
  });

  out.blocks.reserve(h);
  std::size_t constant = 0;
  for (auto& b : all) {
    if (!(b.sigma > 0.0)) {
      ++out.excluded_zero_sigma;
      continue;
    }
    if (b.constant) ++constant;
    out.blocks.push_back(std::move(b));
  }
  if (diagnostics && out.excluded_zero_sigma > 0)
    diagnostics->warn(std::to_string(out.excluded_zero_sigma) +
                      " block(s) with zero variance excluded");
  if (diagnostics && constant > 0)
    diagnostics->warn(std::to_string(constant) + " constant block(s) retained (all distances zero)");
  return out;
}

inline EmpiricalNearExtreme aggregate_near_extreme(const BlockedReturns& blocked, ExtremeMode mode) {
  if (blocked.blocks.empty()) throw DomainError("aggregate_near_extreme: no blocks");
  EmpiricalNearExtreme out;
  out.block_count = blocked.blocks.size();
  out.per_block_size = blocked.n;
  out.mode = mode;
  out.distances.reserve(out.block_count * (blocked.n - 1));
  for (const auto& b : blocked.blocks) append_near_extreme(b.returns, mode, out.distances);
  return out;
}

inline MixtureModel fit_mixture(const BlockedReturns& blocked) {
  if (blocked.blocks.empty()) throw DomainError("fit_mixture: no blocks");
  std::vector<double> sigmas;
  sigmas.reserve(blocked.blocks.size());
  for (const auto& b : blocked.blocks) sigmas.push_back(b.sigma);
  return MixtureModel(std::move(sigmas), blocked.n);
}

// ---------------------------------------------------------------------------
// Streaming ingestion
// ---------------------------------------------------------------------------

struct IngestStats {
  FilterStats filter;
  std::size_t events = 0;
  std::size_t days = 0;
  Diagnostics diagnostics;

  void merge(IngestStats&& other) {
    filter += other.filter;
    events += other.events;
    days += other.days;
    for (auto& w : other.diagnostics.warnings) diagnostics.warn(std::move(w));
  }
};

// Reads one tick CSV stream, filters it day by day, builds each day's event
// series and hands its tau-lag returns to `on_day(day, returns)`. Only the
// current day's series is held. Timestamps must be nondecreasing.
template <class DaySink>
IngestStats ingest_ticks(std::istream& in, const std::string& source, const FilterConfig& config,
                         std::size_t tau, DaySink&& on_day) {
  if (tau == 0) throw DomainError("ingest: tau must be >= 1");
  TickCsvReader reader(in, source);
  TickFilter filter(config);
  EventSeriesBuilder builder;
  IngestStats out;
  std::vector<double> returns;

  bool have_day = false;
  std::int32_t day = 0;
  std::size_t kept_today = 0;
  Timestamp last{};

  auto close_day = [&] {
    if (!have_day) return;
    ++out.days;
    if (kept_today == 0) {
      ++filter.stats().empty_days;
      out.diagnostics.warn(source + ": day " + format_date(day) +
                           ": no records after filtering, skipped");
    }
    const auto& series = builder.series();
    out.events += series.event_count();
    returns.clear();
    append_returns(series, tau, returns);
    if (!returns.empty()) {
      on_day(day, std::span<const double>(returns));
    } else if (kept_today > 0) {
      out.diagnostics.warn(source + ": day " + format_date(day) + ": " +
                           std::to_string(series.event_count()) +
                           " events, too few for tau = " + std::to_string(tau));
    }
    builder.clear();
  };

  TickRecord record;
  while (reader.next(record)) {
    if (have_day && record.timestamp < last)
      reader.fail("timestamp " + format_timestamp(record.timestamp) +
                  " is earlier than the previous record");
    last = record.timestamp;
    if (!have_day || record.timestamp.day != day) {
      close_day();
      have_day = true;
      day = record.timestamp.day;
      kept_today = 0;
      filter.start_day();
    }
    if (filter.accept(record)) {
      ++kept_today;
      builder.push(record.bid, record.ask);
    }
  }
  close_day();
  out.filter = filter.stats();
  return out;
}

struct IngestResult {
  std::vector<double> returns;
  std::vector<std::size_t> day_starts;  // index of each day's first return
  std::vector<std::int32_t> days;       // matching calendar days
  IngestStats stats;

  void append(IngestResult&& other) {
    const std::size_t offset = returns.size();
    returns.insert(returns.end(), other.returns.begin(), other.returns.end());
    for (std::size_t s : other.day_starts) day_starts.push_back(s + offset);
    days.insert(days.end(), other.days.begin(), other.days.end());
    stats.merge(std::move(other.stats));
  }
};

inline IngestResult ingest_ticks(std::istream& in, const std::string& source,
                                 const FilterConfig& config, std::size_t tau) {
  IngestResult out;
  out.stats = ingest_ticks(in, source, config, tau,
                           [&](std::int32_t day, std::span<const double> returns) {
                             out.day_starts.push_back(out.returns.size());
                             out.days.push_back(day);
                             out.returns.insert(out.returns.end(), returns.begin(), returns.end());
                           });
  return out;
}

}  // namespace nearex
