#pragma once

// Model closure: returns drawn from the block-constant volatility model are
// written out as quotes, run through the tick pipeline and compared with
// the mixture built from the recovered block sigmas.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "nearex/market_pipeline.hpp"
#include "nearex/pipeline.hpp"
#include "nearex/synthetic.hpp"
#include "nearex/ticks.hpp"

namespace nearex {

struct ClosureConfig {
  std::size_t h = 500;
  std::size_t n = 25;
  double sigma_lo = 0.005;
  double sigma_hi = 0.03;
  std::size_t events_per_day = 5000;
  double s0 = 30.0;
  std::size_t workers = 1;
};

struct ClosureRun {
  std::uint64_t seed = 0;
  std::size_t blocks = 0;
  double return_recovery_error = 0.0;  // max |recovered - generated| over all returns
  NearExtremeAnalysis max;
  NearExtremeAnalysis min;
};

// Synthetic data are clean quotes, so only the session and crossed-quote
// rules stay on; a 4 sigma move at sigma = 0.03 would trip the jump rule.
inline PipelineConfig closure_pipeline_config(const ClosureConfig& c) {
  PipelineConfig p;
  p.tau = 1;
  p.n = c.n;
  p.workers = c.workers;
  p.filter.drop_jumps = false;
  return p;
}

inline std::string closure_tick_csv(const ClosureConfig& c, std::uint64_t seed,
                                    std::vector<double>* returns_out = nullptr) {
  const auto sigmas = log_uniform_sigmas(c.h, c.sigma_lo, c.sigma_hi, seed);
  const auto returns = model_series(sigmas, c.n, seed, c.workers);
  const auto prices = price_path(returns, c.s0);
  const auto quotes = quotes_from_prices(prices, c.events_per_day);
  std::ostringstream text;
  write_tick_csv(text, quotes);
  if (returns_out) *returns_out = returns;
  return text.str();
}

inline ClosureRun closure_run(const ClosureConfig& c, std::uint64_t seed) {
  std::vector<double> generated;
  std::istringstream in(closure_tick_csv(c, seed, &generated));
  const auto config = closure_pipeline_config(c);
  const auto ingested = ingest_ticks(in, "closure-" + std::to_string(seed), config.filter,
                                     config.tau);
  const auto blocked = block_ingested(ingested, config);

  ClosureRun run;
  run.seed = seed;
  run.blocks = blocked.block_count();
  if (run.blocks != c.h)
    throw NumericalError("closure: recovered " + std::to_string(run.blocks) + " of " +
                             std::to_string(c.h) + " blocks",
                         static_cast<double>(run.blocks));
  for (std::size_t i = 0; i < generated.size() && i < ingested.returns.size(); ++i)
    run.return_recovery_error =
        std::max(run.return_recovery_error, std::abs(ingested.returns[i] - generated[i]));
  run.max = analyze_near_extreme(blocked, ExtremeMode::FromMax, config);
  run.min = analyze_near_extreme(blocked, ExtremeMode::FromMin, config);
  return run;
}

// Largest |empirical - theoretical| / theoretical over Q-Q points
// [first, first + count). Points with a zero theoretical quantile are
// skipped (the relative deviation is undefined there).
inline double qq_relative_deviation(const QQPlotData& qq, std::size_t first, std::size_t count) {
  double worst = 0.0;
  const std::size_t end = std::min(qq.probabilities.size(), first + count);
  for (std::size_t i = first; i < end; ++i) {
    const double t = qq.theoretical_q[i];
    if (!(t > 0.0)) continue;
    worst = std::max(worst, std::abs(qq.empirical_q[i] - t) / t);
  }
  return worst;
}

}  // namespace nearex
