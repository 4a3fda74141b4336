#pragma once

// End-to-end runs: tick files -> BlockedReturns -> pooled near-extreme
// distances compared with the Gaussian mixture built from the block sigmas.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "nearex/errors.hpp"
#include "nearex/io.hpp"
#include "nearex/market_pipeline.hpp"
#include "nearex/near_extreme.hpp"
#include "nearex/parallel.hpp"
#include "nearex/stats_tests.hpp"

namespace nearex {

struct PipelineConfig {
  FilterConfig filter;
  std::size_t tau = 1;
  std::size_t n = 0;  // required
  VarianceConvention convention = VarianceConvention::ZeroMean;
  std::size_t workers = 1;
  double histogram_bin = 1e-4;
  std::size_t curve_points = 200;
  std::string symbol;  // defaults to the first input's file stem
};

namespace detail {
inline std::string format_time_of_day(std::int64_t micros) {
  const std::int64_t s = micros / kMicrosPerSecond;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", static_cast<long long>(s / 3600),
                static_cast<long long>(s / 60 % 60), static_cast<long long>(s % 60));
  return buf;
}
}  // namespace detail

// Unknown keys are rejected so that typos do not pass silently.
inline PipelineConfig pipeline_config_from_json(const Json& j) {
  if (!j.is_object()) throw ParameterError("config: expected a JSON object");
  PipelineConfig c;
  for (const auto& [key, value] : j.items()) {
    auto number = [&] {
      if (!value.is_number()) throw ParameterError("config: '" + key + "' must be a number");
      return value.get<double>();
    };
    auto count = [&] {
      if (!value.is_number_unsigned())
        throw ParameterError("config: '" + key + "' must be a nonnegative integer");
      return value.get<std::size_t>();
    };
    auto flag = [&] {
      if (!value.is_boolean()) throw ParameterError("config: '" + key + "' must be true or false");
      return value.get<bool>();
    };
    auto clock = [&] {
      std::int64_t t = 0;
      if (!value.is_string() || !parse_time_of_day(value.get<std::string>(), t))
        throw ParameterError("config: '" + key + "' must be \"HH:MM[:SS]\"");
      return t;
    };
    if (key == "session_start") {
      c.filter.session.start = clock();
    } else if (key == "session_end") {
      c.filter.session.end = clock();
    } else if (key == "jump_threshold") {
      c.filter.jump_threshold = number();
    } else if (key == "drop_crossed") {
      c.filter.drop_crossed = flag();
    } else if (key == "drop_nonpositive") {
      c.filter.drop_nonpositive = flag();
    } else if (key == "drop_jumps") {
      c.filter.drop_jumps = flag();
    } else if (key == "enforce_session") {
      c.filter.enforce_session = flag();
    } else if (key == "tau") {
      c.tau = count();
    } else if (key == "N") {
      c.n = count();
    } else if (key == "variance_convention") {
      const auto v = value.is_string() ? value.get<std::string>() : std::string();
      if (v == "zero_mean") {
        c.convention = VarianceConvention::ZeroMean;
      } else if (v == "centered") {
        c.convention = VarianceConvention::Centered;
      } else {
        throw ParameterError("config: variance_convention must be \"zero_mean\" or \"centered\"");
      }
    } else if (key == "workers") {
      c.workers = count();
    } else if (key == "histogram_bin") {
      c.histogram_bin = number();
    } else if (key == "curve_points") {
      c.curve_points = count();
    } else if (key == "symbol") {
      if (!value.is_string()) throw ParameterError("config: 'symbol' must be a string");
      c.symbol = value.get<std::string>();
    } else {
      throw ParameterError("config: unknown key '" + key + "'");
    }
  }
  return c;
}

inline void validate(const PipelineConfig& c) {
  if (c.tau == 0) throw ParameterError("config: tau must be >= 1");
  if (c.n < 2) throw ParameterError("config: N must be >= 2");
  if (c.workers == 0) throw ParameterError("config: workers must be >= 1");
  if (!(c.histogram_bin > 0.0)) throw ParameterError("config: histogram_bin must be > 0");
  if (c.curve_points < 2) throw ParameterError("config: curve_points must be >= 2");
  if (!(c.filter.jump_threshold > 0.0))
    throw ParameterError("config: jump_threshold must be > 0");
  if (c.filter.session.end < c.filter.session.start)
    throw ParameterError("config: session_end is before session_start");
}

inline Json to_json(const PipelineConfig& c) {
  return {{"session_start", detail::format_time_of_day(c.filter.session.start)},
          {"session_end", detail::format_time_of_day(c.filter.session.end)},
          {"jump_threshold", c.filter.jump_threshold},
          {"enforce_session", c.filter.enforce_session},
          {"drop_crossed", c.filter.drop_crossed},
          {"drop_nonpositive", c.filter.drop_nonpositive},
          {"drop_jumps", c.filter.drop_jumps},
          {"tau", c.tau},
          {"N", c.n},
          {"variance_convention", to_string(c.convention)},
          {"histogram_bin", c.histogram_bin},
          {"curve_points", c.curve_points},
          {"symbol", c.symbol}};
}

// ---------------------------------------------------------------------------
// Ingestion and blocking
// ---------------------------------------------------------------------------

// Files are ingested in parallel and concatenated in the order given.
inline IngestResult ingest_files(const std::vector<std::filesystem::path>& paths,
                                 const PipelineConfig& config) {
  std::vector<IngestResult> parts(paths.size());
  parallel_for(paths.size(), config.workers, [&](std::size_t i) {
    std::ifstream in(paths[i], std::ios::binary);
    if (!in) throw DataError(paths[i].string(), 0, "cannot open input file");
    parts[i] = ingest_ticks(in, paths[i].string(), config.filter, config.tau);
  });
  IngestResult out;
  for (auto& p : parts) out.append(std::move(p));
  return out;
}

inline BlockedReturns block_ingested(const IngestResult& ingested, const PipelineConfig& config,
                                     Diagnostics* diagnostics = nullptr) {
  auto blocked = block_returns(ingested.returns, config.n, config.convention, ingested.day_starts,
                               diagnostics, config.workers);
  blocked.tau = config.tau;
  return blocked;
}

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

struct NearExtremeAnalysis {
  ExtremeMode mode = ExtremeMode::FromMax;
  EmpiricalNearExtreme empirical;
  KSResult ks;
  QQPlotData qq;
  std::vector<HistogramBin> histogram;
  std::vector<double> curve_r;
  std::vector<double> model_cdf;
  std::vector<double> empirical_cdf;
  std::vector<double> model_density;
};

inline NearExtremeAnalysis analyze_near_extreme(const BlockedReturns& blocked, ExtremeMode mode,
                                                const PipelineConfig& config) {
  NearExtremeAnalysis out;
  out.mode = mode;
  out.empirical = aggregate_near_extreme(blocked, mode);
  const MixtureEvaluator model(fit_mixture(blocked), config.workers);

  auto sorted = out.empirical.distances;
  std::sort(sorted.begin(), sorted.end());
  out.ks = ks_statistic([&](double r) { return model.cdf(r); }, sorted, config.workers);
  const auto grid = default_qq_grid();
  out.qq = qq_data([&](double p) { return model.quantile(p); }, sorted, grid);
  out.histogram = histogram(sorted, config.histogram_bin);

  const EmpiricalCdf ecdf_fn(sorted);
  const std::size_t points = config.curve_points;
  const double top = sorted.back() > 0.0 ? sorted.back() : 1.0;
  out.curve_r.resize(points);
  out.model_cdf.resize(points);
  out.empirical_cdf.resize(points);
  out.model_density.resize(points);
  parallel_for(points, config.workers, [&](std::size_t i) {
    const double r = top * static_cast<double>(i) / static_cast<double>(points - 1);
    out.curve_r[i] = r;
    out.model_cdf[i] = model.cdf(r);
    out.empirical_cdf[i] = ecdf_fn(r);
    out.model_density[i] = model.density(r);
  });
  return out;
}

inline std::string verdict(const KSResult& r) {
  if (r.reject_1pct) return "fail 1%";
  if (r.reject_5pct) return "fail 5%";
  return "pass";
}

// ---------------------------------------------------------------------------
// Full run and its artifacts
// ---------------------------------------------------------------------------

struct PipelineRun {
  std::string symbol;
  PipelineConfig config;
  std::vector<std::string> inputs;
  IngestResult ingested;
  BlockedReturns blocked;
  NearExtremeAnalysis analysis;
};

inline PipelineRun run_pipeline(const std::vector<std::filesystem::path>& paths,
                                PipelineConfig config, ExtremeMode mode) {
  validate(config);
  if (paths.empty()) throw ParameterError("pipeline: no input files");
  PipelineRun run;
  run.symbol = config.symbol.empty() ? paths.front().stem().string() : config.symbol;
  config.symbol = run.symbol;
  run.config = config;
  for (const auto& p : paths) run.inputs.push_back(p.string());
  run.ingested = ingest_files(paths, config);
  run.blocked = block_ingested(run.ingested, config, &run.ingested.stats.diagnostics);
  if (run.blocked.blocks.empty())
    throw DataError(run.inputs.front(), 0,
                    "no complete block of N = " + std::to_string(config.n) + " returns (" +
                        std::to_string(run.ingested.returns.size()) + " returns in total)");
  run.analysis = analyze_near_extreme(run.blocked, mode, config);
  return run;
}

inline std::vector<std::string> pipeline_artifacts(ExtremeMode mode) {
  const std::string m = to_string(mode);
  return {"blocked_returns.json",    "near_extreme_" + m + ".json", "distances_" + m + ".csv",
          "mixture_curve_" + m + ".csv", "ks_" + m + ".json",         "qq_" + m + ".json",
          "qq_" + m + ".csv",         "histogram_" + m + ".csv"};
}

// Everything is staged in memory and committed atomically, run_<mode>.json
// last in the batch.
inline void write_pipeline_outputs(const PipelineRun& run, const std::filesystem::path& dir) {
  const auto& a = run.analysis;
  const std::string m = to_string(a.mode);
  OutputBatch batch(dir);
  batch.add("blocked_returns.json",
            dump(to_json(run.blocked, std::span<const std::int32_t>(run.ingested.days))));
  batch.add("near_extreme_" + m + ".json", dump(to_json(a.empirical)));
  batch.add("distances_" + m + ".csv", csv_table({"r"}, {a.empirical.distances}));
  batch.add("mixture_curve_" + m + ".csv",
            csv_table({"r", "model_cdf", "empirical_cdf", "model_density"},
                      {a.curve_r, a.model_cdf, a.empirical_cdf, a.model_density}));
  batch.add("ks_" + m + ".json", dump(to_json(a.ks)));
  batch.add("qq_" + m + ".json", dump(to_json(a.qq)));
  batch.add("qq_" + m + ".csv", qq_csv(a.qq));
  batch.add("histogram_" + m + ".csv", histogram_csv(a.histogram));

  Json summary = {{"symbol", run.symbol},
                  {"N", run.config.n},
                  {"tau", run.config.tau},
                  {"mode", m},
                  {"block_count", run.blocked.block_count()},
                  {"sample_size", a.ks.sample_size},
                  {"scaled_ks", a.ks.scaled},
                  {"verdict", verdict(a.ks)},
                  {"ks", to_json(a.ks)},
                  {"inputs", run.inputs},
                  {"config", to_json(run.config)},
                  {"events", run.ingested.stats.events},
                  {"returns", run.ingested.returns.size()},
                  {"filter", to_json(run.ingested.stats.filter)},
                  {"warnings", run.ingested.stats.diagnostics.warnings},
                  {"artifacts", pipeline_artifacts(a.mode)}};
  batch.add("run_" + m + ".json", dump(summary));
  batch.commit();
}

// ---------------------------------------------------------------------------
// Report over a directory tree of runs
// ---------------------------------------------------------------------------

inline Json build_report(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  Json rows = Json::array();
  Json missing = Json::array();
  Json warnings = Json::array();
  std::vector<fs::path> runs;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      const auto name = entry.path().filename().string();
      if (entry.is_regular_file() && name.starts_with("run_") && name.ends_with(".json"))
        runs.push_back(entry.path());
    }
  } else {
    warnings.push_back("not a directory: " + dir.string());
  }
  std::sort(runs.begin(), runs.end());
  for (const auto& path : runs) {
    Json j;
    try {
      std::ifstream in(path);
      j = Json::parse(in);
      const KSResult ks = ks_from_json(j.at("ks"));
      rows.push_back({{"symbol", j.at("symbol")},
                      {"N", j.at("N")},
                      {"tau", j.at("tau")},
                      {"mode", j.at("mode")},
                      {"sample_size", ks.sample_size},
                      {"scaled_ks", ks.scaled},
                      {"reject_5pct", ks.reject_5pct},
                      {"reject_1pct", ks.reject_1pct},
                      {"verdict", verdict(ks)},
                      {"run", fs::relative(path, dir).generic_string()}});
      if (j.contains("artifacts")) {
        for (const auto& artifact : j.at("artifacts")) {
          const auto file = path.parent_path() / artifact.get<std::string>();
          if (!fs::exists(file)) missing.push_back(fs::relative(file, dir).generic_string());
        }
      }
    } catch (const std::exception& e) {
      warnings.push_back(fs::relative(path, dir).generic_string() + ": unreadable (" + e.what() +
                         ")");
    }
  }
  if (rows.empty()) warnings.push_back("no pipeline runs found");
  return {{"rows", rows}, {"missing", missing}, {"warnings", warnings}};
}

}  // namespace nearex
