// nearex command-line tool.
//
//   nearex evs maxima --dist '{"family":"gaussian","sigma":1}' --n 1000 --samples 1000 --seed 1 --out dir
//   nearex near-extreme exact --dist '{"family":"uniform","lo":0,"hi":1}' --n 2 --grid 0:1:0.1 --out rho.csv
//   nearex pipeline run --input a.csv b.csv --config cfg.json --tau 1 --n 25 --mode max --out dir
//   nearex report --dir dir
//   nearex selftest closure --seed 7
//   nearex synth ticks --records 1000000 --seed 1 --out ticks.csv
//   nearex synth model --h 500 --n 25 --seed 1 --out ticks.csv
//
// Exit status: 0 success, 1 usage, 2 data, 3 numerical.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nearex/closure.hpp"
#include "nearex/io.hpp"
#include "nearex/near_extreme.hpp"
#include "nearex/pipeline.hpp"
#include "nearex/random.hpp"
#include "nearex/synthetic.hpp"

namespace fs = std::filesystem;
using namespace nearex;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

// --dist accepts inline JSON or the path of a JSON file.
ParentSpec read_dist(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') return parse_parent(arg);
  std::ifstream in(arg);
  if (!in) throw ParameterError("--dist: cannot read '" + arg + "'");
  std::stringstream text;
  text << in.rdbuf();
  return parse_parent(text.str());
}

struct Grid {
  double min = 0.0;
  double max = 0.0;
  double step = 0.0;
};

Grid parse_grid(const std::string& text) {
  Grid g;
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? a : text.find(':', a + 1);
  if (b == std::string::npos) throw ParameterError("--grid: expected min:max:step");
  auto number = [&](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw ParameterError("--grid: bad number '" + std::string(s) + "'");
    return v;
  };
  const std::string_view sv(text);
  g.min = number(sv.substr(0, a));
  g.max = number(sv.substr(a + 1, b - a - 1));
  g.step = number(sv.substr(b + 1));
  if (!(g.step > 0.0) || !(g.max >= g.min) || g.min < 0.0)
    throw ParameterError("--grid: need 0 <= min <= max and step > 0");
  if ((g.max - g.min) / g.step > 1e7) throw ParameterError("--grid: too many points");
  return g;
}

Json metadata_base(std::uint64_t seed) {
  return {{"seed", seed}, {"generator", std::string(kGeneratorName)}};
}

int run_evs_maxima(const std::string& dist, std::size_t n, std::size_t samples,
                   std::uint64_t seed, std::size_t workers, const fs::path& out) {
  const auto spec = read_dist(dist);
  const auto e = maxima_experiment(spec, n, samples, seed, workers);

  std::vector<double> centers;
  std::vector<double> densities;
  for (const auto& b : e.histogram) {
    centers.push_back(b.center);
    densities.push_back(b.density);
  }
  Json meta = metadata_base(seed);
  meta["distribution"] = to_json(spec);
  meta["N"] = n;
  meta["samples"] = samples;
  meta["limit_family"] = to_json(e.family);
  meta["weights"] = to_json(e.weights);
  meta["histogram"] = {{"binning", "freedman-diaconis"}, {"bin_width", e.bin_width}};
  meta["ks_finite_sample"] = to_json(e.ks_finite_sample);
  meta["ks_limit"] = to_json(e.ks_limit);

  OutputBatch batch(out);
  batch.add("maxima.csv", csv_table({"max"}, {e.maxima}));
  batch.add("histogram.csv", csv_table({"bin_center", "density"}, {centers, densities}));
  batch.add("curves.csv", csv_table({"x", "finite_sample_density", "limiting_density"},
                                    {e.grid, e.finite_sample_density, e.limiting_density}));
  batch.add("metadata.json", dump(meta));
  batch.commit();
  std::cout << "ks vs finite-sample: scaled " << e.ks_finite_sample.scaled << " ("
            << verdict(e.ks_finite_sample) << ")\n"
            << "ks vs limit law:     scaled " << e.ks_limit.scaled << " (" << verdict(e.ks_limit)
            << ")\n";
  return 0;
}

int run_near_extreme_exact(const std::string& dist, std::size_t n, const std::string& grid_text,
                           const fs::path& out) {
  const auto spec = read_dist(dist);
  const auto g = parse_grid(grid_text);
  const auto count = static_cast<std::size_t>(std::floor((g.max - g.min) / g.step + 1e-9)) + 1;
  std::vector<double> r(count);
  std::vector<double> density(count);
  std::vector<double> cdf(count);
  for (std::size_t i = 0; i < count; ++i) {
    r[i] = g.min + static_cast<double>(i) * g.step;
    density[i] = exact_density(spec, n, r[i]);
    cdf[i] = exact_cdf(spec, n, r[i]);
  }
  write_atomic(out, csv_table({"r", "density", "cdf"}, {r, density, cdf}));
  return 0;
}

int run_pipeline_cmd(const std::vector<std::string>& inputs, const std::string& config_path,
                     std::size_t tau, std::size_t n, std::size_t workers, const std::string& mode,
                     const fs::path& out) {
  PipelineConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ParameterError("--config: cannot read '" + config_path + "'");
    Json j;
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParameterError("--config: invalid JSON: " + std::string(e.what()));
    }
    config = pipeline_config_from_json(j);
  }
  if (tau > 0) config.tau = tau;
  if (n > 0) config.n = n;
  if (workers > 0) config.workers = workers;

  std::vector<ExtremeMode> modes;
  if (mode == "max" || mode == "both") modes.push_back(ExtremeMode::FromMax);
  if (mode == "min" || mode == "both") modes.push_back(ExtremeMode::FromMin);

  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  for (const auto& p : paths)
    if (!fs::is_regular_file(p)) throw DataError(p.string(), 0, "input file not found");

  // Compute every mode before writing anything.
  std::vector<PipelineRun> runs;
  for (auto m : modes) runs.push_back(run_pipeline(paths, config, m));
  for (const auto& run : runs) {
    write_pipeline_outputs(run, out);
    for (const auto& w : run.ingested.stats.diagnostics.warnings) std::cerr << "warning: " << w << "\n";
    const auto& ks = run.analysis.ks;
    std::cout << run.symbol << " N=" << run.config.n << " tau=" << run.config.tau << " "
              << to_string(run.analysis.mode) << ": blocks " << run.blocked.block_count()
              << ", sample size " << ks.sample_size << ", scaled K-S " << ks.scaled << " ("
              << verdict(ks) << ")\n";
  }
  return 0;
}

int run_report(const fs::path& dir, const std::string& out) {
  const auto report = build_report(dir);
  for (const auto& w : report.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << "\n";
  for (const auto& m : report.at("missing"))
    std::cerr << "missing artifact: " << m.get<std::string>() << "\n";
  if (out.empty()) {
    std::cout << dump(report);
  } else {
    write_atomic(out, dump(report));
  }
  return 0;
}

int run_selftest_closure(std::uint64_t seed, std::size_t runs, std::size_t workers) {
  ClosureConfig config;
  config.workers = workers;
  std::size_t pass_max = 0;
  std::size_t pass_min = 0;
  Json rows = Json::array();
  for (std::size_t i = 0; i < runs; ++i) {
    const auto run = closure_run(config, seed + i);
    pass_max += run.max.ks.reject_5pct ? 0 : 1;
    pass_min += run.min.ks.reject_5pct ? 0 : 1;
    rows.push_back({{"seed", run.seed},
                    {"scaled_ks_max", run.max.ks.scaled},
                    {"scaled_ks_min", run.min.ks.scaled},
                    {"qq_rel_dev_max", qq_relative_deviation(run.max.qq, 0, 40)},
                    {"qq_rel_dev_min", qq_relative_deviation(run.min.qq, 0, 40)},
                    {"return_recovery_error", run.return_recovery_error}});
  }
  Json summary = metadata_base(seed);
  summary["runs"] = runs;
  summary["h"] = config.h;
  summary["N"] = config.n;
  summary["pass_5pct_max"] = pass_max;
  summary["pass_5pct_min"] = pass_min;
  summary["detail"] = rows;
  std::cout << dump(summary);
  std::cout << (pass_max == runs && pass_min == runs ? "PASS" : "FAIL")
            << " closure: max " << pass_max << "/" << runs << ", min " << pass_min << "/" << runs
            << " below the 5% critical value\n";
  return 0;
}

int run_synth_ticks(std::size_t records, std::size_t per_day, std::uint64_t seed,
                    const fs::path& out) {
  TickStreamConfig config;
  config.records = records;
  config.records_per_day = per_day;
  config.seed = seed;
  TickStreamGenerator generator(config);
  const fs::path temp = fs::path(out).concat(".tmp");
  {
    std::ofstream file(temp, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot write " + temp.string());
    std::string chunk;
    while (!generator.done()) {
      chunk.clear();
      while (chunk.size() < (1 << 20) && !generator.done()) generator.append_line(chunk);
      file.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    }
    if (!file) throw std::runtime_error("cannot write " + temp.string());
  }
  fs::rename(temp, out);
  return 0;
}

int run_synth_model(std::size_t h, std::size_t n, std::uint64_t seed, const fs::path& out) {
  ClosureConfig config;
  config.h = h;
  config.n = n;
  write_atomic(out, closure_tick_csv(config, seed));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-extreme statistics of intraday returns"};
  app.require_subcommand(1);

  std::string dist;
  std::size_t n = 0;
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  std::size_t workers = 0;
  std::string out;

  auto* evs = app.add_subcommand("evs", "Extreme value statistics");
  evs->require_subcommand(1);
  auto* maxima = evs->add_subcommand("maxima", "Block maxima vs finite-sample and limit laws");
  maxima->add_option("--dist", dist, "Parent distribution (JSON or file)")->required();
  maxima->add_option("--n", n, "Block size N")->required();
  maxima->add_option("--samples", samples, "Number of maxima");
  maxima->add_option("--seed", seed, "Seed");
  maxima->add_option("--workers", workers, "Worker threads");
  maxima->add_option("--out", out, "Output directory")->required();

  std::string grid;
  auto* ne = app.add_subcommand("near-extreme", "Near-extreme distributions");
  ne->require_subcommand(1);
  auto* exact = ne->add_subcommand("exact", "Exact near-extreme density and CDF on a grid");
  exact->add_option("--dist", dist, "Parent distribution (JSON or file)")->required();
  exact->add_option("--n", n, "Block size N")->required();
  exact->add_option("--grid", grid, "min:max:step")->required();
  exact->add_option("--out", out, "Output CSV")->required();

  std::vector<std::string> inputs;
  std::string config_path;
  std::size_t tau = 0;
  std::string mode = "max";
  auto* pipeline = app.add_subcommand("pipeline", "Tick data pipeline");
  pipeline->require_subcommand(1);
  auto* run = pipeline->add_subcommand("run", "Ingest ticks and test the mixture model");
  run->add_option("--input", inputs, "Tick CSV files")->required();
  run->add_option("--config", config_path, "Pipeline config JSON");
  run->add_option("--tau", tau, "Event-time lag");
  run->add_option("--n", n, "Block size N");
  run->add_option("--workers", workers, "Worker threads");
  run->add_option("--mode", mode, "max, min or both")
      ->check(CLI::IsMember({"max", "min", "both"}));
  run->add_option("--out", out, "Output directory")->required();

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Summarize pipeline runs");
  report->add_option("--dir", report_dir, "Directory with run_*.json files")->required();
  report->add_option("--out", out, "Write the report here instead of stdout");

  std::size_t runs = 1;
  auto* selftest = app.add_subcommand("selftest", "Self tests");
  selftest->require_subcommand(1);
  auto* closure = selftest->add_subcommand("closure", "Model closure through the pipeline");
  closure->add_option("--seed", seed, "Seed")->required();
  closure->add_option("--runs", runs, "Number of seeded runs");
  closure->add_option("--workers", workers, "Worker threads");

  std::size_t records = 1'000'000;
  std::size_t per_day = 100'000;
  std::size_t h = 500;
  auto* synth = app.add_subcommand("synth", "Synthetic tick files");
  synth->require_subcommand(1);
  auto* ticks = synth->add_subcommand("ticks", "Integer-cent random quote stream");
  ticks->add_option("--records", records, "Number of records");
  ticks->add_option("--per-day", per_day, "Records per trading day");
  ticks->add_option("--seed", seed, "Seed");
  ticks->add_option("--out", out, "Output CSV")->required();
  auto* model = synth->add_subcommand("model", "Quotes following block-constant volatility returns");
  model->add_option("--blocks", h, "Number of blocks");
  model->add_option("--n", n, "Block size N")->required();
  model->add_option("--seed", seed, "Seed");
  model->add_option("--out", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*maxima) return run_evs_maxima(dist, n, samples, seed, std::max<std::size_t>(workers, 1), out);
    if (*exact) return run_near_extreme_exact(dist, n, grid, out);
    if (*run) return run_pipeline_cmd(inputs, config_path, tau, n, workers, mode, out);
    if (*report) return run_report(report_dir, out);
    if (*closure) return run_selftest_closure(seed, runs, std::max<std::size_t>(workers, 1));
    if (*ticks) return run_synth_ticks(records, per_day, seed, out);
    if (*model) return run_synth_model(h, n, seed, out);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ClassificationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
