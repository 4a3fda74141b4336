#pragma once

// JSON encodings of the domain types, CSV tables with 17 significant digits
// and atomic (temp file then rename) output batches.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <stdexcept>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "nearex/distributions.hpp"
#include "nearex/errors.hpp"
#include "nearex/evs.hpp"
#include "nearex/market_pipeline.hpp"
#include "nearex/near_extreme.hpp"
#include "nearex/stats_tests.hpp"

namespace nearex {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline Json to_json(const ParentSpec& spec) {
  return std::visit(
      [](const auto& f) -> Json {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Gaussian>) {
          return {{"family", "gaussian"}, {"sigma", f.sigma}};
        } else if constexpr (std::is_same_v<T, QExponential>) {
          return {{"family", "qexp"}, {"q", f.q}};
        } else {
          return {{"family", "uniform"}, {"lo", f.lo}, {"hi", f.hi}};
        }
      },
      spec.family());
}

namespace detail {
inline double require_number(const Json& j, const char* key, const char* what) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ParameterError(std::string(what) + ": missing numeric field '" + key + "'");
  return j.at(key).get<double>();
}
}  // namespace detail

// {"family": "gaussian", "sigma": 1} | {"family": "qexp", "q": 1.3} |
// {"family": "uniform", "lo": 0, "hi": 1}
inline ParentSpec parent_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string())
    throw ParameterError("distribution: expected an object with a 'family' string");
  const auto family = j.at("family").get<std::string>();
  if (family == "gaussian")
    return ParentSpec::gaussian(detail::require_number(j, "sigma", "gaussian"));
  if (family == "qexp" || family == "qexponential")
    return ParentSpec::qexponential(detail::require_number(j, "q", "qexp"));
  if (family == "uniform")
    return ParentSpec::uniform(detail::require_number(j, "lo", "uniform"),
                               detail::require_number(j, "hi", "uniform"));
  throw ParameterError("distribution: unknown family '" + family + "'");
}

inline ParentSpec parse_parent(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError(std::string("distribution: invalid JSON: ") + e.what());
  }
  return parent_from_json(j);
}

inline Json to_json(const LimitFamily& family) {
  return std::visit(
      [](const auto& law) -> Json {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Weibull>) {
          return {{"family", "weibull"}, {"beta", law.beta}};
        } else if constexpr (std::is_same_v<T, Frechet>) {
          return {{"family", "frechet"}, {"alpha", law.alpha}};
        } else if constexpr (std::is_same_v<T, Gumbel>) {
          return {{"family", "gumbel"}};
        } else {
          return {{"family", "degenerate"}, {"w", law.w}};
        }
      },
      family.law());
}

inline Json to_json(const NormalizingWeights& w) {
  return {{"a_n", w.scale}, {"b_n", w.location}, {"n", w.n}};
}

inline Json to_json(const KSResult& r) {
  return {{"d", r.d},
          {"sample_size", r.sample_size},
          {"scaled", r.scaled},
          {"reject_5pct", r.reject_5pct},
          {"reject_1pct", r.reject_1pct}};
}

inline KSResult ks_from_json(const Json& j) {
  KSResult r;
  r.d = j.at("d").get<double>();
  r.sample_size = j.at("sample_size").get<std::size_t>();
  r.scaled = j.at("scaled").get<double>();
  r.reject_5pct = j.at("reject_5pct").get<bool>();
  r.reject_1pct = j.at("reject_1pct").get<bool>();
  return r;
}

inline Json to_json(const QQPlotData& qq) {
  return {{"probabilities", qq.probabilities},
          {"theoretical_q", qq.theoretical_q},
          {"empirical_q", qq.empirical_q}};
}

inline Json to_json(const FilterStats& s) {
  return {{"seen", s.seen},
          {"kept", s.kept},
          {"outside_session", s.outside_session},
          {"crossed", s.crossed},
          {"nonpositive", s.nonpositive},
          {"jumps", s.jumps},
          {"empty_days", s.empty_days}};
}

inline Json to_json(const BlockedReturns& b, std::span<const std::int32_t> days = {}) {
  Json blocks = Json::array();
  for (const auto& block : b.blocks) {
    Json jb = {{"sigma", block.sigma},
               {"max", block.max},
               {"min", block.min},
               {"constant", block.constant}};
    if (!days.empty()) {
      jb["first_day"] = format_date(days[block.first_day]);
      jb["last_day"] = format_date(days[block.last_day]);
    }
    jb["returns"] = block.returns;
    blocks.push_back(std::move(jb));
  }
  return {{"tau", b.tau},
          {"N", b.n},
          {"variance_convention", to_string(b.convention)},
          {"h", b.block_count()},
          {"total_returns", b.total_returns},
          {"T", b.block_count() * b.n},
          {"dropped_tail", b.dropped_tail},
          {"excluded_zero_sigma", b.excluded_zero_sigma},
          {"blocks", std::move(blocks)}};
}

inline Json to_json(const EmpiricalNearExtreme& e) {
  return {{"mode", to_string(e.mode)},
          {"block_count", e.block_count},
          {"per_block_size", e.per_block_size},
          {"sample_size", e.sample_size()},
          {"distances", e.distances}};
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

// Column-major table: header names and one column per name.
inline std::string csv_table(std::initializer_list<std::string_view> header,
                             std::initializer_list<std::span<const double>> columns) {
  if (header.size() != columns.size()) throw DomainError("csv_table: header/column mismatch");
  std::size_t rows = 0;
  for (const auto& c : columns) rows = std::max(rows, c.size());
  for (const auto& c : columns)
    if (c.size() != rows) throw DomainError("csv_table: columns differ in length");
  std::string out;
  out.reserve(24 * (rows + 1) * columns.size());
  bool first = true;
  for (auto name : header) {
    if (!first) out.push_back(',');
    out.append(name);
    first = false;
  }
  out.push_back('\n');
  for (std::size_t i = 0; i < rows; ++i) {
    first = true;
    for (const auto& c : columns) {
      if (!first) out.push_back(',');
      append_number(out, c[i]);
      first = false;
    }
    out.push_back('\n');
  }
  return out;
}

inline std::string histogram_csv(std::span<const HistogramBin> bins) {
  std::vector<double> centers;
  std::vector<double> densities;
  centers.reserve(bins.size());
  densities.reserve(bins.size());
  for (const auto& b : bins) {
    centers.push_back(b.center);
    densities.push_back(b.density);
  }
  return csv_table({"bin_center", "density"}, {centers, densities});
}

inline std::string qq_csv(const QQPlotData& qq) {
  return csv_table({"p", "theoretical_q", "empirical_q"},
                   {qq.probabilities, qq.theoretical_q, qq.empirical_q});
}

// JSON text with a trailing newline.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Atomic output batches
// ---------------------------------------------------------------------------

// Collects named files and publishes them together: every file is written
// to a temporary name first and renamed only after all writes succeeded.
class OutputBatch {
 public:
  explicit OutputBatch(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
  }

  [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& files() const noexcept {
    return files_;
  }

  void commit() const {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create " + dir_.string() + ": " + ec.message());
    std::vector<fs::path> temps;
    try {
      for (const auto& [name, content] : files_) {
        const fs::path target = dir_ / name;
        fs::create_directories(target.parent_path());
        fs::path temp = target;
        temp += ".tmp";
        temps.push_back(temp);
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.close();
        if (!out) throw std::runtime_error("cannot write " + temp.string());
      }
    } catch (...) {
      for (const auto& t : temps) fs::remove(t, ec);
      throw;
    }
    for (std::size_t i = 0; i < files_.size(); ++i) fs::rename(temps[i], dir_ / files_[i].first);
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

// Single file, temp then rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  OutputBatch batch(dir);
  batch.add(path.filename().string(), content);
  batch.commit();
}

}  // namespace nearex
