#pragma once

// Tick records and the CSV tick format
//
//   timestamp,bid,ask,trade_price
//   2007-03-01T10:00:00.125,30.01,30.02,30.02
//
// Timestamps are ISO-8601 local exchange time; 'T' or ' ' separates date and
// time, the fractional second has 0 to 6 digits and a trailing 'Z' is
// accepted.

#include <array>
#include <charconv>
#include <chrono>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "nearex/errors.hpp"

namespace nearex {

struct Timestamp {
  std::int32_t day = 0;            // days since 1970-01-01
  std::int64_t micros_of_day = 0;  // microseconds since midnight

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct TickRecord {
  Timestamp timestamp;
  double bid = 0.0;
  double ask = 0.0;
  double trade_price = 0.0;
  std::string symbol;

  [[nodiscard]] double mid() const noexcept { return 0.5 * (bid + ask); }
};

inline constexpr std::int64_t kMicrosPerSecond = 1'000'000;

inline constexpr std::int64_t time_of_day(int hours, int minutes, int seconds = 0) {
  return ((hours * 60LL + minutes) * 60LL + seconds) * kMicrosPerSecond;
}

namespace detail {

inline bool parse_digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

inline constexpr std::array<double, 23> kPow10 = {
    1e0,  1e1,  1e2,  1e3,  1e4,  1e5,  1e6,  1e7,  1e8,  1e9,  1e10, 1e11,
    1e12, 1e13, 1e14, 1e15, 1e16, 1e17, 1e18, 1e19, 1e20, 1e21, 1e22};

}  // namespace detail

// "HH:MM[:SS]" -> microseconds since midnight.
inline bool parse_time_of_day(std::string_view s, std::int64_t& out) {
  int h = 0;
  int m = 0;
  int sec = 0;
  if (!detail::parse_digits(s, 0, 2, h) || s.size() < 5 || s[2] != ':' ||
      !detail::parse_digits(s, 3, 2, m))
    return false;
  if (s.size() > 5) {
    if (s.size() != 8 || s[5] != ':' || !detail::parse_digits(s, 6, 2, sec)) return false;
  }
  if (h > 24 || m > 59 || sec > 60) return false;
  out = time_of_day(h, m, sec);
  return true;
}

inline bool parse_date(std::string_view s, std::int32_t& day) {
  int y = 0;
  int mo = 0;
  int d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !detail::parse_digits(s, 0, 4, y) ||
      !detail::parse_digits(s, 5, 2, mo) || !detail::parse_digits(s, 8, 2, d))
    return false;
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return false;
  day = static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count());
  return true;
}

inline bool parse_timestamp(std::string_view s, Timestamp& out) {
  if (s.size() < 19 || (s[10] != 'T' && s[10] != ' ')) return false;
  if (!parse_date(s.substr(0, 10), out.day)) return false;
  if (!parse_time_of_day(s.substr(11, 8), out.micros_of_day)) return false;
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::int64_t frac = 0;
    std::size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 6) {
        frac = frac * 10 + (s[pos] - '0');
        ++digits;
      }
      ++pos;
    }
    if (digits == 0) return false;
    for (std::size_t i = digits; i < 6; ++i) frac *= 10;
    out.micros_of_day += frac;
  }
  if (pos < s.size() && s[pos] == 'Z') ++pos;
  return pos == s.size();
}

inline std::string format_date(std::int32_t day) {
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

// "YYYY-MM-DDTHH:MM:SS.mmm" (millisecond precision).
inline std::string format_timestamp(const Timestamp& t) {
  const std::int64_t ms = t.micros_of_day / 1000;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%sT%02lld:%02lld:%02lld.%03lld", format_date(t.day).c_str(),
                static_cast<long long>(ms / 3'600'000), static_cast<long long>(ms / 60'000 % 60),
                static_cast<long long>(ms / 1000 % 60), static_cast<long long>(ms % 1000));
  return buf;
}

// Decimal number parser. Plain "123.456" fields with at most 15 significant
// digits take an exact fast path; everything else goes through from_chars.
inline bool parse_price(std::string_view s, double& out) {
  if (s.empty()) return false;
  std::uint64_t mantissa = 0;
  std::size_t digits = 0;
  std::size_t decimals = 0;
  bool seen_point = false;
  bool seen_digit = false;
  bool fast = true;
  std::size_t i = 0;
  const bool negative = s[0] == '-';
  if (negative || s[0] == '+') i = 1;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c >= '0' && c <= '9') {
      seen_digit = true;
      if (mantissa != 0 || c != '0') ++digits;
      mantissa = mantissa * 10 + static_cast<std::uint64_t>(c - '0');
      if (seen_point) ++decimals;
      if (digits > 15) {
        fast = false;
        break;
      }
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      fast = false;
      break;
    }
  }
  if (fast && !seen_digit) return false;
  if (fast && decimals < detail::kPow10.size()) {
    // Both operands are exact doubles, so the quotient is correctly rounded.
    out = static_cast<double>(mantissa) / detail::kPow10[decimals];
    if (negative) out = -out;
    return true;
  }
  const char* first = s.data() + (s[0] == '+' ? 1 : 0);
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

inline constexpr std::string_view kTickCsvHeader = "timestamp,bid,ask,trade_price";

// Streaming reader over a tick CSV. Lines are parsed in place from a large
// buffer; the header is validated on construction.
class TickCsvReader {
 public:
  TickCsvReader(std::istream& in, std::string source, std::string symbol = {})
      : in_(in), source_(std::move(source)), buffer_(kBufferSize) {
    current_symbol_ = std::move(symbol);
    std::string_view header;
    if (!next_line(header)) throw DataError(source_, 0, "empty tick file (missing header)");
    if (header.size() >= 3 && header.substr(0, 3) == "\xEF\xBB\xBF") header.remove_prefix(3);
    if (header != kTickCsvHeader)
      throw DataError(source_, line_,
                      "unexpected header '" + std::string(header) + "', expected '" +
                          std::string(kTickCsvHeader) + "'");
  }

  // Reads the next record into `out` (the symbol is assigned only when it
  // differs). Returns false at end of input.
  bool next(TickRecord& out) {
    std::string_view line;
    while (next_line(line)) {
      if (line.empty()) continue;
      std::array<std::string_view, 4> fields;
      std::size_t count = 0;
      std::size_t start = 0;
      for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
          if (count == fields.size()) fail("expected 4 fields");
          fields[count++] = line.substr(start, i - start);
          start = i + 1;
        }
      }
      if (count != fields.size()) fail("expected 4 fields");
      if (!parse_timestamp(fields[0], out.timestamp))
        fail("bad timestamp '" + std::string(fields[0]) + "'");
      if (!parse_price(fields[1], out.bid)) fail("bad bid '" + std::string(fields[1]) + "'");
      if (!parse_price(fields[2], out.ask)) fail("bad ask '" + std::string(fields[2]) + "'");
      if (!parse_price(fields[3], out.trade_price))
        fail("bad trade_price '" + std::string(fields[3]) + "'");
      if (out.symbol != current_symbol_) out.symbol = current_symbol_;
      return true;
    }
    return false;
  }

  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] const std::string& source() const noexcept { return source_; }

  [[noreturn]] void fail(const std::string& message) const {
    throw DataError(source_, line_, message);
  }

 private:
  static constexpr std::size_t kBufferSize = 1 << 20;

  bool next_line(std::string_view& line) {
    for (;;) {
      const char* begin = buffer_.data() + pos_;
      const auto* nl = static_cast<const char*>(std::memchr(begin, '\n', end_ - pos_));
      if (nl != nullptr) {
        std::size_t len = static_cast<std::size_t>(nl - begin);
        pos_ += len + 1;
        if (len > 0 && begin[len - 1] == '\r') --len;
        line = std::string_view(begin, len);
        ++line_;
        return true;
      }
      if (eof_) {
        if (pos_ == end_) return false;
        std::size_t len = end_ - pos_;
        pos_ = end_;
        if (len > 0 && begin[len - 1] == '\r') --len;
        line = std::string_view(begin, len);
        ++line_;
        return true;
      }
      refill();
    }
  }

  void refill() {
    const std::size_t remaining = end_ - pos_;
    if (remaining == buffer_.size()) buffer_.resize(buffer_.size() * 2);  // very long line
    std::memmove(buffer_.data(), buffer_.data() + pos_, remaining);
    pos_ = 0;
    end_ = remaining;
    in_.read(buffer_.data() + end_, static_cast<std::streamsize>(buffer_.size() - end_));
    const auto got = in_.gcount();
    end_ += static_cast<std::size_t>(got);
    if (got == 0 || !in_) eof_ = true;
  }

  std::istream& in_;
  std::string source_;
  std::string current_symbol_;
  std::vector<char> buffer_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
  std::size_t line_ = 0;
  bool eof_ = false;
};

inline std::vector<TickRecord> read_tick_csv(std::istream& in, const std::string& source,
                                             const std::string& symbol = {}) {
  TickCsvReader reader(in, source, symbol);
  std::vector<TickRecord> out;
  TickRecord record;
  while (reader.next(record)) out.push_back(record);
  return out;
}

namespace detail {
inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  out.append(buf, res.ptr);
}
}  // namespace detail

// One CSV line per record, prices with 17 significant digits.
inline void write_tick_csv(std::ostream& out, const std::vector<TickRecord>& records) {
  std::string text;
  text.reserve(64 * (records.size() + 1));
  text.append(kTickCsvHeader).push_back('\n');
  for (const auto& r : records) {
    text += format_timestamp(r.timestamp);
    text.push_back(',');
    detail::append_double(text, r.bid);
    text.push_back(',');
    detail::append_double(text, r.ask);
    text.push_back(',');
    detail::append_double(text, r.trade_price);
    text.push_back('\n');
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace nearex
