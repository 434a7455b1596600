#include "probecount/time.h"

#include <charconv>

#include "fmt/format.h"

#include "probecount/error.h"

namespace probecount {

namespace {

int parse_fixed(std::string_view s, std::size_t pos, std::size_t len,
                std::string_view whole) {
  int v = 0;
  if (pos + len > s.size()) {
    throw parse_error(fmt::format("truncated timestamp '{}'", whole));
  }
  auto const* first = s.data() + pos;
  auto const [ptr, ec] = std::from_chars(first, first + len, v);
  if (ec != std::errc{} || ptr != first + len) {
    throw parse_error(fmt::format("bad timestamp '{}'", whole));
  }
  return v;
}

void expect(std::string_view s, std::size_t pos, char c, std::string_view whole) {
  if (pos >= s.size() || s[pos] != c) {
    throw parse_error(fmt::format("bad timestamp '{}'", whole));
  }
}

std::chrono::sys_days parse_ymd(std::string_view s, std::string_view whole) {
  auto const y = parse_fixed(s, 0, 4, whole);
  expect(s, 4, '-', whole);
  auto const m = parse_fixed(s, 5, 2, whole);
  expect(s, 7, '-', whole);
  auto const d = parse_fixed(s, 8, 2, whole);
  auto const ymd = std::chrono::year{y} / std::chrono::month{static_cast<unsigned>(m)} /
                   std::chrono::day{static_cast<unsigned>(d)};
  if (!ymd.ok()) {
    throw parse_error(fmt::format("invalid calendar date '{}'", whole));
  }
  return std::chrono::sys_days{ymd};
}

}  // namespace

instant parse_instant(std::string_view text) {
  auto const s = text;
  if (s.empty()) {
    throw parse_error("empty timestamp");
  }

  if (s.find('-', 1) == std::string_view::npos) {
    std::int64_t ms = 0;
    auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), ms);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw parse_error(fmt::format("bad timestamp '{}'", text));
    }
    return from_epoch_ms(ms);
  }

  auto const day = parse_ymd(s, text);
  if (s.size() < 19 || (s[10] != 'T' && s[10] != ' ')) {
    throw parse_error(fmt::format("bad timestamp '{}'", text));
  }
  auto const hh = parse_fixed(s, 11, 2, text);
  expect(s, 13, ':', text);
  auto const mm = parse_fixed(s, 14, 2, text);
  expect(s, 16, ':', text);
  auto const ss = parse_fixed(s, 17, 2, text);
  if (hh > 23 || mm > 59 || ss > 60) {
    throw parse_error(fmt::format("time of day out of range '{}'", text));
  }

  std::size_t pos = 19;
  int frac_ms = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    auto const start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (pos - start < 3) {
        frac_ms = frac_ms * 10 + (s[pos] - '0');
      }
      ++pos;
    }
    auto const digits = pos - start;
    if (digits == 0) {
      throw parse_error(fmt::format("bad fraction in '{}'", text));
    }
    for (auto k = digits; k < 3; ++k) {
      frac_ms *= 10;
    }
  }
  if (pos < s.size() && s[pos] == 'Z') {
    ++pos;
  }
  if (pos != s.size()) {
    throw parse_error(fmt::format("trailing characters in timestamp '{}'", text));
  }

  return instant{day} + std::chrono::hours{hh} + std::chrono::minutes{mm} +
         std::chrono::seconds{ss} + milliseconds{frac_ms};
}

instant parse_date(std::string_view text) {
  if (text.size() != 10) {
    throw parse_error(fmt::format("expected YYYY-MM-DD, got '{}'", text));
  }
  return instant{parse_ymd(text, text)};
}

std::string format_instant(instant t) {
  auto const day = std::chrono::floor<std::chrono::days>(t);
  std::chrono::year_month_day const ymd{day};
  std::chrono::hh_mm_ss const tod{t - day};
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z",
                     static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()), tod.hours().count(),
                     tod.minutes().count(), tod.seconds().count(),
                     tod.subseconds().count());
}

std::string format_date(instant t) {
  std::chrono::year_month_day const ymd{std::chrono::floor<std::chrono::days>(t)};
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

}  // namespace probecount
