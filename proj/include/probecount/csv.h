#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace probecount::csv {

struct row {
  std::size_t line;  // 1-based line number in the source text
  std::vector<std::string> fields;
};

/// RFC 4180-ish table: comma separated, optional double quotes, CRLF or LF.
/// Blank lines are skipped.
struct table {
  std::vector<std::string> header;
  std::vector<row> rows;

  std::optional<std::size_t> column(std::string_view name) const;

  /// Throws parse_error naming every missing column.
  std::vector<std::size_t> require(std::initializer_list<std::string_view> names) const;
};

table parse(std::string_view text);

std::string read_file(std::filesystem::path const&);
void write_file(std::filesystem::path const&, std::string_view contents);

std::string escape(std::string_view field);

/// Appends one line (with trailing '\n') to `out`.
void append_row(std::string& out, std::vector<std::string> const& fields);

}  // namespace probecount::csv
