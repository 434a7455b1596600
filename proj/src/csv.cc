#include "probecount/csv.h"

#include <fstream>
#include <sstream>

#include "fmt/format.h"

#include "probecount/error.h"

namespace probecount::csv {

std::optional<std::size_t> table::column(std::string_view name) const {
  for (auto i = std::size_t{0}; i != header.size(); ++i) {
    if (header[i] == name) {
      return i;
    }
  }
  return std::nullopt;
}

std::vector<std::size_t> table::require(
    std::initializer_list<std::string_view> names) const {
  std::vector<std::size_t> idx;
  std::string missing;
  for (auto const n : names) {
    if (auto const c = column(n); c.has_value()) {
      idx.push_back(*c);
    } else {
      missing += missing.empty() ? "" : ", ";
      missing += n;
    }
  }
  if (!missing.empty()) {
    throw parse_error(fmt::format("missing required column(s): {}", missing), 1);
  }
  return idx;
}

table parse(std::string_view text) {
  table t;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;
  std::size_t line = 1;
  std::size_t row_line = 1;

  auto const end_row = [&]() {
    if (row_has_content || !field.empty() || !fields.empty()) {
      fields.push_back(std::move(field));
      if (t.header.empty()) {
        t.header = std::move(fields);
      } else {
        t.rows.push_back(row{row_line, std::move(fields)});
      }
    }
    fields.clear();
    field.clear();
    row_has_content = false;
  };

  for (auto i = std::size_t{0}; i < text.size(); ++i) {
    auto const c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') {
          ++line;
        }
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_content = true;
        break;
      case ',':
        fields.push_back(std::move(field));
        field.clear();
        row_has_content = true;
        break;
      case '\r': break;
      case '\n':
        end_row();
        ++line;
        row_line = line;
        break;
      default:
        field.push_back(c);
        row_has_content = true;
    }
  }
  if (in_quotes) {
    throw parse_error(fmt::format("unterminated quoted field starting on line {}", row_line),
                      static_cast<long long>(row_line));
  }
  end_row();

  for (auto& h : t.header) {
    // Strip a UTF-8 BOM and surrounding blanks from header names.
    if (h.starts_with("\xEF\xBB\xBF")) {
      h.erase(0, 3);
    }
    while (!h.empty() && h.back() == ' ') {
      h.pop_back();
    }
    while (!h.empty() && h.front() == ' ') {
      h.erase(0, 1);
    }
  }
  return t;
}

std::string read_file(std::filesystem::path const& p) {
  std::ifstream in{p, std::ios::binary};
  if (!in) {
    throw io_error(fmt::format("cannot open {}", p.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(std::filesystem::path const& p, std::string_view contents) {
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out{p, std::ios::binary | std::ios::trunc};
  if (!out) {
    throw io_error(fmt::format("cannot write {}", p.string()));
  }
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) {
    throw io_error(fmt::format("write failed for {}", p.string()));
  }
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string{field};
  }
  std::string out{"\""};
  for (auto const c : field) {
    if (c == '"') {
      out.push_back('"');
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void append_row(std::string& out, std::vector<std::string> const& fields) {
  for (auto i = std::size_t{0}; i != fields.size(); ++i) {
    if (i != 0) {
      out.push_back(',');
    }
    out += escape(fields[i]);
  }
  out.push_back('\n');
}

}  // namespace probecount::csv
