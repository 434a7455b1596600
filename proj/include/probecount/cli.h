#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace probecount {

/// Entry point of the `probe` binary; returns the process exit code
/// (0 ok, 1 I/O, 2 empty result, 64 usage). `args` excludes argv[0].
int run_cli(std::vector<std::string> const& args, std::ostream& out, std::ostream& err);

/// `key = value` lines; `#` and `;` start comments, `[section]` headers are
/// ignored, values may be double-quoted. Throws usage_error on a malformed line.
std::map<std::string, std::string> parse_key_values(std::string_view text);

}  // namespace probecount
