#pragma once

#include <stdexcept>
#include <string>

namespace probecount {

// Exit codes of the `probe` binary; the error classes below map onto them.
enum class exit_code : int { ok = 0, io = 1, empty_result = 2, usage = 64 };

struct usage_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad configuration (unsalted hashing, infeasible scenario, ...).
struct config_error : usage_error {
  using usage_error::usage_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data. Carries a byte offset or line number when known.
struct parse_error : std::runtime_error {
  parse_error(std::string const& msg, long long position = -1)
      : std::runtime_error(msg), position_{position} {}
  long long position() const { return position_; }

private:
  long long position_;
};

// Inconsistent data that violates a pipeline invariant.
struct integrity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace probecount
