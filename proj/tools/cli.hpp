#pragma once

// The `regadj` command line: analyze, enumerate, simulate and reproduce.
// run_cli is the whole program minus process setup, so tests can drive it
// in-process with string streams.

#include <iosfwd>
#include <string_view>
#include <utility>

#include "regadj/assignment.hpp"

namespace regadj::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitGuard = 3;

/// Parses "n_A,n_B,n_C". Each token is an integer, `n`, or `n/k` with k
/// dividing n exactly.
GroupSizes parse_sizes(std::string_view text, std::size_t n);

/// Parses "S,T" with S != T, e.g. "A,C".
std::pair<Group, Group> parse_pair(std::string_view text);

/// REGADJ_THREADS when set to a positive integer, else the hardware count.
unsigned default_threads();

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace regadj::cli
