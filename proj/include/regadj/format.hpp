#pragma once

#include <string>

namespace regadj {

/// Shortest decimal text that parses back to exactly `x` ("nan", "inf" and
/// "-inf" for non-finite values).
std::string format_double(double x);

/// Fixed notation with `decimals` places; negative zero prints as zero.
std::string format_fixed(double x, int decimals = 4);

/// Inverse of format_double. Throws ErrorCode::kParse on malformed text.
double parse_double(const std::string& text);

}  // namespace regadj
