#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace regadj {

enum class ErrorCode {
  kParse,
  kInvalidArgument,
  kSizeMismatch,
  kZeroVarianceCovariate,
  kSingularDesign,
  kInsufficientDegreesOfFreedom,
  kEnumerationTooLarge,
  kInconsistentSpec,
  kAllAssignmentsSingular,
};

/// Base class for every error raised by the library. The code lets callers
/// (the CLI in particular) map failures without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed population CSV. Row numbers are 1-based file lines (the header
/// is line 1); column is the header name, or empty when not applicable.
class ParseError : public Error {
 public:
  enum class Kind {
    kMissingHeader,
    kMissingColumn,
    kDuplicateColumn,
    kFieldCount,
    kNonNumeric,
    kNonFinite,
    kEmptyBody,
    kIo,
  };

  ParseError(Kind kind, std::size_t row, std::string column,
             const std::string& what)
      : Error(ErrorCode::kParse, what),
        kind_(kind),
        row_(row),
        column_(std::move(column)) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  Kind kind_;
  std::size_t row_;
  std::string column_;
};

/// The number of assignments to enumerate exceeds the caller's guard.
/// `count` saturates at UINT64_MAX when the multinomial overflows.
class EnumerationTooLarge : public Error {
 public:
  EnumerationTooLarge(std::uint64_t count, std::uint64_t limit);

  std::uint64_t count() const noexcept { return count_; }
  std::uint64_t limit() const noexcept { return limit_; }

 private:
  std::uint64_t count_;
  std::uint64_t limit_;
};

}  // namespace regadj
