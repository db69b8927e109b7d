#pragma once

// Structured command output. Each command builds a Report and one renderer
// turns it into text: an aligned table with four decimals, or csv/json with
// full round-trip precision.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace regadj::cli {

struct Vector {
  std::vector<double> values;
  /// Optional column labels, same length as values.
  std::vector<std::string> labels;
};

struct Matrix {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
};

/// An artifact value next to a reference value, with a verdict.
struct Comparison {
  double artifact = 0.0;
  double reference = 0.0;
  std::string status;
};

using Value = std::variant<double, std::uint64_t, std::string, Vector, Matrix, Comparison>;

struct Entry {
  std::string name;
  Value value;
};

struct Section {
  std::string title;
  std::vector<Entry> entries;

  Section& add(std::string name, Value value) {
    entries.push_back({std::move(name), std::move(value)});
    return *this;
  }
};

struct Report {
  std::string command;
  std::vector<Section> sections;

  Section& section(std::string title) {
    sections.push_back({std::move(title), {}});
    return sections.back();
  }
};

enum class Format { kTable, kCsv, kJson };

Format format_from_string(std::string_view name);

void render(std::ostream& out, const Report& report, Format format);

}  // namespace regadj::cli
