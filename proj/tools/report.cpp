#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "regadj/error.hpp"
#include "regadj/format.hpp"

namespace regadj::cli {
namespace {

constexpr std::size_t kNameWidth = 30;
constexpr std::size_t kCellWidth = 11;

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string pad_left(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::string cells(const std::vector<double>& values) {
  std::string line;
  for (double v : values) line += pad_left(format_fixed(v), kCellWidth);
  return line;
}

std::string label_cells(const std::vector<std::string>& labels) {
  std::string line;
  for (const auto& l : labels) line += pad_left(l, kCellWidth);
  return line;
}

void render_table(std::ostream& out, const Report& report) {
  bool first = true;
  for (const Section& sec : report.sections) {
    if (!first) out << '\n';
    first = false;
    out << "== " << sec.title << " ==\n";
    bool comparison_header = false;
    for (const Entry& e : sec.entries) {
      if (std::holds_alternative<Comparison>(e.value) && !comparison_header) {
        out << std::string(kNameWidth, ' ') << label_cells({"artifact", "reference"}) << '\n';
        comparison_header = true;
      }
      const std::string name = pad_right(e.name, kNameWidth);
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              out << name << pad_left(format_fixed(v), kCellWidth) << '\n';
            } else if constexpr (std::is_same_v<T, std::uint64_t>) {
              out << name << pad_left(std::to_string(v), kCellWidth) << '\n';
            } else if constexpr (std::is_same_v<T, std::string>) {
              out << name << v << '\n';
            } else if constexpr (std::is_same_v<T, Vector>) {
              if (!v.labels.empty())
                out << std::string(kNameWidth, ' ') << label_cells(v.labels) << '\n';
              out << name << cells(v.values) << '\n';
            } else if constexpr (std::is_same_v<T, Matrix>) {
              if (!v.labels.empty())
                out << name << label_cells(v.labels) << '\n';
              else
                out << e.name << '\n';
              for (std::size_t i = 0; i < v.rows.size(); ++i) {
                const std::string row_name = i < v.labels.size() ? "  " + v.labels[i] : "";
                out << pad_right(row_name, kNameWidth) << cells(v.rows[i]) << '\n';
              }
            } else {
              out << name << pad_left(format_fixed(v.artifact), kCellWidth)
                  << pad_left(format_fixed(v.reference), kCellWidth) << "  " << v.status << '\n';
            }
          },
          e.value);
    }
  }
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

void render_csv(std::ostream& out, const Report& report) {
  out << "section,name,row,col,value\n";
  for (const Section& sec : report.sections) {
    const std::string prefix = csv_quote(sec.title) + ',';
    for (const Entry& e : sec.entries) {
      const std::string head = prefix + csv_quote(e.name) + ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              out << head << ",," << format_double(v) << '\n';
            } else if constexpr (std::is_same_v<T, std::uint64_t>) {
              out << head << ",," << v << '\n';
            } else if constexpr (std::is_same_v<T, std::string>) {
              out << head << ",," << csv_quote(v) << '\n';
            } else if constexpr (std::is_same_v<T, Vector>) {
              for (std::size_t i = 0; i < v.values.size(); ++i) {
                const std::string col = i < v.labels.size() ? v.labels[i] : std::to_string(i);
                out << head << ',' << csv_quote(col) << ',' << format_double(v.values[i]) << '\n';
              }
            } else if constexpr (std::is_same_v<T, Matrix>) {
              for (std::size_t i = 0; i < v.rows.size(); ++i) {
                for (std::size_t j = 0; j < v.rows[i].size(); ++j) {
                  const std::string r = i < v.labels.size() ? v.labels[i] : std::to_string(i);
                  const std::string c = j < v.labels.size() ? v.labels[j] : std::to_string(j);
                  out << head << csv_quote(r) << ',' << csv_quote(c) << ','
                      << format_double(v.rows[i][j]) << '\n';
                }
              }
            } else {
              out << head << ",artifact," << format_double(v.artifact) << '\n';
              out << head << ",reference," << format_double(v.reference) << '\n';
              out << head << ",status," << csv_quote(v.status) << '\n';
            }
          },
          e.value);
    }
  }
}

using Json = nlohmann::ordered_json;

/// NaN and infinities have no json literal; they become null.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json numbers(const std::vector<double>& xs) {
  Json arr = Json::array();
  for (double x : xs) arr.push_back(number(x));
  return arr;
}

void render_json(std::ostream& out, const Report& report) {
  Json root;
  root["command"] = report.command;
  Json sections = Json::object();
  for (const Section& sec : report.sections) {
    Json obj = Json::object();
    for (const Entry& e : sec.entries) {
      obj[e.name] = std::visit(
          [](const auto& v) -> Json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              return number(v);
            } else if constexpr (std::is_same_v<T, std::uint64_t>) {
              return Json(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
              return Json(v);
            } else if constexpr (std::is_same_v<T, Vector>) {
              if (v.labels.empty()) return numbers(v.values);
              Json o = Json::object();
              for (std::size_t i = 0; i < v.values.size(); ++i) o[v.labels[i]] = number(v.values[i]);
              return o;
            } else if constexpr (std::is_same_v<T, Matrix>) {
              Json rows = Json::array();
              for (const auto& r : v.rows) rows.push_back(numbers(r));
              if (v.labels.empty()) return rows;
              return Json{{"labels", v.labels}, {"rows", rows}};
            } else {
              return Json{{"artifact", number(v.artifact)},
                          {"reference", number(v.reference)},
                          {"status", v.status}};
            }
          },
          e.value);
    }
    sections[sec.title] = std::move(obj);
  }
  root["sections"] = std::move(sections);
  out << root.dump(2) << '\n';
}

}  // namespace

Format format_from_string(std::string_view name) {
  if (name == "table") return Format::kTable;
  if (name == "csv") return Format::kCsv;
  if (name == "json") return Format::kJson;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown format '" + std::string(name) + "' (expected table, csv or json)");
}

void render(std::ostream& out, const Report& report, Format format) {
  switch (format) {
    case Format::kTable:
      render_table(out, report);
      break;
    case Format::kCsv:
      render_csv(out, report);
      break;
    case Format::kJson:
      render_json(out, report);
      break;
  }
}

}  // namespace regadj::cli
