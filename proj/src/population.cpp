#include "regadj/population.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "regadj/assignment.hpp"
#include "regadj/error.hpp"
#include "regadj/summation.hpp"

namespace regadj {

namespace {

double mean(std::span<const double> x) { return compensated_mean(x); }

// (1/n) sum (x_i - mx)(y_i - my), two-pass.
double covariance(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x);
  const double my = mean(y);
  CompensatedSum s;
  for (std::size_t i = 0; i < x.size(); ++i) s.add((x[i] - mx) * (y[i] - my));
  return s.value() / static_cast<double>(x.size());
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char ch) { return ch == ' ' || ch == '\t' || ch == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos
                                              ? std::string_view::npos
                                              : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

}  // namespace

std::string_view to_string(Var v) noexcept {
  switch (v) {
    case Var::a: return "a";
    case Var::b: return "b";
    case Var::c: return "c";
    case Var::z: return "z";
  }
  return "?";
}

Population::Population(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                       std::vector<double> z)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), z_(std::move(z)) {
  if (z_.empty()) throw Error(ErrorCode::kInvalidArgument, "population must have n >= 1");
  if (a_.size() != z_.size() || b_.size() != z_.size() || c_.size() != z_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "population columns differ in length");
  }
  for (Var v : kAllVars) {
    const auto col = (*this)[v];
    for (std::size_t i = 0; i < col.size(); ++i) {
      if (!std::isfinite(col[i])) {
        throw Error(ErrorCode::kInvalidArgument,
                    "non-finite value in column " + std::string(to_string(v)) +
                        " at subject " + std::to_string(i + 1));
      }
    }
  }
}

std::span<const double> Population::operator[](Var v) const noexcept {
  switch (v) {
    case Var::a: return a_;
    case Var::b: return b_;
    case Var::c: return c_;
    case Var::z: return z_;
  }
  return {};
}

std::vector<double> Population::deviations() const {
  const double m = mean(a_);
  std::vector<double> d(a_.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a_[i] - m;
  return d;
}

Population Population::with_z(std::vector<double> z) const {
  return Population(a_, b_, c_, std::move(z));
}

Population parse_population(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;

  std::optional<std::vector<std::string_view>> header;
  std::string header_line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (is_blank(line)) continue;
    header_line = line;
    header = split_fields(header_line);
    break;
  }
  if (!header) {
    throw ParseError(ParseError::Kind::kMissingHeader, line_no, "",
                     "population file has no header row");
  }

  const std::size_t header_row = line_no;
  std::array<std::optional<std::size_t>, 4> index;
  for (std::size_t k = 0; k < header->size(); ++k) {
    const auto name = (*header)[k];
    for (Var v : kAllVars) {
      if (name == to_string(v)) {
        auto& slot = index[static_cast<std::size_t>(v)];
        if (slot) {
          throw ParseError(ParseError::Kind::kDuplicateColumn, header_row, std::string(name),
                           "duplicate column '" + std::string(name) + "' in header");
        }
        slot = k;
      }
    }
  }
  for (Var v : kAllVars) {
    if (!index[static_cast<std::size_t>(v)]) {
      const std::string name(to_string(v));
      throw ParseError(ParseError::Kind::kMissingColumn, header_row, name,
                       "missing column '" + name + "' in header");
    }
  }

  std::array<std::vector<double>, 4> cols;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header->size()) {
      throw ParseError(ParseError::Kind::kFieldCount, line_no, "",
                       "row " + std::to_string(line_no) + ": expected " +
                           std::to_string(header->size()) + " fields, found " +
                           std::to_string(fields.size()));
    }
    for (Var v : kAllVars) {
      const auto k = *index[static_cast<std::size_t>(v)];
      const auto cell = fields[k];
      const std::string name(to_string(v));
      double value = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, value);
      bool overflow = false;
      if (ec == std::errc::result_out_of_range && ptr == last) {
        // from_chars leaves the value untouched; strtod tells overflow from underflow.
        value = std::strtod(std::string(first, last).c_str(), nullptr);
        overflow = std::isinf(value);
        if (!overflow) ec = std::errc();
      }
      if (!overflow && (cell.empty() || ec != std::errc() || ptr != last)) {
        throw ParseError(ParseError::Kind::kNonNumeric, line_no, name,
                         "row " + std::to_string(line_no) + ", column " + name +
                             ": non-numeric cell '" + std::string(cell) + "'");
      }
      if (overflow || !std::isfinite(value)) {
        throw ParseError(ParseError::Kind::kNonFinite, line_no, name,
                         "row " + std::to_string(line_no) + ", column " + name +
                             ": non-finite value '" + std::string(cell) + "'");
      }
      cols[static_cast<std::size_t>(v)].push_back(value);
    }
  }

  if (cols[0].empty()) {
    throw ParseError(ParseError::Kind::kEmptyBody, line_no, "",
                     "population file has an empty body");
  }
  return Population(std::move(cols[0]), std::move(cols[1]), std::move(cols[2]),
                    std::move(cols[3]));
}

Population load_population(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(ParseError::Kind::kIo, 0, "",
                     "cannot open population file '" + path.string() + "'");
  }
  return parse_population(in);
}

void write_population(std::ostream& out, const Population& pop) {
  const auto old_precision = out.precision(17);
  out << "a,b,c,z\n";
  for (std::size_t i = 0; i < pop.size(); ++i) {
    out << pop.a()[i] << ',' << pop.b()[i] << ',' << pop.c()[i] << ',' << pop.z()[i]
        << '\n';
  }
  out.precision(old_precision);
}

MomentSet moment_set(const Population& pop) {
  MomentSet m;
  m.n = pop.size();
  const auto n = static_cast<double>(pop.size());

  for (Var v : kAllVars) {
    const auto i = static_cast<std::size_t>(v);
    m.mean[i] = mean(pop[v]);
    CompensatedSum s4;
    for (double x : pop[v]) s4.add(x * x * x * x);
    m.fourth_abs[i] = s4.value() / n;
  }
  for (Var x : kAllVars) {
    for (Var y : kAllVars) {
      const auto i = static_cast<std::size_t>(x);
      const auto j = static_cast<std::size_t>(y);
      if (j < i) {
        m.cov[i][j] = m.cov[j][i];
        continue;
      }
      m.cov[i][j] = covariance(pop[x], pop[y]);
    }
  }

  const auto z = pop.z();
  std::vector<double> product(pop.size());
  for (std::size_t r = 0; r < 3; ++r) {
    const auto x = pop.response(r);
    CompensatedSum cross;
    for (std::size_t i = 0; i < product.size(); ++i) {
      product[i] = x[i] * z[i];
      cross.add(product[i]);
    }
    m.cross_z[r] = cross.value() / n;
    m.product_cov[r] = covariance(product, z);
  }
  return m;
}

NormalizedPopulation normalize_z(const Population& pop) {
  const auto z = pop.z();
  const double shift = mean(z);
  std::vector<double> centered(z.size());
  CompensatedSum sq;
  for (std::size_t i = 0; i < z.size(); ++i) {
    centered[i] = z[i] - shift;
    sq.add(centered[i] * centered[i]);
  }
  const double scale = std::sqrt(sq.value() / static_cast<double>(z.size()));
  const double z_scale = std::max(1.0, std::fabs(shift));
  if (!(scale > 1e-12 * z_scale)) {
    throw Error(ErrorCode::kZeroVarianceCovariate, "zero variance covariate");
  }
  for (double& v : centered) v /= scale;
  return {pop.with_z(std::move(centered)), shift, scale};
}

CenteredPopulation center_responses(const Population& pop) {
  Vec3 means{};
  std::array<std::vector<double>, 3> cols;
  for (std::size_t r = 0; r < 3; ++r) {
    const auto x = pop.response(r);
    means[r] = mean(x);
    cols[r].resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) cols[r][i] = x[i] - means[r];
  }
  return {Population(std::move(cols[0]), std::move(cols[1]), std::move(cols[2]),
                     std::vector<double>(pop.z().begin(), pop.z().end())),
          means};
}

Population replicate(const Population& pop, std::size_t m) {
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "replication factor must be >= 1");
  std::array<std::vector<double>, 4> cols;
  for (Var v : kAllVars) {
    auto& out = cols[static_cast<std::size_t>(v)];
    out.reserve(pop.size() * m);
    for (double x : pop[v]) out.insert(out.end(), m, x);
  }
  return Population(std::move(cols[0]), std::move(cols[1]), std::move(cols[2]),
                    std::move(cols[3]));
}

ConditionReport condition_report(const Population& pop, const GroupSizes& sizes) {
  ConditionReport r;
  const auto z = pop.z();
  r.mean_z = mean(z);
  CompensatedSum sq;
  for (double v : z) sq.add(v * v);
  r.mean_sq_z = sq.value() / static_cast<double>(z.size());

  const MomentSet m = moment_set(pop);
  r.fourth_moment_bound = *std::max_element(m.fourth_abs.begin(), m.fourth_abs.end());

  r.fractions_ok = sizes.total() == pop.size() && sizes[Group::A] > 0 &&
                   sizes[Group::B] > 0 && sizes[Group::C] > 0;
  r.z_centered_ok = std::fabs(r.mean_z) <= kNormalizationTolerance;
  r.z_scaled_ok = std::fabs(r.mean_sq_z - 1.0) <= kNormalizationTolerance;
  return r;
}

bool is_additive(const Population& pop, double tol) {
  const auto a = pop.a();
  const auto b = pop.b();
  const auto c = pop.c();
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (std::fabs((b[i] - a[i]) - (b[0] - a[0])) > tol) return false;
    if (std::fabs((c[i] - a[i]) - (c[0] - a[0])) > tol) return false;
  }
  return true;
}

bool is_conditionally_constant(const Population& pop, double tol) {
  std::map<double, std::vector<std::size_t>> levels;
  const auto z = pop.z();
  for (std::size_t i = 0; i < z.size(); ++i) levels[z[i]].push_back(i);

  for (std::size_t r = 0; r < 3; ++r) {
    const auto x = pop.response(r);
    const double overall = mean(x);
    for (const auto& [level, members] : levels) {
      CompensatedSum s;
      for (auto i : members) s.add(x[i]);
      if (std::fabs(s.value() / static_cast<double>(members.size()) - overall) > tol) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace regadj
