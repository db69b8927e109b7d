#include "regadj/assignment.hpp"

#include <algorithm>
#include <limits>

#include "regadj/error.hpp"
#include "regadj/population.hpp"
#include "regadj/summation.hpp"

namespace regadj {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

// C(n, k), saturating.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept {
  if (k > n) return 0;
  k = std::min(k, n - k);
  uint128_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
    if (result > kSaturated) return kSaturated;
  }
  return static_cast<std::uint64_t>(result);
}

std::uint64_t multinomial(std::array<std::size_t, 3> counts) noexcept {
  const std::uint64_t n = counts[0] + counts[1] + counts[2];
  const std::uint64_t first = binomial(n, counts[0]);
  const std::uint64_t second = binomial(n - counts[0], counts[1]);
  if (first == kSaturated || second == kSaturated) return kSaturated;
  const uint128_t product = static_cast<uint128_t>(first) * second;
  return product > kSaturated ? kSaturated : static_cast<std::uint64_t>(product);
}

std::vector<Group> sorted_labels(const GroupSizes& sizes) {
  std::vector<Group> labels;
  labels.reserve(sizes.total());
  for (Group g : kAllGroups) labels.insert(labels.end(), sizes[g], g);
  return labels;
}

}  // namespace

EnumerationTooLarge::EnumerationTooLarge(std::uint64_t count, std::uint64_t limit)
    : Error(ErrorCode::kEnumerationTooLarge,
            "enumeration too large: " +
                (count == kSaturated ? std::string("more than 18446744073709551615")
                                     : std::to_string(count)) +
                " assignments exceed the limit of " + std::to_string(limit)),
      count_(count),
      limit_(limit) {}

char to_char(Group g) noexcept {
  switch (g) {
    case Group::A: return 'A';
    case Group::B: return 'B';
    case Group::C: return 'C';
  }
  return '?';
}

Group group_from_char(char c) {
  switch (c) {
    case 'A': case 'a': return Group::A;
    case 'B': case 'b': return Group::B;
    case 'C': case 'c': return Group::C;
    default: break;
  }
  throw Error(ErrorCode::kInvalidArgument, std::string("unknown group label '") + c + "'");
}

GroupSizes::GroupSizes(std::size_t n_a, std::size_t n_b, std::size_t n_c)
    : sizes_{n_a, n_b, n_c} {
  if (n_a == 0 || n_b == 0 || n_c == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "group sizes must be positive, got " + to_string());
  }
}

std::array<double, 3> GroupSizes::fractions() const noexcept {
  return {fraction(Group::A), fraction(Group::B), fraction(Group::C)};
}

void GroupSizes::require_total(std::size_t n) const {
  if (total() != n) {
    throw Error(ErrorCode::kSizeMismatch, "size mismatch: group sizes " + to_string() +
                                              " sum to " + std::to_string(total()) +
                                              " but the population has n = " +
                                              std::to_string(n));
  }
}

GroupSizes GroupSizes::scaled(std::size_t m) const {
  return GroupSizes(sizes_[0] * m, sizes_[1] * m, sizes_[2] * m);
}

std::string GroupSizes::to_string() const {
  return std::to_string(sizes_[0]) + "," + std::to_string(sizes_[1]) + "," +
         std::to_string(sizes_[2]);
}

Assignment::Assignment(std::vector<Group> labels, const GroupSizes& sizes)
    : labels_(std::move(labels)), sizes_(sizes) {
  sizes_.require_total(labels_.size());
  std::array<std::size_t, 3> counts{};
  for (Group g : labels_) ++counts[index_of(g)];
  for (Group g : kAllGroups) {
    if (counts[index_of(g)] != sizes_[g]) {
      throw Error(ErrorCode::kSizeMismatch,
                  std::string("size mismatch: assignment has ") +
                      std::to_string(counts[index_of(g)]) + " labels " + to_char(g) +
                      ", expected " + std::to_string(sizes_[g]));
    }
  }
}

Assignment Assignment::from_string(std::string_view labels, const GroupSizes& sizes) {
  std::vector<Group> out;
  out.reserve(labels.size());
  for (char c : labels) out.push_back(group_from_char(c));
  return Assignment(std::move(out), sizes);
}

std::vector<std::size_t> Assignment::members(Group g) const {
  std::vector<std::size_t> out;
  out.reserve(sizes_[g]);
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == g) out.push_back(i);
  return out;
}

Assignment Assignment::swapped(Group s, Group t) const {
  if (sizes_[s] != sizes_[t]) {
    throw Error(ErrorCode::kInvalidArgument, "cannot swap groups of different sizes");
  }
  std::vector<Group> out(labels_);
  for (Group& g : out) {
    if (g == s) {
      g = t;
    } else if (g == t) {
      g = s;
    }
  }
  return Assignment(std::move(out), sizes_);
}

std::string Assignment::to_string() const {
  std::string s;
  s.reserve(labels_.size());
  for (Group g : labels_) s.push_back(to_char(g));
  return s;
}

std::string_view to_string(EnumerationMode mode) noexcept {
  switch (mode) {
    case EnumerationMode::kAll: return "all";
    case EnumerationMode::kABeforeB: return "a-before-b";
  }
  return "?";
}

EnumerationMode enumeration_mode_from_string(std::string_view name) {
  if (name == "all") return EnumerationMode::kAll;
  if (name == "a-before-b") return EnumerationMode::kABeforeB;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown enumeration mode '" + std::string(name) + "' (expected all, a-before-b)");
}

std::uint64_t multinomial_count(const GroupSizes& sizes) noexcept {
  return multinomial({sizes[Group::A], sizes[Group::B], sizes[Group::C]});
}

Assignment random_assignment(const GroupSizes& sizes, std::size_t n, CounterRng& rng) {
  sizes.require_total(n);
  std::vector<Group> labels = sorted_labels(sizes);
  for (std::size_t i = labels.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(labels[i - 1], labels[j]);
  }
  return Assignment(std::move(labels), sizes);
}

AssignmentEnumerator::AssignmentEnumerator(const GroupSizes& sizes, EnumerationMode mode,
                                           std::uint64_t limit)
    : sizes_(sizes), mode_(mode), total_ranks_(multinomial_count(sizes)) {
  if (mode_ == EnumerationMode::kABeforeB && sizes_[Group::A] != sizes_[Group::B]) {
    throw Error(ErrorCode::kInvalidArgument,
                "a-before-b enumeration requires n_A == n_B, got " + sizes_.to_string());
  }
  if (total_ranks_ > limit) throw EnumerationTooLarge(total_ranks_, limit);
}

std::uint64_t AssignmentEnumerator::count() const noexcept {
  return mode_ == EnumerationMode::kAll ? total_ranks_ : total_ranks_ / 2;
}

std::vector<Group> AssignmentEnumerator::unrank(std::uint64_t rank) const {
  if (rank >= total_ranks_) {
    throw Error(ErrorCode::kInvalidArgument, "assignment rank out of range");
  }
  std::array<std::size_t, 3> remaining{sizes_[Group::A], sizes_[Group::B], sizes_[Group::C]};
  std::vector<Group> labels;
  labels.reserve(sizes_.total());
  for (std::size_t pos = 0; pos < sizes_.total(); ++pos) {
    for (Group g : kAllGroups) {
      auto& left = remaining[index_of(g)];
      if (left == 0) continue;
      --left;
      const std::uint64_t completions = multinomial(remaining);
      if (rank < completions) {
        labels.push_back(g);
        break;
      }
      rank -= completions;
      ++left;
    }
  }
  return labels;
}

bool AssignmentEnumerator::accepts(std::span<const Group> labels) const noexcept {
  if (mode_ == EnumerationMode::kAll) return true;
  for (Group g : labels) {
    if (g == Group::A) return true;
    if (g == Group::B) return false;
  }
  return false;
}

void AssignmentEnumerator::next_labeling(std::vector<Group>& labels) {
  std::next_permutation(labels.begin(), labels.end());
}

std::vector<Assignment> AssignmentEnumerator::collect() const {
  std::vector<Assignment> out;
  out.reserve(count());
  for_each([&](std::uint64_t, std::span<const Group> labels) {
    out.emplace_back(std::vector<Group>(labels.begin(), labels.end()), sizes_);
  });
  return out;
}

std::vector<double> observed_response(const Population& pop, const Assignment& asg) {
  if (asg.size() != pop.size()) {
    throw Error(ErrorCode::kSizeMismatch, "size mismatch: assignment length " +
                                              std::to_string(asg.size()) +
                                              " differs from population size " +
                                              std::to_string(pop.size()));
  }
  std::vector<double> y(pop.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = pop.response(index_of(asg[i]))[i];
  return y;
}

double group_mean(std::span<const double> values, const Assignment& asg, Group group) {
  if (values.size() != asg.size()) {
    throw Error(ErrorCode::kSizeMismatch, "size mismatch: values and assignment differ");
  }
  CompensatedSum s;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (asg[i] == group) s.add(values[i]);
  return s.value() / static_cast<double>(asg.sizes()[group]);
}

std::array<double, 3> group_means(std::span<const double> values, const Assignment& asg) {
  if (values.size() != asg.size()) {
    throw Error(ErrorCode::kSizeMismatch, "size mismatch: values and assignment differ");
  }
  std::array<CompensatedSum, 3> s;
  for (std::size_t i = 0; i < values.size(); ++i) s[index_of(asg[i])].add(values[i]);
  std::array<double, 3> out{};
  for (Group g : kAllGroups)
    out[index_of(g)] = s[index_of(g)].value() / static_cast<double>(asg.sizes()[g]);
  return out;
}

}  // namespace regadj
