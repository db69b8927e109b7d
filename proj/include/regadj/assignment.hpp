#pragma once

// Random and exhaustive assignment of subjects to the treatment groups.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "regadj/rng.hpp"

namespace regadj {

class Population;

enum class Group : std::uint8_t { A = 0, B = 1, C = 2 };

constexpr std::array<Group, 3> kAllGroups{Group::A, Group::B, Group::C};

constexpr std::size_t index_of(Group g) noexcept { return static_cast<std::size_t>(g); }
char to_char(Group g) noexcept;
Group group_from_char(char c);

/// Fixed group sizes n_A, n_B, n_C; all strictly positive.
class GroupSizes {
 public:
  GroupSizes(std::size_t n_a, std::size_t n_b, std::size_t n_c);

  std::size_t operator[](Group g) const noexcept { return sizes_[index_of(g)]; }
  std::size_t total() const noexcept { return sizes_[0] + sizes_[1] + sizes_[2]; }
  /// n_S / n.
  double fraction(Group g) const noexcept {
    return static_cast<double>((*this)[g]) / static_cast<double>(total());
  }
  std::array<double, 3> fractions() const noexcept;

  /// Throws ErrorCode::kSizeMismatch unless total() == n.
  void require_total(std::size_t n) const;

  /// Each size multiplied by m.
  GroupSizes scaled(std::size_t m) const;

  std::string to_string() const;

  friend bool operator==(const GroupSizes&, const GroupSizes&) = default;

 private:
  std::array<std::size_t, 3> sizes_;
};

/// Labels over {A, B, C} with exactly n_S labels in group S.
class Assignment {
 public:
  /// Validates label counts against `sizes`.
  Assignment(std::vector<Group> labels, const GroupSizes& sizes);

  /// Parses a string such as "ABCCCC".
  static Assignment from_string(std::string_view labels, const GroupSizes& sizes);

  std::size_t size() const noexcept { return labels_.size(); }
  Group operator[](std::size_t i) const noexcept { return labels_[i]; }
  std::span<const Group> labels() const noexcept { return labels_; }
  const GroupSizes& sizes() const noexcept { return sizes_; }

  /// Dummy variable U, V or W for subject i.
  int dummy(Group g, std::size_t i) const noexcept { return labels_[i] == g ? 1 : 0; }

  /// Indices of subjects in group g, ascending.
  std::vector<std::size_t> members(Group g) const;

  /// Labels s and t exchanged; requires n_s == n_t.
  Assignment swapped(Group s, Group t) const;

  std::string to_string() const;

  friend bool operator==(const Assignment& x, const Assignment& y) {
    return x.labels_ == y.labels_;
  }

 private:
  std::vector<Group> labels_;
  GroupSizes sizes_;
};

enum class EnumerationMode {
  kAll,
  /// Only assignments where the first A subject precedes the first B subject.
  /// Defined when n_A == n_B; exactly half of kAll.
  kABeforeB,
};

std::string_view to_string(EnumerationMode mode) noexcept;
EnumerationMode enumeration_mode_from_string(std::string_view name);

inline constexpr std::uint64_t kDefaultEnumerationLimit = 1'000'000;

/// n! / (n_A! n_B! n_C!), saturating at UINT64_MAX.
std::uint64_t multinomial_count(const GroupSizes& sizes) noexcept;

/// Uniform over all multinomial-many labelings (Fisher-Yates on the sorted
/// label vector). Throws kSizeMismatch when sizes.total() != n.
Assignment random_assignment(const GroupSizes& sizes, std::size_t n, CounterRng& rng);

/// Lexicographic (A < B < C) stream of every distinct labeling.
///
/// The stream is indexed by rank in the kAll order, so it can be split into
/// rank ranges and processed independently. In kABeforeB mode ranks still
/// refer to the kAll order and excluded labelings are skipped.
class AssignmentEnumerator {
 public:
  AssignmentEnumerator(const GroupSizes& sizes, EnumerationMode mode,
                       std::uint64_t limit = kDefaultEnumerationLimit);

  const GroupSizes& sizes() const noexcept { return sizes_; }
  EnumerationMode mode() const noexcept { return mode_; }

  /// Number of labelings in the kAll order.
  std::uint64_t total_ranks() const noexcept { return total_ranks_; }
  /// Number of labelings actually emitted in this mode.
  std::uint64_t count() const noexcept;

  /// Labeling with the given rank in the kAll order.
  std::vector<Group> unrank(std::uint64_t rank) const;

  bool accepts(std::span<const Group> labels) const noexcept;

  /// Calls f(rank, labels) for each emitted labeling with rank in [first, last).
  template <class F>
  void for_each_in_range(std::uint64_t first, std::uint64_t last, F&& f) const {
    if (first >= last) return;
    std::vector<Group> labels = unrank(first);
    for (std::uint64_t r = first; r < last; ++r) {
      if (r != first) next_labeling(labels);
      if (accepts(labels)) f(r, std::span<const Group>(labels));
    }
  }

  template <class F>
  void for_each(F&& f) const {
    for_each_in_range(0, total_ranks_, std::forward<F>(f));
  }

  std::vector<Assignment> collect() const;

 private:
  static void next_labeling(std::vector<Group>& labels);

  GroupSizes sizes_;
  EnumerationMode mode_;
  std::uint64_t total_ranks_;
};

/// Y_i = a_i, b_i or c_i according to the label of subject i.
std::vector<double> observed_response(const Population& pop, const Assignment& asg);

/// Mean of `values` over the subjects assigned to `group`.
double group_mean(std::span<const double> values, const Assignment& asg, Group group);

/// The three group means in one pass.
std::array<double, 3> group_means(std::span<const double> values, const Assignment& asg);

}  // namespace regadj
