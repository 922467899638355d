#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gfzip {

/// Half-open integer interval [lo, hi); an absent hi means unbounded above.
struct GroupInterval {
  std::int64_t lo = 0;
  std::optional<std::int64_t> hi;

  bool contains(std::int64_t y) const { return y >= lo && (!hi || y < *hi); }
  bool singleton() const { return hi && *hi == lo + 1; }
};

/// Ordinal grouping of non-negative counts into G groups. The thresholds are
/// the lower endpoints kappa_0 < kappa_1 < ... < kappa_{G-1} with kappa_0 = 0;
/// group g covers [kappa_g, kappa_{g+1}) and the last group is open above.
class GroupingScheme {
 public:
  explicit GroupingScheme(std::vector<std::int64_t> thresholds);

  /// Parses a comma-separated threshold list, e.g. "0,1,2,3,6,11,51".
  static GroupingScheme parse(std::string_view text);

  /// Builds singleton groups {0},...,{cap-1} plus the open group [cap, inf).
  static GroupingScheme singletons(std::int64_t cap);

  std::string str() const;

  int group_count() const { return static_cast<int>(thresholds_.size()); }
  const std::vector<std::int64_t>& thresholds() const { return thresholds_; }

  /// Group index g with kappa_g <= count < kappa_{g+1}.
  int group_of(std::int64_t count) const;

  /// The interval [kappa_g, kappa_{g+1}) covered by group g.
  GroupInterval interval(int group) const;

 private:
  std::vector<std::int64_t> thresholds_;
};

}  // namespace gfzip
