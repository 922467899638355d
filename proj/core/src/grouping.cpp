#include "gfzip/grouping.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>

namespace gfzip {

GroupingScheme::GroupingScheme(std::vector<std::int64_t> thresholds)
    : thresholds_(std::move(thresholds)) {
  if (thresholds_.size() < 2) {
    throw std::invalid_argument("grouping scheme needs at least two groups");
  }
  if (thresholds_.front() != 0) {
    throw std::invalid_argument("first grouping threshold must be 0");
  }
  for (std::size_t g = 1; g < thresholds_.size(); ++g) {
    if (thresholds_[g] <= thresholds_[g - 1]) {
      throw std::invalid_argument("grouping thresholds must be strictly increasing");
    }
  }
}

GroupingScheme GroupingScheme::parse(std::string_view text) {
  std::vector<std::int64_t> thresholds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string_view token = text.substr(pos, comma == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : comma - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
      throw std::invalid_argument("bad grouping threshold token: '" + std::string(token) + "'");
    }
    thresholds.push_back(value);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return GroupingScheme(std::move(thresholds));
}

GroupingScheme GroupingScheme::singletons(std::int64_t cap) {
  if (cap < 1) throw std::invalid_argument("singleton scheme cap must be >= 1");
  std::vector<std::int64_t> thresholds(static_cast<std::size_t>(cap) + 1);
  for (std::int64_t t = 0; t <= cap; ++t) thresholds[static_cast<std::size_t>(t)] = t;
  return GroupingScheme(std::move(thresholds));
}

std::string GroupingScheme::str() const {
  std::ostringstream out;
  for (std::size_t g = 0; g < thresholds_.size(); ++g) {
    if (g > 0) out << ',';
    out << thresholds_[g];
  }
  return out.str();
}

int GroupingScheme::group_of(std::int64_t count) const {
  if (count < 0) throw std::invalid_argument("count must be non-negative");
  auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(), count);
  return static_cast<int>(it - thresholds_.begin()) - 1;
}

GroupInterval GroupingScheme::interval(int group) const {
  if (group < 0 || group >= group_count()) {
    throw std::out_of_range("group index out of range");
  }
  GroupInterval iv;
  iv.lo = thresholds_[static_cast<std::size_t>(group)];
  if (group + 1 < group_count()) iv.hi = thresholds_[static_cast<std::size_t>(group) + 1];
  return iv;
}

}  // namespace gfzip
