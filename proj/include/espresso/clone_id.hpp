#pragma once

#include <compare>
#include <functional>
#include <ostream>
#include <string>

namespace espresso {

// Identifier of a spotted cDNA clone. Ordering is "natural": ids made only of
// digits compare numerically and sort before any non-numeric id, which sort
// lexicographically. That keeps clone 9 ahead of clone 10 in every output.
struct CloneId {
  std::string value;

  CloneId() = default;
  explicit CloneId(std::string v) : value(std::move(v)) {}

  bool operator==(const CloneId&) const = default;
  std::strong_ordering operator<=>(const CloneId& other) const;
};

inline std::ostream& operator<<(std::ostream& os, const CloneId& id) {
  return os << id.value;
}

}  // namespace espresso

template <>
struct std::hash<espresso::CloneId> {
  std::size_t operator()(const espresso::CloneId& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};
