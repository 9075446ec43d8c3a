#include "espresso/clone_id.hpp"

#include <algorithm>
#include <cctype>
#include <string_view>

namespace espresso {
namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

std::string_view strip_leading_zeros(std::string_view s) {
  auto first = s.find_first_not_of('0');
  return first == std::string_view::npos ? s.substr(s.size() - 1) : s.substr(first);
}

}  // namespace

std::strong_ordering CloneId::operator<=>(const CloneId& other) const {
  const bool a_num = all_digits(value);
  const bool b_num = all_digits(other.value);
  if (a_num != b_num) {
    return a_num ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  if (a_num) {
    auto a = strip_leading_zeros(value);
    auto b = strip_leading_zeros(other.value);
    if (a.size() != b.size()) return a.size() <=> b.size();
    if (auto c = a.compare(b); c != 0) return c <=> 0;
  }
  return value.compare(other.value) <=> 0;
}

}  // namespace espresso
