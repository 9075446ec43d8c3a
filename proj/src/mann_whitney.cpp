#include <algorithm>
#include <cmath>
#include <numeric>

#include "espresso/error.hpp"
#include "espresso/quant.hpp"

namespace espresso::quant {
namespace {

// Twice the midrank of every pooled value, xs first then ys. Doubling keeps
// tied ranks integral.
std::vector<long> doubled_midranks(std::span<const double> xs, std::span<const double> ys,
                                   double& tie_term) {
  const std::size_t n = xs.size() + ys.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto value = [&](std::size_t i) { return i < xs.size() ? xs[i] : ys[i - xs.size()]; };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
  std::vector<long> ranks(n);
  tie_term = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && value(order[j + 1]) == value(order[i])) ++j;
    // positions i+1 .. j+1 share rank ((i+1)+(j+1))/2
    const long doubled = static_cast<long>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = doubled;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  return ranks;
}

// Number of size-k subsets of `ranks` whose sum is at least `threshold`.
std::uint64_t count_at_least(const std::vector<long>& ranks, std::size_t k, long threshold) {
  const std::size_t n = ranks.size();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
  std::uint64_t hits = 0;
  do {
    long sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pick[i]) sum += ranks[i];
    }
    if (sum >= threshold) ++hits;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return hits;
}

double binomial(std::size_t n, std::size_t k) {
  double r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

}  // namespace

MannWhitneyResult mann_whitney(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw ArgumentError("mann_whitney needs two non-empty samples");
  const auto n = xs.size();
  const auto m = ys.size();
  const auto total = n + m;

  double tie_term = 0;
  auto ranks = doubled_midranks(xs, ys, tie_term);
  const long rank_sum2 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n), 0L);
  const long u2 = rank_sum2 - static_cast<long>(n * (n + 1));

  MannWhitneyResult result;
  result.u = static_cast<double>(u2) / 2.0;

  if (total <= kExactLimit) {
    result.exact = true;
    result.p_value = static_cast<double>(count_at_least(ranks, n, rank_sum2)) / binomial(total, n);
    return result;
  }

  const double nm = static_cast<double>(n) * static_cast<double>(m);
  const double big_n = static_cast<double>(total);
  const double var = nm / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
  if (var <= 0) {
    result.p_value = 1.0;  // every value tied: U is constant
    return result;
  }
  const double z = (result.u - nm / 2.0 - 0.5) / std::sqrt(var);
  result.p_value = 0.5 * std::erfc(z / std::sqrt(2.0));
  return result;
}

}  // namespace espresso::quant
