#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "espresso/callsig.hpp"
#include "espresso/error.hpp"

using namespace espresso;
using namespace espresso::callsig;

namespace {

// Pascal's triangle, row n.
std::vector<std::uint64_t> pascal_row(int n) {
  std::vector<std::uint64_t> row{1};
  for (int i = 0; i < n; ++i) {
    std::vector<std::uint64_t> next(row.size() + 1, 0);
    for (std::size_t j = 0; j < row.size(); ++j) {
      next[j] += row[j];
      next[j + 1] += row[j];
    }
    row = std::move(next);
  }
  return row;
}

// Sum of C(n, i) for i >= k.
std::uint64_t tail_count(int n, int k) {
  auto row = pascal_row(n);
  std::uint64_t s = 0;
  for (int i = k; i <= n; ++i) s += row[static_cast<std::size_t>(i)];
  return s;
}

std::vector<double> signs(int pos, int neg, int zero = 0) {
  std::vector<double> v;
  v.insert(v.end(), static_cast<std::size_t>(pos), 0.7);
  v.insert(v.end(), static_cast<std::size_t>(neg), -0.7);
  v.insert(v.end(), static_cast<std::size_t>(zero), 0.0);
  return v;
}

quant::SpotMeasurement spot(const std::string& array, design::Position pos, double calibrated,
                            std::uint8_t flags = 0) {
  quant::SpotMeasurement s;
  s.array_id = array;
  s.position = pos;
  s.corrected_ratio = calibrated;
  if (!flags) s.calibrated_ratio = calibrated;
  s.flags = flags;
  return s;
}

}  // namespace

TEST_CASE("binomial tails") {
  CHECK(binomial_upper_tail_exact(16, 12) == Rational(2517, 65536));
  CHECK(std::abs(binomial_upper_tail(16, 12) - 0.0384064) <= 5e-8);
  CHECK(binomial_upper_tail(16, 0) == 1.0);
  CHECK(binomial_upper_tail(16, 16) == 1.52587890625e-5);
  CHECK(binomial_upper_tail_exact(16, 8) == Rational(39203, 65536));
  CHECK(binomial_upper_tail(16, 8) == doctest::Approx(0.598190).epsilon(1e-6));
  CHECK_THROWS_AS(binomial_upper_tail(16, 17), ArgumentError);
  CHECK_THROWS_AS(binomial_upper_tail(16, -1), ArgumentError);
}

TEST_CASE("binomial tails agree with Pascal's triangle") {
  for (int n = 0; n <= 40; ++n) {
    Rational previous(2);
    for (int k = 0; k <= n; ++k) {
      const auto exact = binomial_upper_tail_exact(n, k);
      CHECK(exact == Rational(tail_count(n, k), std::uint64_t{1} << n));
      CHECK(exact <= previous);
      previous = exact;
    }
    CHECK(binomial_upper_tail_exact(n, 0) == 1);
  }
}

TEST_CASE("sign threshold") {
  CHECK(sign_threshold(16, 0.05) == 12);
  CHECK(sign_threshold(15, 0.05) == 12);  // P(X>=11 | 15) = 0.059
  CHECK(sign_threshold(4, 0.05) == 5);    // even 4 of 4 is p = 1/16 > alpha
  CHECK(sign_threshold(0, 0.05) == 1);
  CHECK_THROWS_AS(sign_threshold(16, 0.0), ArgumentError);
  CHECK_THROWS_AS(sign_threshold(16, 1.0), ArgumentError);
  for (int n = 1; n <= 30; ++n) {
    int t = 0;
    while (t <= n && tail_count(n, t) * 20 > (std::uint64_t{1} << n)) ++t;
    CHECK(sign_threshold(n, 0.05) == t);
  }
}

TEST_CASE("worked examples at n = 16") {
  auto up = classify_clone(signs(12, 4));
  CHECK(up.call == Call::Up);
  CHECK(up.n == 16);
  CHECK(up.k_positive == 12);
  CHECK(up.k_negative == 4);
  CHECK(std::abs(up.tail_probability - 0.0384064) <= 5e-8);
  CHECK(classify_clone(signs(4, 12)).call == Call::Down);
  CHECK(classify_clone(signs(8, 8)).call == Call::Unchanged);
  CHECK(classify_clone(signs(11, 5)).call == Call::Unchanged);
  CHECK(classify_clone(signs(13, 3)).call == Call::Up);
}

TEST_CASE("zeros are dropped from the test") {
  auto c = classify_clone(signs(11, 0, 5));
  CHECK(c.n == 11);
  CHECK(c.call == Call::Up);  // 11 of 11
  auto all_zero = classify_clone(signs(0, 0, 4));
  CHECK(all_zero.n == 0);
  CHECK(all_zero.call == Call::Unchanged);
  CHECK(all_zero.tail_probability == 1.0);
  CHECK_THROWS_AS(classify_clone(std::vector<double>{}), ArgumentError);
}

TEST_CASE("every sign pattern up to n = 8 matches a counting oracle") {
  for (int n = 1; n <= 8; ++n) {
    int patterns = 1;
    for (int i = 0; i < n; ++i) patterns *= 3;
    for (int code = 0; code < patterns; ++code) {
      std::vector<double> v;
      int pos = 0, neg = 0;
      for (int i = 0, c = code; i < n; ++i, c /= 3) {
        const int digit = c % 3;
        v.push_back(digit == 0 ? 0.0 : digit == 1 ? 1.5 : -0.25);
        pos += digit == 1;
        neg += digit == 2;
      }
      const int m = pos + neg;
      int t = 0;
      while (t <= m && tail_count(m, t) * 20 > (std::uint64_t{1} << m)) ++t;
      const Call expected = pos >= t ? Call::Up : neg >= t ? Call::Down : Call::Unchanged;
      auto got = classify_clone(v);
      CHECK(got.call == expected);
      CHECK(got.n == m);
      CHECK(got.k_positive == pos);
      CHECK(got.k_negative == neg);
      const double tail = static_cast<double>(tail_count(m, std::max(pos, neg))) / static_cast<double>(1u << m);
      CHECK(got.tail_probability == tail);
    }
  }
}

TEST_CASE("sign flip, permutation and monotonicity") {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> shift(0, 1);
  for (int t = 0; t < 2000; ++t) {
    const double mu = shift(rng);
    std::normal_distribution<double> value(mu, 1);
    std::vector<double> v(16);
    for (auto& x : v) x = value(rng);
    auto base = classify_clone(v);

    std::vector<double> neg(v);
    for (auto& x : neg) x = -x;
    auto flipped = classify_clone(neg);
    const Call mirrored = base.call == Call::Up ? Call::Down : base.call == Call::Down ? Call::Up : Call::Unchanged;
    CHECK(flipped.call == mirrored);
    CHECK(flipped.tail_probability == base.tail_probability);

    std::shuffle(v.begin(), v.end(), rng);
    CHECK(classify_clone(v) == base);

    if (base.call == Call::Up) {
      v.push_back(0.5);
      CHECK(classify_clone(v).call == Call::Up);
    }
  }
}

TEST_CASE("call names") {
  CHECK(parse_call("up") == Call::Up);
  CHECK(parse_call("down") == Call::Down);
  CHECK(parse_call("unchanged") == Call::Unchanged);
  CHECK(to_string(Call::Down) == "down");
  CHECK_THROWS(parse_call("positive"));
}

TEST_CASE("pairing records") {
  auto pairing = parse_pairing(descriptor::parse_description(
      "COMPARISON CvsM\n"
      "ARRAY a1 A forward S1\n"
      "ARRAY a2 A swapped S1\n"
      "ARRAY b1 B forward\n"
      "ARRAY b2 B swapped\n"
      "COMPARISON CvsS\n"
      "ARRAY c1 A forward\n"));
  REQUIRE(pairing.size() == 2);
  CHECK(pairing[0].comparison == "CvsM");
  REQUIRE(pairing[0].arrays.size() == 4);
  CHECK(pairing[0].arrays[1].orientation == DyeOrientation::Swapped);
  CHECK(pairing[0].arrays[0].slide == "S1");
  CHECK_FALSE(pairing[0].arrays[2].slide.has_value());
  CHECK(pairing[0].arrays[2].array_type == 'B');

  using descriptor::parse_description;
  CHECK_THROWS_AS(parse_pairing(parse_description("ARRAY a1 A forward\n")), ConfigError);
  CHECK_THROWS_AS(parse_pairing(parse_description("COMPARISON X\nARRAY a1 A sideways\n")), ConfigError);
  CHECK_THROWS_AS(parse_pairing(parse_description("COMPARISON X\nARRAY a1 AB forward\n")), ConfigError);
  CHECK_THROWS_AS(parse_pairing(parse_description("COMPARISON X\nARRAY a1 A forward\nARRAY a1 B forward\n")),
                  ConfigError);
}

TEST_CASE("assembly: 4 arrays x 4 replicates, swaps negated, flags omitted") {
  std::vector<CloneId> clones;
  for (int i = 1; i <= 8; ++i) clones.emplace_back(std::to_string(i));
  auto layout = design::generate_layout(clones, design::PrintingConfiguration{"t", 2, 4, 4}, 4, 2, 9);
  ComparisonPairing pairing{"CvsM",
                            {{"a1", 'A', DyeOrientation::Forward, "S1"},
                             {"a2", 'A', DyeOrientation::Swapped, "S1"},
                             {"b1", 'B', DyeOrientation::Forward, "S2"},
                             {"b2", 'B', DyeOrientation::Swapped, "S2"}}};
  std::vector<quant::SpotMeasurement> spots;
  for (const auto& arr : pairing.arrays) {
    for (std::size_t i = 0; i < layout.config.spots(); ++i) {
      const auto pos = design::spot_position(layout.config, i);
      // Every spot of clone c reads ratio c on every array.
      const double ratio = std::stod(layout.clone_at(arr.array_type, pos)->value);
      spots.push_back(spot(arr.array_id, pos, ratio));
    }
  }
  auto ds = assemble_replicates(spots, layout, pairing);
  CHECK(ds.comparison == "CvsM");
  REQUIRE(ds.clones.size() == 8);
  for (const auto& c : ds.clones) {
    REQUIRE(c.values.size() == 16);
    const double r = std::stod(c.clone.value);
    for (const auto& v : c.values) {
      const double expected = v.orientation == DyeOrientation::Swapped ? std::log(1 / r) : std::log(r);
      CHECK(v.log_ratio == doctest::Approx(expected));
    }
  }

  // Flag one spot of clone 3 on array b1.
  for (auto& s : spots) {
    if (s.array_id == "b1" && *layout.clone_at('B', s.position) == CloneId("3")) {
      s.flags = quant::kAbsent;
      s.calibrated_ratio.reset();
      break;
    }
  }
  auto flagged = assemble_replicates(spots, layout, pairing);
  for (const auto& c : flagged.clones) CHECK(c.values.size() == (c.clone == CloneId("3") ? 15u : 16u));

  auto calls = classify_all(flagged);
  REQUIRE(calls.size() == 8);
  CHECK(calls[0].clone == CloneId("1"));
  CHECK(calls[0].n == 0);  // log 1 = 0 on every replicate
  CHECK(calls[0].call == Call::Unchanged);
  for (const auto& c : calls) CHECK(c.comparison == "CvsM");

  // Array in pairing but missing from spot data.
  auto missing = pairing;
  missing.arrays.push_back({"zz", 'A', DyeOrientation::Forward, std::nullopt});
  CHECK_THROWS_AS(assemble_replicates(spots, layout, missing), AssemblyError);
  auto no_type = pairing;
  no_type.arrays[0].array_type = 'C';
  CHECK_THROWS_AS(assemble_replicates(spots, layout, no_type), AssemblyError);
}

TEST_CASE("classify_all: Fig. 5 clone 4 with 13 of 16 positive") {
  ComparisonDataset ds{"CvsM", {}};
  for (int id : {5, 4}) {
    CloneReplicates c{CloneId(std::to_string(id)), {}};
    for (int i = 0; i < 16; ++i) c.values.push_back({i < 13 ? 0.4 : -0.4, "a", {}, DyeOrientation::Forward});
    ds.clones.push_back(c);
  }
  auto calls = classify_all(ds);
  REQUIRE(calls.size() == 2);
  CHECK(calls[0].clone == CloneId("4"));
  CHECK(calls[0].call == Call::Up);
  CHECK(classify_all(ComparisonDataset{"CvsM", {}}).empty());
}

TEST_CASE("calls file round trip") {
  std::vector<ExpressionCall> calls;
  calls.push_back(classify_clone(signs(12, 4)));
  calls.back().clone = CloneId("4");
  calls.back().comparison = "CvsM";
  calls.push_back(classify_clone(signs(3, 9, 2)));
  calls.back().clone = CloneId("EST-9");
  calls.back().comparison = "CvsS";
  auto text = write_calls(calls);
  CHECK(read_calls(text) == calls);
  CHECK(text.find("4\tCvsM\tup\t16\t12\t4\t0.0384063720703125\n") != std::string::npos);
}
