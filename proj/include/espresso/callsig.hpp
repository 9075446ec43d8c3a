#pragma once

// Replicate assembly and the zero-centered sign test.
//
// Under "no change" a log ratio is positive or negative with probability 1/2,
// so the number of positive replicates is Binomial(n, 1/2). A clone is called
// up (down) when its positive (negative) count reaches the smallest t with
// P(X >= t) <= alpha. With n = 16 and alpha = 0.05 that is t = 12.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "espresso/clone_id.hpp"
#include "espresso/descriptor.hpp"
#include "espresso/design.hpp"
#include "espresso/quant.hpp"

namespace espresso::callsig {

using Rational = boost::multiprecision::cpp_rational;

enum class DyeOrientation { Forward, Swapped };

struct PairedArray {
  std::string array_id;
  char array_type = 'A';
  DyeOrientation orientation = DyeOrientation::Forward;
  std::optional<std::string> slide;
};

struct ComparisonPairing {
  std::string comparison;
  std::vector<PairedArray> arrays;
};

// Pairing files use the description record format:
//
//   COMPARISON CvsM
//   ARRAY CvsM-1a A forward slide1
//   ARRAY CvsM-1b A swapped slide1
//
// ARRAY records belong to the closest preceding COMPARISON.
std::vector<ComparisonPairing> parse_pairing(const descriptor::ExperimentDescription& desc);

struct ReplicateValue {
  double log_ratio = 0;
  std::string array_id;
  design::Position position;
  DyeOrientation orientation = DyeOrientation::Forward;
};

struct CloneReplicates {
  CloneId clone;
  std::vector<ReplicateValue> values;
};

struct ComparisonDataset {
  std::string comparison;
  std::vector<CloneReplicates> clones;  // clone-id order
};

// Per clone, log(calibrated ratio) from forward arrays and its negation from
// swapped arrays, in pairing order then position order. Flagged spots are
// left out.
ComparisonDataset assemble_replicates(std::span<const quant::SpotMeasurement> spots,
                                      const design::LayoutDesign& layout,
                                      const ComparisonPairing& pairing);

// P(X >= k) for X ~ Binomial(n, 1/2), exactly.
Rational binomial_upper_tail_exact(int n, int k);
double binomial_upper_tail(int n, int k);

// Smallest t with P(X >= t) <= alpha; n + 1 when no count is extreme enough.
int sign_threshold(int n, double alpha);

enum class Call { Up, Down, Unchanged };

std::string_view to_string(Call call);
Call parse_call(std::string_view text);

struct ExpressionCall {
  CloneId clone;
  std::string comparison;
  Call call = Call::Unchanged;
  int n = 0;  // nonzero replicates
  int k_positive = 0;
  int k_negative = 0;
  double tail_probability = 1;

  bool operator==(const ExpressionCall&) const = default;
};

inline constexpr double kDefaultAlpha = 0.05;

// Exact zeros count toward neither sign and reduce n.
ExpressionCall classify_clone(std::span<const double> log_ratios, double alpha = kDefaultAlpha);

// One call per clone, in clone-id order. Clones without any replicate are
// reported unchanged with n = 0.
std::vector<ExpressionCall> classify_all(const ComparisonDataset& dataset, double alpha = kDefaultAlpha);

// calls.tsv: clone_id comparison call n k_pos k_neg tail_probability
std::string write_calls(std::span<const ExpressionCall> calls);
std::vector<ExpressionCall> read_calls(std::string_view tsv);

}  // namespace espresso::callsig
