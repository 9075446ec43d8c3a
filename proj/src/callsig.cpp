#include "espresso/callsig.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "espresso/error.hpp"
#include "espresso/tsv.hpp"

namespace espresso::callsig {

using boost::multiprecision::cpp_int;

std::vector<ComparisonPairing> parse_pairing(const descriptor::ExperimentDescription& desc) {
  std::vector<ComparisonPairing> out;
  std::set<std::string> seen_arrays;
  for (const auto& r : desc.records) {
    if (r.keyword == "COMPARISON") {
      if (r.fields.size() != 1) throw ConfigError("COMPARISON takes one field: the comparison id");
      out.push_back({r.fields[0].text(), {}});
    } else if (r.keyword == "ARRAY") {
      if (out.empty()) throw ConfigError("ARRAY record before any COMPARISON");
      if (r.fields.size() < 3 || r.fields.size() > 4) {
        throw ConfigError("ARRAY takes: array-id type forward|swapped [slide]");
      }
      PairedArray a;
      a.array_id = r.fields[0].text();
      const auto& type = r.fields[1].text();
      if (type.size() != 1 || type[0] < 'A' || type[0] > 'Z') {
        throw ConfigError("array type must be a single letter, got '" + type + "'");
      }
      a.array_type = type[0];
      const auto& dir = r.fields[2].text();
      if (dir == "forward") {
        a.orientation = DyeOrientation::Forward;
      } else if (dir == "swapped") {
        a.orientation = DyeOrientation::Swapped;
      } else {
        throw ConfigError("dye orientation must be forward or swapped, got '" + dir + "'");
      }
      if (r.fields.size() == 4) a.slide = r.fields[3].text();
      if (!seen_arrays.insert(a.array_id).second) {
        throw ConfigError("array " + a.array_id + " is paired twice");
      }
      out.back().arrays.push_back(std::move(a));
    }
  }
  return out;
}

ComparisonDataset assemble_replicates(std::span<const quant::SpotMeasurement> spots,
                                      const design::LayoutDesign& layout,
                                      const ComparisonPairing& pairing) {
  std::map<std::string, std::vector<const quant::SpotMeasurement*>> by_array;
  for (const auto& s : spots) by_array[s.array_id].push_back(&s);

  std::map<CloneId, std::vector<ReplicateValue>> values;
  for (const auto& id : layout.clones) values[id];

  for (const auto& arr : pairing.arrays) {
    auto it = by_array.find(arr.array_id);
    if (it == by_array.end()) {
      throw AssemblyError("comparison " + pairing.comparison + ": array " + arr.array_id +
                          " has no spot data");
    }
    if (!layout.array_map(arr.array_type)) {
      throw AssemblyError("comparison " + pairing.comparison + ": layout has no array type " +
                          std::string(1, arr.array_type));
    }
    auto group = it->second;
    std::sort(group.begin(), group.end(),
              [](const auto* a, const auto* b) { return a->position < b->position; });
    for (const auto* s : group) {
      auto clone = layout.clone_at(arr.array_type, s->position);
      if (!clone) {
        throw AssemblyError("array " + arr.array_id + ": spot outside the layout grid");
      }
      if (s->clone && *s->clone != *clone) {
        throw AssemblyError("array " + arr.array_id + ": spot names clone " + s->clone->value +
                            " but the layout places " + clone->value + " there");
      }
      if (s->flagged() || !s->calibrated_ratio) continue;
      double v = std::log(*s->calibrated_ratio);
      if (arr.orientation == DyeOrientation::Swapped) v = -v;
      values[*clone].push_back({v, arr.array_id, s->position, arr.orientation});
    }
  }

  ComparisonDataset ds;
  ds.comparison = pairing.comparison;
  for (auto& [id, vals] : values) ds.clones.push_back({id, std::move(vals)});
  return ds;
}

Rational binomial_upper_tail_exact(int n, int k) {
  if (n < 0 || k < 0 || k > n) {
    throw ArgumentError("binomial tail needs 0 <= k <= n (n=" + std::to_string(n) +
                        ", k=" + std::to_string(k) + ")");
  }
  cpp_int coeff = 1;  // C(n, i)
  cpp_int sum = 0;
  for (int i = 0; i <= n; ++i) {
    if (i >= k) sum += coeff;
    coeff = coeff * (n - i) / (i + 1);
  }
  return Rational(sum, cpp_int(1) << n);
}

double binomial_upper_tail(int n, int k) {
  return binomial_upper_tail_exact(n, k).convert_to<double>();
}

int sign_threshold(int n, double alpha) {
  if (n < 0) throw ArgumentError("replicate count is negative");
  if (!(alpha > 0 && alpha < 1)) throw ArgumentError("alpha must lie in (0, 1)");
  const Rational bound(alpha);  // exact: every double is a dyadic rational
  for (int t = 0; t <= n; ++t) {
    if (binomial_upper_tail_exact(n, t) <= bound) return t;
  }
  return n + 1;
}

std::string_view to_string(Call call) {
  switch (call) {
    case Call::Up: return "up";
    case Call::Down: return "down";
    case Call::Unchanged: break;
  }
  return "unchanged";
}

Call parse_call(std::string_view text) {
  if (text == "up") return Call::Up;
  if (text == "down") return Call::Down;
  if (text == "unchanged") return Call::Unchanged;
  throw ArgumentError("unknown call '" + std::string(text) + "'");
}

ExpressionCall classify_clone(std::span<const double> log_ratios, double alpha) {
  if (log_ratios.empty()) throw ArgumentError("classify_clone needs at least one log ratio");
  ExpressionCall call;
  for (double v : log_ratios) {
    if (v > 0) ++call.k_positive;
    if (v < 0) ++call.k_negative;
  }
  call.n = call.k_positive + call.k_negative;
  const int t = sign_threshold(call.n, alpha);
  if (call.k_positive >= t) {
    call.call = Call::Up;
  } else if (call.k_negative >= t) {
    call.call = Call::Down;
  }
  call.tail_probability = binomial_upper_tail(call.n, std::max(call.k_positive, call.k_negative));
  return call;
}

std::vector<ExpressionCall> classify_all(const ComparisonDataset& dataset, double alpha) {
  std::vector<const CloneReplicates*> order;
  for (const auto& c : dataset.clones) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->clone < b->clone; });

  std::vector<ExpressionCall> out;
  out.reserve(order.size());
  for (const auto* c : order) {
    ExpressionCall call;
    if (!c->values.empty()) {
      std::vector<double> v;
      v.reserve(c->values.size());
      for (const auto& r : c->values) v.push_back(r.log_ratio);
      call = classify_clone(v, alpha);
    }
    call.clone = c->clone;
    call.comparison = dataset.comparison;
    out.push_back(std::move(call));
  }
  return out;
}

std::string write_calls(std::span<const ExpressionCall> calls) {
  std::string out =
      join_tsv_row({"clone_id", "comparison", "call", "n", "k_pos", "k_neg", "tail_probability"});
  for (const auto& c : calls) {
    out += join_tsv_row({c.clone.value, c.comparison, std::string(to_string(c.call)), std::to_string(c.n),
                         std::to_string(c.k_positive), std::to_string(c.k_negative),
                         format_double(c.tail_probability)});
  }
  return out;
}

std::vector<ExpressionCall> read_calls(std::string_view tsv) {
  auto table = parse_tsv(tsv, {"clone_id", "comparison", "call", "n", "k_pos", "k_neg", "tail_probability"});
  const auto c_id = table.column("clone_id");
  const auto c_cmp = table.column("comparison");
  const auto c_call = table.column("call");
  const auto c_n = table.column("n");
  const auto c_kp = table.column("k_pos");
  const auto c_kn = table.column("k_neg");
  const auto c_tail = table.column("tail_probability");
  std::vector<ExpressionCall> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto line = r + 2;
    ExpressionCall c;
    c.clone = CloneId(row[c_id]);
    c.comparison = row[c_cmp];
    try {
      c.call = parse_call(row[c_call]);
    } catch (const ArgumentError& e) {
      throw ParseError(line, e.what());
    }
    c.n = static_cast<int>(parse_int(row[c_n], line));
    c.k_positive = static_cast<int>(parse_int(row[c_kp], line));
    c.k_negative = static_cast<int>(parse_int(row[c_kn], line));
    c.tail_probability = parse_double(row[c_tail], line);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace espresso::callsig
