#include "espresso/descriptor.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>
#include <utility>

#include "espresso/error.hpp"

namespace espresso::descriptor {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool looks_integer(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_digit);
}

bool looks_decimal(std::string_view s) {
  auto dot = s.find('.');
  if (dot == std::string_view::npos || dot + 1 == s.size()) return false;
  auto head = s.substr(0, dot);
  auto tail = s.substr(dot + 1);
  return std::all_of(head.begin(), head.end(), is_digit) &&
         std::all_of(tail.begin(), tail.end(), is_digit);
}

bool safe_bare(std::string_view s) {
  return !s.empty() &&
         std::none_of(s.begin(), s.end(), [](char c) { return is_space(c) || c == '"' || c == '\n'; });
}

struct Token {
  std::string text;
  bool quoted = false;
};

std::vector<Token> tokenize(std::string_view line, std::size_t line_no) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    if (is_space(line[i])) {
      ++i;
      continue;
    }
    if (line[i] == '"') {
      auto close = line.find('"', i + 1);
      if (close == std::string_view::npos) throw ParseError(line_no, "unterminated quote");
      if (close + 1 < line.size() && !is_space(line[close + 1])) {
        throw ParseError(line_no, "text directly after closing quote");
      }
      tokens.push_back({std::string(line.substr(i + 1, close - i - 1)), true});
      i = close + 1;
      continue;
    }
    auto start = i;
    while (i < line.size() && !is_space(line[i])) {
      if (line[i] == '"') throw ParseError(line_no, "quote inside a bare token");
      ++i;
    }
    tokens.push_back({std::string(line.substr(start, i - start)), false});
  }
  return tokens;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    fn(line, ++line_no);
  }
}

int compare_values(const Value& a, const Value& b) {
  if (a.is_numeric() && b.is_numeric()) {
    double x = *a.number();
    double y = *b.number();
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  return a.text().compare(b.text());
}

}  // namespace

// ---- Value -----------------------------------------------------------------

Value Value::from_token(std::string_view token) {
  if (!safe_bare(token)) throw ArgumentError("not a bare token: '" + std::string(token) + "'");
  if (looks_integer(token)) {
    std::int64_t v = 0;
    auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec == std::errc{} && end == token.data() + token.size()) return integer(v);
    return Value(Kind::Bare, std::string(token));  // too wide for int64
  }
  if (looks_decimal(token)) return Value(Kind::Decimal, std::string(token));
  return Value(Kind::Bare, std::string(token));
}

Value Value::quoted(std::string text) {
  if (text.find('"') != std::string::npos || text.find('\n') != std::string::npos) {
    throw ArgumentError("quoted field may not contain '\"' or a newline");
  }
  return Value(Kind::Quoted, std::move(text));
}

Value Value::integer(std::int64_t v) {
  if (v < 0) throw ArgumentError("integer fields are non-negative");
  return Value(Kind::Integer, std::to_string(v));
}

Value Value::string(std::string text) {
  if (safe_bare(text) && !looks_integer(text) && !looks_decimal(text)) {
    return Value(Kind::Bare, std::move(text));
  }
  return quoted(std::move(text));
}

std::optional<double> Value::number() const {
  if (!is_numeric()) return std::nullopt;
  double v = 0;
  std::from_chars(text_.data(), text_.data() + text_.size(), v);
  return v;
}

std::string Value::serialize() const {
  if (kind_ == Kind::Quoted) return '"' + text_ + '"';
  return text_;
}

// ---- parse / serialize -----------------------------------------------------

std::string ExperimentDescription::name() const {
  for (const auto& r : records) {
    if (r.keyword == "EXPERIMENT" && !r.fields.empty()) return r.fields.front().text();
  }
  return {};
}

ExperimentDescription parse_description(std::string_view text) {
  ExperimentDescription desc;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    auto first = std::find_if_not(line.begin(), line.end(), is_space);
    if (first == line.end() || *first == '#') return;
    auto tokens = tokenize(line, line_no);
    if (tokens.front().quoted) {
      throw ParseError(line_no, tokens.front().text.empty() ? "empty keyword"
                                                            : "keyword must not be quoted");
    }
    Record record;
    record.keyword = std::move(tokens.front().text);
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      record.fields.push_back(tokens[i].quoted ? Value::quoted(std::move(tokens[i].text))
                                               : Value::from_token(tokens[i].text));
    }
    desc.records.push_back(std::move(record));
  });
  return desc;
}

std::string serialize_record(const Record& record) {
  if (!safe_bare(record.keyword) || record.keyword.front() == '#') {
    throw ArgumentError("invalid keyword '" + record.keyword + "'");
  }
  std::string line = record.keyword;
  for (const auto& f : record.fields) {
    line += ' ';
    line += f.serialize();
  }
  return line;
}

std::string serialize_description(const ExperimentDescription& desc) {
  std::string out;
  for (const auto& r : desc.records) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

// ---- query -----------------------------------------------------------------

Selector parse_selector(std::string_view text) {
  auto tokens = tokenize(text, 1);
  if (tokens.empty() || tokens.front().quoted || tokens.front().text.empty()) {
    throw ParseError(1, "selector needs a keyword");
  }
  Selector sel;
  sel.keyword = tokens.front().text;
  if ((tokens.size() - 1) % 3 != 0) throw ParseError(1, "predicates are INDEX OP LITERAL triples");
  static const std::map<std::string, Comparator, std::less<>> ops = {
      {"==", Comparator::Eq}, {"!=", Comparator::Ne}, {"<", Comparator::Lt},
      {"<=", Comparator::Le}, {">", Comparator::Gt},  {">=", Comparator::Ge}};
  for (std::size_t i = 1; i < tokens.size(); i += 3) {
    FieldPredicate p;
    if (tokens[i].quoted || !looks_integer(tokens[i].text)) {
      throw ParseError(1, "field index must be a non-negative integer");
    }
    p.index = std::stoul(tokens[i].text);
    auto op = ops.find(tokens[i + 1].text);
    if (tokens[i + 1].quoted || op == ops.end()) {
      throw ParseError(1, "unknown comparator '" + tokens[i + 1].text + "'");
    }
    p.op = op->second;
    p.literal = tokens[i + 2].quoted ? Value::quoted(tokens[i + 2].text)
                                     : Value::from_token(tokens[i + 2].text);
    sel.predicates.push_back(std::move(p));
  }
  return sel;
}

bool matches(const Record& record, const Selector& selector) {
  if (record.keyword != selector.keyword) return false;
  for (const auto& p : selector.predicates) {
    if (p.index >= record.fields.size()) return false;
    int c = compare_values(record.fields[p.index], p.literal);
    bool ok = false;
    switch (p.op) {
      case Comparator::Eq: ok = c == 0; break;
      case Comparator::Ne: ok = c != 0; break;
      case Comparator::Lt: ok = c < 0; break;
      case Comparator::Le: ok = c <= 0; break;
      case Comparator::Gt: ok = c > 0; break;
      case Comparator::Ge: ok = c >= 0; break;
    }
    if (!ok) return false;
  }
  return true;
}

std::vector<Record> query_records(std::span<const ExperimentDescription> descs,
                                  const Selector& selector) {
  if (selector.keyword.empty()) throw ArgumentError("selector keyword is empty");
  std::vector<Record> out;
  for (const auto& d : descs) {
    for (const auto& r : d.records) {
      if (matches(r, selector)) out.push_back(r);
    }
  }
  return out;
}

// ---- diff ------------------------------------------------------------------

namespace {

std::vector<std::size_t> ordinals(const ExperimentDescription& d) {
  std::map<std::string, std::size_t> seen;
  std::vector<std::size_t> out;
  out.reserve(d.records.size());
  for (const auto& r : d.records) out.push_back(seen[r.keyword]++);
  return out;
}

// Indices (into `seq`) of one longest strictly increasing subsequence.
std::vector<std::size_t> longest_increasing(const std::vector<std::size_t>& seq) {
  std::vector<std::size_t> tails;  // index into seq of the smallest tail per length
  std::vector<std::size_t> prev(seq.size(), seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    auto it = std::lower_bound(tails.begin(), tails.end(), seq[i],
                               [&](std::size_t idx, std::size_t v) { return seq[idx] < v; });
    if (it != tails.begin()) prev[i] = *(it - 1);
    if (it == tails.end()) {
      tails.push_back(i);
    } else {
      *it = i;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = tails.empty() ? seq.size() : tails.back(); i != seq.size(); i = prev[i]) {
    out.push_back(i);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<DiffEntry> diff_descriptions(const ExperimentDescription& a,
                                         const ExperimentDescription& b) {
  const auto ord_a = ordinals(a);
  const auto ord_b = ordinals(b);

  std::map<std::pair<std::string, std::size_t>, std::size_t> where_b;
  for (std::size_t j = 0; j < b.records.size(); ++j) where_b[{b.records[j].keyword, ord_b[j]}] = j;

  // Aligned pairs in a-order, then keep the largest subset whose b-order agrees.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    auto it = where_b.find({a.records[i].keyword, ord_a[i]});
    if (it != where_b.end()) pairs.emplace_back(i, it->second);
  }
  std::vector<std::size_t> b_order;
  for (auto& p : pairs) b_order.push_back(p.second);
  std::vector<bool> kept_a(a.records.size(), false);
  std::vector<bool> kept_b(b.records.size(), false);
  std::vector<std::size_t> partner(a.records.size(), 0);
  for (auto k : longest_increasing(b_order)) {
    kept_a[pairs[k].first] = true;
    kept_b[pairs[k].second] = true;
    partner[pairs[k].first] = pairs[k].second;
  }

  std::vector<DiffEntry> out;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& ra = a.records[i];
    if (!kept_a[i]) {
      out.push_back({DiffEntry::Kind::Removed, ra.keyword, ord_a[i], std::nullopt, ra, std::nullopt,
                     std::nullopt});
      continue;
    }
    const auto& rb = b.records[partner[i]];
    const auto common = std::min(ra.fields.size(), rb.fields.size());
    for (std::size_t f = 0; f < common; ++f) {
      if (ra.fields[f] != rb.fields[f]) {
        out.push_back({DiffEntry::Kind::Changed, ra.keyword, ord_a[i], f, ra.fields[f],
                       rb.fields[f], std::nullopt});
      }
    }
    for (std::size_t f = common; f < ra.fields.size(); ++f) {
      out.push_back({DiffEntry::Kind::Removed, ra.keyword, ord_a[i], f, ra.fields[f], std::nullopt,
                     std::nullopt});
    }
    for (std::size_t f = common; f < rb.fields.size(); ++f) {
      out.push_back({DiffEntry::Kind::Added, ra.keyword, ord_a[i], f, std::nullopt, rb.fields[f],
                     std::nullopt});
    }
  }
  for (std::size_t j = 0; j < b.records.size(); ++j) {
    if (kept_b[j]) continue;
    out.push_back({DiffEntry::Kind::Added, b.records[j].keyword, ord_b[j], std::nullopt,
                   std::nullopt, b.records[j], j});
  }
  return out;
}

ExperimentDescription apply_diff(const ExperimentDescription& a, std::span<const DiffEntry> diff) {
  const auto ord_a = ordinals(a);
  std::map<std::pair<std::string, std::size_t>, std::size_t> where_a;
  for (std::size_t i = 0; i < a.records.size(); ++i) where_a[{a.records[i].keyword, ord_a[i]}] = i;
  auto locate = [&](const DiffEntry& e) {
    auto it = where_a.find({e.keyword, e.ordinal});
    if (it == where_a.end()) throw ArgumentError("diff does not apply: no " + e.keyword + "[" +
                                                 std::to_string(e.ordinal) + "]");
    return it->second;
  };

  auto records = a.records;
  std::vector<bool> drop(records.size(), false);
  std::vector<std::pair<std::size_t, Record>> inserts;
  std::map<std::size_t, std::size_t> truncate_to;

  for (const auto& e : diff) {
    if (!e.field) {
      if (e.kind == DiffEntry::Kind::Removed) {
        drop[locate(e)] = true;
      } else if (e.kind == DiffEntry::Kind::Added && e.position && e.after) {
        inserts.emplace_back(*e.position, std::get<Record>(*e.after));
      } else {
        throw ArgumentError("malformed record-level diff entry");
      }
      continue;
    }
    auto idx = locate(e);
    auto& fields = records[idx].fields;
    switch (e.kind) {
      case DiffEntry::Kind::Changed:
        fields.at(*e.field) = std::get<Value>(e.after.value());
        break;
      case DiffEntry::Kind::Removed: {
        auto& t = truncate_to.try_emplace(idx, fields.size()).first->second;
        t = std::min(t, *e.field);
        break;
      }
      case DiffEntry::Kind::Added:
        if (*e.field != fields.size()) throw ArgumentError("field insertion out of order");
        fields.push_back(std::get<Value>(e.after.value()));
        break;
    }
  }
  for (auto [idx, size] : truncate_to) {
    auto& f = records[idx].fields;
    f.erase(f.begin() + static_cast<std::ptrdiff_t>(size), f.end());
  }

  ExperimentDescription out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!drop[i]) out.records.push_back(std::move(records[i]));
  }
  std::sort(inserts.begin(), inserts.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  for (auto& [pos, rec] : inserts) {
    if (pos > out.records.size()) throw ArgumentError("diff insertion position out of range");
    out.records.insert(out.records.begin() + static_cast<std::ptrdiff_t>(pos), std::move(rec));
  }
  return out;
}

std::string render_diff(std::span<const DiffEntry> diff) {
  auto payload = [](const std::optional<DiffEntry::Payload>& p) -> std::string {
    if (!p) return "-";
    if (auto v = std::get_if<Value>(&*p)) return v->serialize();
    return serialize_record(std::get<Record>(*p));
  };
  std::ostringstream os;
  for (const auto& e : diff) {
    os << (e.kind == DiffEntry::Kind::Changed ? "changed" :
           e.kind == DiffEntry::Kind::Added   ? "added"
                                              : "removed")
       << ' ' << e.keyword << '[' << e.ordinal << ']';
    if (e.field) os << '.' << *e.field;
    os << ": ";
    switch (e.kind) {
      case DiffEntry::Kind::Changed: os << payload(e.before) << " -> " << payload(e.after); break;
      case DiffEntry::Kind::Added: os << payload(e.after); break;
      case DiffEntry::Kind::Removed: os << payload(e.before); break;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace espresso::descriptor
