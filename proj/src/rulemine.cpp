#include "espresso/rulemine.hpp"

#include <algorithm>
#include <functional>
#include <regex>

#include <boost/dynamic_bitset.hpp>

#include "espresso/error.hpp"
#include "espresso/tsv.hpp"

namespace espresso::rulemine {

__extension__ using u128 = unsigned __int128;

std::string_view to_string(Expression e) {
  switch (e) {
    case Expression::Positive: return "positive";
    case Expression::Negative: return "negative";
    case Expression::Unchanged: break;
  }
  return "unchanged";
}

Expression parse_expression(std::string_view text) {
  if (text == "positive") return Expression::Positive;
  if (text == "negative") return Expression::Negative;
  if (text == "unchanged") return Expression::Unchanged;
  throw ArgumentError("unknown expression '" + std::string(text) + "'");
}

Expression expression_of(callsig::Call call) {
  switch (call) {
    case callsig::Call::Up: return Expression::Positive;
    case callsig::Call::Down: return Expression::Negative;
    case callsig::Call::Unchanged: break;
  }
  return Expression::Unchanged;
}

std::set<CategoryFact> saturate(std::span<const CategoryFact> facts, std::span<const Containment> hierarchy) {
  std::map<std::string, std::vector<std::string>> parents;
  for (const auto& h : hierarchy) parents[h.child].push_back(h.parent);

  std::set<CategoryFact> out(facts.begin(), facts.end());
  std::vector<CategoryFact> frontier(out.begin(), out.end());
  while (!frontier.empty()) {
    std::vector<CategoryFact> next;
    for (const auto& f : frontier) {
      auto it = parents.find(f.category);
      if (it == parents.end()) continue;
      for (const auto& p : it->second) {
        CategoryFact derived{f.clone, p};
        if (out.insert(derived).second) next.push_back(std::move(derived));
      }
    }
    frontier = std::move(next);
  }
  return out;
}

FactBase::FactBase(std::span<const LevelFact> levels, std::span<const CategoryFact> categories,
                   std::span<const Containment> hierarchy)
    : asserted_categories_(categories.begin(), categories.end()),
      saturated_(saturate(categories, hierarchy)),
      hierarchy_(hierarchy.begin(), hierarchy.end()) {
  for (const auto& f : levels) {
    auto [it, inserted] = levels_.emplace(std::make_pair(f.clone, f.comparison), f.expression);
    if (!inserted && it->second != f.expression) {
      throw IntegrityError("clone " + f.clone.value + " has conflicting levels for " + f.comparison +
                           ": " + std::string(to_string(it->second)) + " and " +
                           std::string(to_string(f.expression)));
    }
  }
  std::set<CloneId> ids;
  for (const auto& [key, e] : levels_) ids.insert(key.first);
  for (const auto& c : asserted_categories_) ids.insert(c.clone);
  clones_.assign(ids.begin(), ids.end());
}

std::optional<Expression> FactBase::level(const CloneId& clone, const std::string& comparison) const {
  auto it = levels_.find({clone, comparison});
  if (it == levels_.end()) return std::nullopt;
  return it->second;
}

bool FactBase::has_category(const CloneId& clone, const std::string& category) const {
  return saturated_.contains({clone, category});
}

std::vector<LevelFact> FactBase::level_facts() const {
  std::vector<LevelFact> out;
  for (const auto& [key, e] : levels_) out.push_back({key.first, key.second, e});
  return out;
}

std::vector<LevelFact> FactBase::negative_examples() const {
  std::vector<LevelFact> out;
  for (const auto& [key, e] : levels_) {
    for (auto other : kAllExpressions) {
      if (other != e) out.push_back({key.first, key.second, other});
    }
  }
  return out;
}

std::vector<std::string> FactBase::comparisons() const {
  std::set<std::string> s;
  for (const auto& [key, e] : levels_) s.insert(key.second);
  return {s.begin(), s.end()};
}

std::vector<std::string> FactBase::category_names() const {
  std::set<std::string> s;
  for (const auto& c : saturated_) s.insert(c.category);
  return {s.begin(), s.end()};
}

FactBase build_factbase(std::span<const callsig::ExpressionCall> calls, std::span<const CategoryFact> categories,
                        std::span<const Containment> hierarchy) {
  std::vector<LevelFact> levels;
  levels.reserve(calls.size());
  for (const auto& c : calls) levels.push_back({c.clone, c.comparison, expression_of(c.call)});
  return FactBase(levels, categories, hierarchy);
}

// ---- rules -------------------------------------------------------------------

Confidence parse_confidence(std::string_view text) {
  static const std::regex ratio(R"(^([0-9]+)/([0-9]+)$)");
  static const std::regex decimal(R"(^([0-9]*)(?:\.([0-9]+))?$)");
  std::cmatch m;
  if (std::regex_match(text.begin(), text.end(), m, ratio)) {
    Confidence c{std::stoull(m[1]), std::stoull(m[2])};
    if (c.support == 0) throw ArgumentError("confidence denominator is zero");
    return c;
  }
  if (!text.empty() && text != "." && std::regex_match(text.begin(), text.end(), m, decimal) &&
      m[2].length() <= 12) {
    std::size_t den = 1;
    for (long i = 0; i < m[2].length(); ++i) den *= 10;
    std::size_t whole = m[1].length() ? std::stoull(m[1]) : 0;
    std::size_t frac = m[2].length() ? std::stoull(m[2]) : 0;
    return {whole * den + frac, den};
  }
  throw ArgumentError("bad confidence '" + std::string(text) + "' (use e.g. 0.6 or 3/5)");
}

std::string format_percent(const Confidence& c) {
  const auto scaled = (static_cast<u128>(c.hits) * 20000 + c.support) /
                      (static_cast<u128>(c.support) * 2);
  const auto q = static_cast<std::uint64_t>(scaled);
  auto frac = std::to_string(q % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::to_string(q / 100) + "." + frac + "%";
}

bool body_holds(const FactBase& fb, const CloneId& clone, std::span<const Literal> body) {
  for (const auto& lit : body) {
    if (lit.kind == Literal::Kind::Category) {
      if (!fb.has_category(clone, lit.category)) return false;
    } else if (fb.level(clone, lit.comparison) != lit.expression) {
      return false;
    }
  }
  return true;
}

bool head_holds(const FactBase& fb, const CloneId& clone, const Head& head) {
  auto value = fb.level(clone, head.comparison);
  if (!value) return false;
  return head.negated ? *value != head.expression : *value == head.expression;
}

RuleStats evaluate_rule(const Rule& rule, const FactBase& fb) {
  RuleStats stats;
  for (const auto& clone : fb.clones()) {
    if (!body_holds(fb, clone, rule.body)) continue;
    ++stats.body_support;
    if (head_holds(fb, clone, rule.head)) ++stats.head_hits;
  }
  return stats;
}

Language Language::from(const FactBase& fb, int max_body_length) {
  Language lang;
  lang.comparisons = fb.comparisons();
  lang.categories = fb.category_names();
  lang.max_body_length = max_body_length;
  return lang;
}

Literal Language::literal(std::size_t index) const {
  if (index < level_literal_count()) {
    return Literal::level(comparisons[index / expressions.size()], expressions[index % expressions.size()]);
  }
  return Literal::in_category(categories.at(index - level_literal_count()));
}

Head Language::head(std::size_t index) const {
  const auto lit = index / 2;
  return {index % 2 == 1, comparisons.at(lit / expressions.size()), expressions[lit % expressions.size()]};
}

namespace {

// Calls fn(body-indices) for every body in canonical order.
void for_each_body(std::size_t literals, int max_len, const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> body;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t remaining) {
    if (remaining == 0) {
      fn(body);
      return;
    }
    for (std::size_t i = start; i < literals; ++i) {
      body.push_back(i);
      rec(i + 1, remaining - 1);
      body.pop_back();
    }
  };
  for (int len = 1; len <= max_len; ++len) rec(0, static_cast<std::size_t>(len));
}

Rule make_rule(const Language& lang, const std::vector<std::size_t>& body, std::size_t head) {
  Rule r;
  r.head = lang.head(head);
  for (auto i : body) r.body.push_back(lang.literal(i));
  return r;
}

bool head_excluded(const std::vector<std::size_t>& body, std::size_t head) {
  return head % 2 == 0 && std::find(body.begin(), body.end(), head / 2) != body.end();
}

// Canonical position of a rule, used as the final ranking key.
struct CanonicalKey {
  std::vector<std::size_t> body;
  std::size_t head = 0;

  bool operator<(const CanonicalKey& o) const {
    if (body.size() != o.body.size()) return body.size() < o.body.size();
    if (body != o.body) return body < o.body;
    return head < o.head;
  }
};

}  // namespace

std::vector<Rule> enumerate_hypotheses(const Language& language) {
  if (language.max_body_length < 1) throw ArgumentError("max body length must be at least 1");
  const auto heads = 2 * language.level_literal_count();
  std::vector<Rule> out;
  for_each_body(language.literal_count(), language.max_body_length, [&](const std::vector<std::size_t>& body) {
    for (std::size_t h = 0; h < heads; ++h) {
      if (!head_excluded(body, h)) out.push_back(make_rule(language, body, h));
    }
  });
  return out;
}

std::vector<MinedRule> mine_rules(const FactBase& fb, std::size_t min_support, const Confidence& min_confidence,
                                  const Language& language) {
  if (min_support < 1) throw ArgumentError("minimum support must be at least 1");
  if (min_confidence.support == 0) throw ArgumentError("confidence denominator is zero");
  if (language.max_body_length < 1) throw ArgumentError("max body length must be at least 1");

  using Bits = boost::dynamic_bitset<>;
  const auto& clones = fb.clones();
  const auto n_lit = language.literal_count();
  const auto n_head = 2 * language.level_literal_count();

  std::vector<Bits> literal_cover(n_lit, Bits(clones.size()));
  std::vector<Bits> head_cover(n_head, Bits(clones.size()));
  for (std::size_t c = 0; c < clones.size(); ++c) {
    for (std::size_t i = 0; i < n_lit; ++i) {
      const auto lit = language.literal(i);
      if (body_holds(fb, clones[c], std::span(&lit, 1))) literal_cover[i].set(c);
    }
    for (std::size_t h = 0; h < n_head; ++h) {
      if (head_holds(fb, clones[c], language.head(h))) head_cover[h].set(c);
    }
  }

  // Any qualifying rule has hits >= min_conf * support >= min_conf * min_support,
  // and hits never grow under specialization.
  const auto needed_hits = static_cast<std::size_t>(
      (static_cast<u128>(min_confidence.hits) * min_support + min_confidence.support - 1) /
      min_confidence.support);

  std::vector<std::pair<CanonicalKey, MinedRule>> found;
  std::vector<std::size_t> body;

  std::function<void(const Bits&, const std::vector<std::size_t>&)> visit =
      [&](const Bits& cover, const std::vector<std::size_t>& heads) {
        const auto support = cover.count();
        std::vector<std::size_t> live;
        for (auto h : heads) {
          if (head_excluded(body, h)) continue;
          const auto hits = (cover & head_cover[h]).count();
          if (Confidence{hits, support} >= min_confidence) {
            found.push_back({{body, h}, {make_rule(language, body, h), {support, hits}}});
          }
          if (hits >= needed_hits) live.push_back(h);
        }
        if (live.empty() || body.size() >= static_cast<std::size_t>(language.max_body_length)) return;
        for (std::size_t j = body.back() + 1; j < n_lit; ++j) {
          auto next = cover & literal_cover[j];
          if (next.count() < min_support) continue;
          body.push_back(j);
          visit(next, live);
          body.pop_back();
        }
      };

  std::vector<std::size_t> all_heads(n_head);
  for (std::size_t h = 0; h < n_head; ++h) all_heads[h] = h;
  for (std::size_t i = 0; i < n_lit; ++i) {
    if (literal_cover[i].count() < min_support) continue;
    body.assign(1, i);
    visit(literal_cover[i], all_heads);
  }

  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    const auto ca = *a.second.stats.confidence();
    const auto cb = *b.second.stats.confidence();
    if (ca != cb) return ca > cb;
    if (a.second.stats.body_support != b.second.stats.body_support) {
      return a.second.stats.body_support > b.second.stats.body_support;
    }
    return a.first < b.first;
  });
  std::vector<MinedRule> out;
  out.reserve(found.size());
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

// ---- text formats --------------------------------------------------------------

namespace {

std::string format_literal(const Literal& lit) {
  if (lit.kind == Literal::Kind::Category) return "category(A," + lit.category + ")";
  return "level(A," + lit.comparison + "," + std::string(to_string(lit.expression)) + ")";
}

}  // namespace

std::string format_rule(const Rule& rule) {
  std::string s = rule.head.negated ? "~" : "";
  s += "level(A," + rule.head.comparison + "," + std::string(to_string(rule.head.expression)) + ") :- ";
  for (std::size_t i = 0; i < rule.body.size(); ++i) {
    if (i) s += ", ";
    s += format_literal(rule.body[i]);
  }
  return s + ".";
}

std::string format_mined_rule(const MinedRule& mined) {
  return format_rule(mined.rule) + " % support=" + std::to_string(mined.stats.body_support) +
         " conf=" + std::to_string(mined.stats.head_hits) + "/" + std::to_string(mined.stats.body_support);
}

std::string write_rules(std::span<const MinedRule> rules) {
  std::string out;
  for (const auto& r : rules) out += format_mined_rule(r) + "\n";
  return out;
}

MinedRule parse_mined_rule(std::string_view line) {
  static const std::regex whole(
      R"(^\s*(~?)level\(A,([^,()]+),(\w+)\)\s*:-\s*(.+?)\.\s*(?:%\s*support=(\d+)\s+conf=(\d+)/(\d+))?\s*$)");
  static const std::regex literal(R"(level\(A,([^,()]+),(\w+)\)|category\(A,([^()]+)\))");
  std::cmatch m;
  if (!std::regex_match(line.begin(), line.end(), m, whole)) {
    throw ArgumentError("not a rule: '" + std::string(line) + "'");
  }
  MinedRule out;
  out.rule.head = {m[1].length() == 1, m[2].str(), parse_expression(m[3].str())};
  const std::string body = m[4].str();
  for (auto it = std::sregex_iterator(body.begin(), body.end(), literal); it != std::sregex_iterator(); ++it) {
    const auto& lm = *it;
    if (lm[1].matched) {
      out.rule.body.push_back(Literal::level(lm[1].str(), parse_expression(lm[2].str())));
    } else {
      out.rule.body.push_back(Literal::in_category(lm[3].str()));
    }
  }
  if (out.rule.body.empty()) throw ArgumentError("rule has an empty body: '" + std::string(line) + "'");
  if (m[5].matched) {
    out.stats.body_support = std::stoull(m[5]);
    out.stats.head_hits = std::stoull(m[6]);
    if (std::stoull(m[7]) != out.stats.body_support) {
      throw ArgumentError("conf denominator differs from support in '" + std::string(line) + "'");
    }
  }
  return out;
}

std::vector<MinedRule> read_rules(std::string_view text) {
  std::vector<MinedRule> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    out.push_back(parse_mined_rule(line));
  }
  return out;
}

std::string write_facts(const FactBase& fb) {
  std::string out = join_tsv_row({"table", "clone_id", "key", "value"});
  for (const auto& f : fb.level_facts()) {
    out += join_tsv_row({"level", f.clone.value, f.comparison, std::string(to_string(f.expression))});
  }
  for (const auto& c : fb.asserted_categories()) out += join_tsv_row({"category", c.clone.value, c.category, "-"});
  return out;
}

FactTables read_facts(std::string_view tsv) {
  auto table = parse_tsv(tsv, {"table", "clone_id", "key", "value"});
  const auto c_t = table.column("table");
  const auto c_id = table.column("clone_id");
  const auto c_k = table.column("key");
  const auto c_v = table.column("value");
  FactTables out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row[c_t] == "level") {
      try {
        out.levels.push_back({CloneId(row[c_id]), row[c_k], parse_expression(row[c_v])});
      } catch (const ArgumentError& e) {
        throw ParseError(r + 2, e.what());
      }
    } else if (row[c_t] == "category") {
      out.categories.push_back({CloneId(row[c_id]), row[c_k]});
    } else {
      throw ParseError(r + 2, "unknown table '" + row[c_t] + "'");
    }
  }
  return out;
}

std::vector<Containment> read_hierarchy(std::string_view tsv) {
  auto table = parse_tsv(tsv, {"child", "parent"});
  const auto c_c = table.column("child");
  const auto c_p = table.column("parent");
  std::vector<Containment> out;
  for (const auto& row : table.rows) out.push_back({row[c_c], row[c_p]});
  return out;
}

std::string write_hierarchy(std::span<const Containment> hierarchy) {
  std::string out = join_tsv_row({"child", "parent"});
  for (const auto& h : hierarchy) out += join_tsv_row({h.child, h.parent});
  return out;
}

std::vector<CategoryFact> read_categories(std::string_view tsv) {
  auto table = parse_tsv(tsv, {"clone_id", "category"});
  const auto c_id = table.column("clone_id");
  const auto c_cat = table.column("category");
  std::vector<CategoryFact> out;
  for (const auto& row : table.rows) out.push_back({CloneId(row[c_id]), row[c_cat]});
  return out;
}

std::string write_categories(std::span<const CategoryFact> categories) {
  std::string out = join_tsv_row({"clone_id", "category"});
  for (const auto& c : categories) out += join_tsv_row({c.clone.value, c.category});
  return out;
}

}  // namespace espresso::rulemine
