#pragma once

// Relational rule induction over expression levels and functional categories.
//
// Facts:
//   level(Clone, Comparison, Expression)   one asserted value per (clone, comparison)
//   category(Clone, Category)              saturated through containment rules
// Rules share the single clone variable A:
//   ~level(A,CvsS,positive) :- level(A,CvsM,positive).
//   level(A,CvsM,positive) :- category(A,heat).

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "espresso/callsig.hpp"
#include "espresso/clone_id.hpp"

namespace espresso::rulemine {

enum class Expression { Positive, Negative, Unchanged };

inline constexpr Expression kAllExpressions[] = {Expression::Positive, Expression::Negative,
                                                 Expression::Unchanged};

std::string_view to_string(Expression e);
Expression parse_expression(std::string_view text);
Expression expression_of(callsig::Call call);

struct LevelFact {
  CloneId clone;
  std::string comparison;
  Expression expression = Expression::Unchanged;

  auto operator<=>(const LevelFact&) const = default;
};

struct CategoryFact {
  CloneId clone;
  std::string category;

  auto operator<=>(const CategoryFact&) const = default;
};

struct Containment {
  std::string child;
  std::string parent;

  auto operator<=>(const Containment&) const = default;
};

// Least fixpoint of category(X, parent) :- category(X, child). Cycles are fine.
std::set<CategoryFact> saturate(std::span<const CategoryFact> facts,
                                std::span<const Containment> hierarchy);

class FactBase {
 public:
  FactBase() = default;
  // Throws IntegrityError when two different expressions are asserted for the
  // same (clone, comparison).
  FactBase(std::span<const LevelFact> levels, std::span<const CategoryFact> categories,
           std::span<const Containment> hierarchy);

  std::optional<Expression> level(const CloneId& clone, const std::string& comparison) const;
  bool has_category(const CloneId& clone, const std::string& category) const;

  // Asserted level facts, sorted.
  std::vector<LevelFact> level_facts() const;
  // Closed-world negatives: for each asserted (c, cmp, e) the two facts
  // (c, cmp, e') with e' != e.
  std::vector<LevelFact> negative_examples() const;
  const std::set<CategoryFact>& asserted_categories() const { return asserted_categories_; }
  const std::set<CategoryFact>& categories() const { return saturated_; }
  const std::set<Containment>& hierarchy() const { return hierarchy_; }

  // Every clone mentioned by any fact, in clone-id order.
  const std::vector<CloneId>& clones() const { return clones_; }
  std::vector<std::string> comparisons() const;
  std::vector<std::string> category_names() const;

  bool operator==(const FactBase&) const = default;

 private:
  std::map<std::pair<CloneId, std::string>, Expression> levels_;
  std::set<CategoryFact> asserted_categories_;
  std::set<CategoryFact> saturated_;
  std::set<Containment> hierarchy_;
  std::vector<CloneId> clones_;
};

FactBase build_factbase(std::span<const callsig::ExpressionCall> calls,
                        std::span<const CategoryFact> categories,
                        std::span<const Containment> hierarchy);

// ---- rules -------------------------------------------------------------------

struct Literal {
  enum class Kind { Level, Category };
  Kind kind = Kind::Level;
  std::string comparison;  // level only
  Expression expression = Expression::Positive;
  std::string category;  // category only

  static Literal level(std::string comparison, Expression e) {
    return {Kind::Level, std::move(comparison), e, {}};
  }
  static Literal in_category(std::string category) {
    return {Kind::Category, {}, Expression::Positive, std::move(category)};
  }

  bool operator==(const Literal&) const = default;
};

struct Head {
  bool negated = false;
  std::string comparison;
  Expression expression = Expression::Positive;

  bool operator==(const Head&) const = default;
};

struct Rule {
  Head head;
  std::vector<Literal> body;

  bool operator==(const Rule&) const = default;
};

// head_hits / body_support as an unreduced ratio ("69/72" stays 69/72).
struct Confidence {
  std::size_t hits = 0;
  std::size_t support = 1;

  double value() const { return static_cast<double>(hits) / static_cast<double>(support); }
  // Exact comparison by cross-multiplication.
  friend std::strong_ordering operator<=>(const Confidence& a, const Confidence& b) {
    __extension__ using Wide = unsigned __int128;
    return static_cast<Wide>(a.hits) * b.support <=> static_cast<Wide>(b.hits) * a.support;
  }
  friend bool operator==(const Confidence& a, const Confidence& b) { return (a <=> b) == 0; }
};

// Parses "0.6", "3/5" or "1" into an exact ratio.
Confidence parse_confidence(std::string_view text);

// Percentage with two decimals, rounded half up: 69/72 -> "95.83%".
std::string format_percent(const Confidence& c);

struct RuleStats {
  std::size_t body_support = 0;
  std::size_t head_hits = 0;

  // Empty when no clone satisfies the body.
  std::optional<Confidence> confidence() const {
    if (body_support == 0) return std::nullopt;
    return Confidence{head_hits, body_support};
  }
  bool operator==(const RuleStats&) const = default;
};

bool body_holds(const FactBase& fb, const CloneId& clone, std::span<const Literal> body);
// Negated heads hold when an asserted value exists and differs.
bool head_holds(const FactBase& fb, const CloneId& clone, const Head& head);

RuleStats evaluate_rule(const Rule& rule, const FactBase& fb);

struct Language {
  std::vector<std::string> comparisons;
  std::vector<Expression> expressions{std::begin(kAllExpressions), std::end(kAllExpressions)};
  std::vector<std::string> categories;
  int max_body_length = 1;

  // Comparisons and saturated categories that occur in the fact base.
  static Language from(const FactBase& fb, int max_body_length = 1);

  std::size_t level_literal_count() const { return comparisons.size() * expressions.size(); }
  std::size_t literal_count() const { return level_literal_count() + categories.size(); }
  // Literal by canonical index: level literals (comparison-major), then categories.
  Literal literal(std::size_t index) const;
  Head head(std::size_t index) const;  // index < 2 * level_literal_count()
};

// Every rule of the language: bodies are sets of 1..max_body_length distinct
// literals; heads are level or ~level literals; a positive head may not repeat
// a body literal. Canonical order: body size, body literal indices, head index.
std::vector<Rule> enumerate_hypotheses(const Language& language);

struct MinedRule {
  Rule rule;
  RuleStats stats;
};

inline constexpr std::size_t kDefaultMinSupport = 5;
inline constexpr Confidence kDefaultMinConfidence{3, 5};

// All rules with support >= min_support and confidence >= min_confidence,
// ranked by confidence desc, support desc, canonical order. Branches of the
// body lattice are cut only when support or attainable head hits prove that no
// specialization can qualify, so the result equals brute-force enumeration.
std::vector<MinedRule> mine_rules(const FactBase& fb, std::size_t min_support,
                                  const Confidence& min_confidence, const Language& language);

// `~level(A,CvsS,positive) :- level(A,CvsM,positive).`
std::string format_rule(const Rule& rule);
// Rule followed by `% support=72 conf=69/72`.
std::string format_mined_rule(const MinedRule& mined);
std::string write_rules(std::span<const MinedRule> rules);
MinedRule parse_mined_rule(std::string_view line);
std::vector<MinedRule> read_rules(std::string_view text);

// facts.tsv: table clone_id key value
//   level    <clone> <comparison> <expression>
//   category <clone> <category>   -
std::string write_facts(const FactBase& fb);
// hierarchy.tsv: child parent
std::vector<Containment> read_hierarchy(std::string_view tsv);
std::string write_hierarchy(std::span<const Containment> hierarchy);
// categories.tsv: clone_id category
std::vector<CategoryFact> read_categories(std::string_view tsv);
std::string write_categories(std::span<const CategoryFact> categories);

struct FactTables {
  std::vector<LevelFact> levels;
  std::vector<CategoryFact> categories;
};
FactTables read_facts(std::string_view tsv);

}  // namespace espresso::rulemine
