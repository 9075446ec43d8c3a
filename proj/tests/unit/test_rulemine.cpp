#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "espresso/error.hpp"
#include "espresso/rulemine.hpp"
#include "espresso/synthetic.hpp"

using namespace espresso;
using namespace espresso::rulemine;

namespace {

CloneId cid(int n) { return CloneId(std::to_string(n)); }

std::size_t choose(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Raw facts as plain tuples, for oracles that do not go through FactBase.
struct RawFacts {
  std::vector<LevelFact> levels;
  std::vector<CategoryFact> categories;
  std::vector<Containment> hierarchy;
};

RawFacts random_facts(std::mt19937_64& rng) {
  static const std::vector<std::string> cmps{"CvsM", "CvsS"};
  static const std::vector<std::string> cats{"heat", "environment", "transport"};
  RawFacts f;
  std::uniform_int_distribution<int> nclones(1, 6), coin(0, 3), expr(0, 2);
  const int n = nclones(rng);
  for (int c = 1; c <= n; ++c) {
    for (const auto& cmp : cmps) {
      if (coin(rng) != 0) f.levels.push_back({cid(c), cmp, kAllExpressions[expr(rng)]});
    }
    for (const auto& cat : cats) {
      if (coin(rng) == 0) f.categories.push_back({cid(c), cat});
    }
  }
  // Two-level hierarchy, sometimes present.
  if (coin(rng) != 0) f.hierarchy.push_back({"heat", "environment"});
  if (coin(rng) != 0) f.hierarchy.push_back({"environment", "protective"});
  std::shuffle(f.levels.begin(), f.levels.end(), rng);
  std::shuffle(f.categories.begin(), f.categories.end(), rng);
  return f;
}

// Transitive closure by naive repetition.
std::set<std::pair<std::string, std::string>> naive_saturate(const RawFacts& f) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& c : f.categories) out.insert({c.clone.value, c.category});
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& h : f.hierarchy) {
      for (const auto& [clone, cat] : std::set(out)) {
        if (cat == h.child && out.insert({clone, h.parent}).second) changed = true;
      }
    }
  }
  return out;
}

// A literal or head in oracle form: ("level", cmp, expr) or ("category", cat, "").
using OracleLit = std::tuple<std::string, std::string, std::string>;

struct OracleRule {
  bool negated;
  std::string cmp;
  std::string expr;
  std::vector<OracleLit> body;
  std::size_t support;
  std::size_t hits;
};

// Exhaustive miner over raw tuples: all bodies of size 1..max_len, all heads.
std::vector<OracleRule> brute_force_mine(const RawFacts& f, std::size_t min_sup, std::size_t conf_num,
                                         std::size_t conf_den, int max_len) {
  std::map<std::string, std::map<std::string, std::string>> level;  // clone -> cmp -> expr
  std::set<std::string> clones, cmps, cats;
  for (const auto& l : f.levels) {
    level[l.clone.value][l.comparison] = std::string(to_string(l.expression));
    clones.insert(l.clone.value);
    cmps.insert(l.comparison);
  }
  auto saturated = naive_saturate(f);
  for (const auto& [clone, cat] : saturated) {
    clones.insert(clone);
    cats.insert(cat);
  }
  std::vector<OracleLit> literals;
  for (const auto& cmp : cmps) {
    for (auto e : kAllExpressions) literals.emplace_back("level", cmp, std::string(to_string(e)));
  }
  for (const auto& cat : cats) literals.emplace_back("category", cat, "");

  auto holds = [&](const std::string& clone, const OracleLit& lit) {
    const auto& [kind, a, b] = lit;
    if (kind == "category") return saturated.contains({clone, a});
    auto it = level.find(clone);
    return it != level.end() && it->second.contains(a) && it->second.at(a) == b;
  };

  std::vector<OracleRule> out;
  const auto n = literals.size();
  std::vector<std::vector<std::size_t>> bodies;
  for (std::size_t i = 0; i < n; ++i) bodies.push_back({i});
  if (max_len >= 2) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) bodies.push_back({i, j});
    }
  }
  for (const auto& body : bodies) {
    std::vector<std::string> covered;
    for (const auto& c : clones) {
      bool all = true;
      for (auto i : body) all = all && holds(c, literals[i]);
      if (all) covered.push_back(c);
    }
    for (const auto& cmp : cmps) {
      for (auto e : kAllExpressions) {
        const std::string es(to_string(e));
        for (bool negated : {false, true}) {
          bool repeats = false;
          for (auto i : body) repeats = repeats || literals[i] == OracleLit{"level", cmp, es};
          if (!negated && repeats) continue;
          std::size_t hits = 0;
          for (const auto& c : covered) {
            auto it = level.find(c);
            const bool asserted = it != level.end() && it->second.contains(cmp);
            if (!asserted) continue;
            const bool equal = it->second.at(cmp) == es;
            hits += (negated ? !equal : equal) ? 1 : 0;
          }
          if (covered.size() >= min_sup && covered.size() > 0 && hits * conf_den >= conf_num * covered.size()) {
            std::vector<OracleLit> lits;
            for (auto i : body) lits.push_back(literals[i]);
            out.push_back({negated, cmp, es, lits, covered.size(), hits});
          }
        }
      }
    }
  }
  return out;
}

std::string oracle_text(const OracleRule& r) {
  std::string s = (r.negated ? "~" : "") + std::string("level(A,") + r.cmp + "," + r.expr + ") :- ";
  for (std::size_t i = 0; i < r.body.size(); ++i) {
    const auto& [kind, a, b] = r.body[i];
    if (i) s += ", ";
    s += kind == "level" ? "level(A," + a + "," + b + ")" : "category(A," + a + ")";
  }
  return s + ". % support=" + std::to_string(r.support) + " conf=" + std::to_string(r.hits) + "/" +
         std::to_string(r.support);
}

FactBase factbase(const RawFacts& f) { return FactBase(f.levels, f.categories, f.hierarchy); }

}  // namespace

TEST_CASE("closed-world negatives") {
  callsig::ExpressionCall call;
  call.clone = cid(4);
  call.comparison = "CvsM";
  call.call = callsig::Call::Up;
  auto fb = build_factbase(std::span(&call, 1), {}, {});
  CHECK(fb.level(cid(4), "CvsM") == Expression::Positive);
  auto neg = fb.negative_examples();
  REQUIRE(neg.size() == 2);
  CHECK(neg[0] == LevelFact{cid(4), "CvsM", Expression::Negative});
  CHECK(neg[1] == LevelFact{cid(4), "CvsM", Expression::Unchanged});

  auto empty = build_factbase({}, {}, {});
  CHECK(empty.level_facts().empty());
  CHECK(empty.negative_examples().empty());
  CHECK(empty.clones().empty());
}

TEST_CASE("exactly one positive and two negatives per asserted pair") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    auto raw = random_facts(rng);
    auto fb = factbase(raw);
    std::map<std::pair<CloneId, std::string>, int> pos, neg;
    for (const auto& l : fb.level_facts()) ++pos[{l.clone, l.comparison}];
    for (const auto& l : fb.negative_examples()) {
      ++neg[{l.clone, l.comparison}];
      CHECK(fb.level(l.clone, l.comparison) != l.expression);
    }
    CHECK(pos.size() == raw.levels.size());
    for (const auto& [k, n] : pos) {
      CHECK(n == 1);
      CHECK(neg[k] == 2);
    }
  }
}

TEST_CASE("conflicting calls are an integrity error") {
  std::vector<LevelFact> levels{{cid(1), "CvsM", Expression::Positive}, {cid(1), "CvsM", Expression::Negative}};
  CHECK_THROWS_AS(FactBase(levels, {}, {}), IntegrityError);
  // Repeating the same value is fine.
  std::vector<LevelFact> same{{cid(1), "CvsM", Expression::Positive}, {cid(1), "CvsM", Expression::Positive}};
  CHECK(FactBase(same, {}, {}).level_facts().size() == 1);
}

TEST_CASE("saturation through containment rules") {
  std::vector<CategoryFact> facts{{cid(8), "Heat"}};
  std::vector<Containment> rules{{"Heat", "Environment"}};
  auto sat = saturate(facts, rules);
  CHECK(sat.contains({cid(8), "Environment"}));

  std::vector<Containment> chain{{"A", "B"}, {"B", "C"}};
  std::vector<CategoryFact> x{{cid(1), "A"}};
  auto closed = saturate(x, chain);
  CHECK(closed.size() == 3);
  CHECK(closed.contains({cid(1), "C"}));
  std::vector<CategoryFact> again(closed.begin(), closed.end());
  CHECK(saturate(again, chain) == closed);

  std::vector<Containment> cycle{{"A", "B"}, {"B", "A"}};
  CHECK(saturate(x, cycle).size() == 2);
}

TEST_CASE("saturation matches a naive closure") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    auto raw = random_facts(rng);
    const auto fb = factbase(raw);
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& c : fb.categories()) got.insert({c.clone.value, c.category});
    CHECK(got == naive_saturate(raw));
  }
}

TEST_CASE("rule (1) statistics on the reconstructed Genotype D facts") {
  auto d = synth::genotype_d();
  auto fb = build_factbase(d.calls, d.categories, d.hierarchy);
  Rule r1{{true, "CvsS", Expression::Positive}, {Literal::level("CvsM", Expression::Positive)}};
  auto stats = evaluate_rule(r1, fb);
  CHECK(stats.body_support == 72);
  CHECK(stats.head_hits == 69);
  REQUIRE(stats.confidence().has_value());
  CHECK(stats.confidence()->hits == 69);
  CHECK(stats.confidence()->support == 72);
  CHECK(stats.confidence()->value() == doctest::Approx(0.9583).epsilon(1e-4));
  CHECK(format_percent(*stats.confidence()) == "95.83%");
  CHECK(format_rule(r1) == "~level(A,CvsS,positive) :- level(A,CvsM,positive).");
}

TEST_CASE("a body nobody satisfies has undefined confidence") {
  auto d = synth::genotype_d();
  auto fb = build_factbase(d.calls, d.categories, d.hierarchy);
  Rule r{{false, "CvsM", Expression::Positive}, {Literal::in_category("no-such-category")}};
  auto stats = evaluate_rule(r, fb);
  CHECK(stats.body_support == 0);
  CHECK_FALSE(stats.confidence().has_value());
}

TEST_CASE("negated heads use the three-valued complement") {
  std::vector<LevelFact> levels{{cid(1), "CvsM", Expression::Positive},
                                {cid(1), "CvsS", Expression::Negative},
                                {cid(2), "CvsM", Expression::Positive},
                                {cid(2), "CvsS", Expression::Unchanged},
                                {cid(3), "CvsM", Expression::Positive},
                                {cid(3), "CvsS", Expression::Positive},
                                {cid(4), "CvsM", Expression::Positive}};  // no CvsS value
  FactBase fb(levels, {}, {});
  Rule r{{true, "CvsS", Expression::Positive}, {Literal::level("CvsM", Expression::Positive)}};
  auto s = evaluate_rule(r, fb);
  CHECK(s.body_support == 4);
  CHECK(s.head_hits == 2);
  CHECK_FALSE(head_holds(fb, cid(4), r.head));
}

TEST_CASE("evaluation agrees with a nested-loop recount and ignores insertion order") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 200; ++t) {
    auto raw = random_facts(rng);
    auto fb = factbase(raw);
    auto shuffled = raw;
    std::shuffle(shuffled.levels.begin(), shuffled.levels.end(), rng);
    std::shuffle(shuffled.categories.begin(), shuffled.categories.end(), rng);
    std::reverse(shuffled.hierarchy.begin(), shuffled.hierarchy.end());
    auto fb2 = factbase(shuffled);
    auto sat = naive_saturate(raw);

    for (const auto& rule : enumerate_hypotheses(Language::from(fb, 2))) {
      std::size_t support = 0, hits = 0;
      for (const auto& clone : fb.clones()) {
        bool body = true;
        for (const auto& lit : rule.body) {
          if (lit.kind == Literal::Kind::Category) {
            body = body && sat.contains({clone.value, lit.category});
          } else {
            bool found = false;
            for (const auto& l : raw.levels) {
              found = found || (l.clone == clone && l.comparison == lit.comparison && l.expression == lit.expression);
            }
            body = body && found;
          }
        }
        if (!body) continue;
        ++support;
        for (const auto& l : raw.levels) {
          if (l.clone == clone && l.comparison == rule.head.comparison) {
            hits += ((l.expression == rule.head.expression) != rule.head.negated) ? 1 : 0;
          }
        }
      }
      auto stats = evaluate_rule(rule, fb);
      CHECK(stats.body_support == support);
      CHECK(stats.head_hits == hits);
      CHECK(evaluate_rule(rule, fb2) == stats);
    }
  }
}

TEST_CASE("hypothesis counts match the closed form") {
  for (std::size_t comparisons = 1; comparisons <= 3; ++comparisons) {
    for (std::size_t categories = 0; categories <= 3; ++categories) {
      for (int max_len = 1; max_len <= 3; ++max_len) {
        Language lang;
        for (std::size_t i = 0; i < comparisons; ++i) lang.comparisons.push_back("C" + std::to_string(i));
        for (std::size_t i = 0; i < categories; ++i) lang.categories.push_back("k" + std::to_string(i));
        lang.max_body_length = max_len;
        const std::size_t ce = lang.level_literal_count();
        const std::size_t l = lang.literal_count();
        std::size_t expected = 0;
        for (std::size_t k = 1; k <= static_cast<std::size_t>(max_len); ++k) {
          expected += 2 * ce * choose(l, k) - ce * choose(l - 1, k - 1);
        }
        auto rules = enumerate_hypotheses(lang);
        CHECK(rules.size() == expected);
        std::set<std::string> distinct;
        for (const auto& r : rules) distinct.insert(format_rule(r));
        CHECK(distinct.size() == rules.size());
      }
    }
  }
}

TEST_CASE("language without categories over one comparison") {
  Language lang;
  lang.comparisons = {"CvsM"};
  auto rules = enumerate_hypotheses(lang);
  // 3 bodies x (6 heads - 1 repeated positive head).
  CHECK(rules.size() == 15);
  for (const auto& r : rules) {
    REQUIRE(r.body.size() == 1);
    CHECK(r.body[0].kind == Literal::Kind::Level);
    CHECK(r.head.comparison == "CvsM");
    CHECK_FALSE((!r.head.negated && r.head.expression == r.body[0].expression));
  }
}

TEST_CASE("the space contains the shapes of rules (1) to (6)") {
  Language lang;
  lang.comparisons = {"CvsM", "CvsS"};
  lang.categories = {"heat"};
  std::set<std::string> space;
  for (const auto& r : enumerate_hypotheses(lang)) space.insert(format_rule(r));
  CHECK(space.contains("~level(A,CvsS,positive) :- level(A,CvsM,positive)."));
  CHECK(space.contains("level(A,CvsM,positive) :- category(A,heat)."));
  CHECK(space.contains("level(A,CvsS,negative) :- category(A,heat)."));
  CHECK(space.contains("~level(A,CvsM,positive) :- level(A,CvsM,negative)."));
}

TEST_CASE("miner equals a brute-force oracle") {
  std::mt19937_64 rng(7);
  const std::vector<std::pair<std::size_t, std::size_t>> confs{{3, 5}, {1, 2}, {1, 1}, {0, 1}, {2, 3}};
  for (int t = 0; t < 300; ++t) {
    auto raw = random_facts(rng);
    auto fb = factbase(raw);
    const std::size_t min_sup = 1 + static_cast<std::size_t>(t % 3);
    const auto [num, den] = confs[static_cast<std::size_t>(t) % confs.size()];
    const int max_len = 1 + t % 2;
    auto mined = mine_rules(fb, min_sup, Confidence{num, den}, Language::from(fb, max_len));
    std::multiset<std::string> got, expected;
    for (const auto& m : mined) got.insert(format_mined_rule(m));
    for (const auto& r : brute_force_mine(raw, min_sup, num, den, max_len)) expected.insert(oracle_text(r));
    CHECK(got == expected);

    // Ranking: confidence desc, then support desc.
    for (std::size_t i = 1; i < mined.size(); ++i) {
      const auto a = *mined[i - 1].stats.confidence();
      const auto b = *mined[i].stats.confidence();
      CHECK(a >= b);
      if (a == b) CHECK(mined[i - 1].stats.body_support >= mined[i].stats.body_support);
    }
  }
}

TEST_CASE("confidence above one mines nothing") {
  auto d = synth::genotype_d();
  auto fb = build_factbase(d.calls, d.categories, d.hierarchy);
  CHECK(mine_rules(fb, 1, Confidence{11, 10}, Language::from(fb)).empty());
}

TEST_CASE("duplicating every clone doubles support and keeps confidence") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    auto raw = random_facts(rng);
    auto doubled = raw;
    for (const auto& l : raw.levels) doubled.levels.push_back({CloneId("x" + l.clone.value), l.comparison, l.expression});
    for (const auto& c : raw.categories) doubled.categories.push_back({CloneId("x" + c.clone.value), c.category});
    auto fb = factbase(raw);
    auto fb2 = factbase(doubled);
    for (const auto& rule : enumerate_hypotheses(Language::from(fb, 2))) {
      auto a = evaluate_rule(rule, fb);
      auto b = evaluate_rule(rule, fb2);
      CHECK(b.body_support == 2 * a.body_support);
      CHECK(b.confidence() == a.confidence());
    }
  }
}

TEST_CASE("confidence parsing and percentages") {
  CHECK(parse_confidence("0.6") == Confidence{3, 5});
  CHECK(parse_confidence("3/5") == Confidence{3, 5});
  CHECK(parse_confidence("1") == Confidence{1, 1});
  CHECK(parse_confidence(".5") == Confidence{1, 2});
  CHECK_THROWS(parse_confidence("abc"));
  CHECK_THROWS(parse_confidence("1/0"));
  CHECK_THROWS(parse_confidence(""));
  CHECK(format_percent({69, 72}) == "95.83%");
  CHECK(format_percent({5, 6}) == "83.33%");
  CHECK(format_percent({13, 16}) == "81.25%");
  CHECK(format_percent({8, 12}) == "66.67%");
  CHECK(format_percent({1, 1}) == "100.00%");
  CHECK(format_percent({0, 7}) == "0.00%");
  CHECK(format_percent({1, 8}) == "12.50%");
  CHECK(format_percent({1, 40000}) == "0.00%");  // 0.0025%
  CHECK(format_percent({1, 20000}) == "0.01%");  // 0.005%, half up
  // Rounding oracle: round(10000 h / s) in exact integers.
  for (std::size_t s = 1; s <= 200; ++s) {
    for (std::size_t h = 0; h <= s; ++h) {
      const std::size_t q = (20000 * h + s) / (2 * s);
      std::string expected = std::to_string(q / 100) + "." + (q % 100 < 10 ? "0" : "") + std::to_string(q % 100) + "%";
      CHECK(format_percent({h, s}) == expected);
    }
  }
}

TEST_CASE("rules text round trip") {
  auto d = synth::genotype_d();
  auto fb = build_factbase(d.calls, d.categories, d.hierarchy);
  auto mined = mine_rules(fb, kDefaultMinSupport, kDefaultMinConfidence, Language::from(fb, 2));
  REQUIRE_FALSE(mined.empty());
  auto text = write_rules(mined);
  auto back = read_rules(text);
  REQUIRE(back.size() == mined.size());
  for (std::size_t i = 0; i < mined.size(); ++i) {
    CHECK(back[i].rule == mined[i].rule);
    CHECK(back[i].stats == mined[i].stats);
  }
  CHECK(write_rules(back) == text);
  auto one = parse_mined_rule("~level(A,CvsS,positive) :- level(A,CvsM,positive). % support=72 conf=69/72");
  CHECK(one.rule.head.negated);
  CHECK(one.stats.body_support == 72);
  CHECK(one.stats.head_hits == 69);
  CHECK_THROWS(parse_mined_rule("level(A,CvsM,up) :- category(A,heat). % support=1 conf=1/1"));
}

TEST_CASE("facts, categories and hierarchy files") {
  auto d = synth::genotype_d();
  auto fb = build_factbase(d.calls, d.categories, d.hierarchy);
  auto facts = write_facts(fb);
  auto tables = read_facts(facts);
  auto fb2 = FactBase(tables.levels, tables.categories, d.hierarchy);
  CHECK(fb2 == fb);
  CHECK(facts.rfind("table\tclone_id\tkey\tvalue\n", 0) == 0);
  CHECK(facts.find("level\t4\tCvsM\tpositive\n") != std::string::npos);

  auto h = read_hierarchy(write_hierarchy(d.hierarchy));
  CHECK(std::set(h.begin(), h.end()) == std::set(d.hierarchy.begin(), d.hierarchy.end()));
  auto c = read_categories(write_categories(d.categories));
  CHECK(std::set(c.begin(), c.end()) == std::set(d.categories.begin(), d.categories.end()));
  // "Carbon Metabolism" has a space and survives the TSV.
  CHECK(std::find(h.begin(), h.end(), Containment{"RPPP", "Carbon Metabolism"}) != h.end());
}
