#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "espresso/report.hpp"
#include "espresso/synthetic.hpp"

using namespace espresso;
using callsig::Call;

namespace {

callsig::ExpressionCall call(int clone, const std::string& cmp, Call c) {
  callsig::ExpressionCall out;
  out.clone = CloneId(std::to_string(clone));
  out.comparison = cmp;
  out.call = c;
  return out;
}

}  // namespace

TEST_CASE("empty inputs give an all-zero summary") {
  auto text = report::render_report({}, {}, {});
  CHECK(text ==
        "Expression calls\n"
        "  total: 0 up, 0 down, 0 unchanged\n"
        "\n"
        "Up-regulated clones by category\n"
        "\n"
        "Rules (0)\n");
}

TEST_CASE("small report, exact text") {
  std::vector<callsig::ExpressionCall> calls{call(1, "CvsM", Call::Up), call(2, "CvsM", Call::Up),
                                             call(3, "CvsM", Call::Down), call(1, "CvsS", Call::Unchanged)};
  std::vector<rulemine::CategoryFact> cats{{CloneId("1"), "heat"}};
  std::vector<rulemine::Containment> hierarchy{{"heat", "environment"}};
  rulemine::MinedRule r{{{true, "CvsS", rulemine::Expression::Positive},
                         {rulemine::Literal::level("CvsM", rulemine::Expression::Positive)}},
                        {72, 69}};
  auto text = report::render_report(calls, std::span(&r, 1), cats, hierarchy);
  CHECK(text ==
        "Expression calls\n"
        "  CvsM: 2 up, 1 down, 0 unchanged\n"
        "  CvsS: 0 up, 0 down, 1 unchanged\n"
        "  total: 2 up, 1 down, 1 unchanged\n"
        "\n"
        "Up-regulated clones by category\n"
        "  CvsM (2 up)\n"
        "    environment: 1\n"
        "    heat: 1\n"
        "    uncategorized: 1\n"
        "  CvsS (0 up)\n"
        "\n"
        "Rules (1)\n"
        "  95.83%  ~level(A,CvsS,positive) :- level(A,CvsM,positive).  (69/72)\n");
}

TEST_CASE("reconstructed Genotype D shows 72 up in CvsM") {
  auto d = synth::genotype_d();
  auto text = report::render_report(d.calls, {}, d.categories, d.hierarchy);
  CHECK(text.find("  CvsM: 72 up, 43 down, 269 unchanged\n") != std::string::npos);
  CHECK(text.find("    membranetransportprotein: 21\n") != std::string::npos);
  CHECK(text.find("    heat: 5\n") != std::string::npos);
  CHECK(text.find("    cellwallrelated: 13\n") != std::string::npos);
}
