#include "espresso/report.hpp"

#include <map>
#include <set>
#include <sstream>

namespace espresso::report {

using callsig::Call;

std::string render_report(std::span<const callsig::ExpressionCall> calls,
                          std::span<const rulemine::MinedRule> rules,
                          std::span<const rulemine::CategoryFact> categories,
                          std::span<const rulemine::Containment> hierarchy) {
  struct Counts {
    std::size_t up = 0, down = 0, unchanged = 0;
  };
  std::map<std::string, Counts> per_comparison;
  Counts total;
  for (const auto& c : calls) {
    auto& slot = per_comparison[c.comparison];
    switch (c.call) {
      case Call::Up: ++slot.up; ++total.up; break;
      case Call::Down: ++slot.down; ++total.down; break;
      case Call::Unchanged: ++slot.unchanged; ++total.unchanged; break;
    }
  }

  std::map<CloneId, std::set<std::string>> clone_categories;
  for (const auto& f : rulemine::saturate(categories, hierarchy)) clone_categories[f.clone].insert(f.category);

  std::ostringstream os;
  auto counts_line = [&](const std::string& label, const Counts& c) {
    os << "  " << label << ": " << c.up << " up, " << c.down << " down, " << c.unchanged << " unchanged\n";
  };
  os << "Expression calls\n";
  for (const auto& [cmp, c] : per_comparison) counts_line(cmp, c);
  counts_line("total", total);

  os << "\nUp-regulated clones by category\n";
  for (const auto& [cmp, c] : per_comparison) {
    std::map<std::string, std::size_t> by_category;
    std::size_t uncategorized = 0;
    for (const auto& call : calls) {
      if (call.comparison != cmp || call.call != Call::Up) continue;
      auto it = clone_categories.find(call.clone);
      if (it == clone_categories.end()) {
        ++uncategorized;
        continue;
      }
      for (const auto& cat : it->second) ++by_category[cat];
    }
    os << "  " << cmp << " (" << c.up << " up)\n";
    for (const auto& [cat, n] : by_category) os << "    " << cat << ": " << n << "\n";
    if (uncategorized) os << "    uncategorized: " << uncategorized << "\n";
  }

  os << "\nRules (" << rules.size() << ")\n";
  for (const auto& r : rules) {
    auto conf = r.stats.confidence();
    os << "  " << (conf ? rulemine::format_percent(*conf) : std::string("undefined")) << "  "
       << rulemine::format_rule(r.rule) << "  (" << r.stats.head_hits << "/" << r.stats.body_support << ")\n";
  }
  return os.str();
}

}  // namespace espresso::report
