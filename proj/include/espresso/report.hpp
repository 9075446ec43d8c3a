#pragma once

#include <span>
#include <string>

#include "espresso/callsig.hpp"
#include "espresso/rulemine.hpp"

namespace espresso::report {

// Plain-text run summary: per-comparison call counts, up-regulated clones per
// category (saturated through `hierarchy`; clones without a category are
// listed as "uncategorized") and the mined rules with percentage confidences.
std::string render_report(std::span<const callsig::ExpressionCall> calls,
                          std::span<const rulemine::MinedRule> rules,
                          std::span<const rulemine::CategoryFact> categories,
                          std::span<const rulemine::Containment> hierarchy = {});

}  // namespace espresso::report
