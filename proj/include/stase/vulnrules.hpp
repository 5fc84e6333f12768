//===-- vulnrules.hpp - Category rule sets and the candidate driver ------===//
//
// Thin join orchestrator: merges the taint prelude, the enabled category
// rule files (rules/<category>.dl), and entrypoint/entryinput clauses
// generated from the analysis config; evaluates once through the datalog
// engine; and maps each category's head relation onto CandidateFinding rows.
// Assertion templates instantiate the per-category check over the finding's
// sinks.
//
//===----------------------------------------------------------------------===//

#ifndef STASE_VULNRULES_HPP
#define STASE_VULNRULES_HPP

#include "stase/config.hpp"
#include "stase/datalog.hpp"
#include "stase/mir.hpp"
#include "stase/points_to.hpp"

#include <string>
#include <vector>

namespace stase::rules {

using config::AnalysisConfig;
using config::VulnCategory;

struct CandidateFinding {
  VulnCategory category = VulnCategory::DivisionByZero;
  std::string entry;     // entrypoint function name (no sigil)
  std::string func;      // containing function name
  std::string instr;     // K, bitcode-style id
  size_t ordinal = 0;    // K's ordinal within func
  std::string file;      // L
  uint32_t line = 0;
  std::string taint_source;              // var id; empty for callout
  std::vector<std::string> taint_sinks;  // var ids
  std::string dividend;                  // division metadata

  // Canonical sort key: (category, file, line, instr, sink, entry).
  bool operator<(const CandidateFinding &o) const;
  bool operator==(const CandidateFinding &o) const;
};

struct RulesResult {
  std::vector<CandidateFinding> findings;
  datalog::Database db; // full evaluation output, for inspection/tests
  std::string error;
  bool ok() const { return error.empty(); }
};

RulesResult run_vuln_rules(const mir::Module &m,
                           const datalog::Database &fact_db,
                           const pts::PointsToResult &pts,
                           const AnalysisConfig &cfg,
                           const std::string &rules_dir);

// The documentation template for a category ("assert(%1 != 0)" etc.).
std::string assertion_template_text(VulnCategory c);

struct AssertionInstance {
  mir::AssertExprRef expr;
  std::string text; // "assert(...)" display form; reparses to expr
};

// Instantiates the category template over the finding's sinks. The first
// configured region fills the region symbols of the smram templates.
// Returns nullopt (with *error set) when the finding shape does not fit.
std::optional<AssertionInstance>
instantiate_assertion(const mir::Module &m, const AnalysisConfig &cfg,
                      const CandidateFinding &finding, std::string *error);

// Strips "Func:%" / "@" / "#" prefixes to the display form used in
// assertions and reports.
std::string display_value_name(const std::string &var_id);

} // namespace stase::rules

#endif // STASE_VULNRULES_HPP
