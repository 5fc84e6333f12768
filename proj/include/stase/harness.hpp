//===-- harness.hpp - Environment and path-exploration harnesses ----------===//
//
// build_ech applies the once-per-domain environment configuration to a
// module: symbolic firmware parameters and PCD globals, GUID constants, and
// table-accessor call rewrites. generate_peh derives the per-finding
// exploration recipe from a vulnerability description, and instrument
// produces the runnable segment: stub bodies for the stub-safe functions, a
// target assertion injected immediately before K, a synthetic driver that
// materializes the symbolic inputs and calls the entry point, and loop-bound
// annotations for every loop in the retained functions.
//
//===----------------------------------------------------------------------===//

#ifndef STASE_HARNESS_HPP
#define STASE_HARNESS_HPP

#include "stase/config.hpp"
#include "stase/mir.hpp"
#include "stase/slicer.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stase::harness {

inline const char *kDriverName = "__stase_entry";

struct EchApplyResult {
  std::optional<mir::Module> module;
  std::vector<std::string> rewrites; // human-readable rewrite log
  std::string error;
  bool ok() const { return module.has_value(); }
};

// Idempotent; the rewritten module validates and has the same instruction
// ordinals as the input.
EchApplyResult build_ech(const mir::Module &m, const config::EchConfig &ech);

struct SymbolicVarPlan {
  config::InputSpec spec;
  std::string display; // "*CommBufferSize", "CommBuffer.Header.Command", ...
};

struct PathExplorationHarness {
  std::string vd_id;
  std::string entry;                    // E
  std::string driver = kDriverName;     // synthetic exploration entry
  std::vector<SymbolicVarPlan> symbolic_vars;
  std::vector<std::string> stubs;       // U
  std::string assertion_file;
  uint32_t assertion_line = 0;
  std::string assertion_text;
  std::map<std::pair<std::string, std::string>, uint64_t> loop_bounds;
  unsigned call_depth = 8;
  uint64_t default_loop_bound = 3;
  // filled when loading a written manifest (the writer appends them)
  std::string theta_file;
  std::string digest;

  std::string serialize() const;
};

struct PehOptions {
  uint64_t default_loop_bound = 3;
  unsigned call_depth = 8;
};

struct PehResult {
  std::optional<PathExplorationHarness> peh;
  std::string error;
  bool ok() const { return peh.has_value(); }
};

PehResult generate_peh(const slicer::VulnerabilityDescription &vd,
                       const mir::Module &m, const PehOptions &opts = {});

struct PehParseResult {
  std::optional<PathExplorationHarness> peh;
  std::string error;
  bool ok() const { return peh.has_value(); }
};
PehParseResult parse_peh(std::string_view text);
PehParseResult parse_peh_file(const std::string &path);

struct InstrumentedSegment {
  mir::Module module;              // theta
  std::string vd_id;               // provenance
  std::string digest;              // hash over the applied rewrites
  std::string target_instr;        // K's id in the original module
};

struct InstrumentResult {
  std::optional<InstrumentedSegment> segment;
  std::string error;
  bool ok() const { return segment.has_value(); }
};

// Options for variant builds used by the oracles: skip stub replacement
// (slice-safety comparisons run stubbed vs unstubbed builds).
struct InstrumentOptions {
  bool apply_stubs = true;
};

InstrumentResult instrument(const mir::Module &m_after_ech,
                            const slicer::VulnerabilityDescription &vd,
                            const PathExplorationHarness &peh,
                            const InstrumentOptions &opts = {});

} // namespace stase::harness

#endif // STASE_HARNESS_HPP
