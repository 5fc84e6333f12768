//===-- slicer.hpp - System dependence graph and two-pass slicing ---------===//
//
// Interprocedural dependence graph in the Horwitz-Reps-Binkley style:
// instruction nodes plus entry/formal/actual parameter nodes, control
// dependences from postdominance frontiers, def-use and memory (points-to)
// data dependences, call/param edges, and summary edges closed by a worklist.
// Backward slicing runs the classic two passes: ascend without param-out
// edges, then descend without call/param-in edges.
//
//===----------------------------------------------------------------------===//

#ifndef STASE_SLICER_HPP
#define STASE_SLICER_HPP

#include "stase/config.hpp"
#include "stase/mir.hpp"
#include "stase/points_to.hpp"
#include "stase/vulnrules.hpp"

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace stase::slicer {

struct NodeId {
  enum class Kind { Entry, FormalIn, FormalOut, Instr, ActualIn, ActualOut };
  Kind kind = Kind::Instr;
  std::string func;
  size_t ordinal = 0; // Instr/ActualIn/ActualOut: instruction ordinal
  int index = -1;     // FormalIn/ActualIn: parameter position

  auto operator<=>(const NodeId &) const = default;
  std::string to_string() const;
};

enum class EdgeKind { Control, Data, DataMem, Call, ParamIn, ParamOut, Summary };

struct Sdg {
  const mir::Module *module = nullptr;
  std::map<NodeId, std::vector<std::pair<NodeId, EdgeKind>>> succs;
  std::map<NodeId, std::vector<std::pair<NodeId, EdgeKind>>> preds;
  size_t summary_edges = 0;

  void add_edge(const NodeId &from, const NodeId &to, EdgeKind k);
  bool has_edge(const NodeId &from, const NodeId &to, EdgeKind k) const;
};

struct SdgResult {
  std::optional<Sdg> sdg;
  std::string error; // mutual recursion and friends
  bool ok() const { return sdg.has_value(); }
};

SdgResult build_sdg(const mir::Module &m, const pts::PointsToResult &pts);

struct Slice {
  NodeId criterion;
  std::set<NodeId> nodes;
  std::set<std::pair<std::string, size_t>> instrs; // (func, ordinal) retained
  std::map<std::string, std::set<uint32_t>> retained_lines;  // per file
  std::map<std::string, std::set<uint32_t>> discarded_lines; // all - retained
  std::set<std::string> retained_funcs;
  std::vector<std::string> stub_safe_functions; // no instruction retained

  bool contains_instr(const std::string &func, size_t ordinal) const {
    return instrs.count({func, ordinal}) > 0;
  }
};

Slice two_pass_slice(const Sdg &g, const mir::InstrRef &criterion);

//===----------------------------------------------------------------------===//
// Vulnerability descriptions
//===----------------------------------------------------------------------===//

struct VulnerabilityDescription {
  std::string id;
  config::VulnCategory category = config::VulnCategory::DivisionByZero;
  std::string program;                      // P
  std::string entry;                        // E
  std::vector<std::string> inputs;          // I, display names
  std::string assertion_text;               // A, "assert(...)"
  mir::AssertExprRef assertion;
  std::string instr;                        // K
  std::string file;                         // L
  uint32_t line = 0;
  std::vector<std::string> stub_functions;      // U, function-granular part
  std::vector<std::string> discarded_locations; // U, "file:line" informational
  std::string taint_source;
  std::vector<std::string> taint_sinks;
  std::vector<std::string> retained_funcs;
  std::vector<config::InputSpec> input_specs;

  std::string serialize() const;
};

struct VdResult {
  std::optional<VulnerabilityDescription> vd;
  std::string drop_reason; // set when the finding is non-exploitable
  std::string error;
  bool ok() const { return vd.has_value(); }
};

VdResult emit_vuln_description(const mir::Module &m,
                               const config::AnalysisConfig &cfg,
                               const rules::CandidateFinding &finding,
                               const Slice &slice);

struct VdParseResult {
  std::optional<VulnerabilityDescription> vd;
  std::string error;
  bool ok() const { return vd.has_value(); }
};

VdParseResult parse_vuln_description(std::string_view text);
VdParseResult parse_vuln_description_file(const std::string &path);

} // namespace stase::slicer

#endif // STASE_SLICER_HPP
