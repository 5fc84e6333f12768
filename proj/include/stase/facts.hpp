//===-- facts.hpp - Extensional fact extraction from a module -------------===//
//
// Walks a validated module and populates the fixed extensional relation
// catalog the vulnerability rules consume: per-instruction relations,
// per-opcode operand relations, call/branch structure, and dominator-based
// natural-loop facts. Identifier conventions:
//
//   instruction   <mod.bc>:Func:ordinal
//   function      <mod.bc>:Func
//   block         <mod.bc>:Func:label
//   local value   Func:%name
//   global        @name
//   constant      #value
//   gep field     .FieldName
//
//===----------------------------------------------------------------------===//

#ifndef STASE_FACTS_HPP
#define STASE_FACTS_HPP

#include "stase/datalog.hpp"
#include "stase/mir.hpp"

#include <string>

namespace stase::facts {

struct FactsResult {
  datalog::Database db;
  std::string error;
  bool ok() const { return error.empty(); }
};

// Complete, deterministic population of the fact schema. Fails only on
// irreducible control flow (loop detection prerequisite).
FactsResult extract_facts(const mir::Module &m);

// Declarations for every extracted relation (no rules).
const datalog::Program &fact_schema();
// The same declarations as .decl source text (embedded in docs and usable as
// a rule-file prelude).
std::string fact_schema_text();

// Identifier helpers shared with points-to and the rule driver.
std::string var_id(const mir::Function &f, const std::string &local);
std::string operand_id(const mir::Function &f, const mir::Operand &o);
std::string block_id(const mir::Module &m, const mir::Function &f,
                     const std::string &label);

} // namespace stase::facts

#endif // STASE_FACTS_HPP
