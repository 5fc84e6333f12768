//===-- datalog.hpp - Stratified Datalog engine (Souffle-dialect subset) --===//
//
// Relations are declared with `.decl name(attr: symbol|number, ...)`; rules
// are horn clauses `head(...) :- lit, ..., lit.` where a literal is an atom,
// a negated atom (`!atom`), or a builtin constraint (=, !=, <, <=, >, >=,
// substr). Variables are written `?name`, wildcards `_`. Negation must be
// stratified. See docs/rules_dsl.md.
//
//===----------------------------------------------------------------------===//

#ifndef STASE_DATALOG_HPP
#define STASE_DATALOG_HPP

#include "stase/mir.hpp" // Diagnostic

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace stase::datalog {

using Value = std::variant<int64_t, std::string>;
using Tuple = std::vector<Value>;
using TupleSet = std::set<Tuple>;
using Database = std::map<std::string, TupleSet>;

enum class AttrType { Symbol, Number };

struct RelationDecl {
  std::string name;
  std::vector<std::pair<std::string, AttrType>> attrs;
  bool intensional = false; // appears as a rule head
  size_t arity() const { return attrs.size(); }
};

struct Term {
  enum class Kind { Var, Wildcard, ConstStr, ConstNum };
  Kind kind = Kind::Wildcard;
  std::string text;  // Var name (without '?') or string constant
  int64_t num = 0;   // ConstNum
  static Term var(std::string n);
  static Term wildcard();
  static Term str(std::string s);
  static Term number(int64_t n);
};

struct Atom {
  std::string relation;
  std::vector<Term> args;
};

enum class BuiltinOp { Eq, Ne, Lt, Le, Gt, Ge, Substr };

struct Literal {
  enum class Kind { Positive, Negative, Builtin };
  Kind kind = Kind::Positive;
  Atom atom;        // Positive / Negative
  BuiltinOp op = BuiltinOp::Eq;
  Term lhs, rhs;    // Builtin; Substr: lhs needle, rhs haystack
};

struct Rule {
  Atom head;
  std::vector<Literal> body;
  uint32_t line = 0;
};

struct Program {
  std::vector<RelationDecl> relations;
  std::vector<Rule> rules;
  // Rule indices grouped by evaluation stratum, in order.
  std::vector<std::vector<size_t>> strata;

  const RelationDecl *find_relation(const std::string &name) const;
};

struct ParseRulesResult {
  std::optional<Program> program;
  std::vector<mir::Diagnostic> diags;
  bool ok() const { return program.has_value(); }
};

ParseRulesResult parse_rules(std::string_view text,
                             const std::string &source_name);
ParseRulesResult parse_rules_file(const std::string &path);

// Merges programs that share relation declarations (later decls must match).
ParseRulesResult merge_programs(const std::vector<Program> &parts);

struct EvalOptions {
  size_t max_tuples = 10'000'000; // total across all relations
};

struct EvalResult {
  Database db;        // extensional facts plus every derived relation
  bool overflow = false;
  std::string error;  // nonempty on overflow or misuse
  bool ok() const { return error.empty(); }
};

// Semi-naive stratified evaluation to fixpoint. `facts` may only populate
// extensional relations.
EvalResult evaluate_fixpoint(const Program &p, const Database &facts,
                             const EvalOptions &opts = {});

// All tuples of `relation` matching `pattern` (nullopt = wildcard), in the
// set's deterministic sorted order. Unknown relation -> nullopt.
std::optional<TupleSet> query(const Database &db, const std::string &relation,
                              const std::vector<std::optional<Value>> &pattern);

// Tab-separated import/export, one `<relation>.facts` file per relation.
bool write_facts_dir(const Database &db, const std::string &dir,
                     std::string *error);
bool read_facts_dir(const Program &schema, const std::string &dir,
                    Database *out, std::string *error);

std::string value_to_string(const Value &v);

} // namespace stase::datalog

#endif // STASE_DATALOG_HPP
