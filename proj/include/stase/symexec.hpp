//===-- symexec.hpp - Guided symbolic execution over instrumented modules -===//
//
// Bitvector expression trees, a solve() pipeline (constant folding, equality
// propagation, interval pruning, bounded enumeration, SMT-LIB2 escape
// hatch), a deterministic DFS explorer that checks the target assertion and
// collects violating/covered/fault paths, the concrete big-step interpreter
// used as the validation oracle, and {Pi} Theta {Omega} signature assembly.
//
//===----------------------------------------------------------------------===//

#ifndef STASE_SYMEXEC_HPP
#define STASE_SYMEXEC_HPP

#include "stase/harness.hpp"
#include "stase/mir.hpp"
#include "stase/slicer.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace stase::sym {

//===----------------------------------------------------------------------===//
// Expressions
//===----------------------------------------------------------------------===//

struct Expr;
using ExprRef = std::shared_ptr<const Expr>;

struct Expr {
  enum class Op {
    Const,
    Sym,
    Add,
    Sub,
    Mul,
    UDiv,
    SDiv,
    And,
    Or,
    Not,
    Eq,
    Ult,
    Slt,
    Zext,
    Trunc,
    Ite
  };
  Op op = Op::Const;
  unsigned width = 1; // result width; boolean nodes have width 1
  uint64_t value = 0; // Const (masked to width)
  std::string sym;    // Sym name
  std::vector<ExprRef> args;
};

uint64_t mask_width(uint64_t v, unsigned w);
int64_t to_signed(uint64_t v, unsigned w);
uint64_t sdiv_wrapped(uint64_t a, uint64_t b, unsigned w); // b != 0

ExprRef e_const(uint64_t v, unsigned w);
ExprRef e_bool(bool b);
ExprRef e_sym(std::string name, unsigned w);
ExprRef e_add(ExprRef a, ExprRef b);
ExprRef e_sub(ExprRef a, ExprRef b);
ExprRef e_mul(ExprRef a, ExprRef b);
ExprRef e_udiv(ExprRef a, ExprRef b);
ExprRef e_sdiv(ExprRef a, ExprRef b);
ExprRef e_and(ExprRef a, ExprRef b);
ExprRef e_or(ExprRef a, ExprRef b);
ExprRef e_not(ExprRef a);
ExprRef e_eq(ExprRef a, ExprRef b);
ExprRef e_ne(ExprRef a, ExprRef b);
ExprRef e_ult(ExprRef a, ExprRef b);
ExprRef e_ule(ExprRef a, ExprRef b);
ExprRef e_ugt(ExprRef a, ExprRef b);
ExprRef e_uge(ExprRef a, ExprRef b);
ExprRef e_slt(ExprRef a, ExprRef b);
ExprRef e_sle(ExprRef a, ExprRef b);
ExprRef e_sgt(ExprRef a, ExprRef b);
ExprRef e_sge(ExprRef a, ExprRef b);
ExprRef e_zext(ExprRef a, unsigned w);
ExprRef e_trunc(ExprRef a, unsigned w);
ExprRef e_ite(ExprRef c, ExprRef a, ExprRef b);

bool is_const(const ExprRef &e);
bool is_true(const ExprRef &e);
bool is_false(const ExprRef &e);

using Model = std::map<std::string, uint64_t>;

// Total evaluation; absent symbols read as 0.
uint64_t eval_expr(const ExprRef &e, const Model &model);
void collect_symbols(const ExprRef &e, std::map<std::string, unsigned> &out);
// Readable rendering: "Command = 1 and CommBufferSize = 24".
std::string expr_to_string(const ExprRef &e);
// QF_BV script asserting the conjunction; every expression is a BitVec.
std::string emit_smt2(const std::vector<ExprRef> &conjuncts);

//===----------------------------------------------------------------------===//
// Solver
//===----------------------------------------------------------------------===//

struct SolverOptions {
  unsigned budget_bits = 24;     // enumeration ceiling (effective bits)
  std::string external_cmd;      // e.g. "z3"; applied to the .smt2 file
  std::string smt_dir;           // where UNKNOWN-escalated queries land
};

enum class SolveStatus { Sat, Unsat, Unknown };

struct SolveResult {
  SolveStatus status = SolveStatus::Unknown;
  Model model;           // on Sat, re-evaluates the query to true
  std::string smt2_file; // set when a script was written
};

class Solver {
public:
  explicit Solver(SolverOptions opts = {});
  SolveResult solve(const ExprRef &boolean);

  size_t queries() const { return queries_; }
  size_t unknowns() const { return unknowns_; }

private:
  SolverOptions opts_;
  std::map<std::string, SolveResult> cache_;
  size_t queries_ = 0;
  size_t unknowns_ = 0;
  size_t emitted_ = 0;
};

//===----------------------------------------------------------------------===//
// Execution
//===----------------------------------------------------------------------===//

struct Bounds {
  unsigned call_depth = 8;
  uint64_t default_loop_bound = 3;
  size_t max_states = 100000;
  uint64_t max_steps = 2000000;
};

// Byte offset of a concrete cell path ("Header.Command", "Data.3") within an
// object of the given type.
uint64_t byte_offset(const mir::Module &m, const mir::TypeRef &type,
                     const std::vector<std::string> &path);

struct PathRecord {
  std::string fork_id;
  std::vector<ExprRef> constraints;
  Model model;      // satisfying witness (violating paths)
  std::string note; // fault kind etc.
};

struct ExplorationResult {
  std::vector<PathRecord> violating;
  std::vector<PathRecord> covered; // reached the target assertion, held
  std::vector<PathRecord> faults;
  size_t completed_paths = 0;
  size_t bound_abandoned = 0; // paths cut by loop bounds
  bool truncated = false;     // state/step ceiling or solver UNKNOWN hit
  std::map<std::string, unsigned> symbols; // every symbol created, any path
  size_t states = 0;
  size_t solver_queries = 0;
  std::vector<std::string> notes;
  std::string error;
  bool ok() const { return error.empty(); }
};

ExplorationResult explore(const mir::Module &theta, const std::string &driver,
                          const Bounds &bounds, const SolverOptions &solver);

//===----------------------------------------------------------------------===//
// Concrete interpreter (validation oracle)
//===----------------------------------------------------------------------===//

struct ConcreteResult {
  enum class Verdict {
    Violated,      // target assertion evaluated false
    Held,          // target assertion reached, always true
    Unreached,     // finished without touching the target assertion
    Fault,         // runtime fault before any violation
    BoundExceeded, // loop bound / step ceiling abandoned the run
    Error          // setup problem (missing function, bad inputs)
  };
  Verdict verdict = Verdict::Error;
  std::string detail;
  std::vector<std::string> trace; // instruction ids, when requested
  Model consumed;                 // symbol values the run actually used
  // (var id, static site, field path) address observations for the
  // points-to soundness oracle.
  std::vector<std::tuple<std::string, std::string, std::string>> observations;
  bool has_ret = false;
  uint64_t ret_value = 0;
};

struct InterpOptions {
  Bounds bounds;
  bool record_trace = false;
  bool record_observations = false;
};

ConcreteResult interpret_concrete(const mir::Module &m,
                                  const std::string &entry,
                                  const Model &inputs,
                                  const InterpOptions &opts = {});

//===----------------------------------------------------------------------===//
// Signatures
//===----------------------------------------------------------------------===//

struct VulnerabilitySignature {
  std::string id;
  std::vector<PathRecord> disjuncts; // Pi, one per violating path
  std::string entry_display;         // "Func@file:line"
  std::vector<std::string> symbolic_args;
  std::string assertion_location; // "Func@file:line"
  std::string postcondition;      // "!(...)"
  std::string theta_file;
  std::string digest;
};

// None when there is no violating path (the finding is dismissed).
std::optional<VulnerabilitySignature>
build_signature(const ExplorationResult &result, const mir::Module &theta,
                const harness::PathExplorationHarness &peh,
                const slicer::VulnerabilityDescription &vd,
                const std::string &theta_file, const std::string &digest);

std::string signature_text(const VulnerabilitySignature &sig);
std::string signature_json(const VulnerabilitySignature &sig);

enum class SymexecStatus { Confirmed, Dismissed, Unconfirmed };
SymexecStatus classify(const ExplorationResult &result);
const char *symexec_status_name(SymexecStatus s);

} // namespace stase::sym

#endif // STASE_SYMEXEC_HPP
