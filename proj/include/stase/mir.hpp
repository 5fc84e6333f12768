//===-- mir.hpp - Mini-IR module types, parser, printer, validator --------===//
//
// A small LLVM-flavored SSA IR: typed values, basic blocks, explicit
// terminators, struct/array/pointer types, and two analysis intrinsics
// (`symbolic` and `assert`). Text format is line oriented; see docs/mir.md.
//
//===----------------------------------------------------------------------===//

#ifndef STASE_MIR_HPP
#define STASE_MIR_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stase::mir {

//===----------------------------------------------------------------------===//
// Types
//===----------------------------------------------------------------------===//

enum class TypeKind { Void, Int, Pointer, Array, Struct };

class Type;
using TypeRef = std::shared_ptr<const Type>;

class Type {
public:
  TypeKind kind = TypeKind::Void;
  unsigned width = 0;       // Int: one of 1, 8, 16, 32, 64
  TypeRef elem;             // Pointer: pointee; Array: element
  uint64_t length = 0;      // Array
  std::string struct_name;  // Struct: resolved against Module::structs

  static TypeRef make_void();
  static TypeRef make_int(unsigned width);
  static TypeRef make_pointer(TypeRef pointee);
  static TypeRef make_array(TypeRef elem, uint64_t length);
  static TypeRef make_struct(std::string name);

  bool is_void() const { return kind == TypeKind::Void; }
  bool is_int() const { return kind == TypeKind::Int; }
  bool is_pointer() const { return kind == TypeKind::Pointer; }
  bool is_array() const { return kind == TypeKind::Array; }
  bool is_struct() const { return kind == TypeKind::Struct; }
};

bool type_equal(const TypeRef &a, const TypeRef &b);
std::string type_to_string(const TypeRef &t);

//===----------------------------------------------------------------------===//
// Assertion expressions
//===----------------------------------------------------------------------===//

enum class ICmpPred { Eq, Ne, Ult, Ule, Ugt, Uge, Slt, Sle, Sgt, Sge };

// Boolean/arithmetic expression attached to an `assert` instruction.
// Arithmetic is evaluated at 64 bits; comparison signedness controls how
// operand values are extended. Name references keep their sigil: "%x" is a
// local, "@g" reads a global's current value, a bare name resolves
// local -> global -> region symbol (NAME_BASE / NAME_SIZE).
struct AssertExpr {
  enum class Kind {
    True,
    False,
    And,
    Or,
    Not,
    Cmp,      // pred, args[0], args[1]
    Add,
    Sub,
    Mul,
    UDiv,     // total: x / 0 == 0 inside assertions
    Const,    // value
    NameRef,  // name
    SizeofObj,  // byte size of the object args[0] points into
    OffsetOf,   // byte offset of pointer args[0] within its object
    Freed       // true iff the object args[0] points into has been freed
  };
  Kind kind = Kind::True;
  ICmpPred pred = ICmpPred::Eq;
  uint64_t value = 0;
  std::string name;
  std::vector<std::shared_ptr<const AssertExpr>> args;
};
using AssertExprRef = std::shared_ptr<const AssertExpr>;

AssertExprRef aexpr_true();
AssertExprRef aexpr_false();
AssertExprRef aexpr_const(uint64_t v);
AssertExprRef aexpr_name(std::string name);
AssertExprRef aexpr_not(AssertExprRef a);
AssertExprRef aexpr_and(AssertExprRef a, AssertExprRef b);
AssertExprRef aexpr_or(AssertExprRef a, AssertExprRef b);
AssertExprRef aexpr_cmp(ICmpPred pred, AssertExprRef a, AssertExprRef b);
AssertExprRef aexpr_arith(AssertExpr::Kind k, AssertExprRef a, AssertExprRef b);
AssertExprRef aexpr_unary(AssertExpr::Kind k, AssertExprRef a);

bool aexpr_equal(const AssertExprRef &a, const AssertExprRef &b);
// Canonical ASCII rendering, e.g. "TempCommBufferSize != 0".
std::string aexpr_to_string(const AssertExprRef &e);
// Parses the canonical rendering back. Returns null and fills `error` on
// malformed input.
AssertExprRef parse_aexpr(std::string_view text, std::string *error);

//===----------------------------------------------------------------------===//
// Instructions
//===----------------------------------------------------------------------===//

enum class Opcode {
  Alloca,
  Load,
  Store,
  Gep,
  Add,
  Sub,
  Mul,
  UDiv,
  SDiv,
  ICmp,
  Zext,
  Trunc,
  Phi,
  Br,
  CondBr,
  Call,
  Ret,
  Free,
  Memcpy,
  Assert,
  Symbolic
};

const char *opcode_name(Opcode op);
bool is_terminator(Opcode op);

struct Operand {
  enum class Kind { Local, Global, Const, Null };
  Kind kind = Kind::Const;
  std::string name;    // Local/Global (without sigil)
  uint64_t value = 0;  // Const

  static Operand local(std::string n);
  static Operand global(std::string n);
  static Operand constant(uint64_t v);
  static Operand null();
  bool operator==(const Operand &o) const;
};

struct GepSelector {
  enum class Kind { Field, Index };
  Kind kind = Kind::Field;
  std::string field;  // Field
  Operand index;      // Index: value or constant
  bool operator==(const GepSelector &o) const;
};

struct SourceLoc {
  std::string file;
  uint32_t line = 1;
  uint32_t col = 0;
  bool operator==(const SourceLoc &o) const = default;
};

struct Instruction {
  Opcode op = Opcode::Ret;
  std::string result;  // empty when the opcode produces no value
  TypeRef type;        // op-specific primary type (docs/mir.md)
  TypeRef type2;       // zext/trunc destination type
  ICmpPred pred = ICmpPred::Eq;
  std::vector<Operand> operands;
  std::vector<GepSelector> gep_path;                       // Gep
  std::vector<std::pair<Operand, std::string>> phi_in;     // Phi
  std::string callee;                                      // Call
  std::string label_a, label_b;                            // Br / CondBr
  AssertExprRef assertion;                                 // Assert
  bool target_assert = false;                              // Assert: !target
  std::string sym_name;   // Symbolic: symbol base name ("" = result name)
  std::string site_tag;   // Alloca/Symbolic: !site(...) provenance tag
  unsigned addr_width = 0; // Symbolic pointer: !addrw(N) address symbol width
  SourceLoc loc;
};

//===----------------------------------------------------------------------===//
// Module
//===----------------------------------------------------------------------===//

struct StructDef {
  std::string name;
  std::vector<std::pair<std::string, TypeRef>> fields;
  int field_index(const std::string &fname) const;  // -1 when absent
};

struct BasicBlock {
  std::string label;
  std::vector<Instruction> instrs;
};

struct Function {
  std::string name;
  std::vector<std::pair<std::string, TypeRef>> params;
  TypeRef ret_type;  // inferred from `ret` when not written
  std::vector<BasicBlock> blocks;
  bool is_external = false;

  const BasicBlock *find_block(const std::string &label) const;
  int param_index(const std::string &pname) const;  // -1 when absent
};

struct GlobalDecl {
  enum class Init { Zero, Const, Symbolic };
  std::string name;
  TypeRef type;
  Init init = Init::Zero;
  uint64_t init_value = 0;
};

struct RegionDecl {
  std::string name;
  bool base_symbolic = false;
  bool size_symbolic = false;
  uint64_t base = 0;
  uint64_t size = 0;
};

// Loop bound annotation emitted by harness instrumentation:
//   !loopbound(@func, header_label, bound)
struct LoopBoundAnn {
  std::string func;
  std::string header;
  uint64_t bound = 0;
};

struct Module {
  std::string name;         // `module <name>` directive, or source stem
  std::string default_file; // `!file("...")` directive, or the input name
  std::vector<StructDef> structs;
  std::vector<GlobalDecl> globals;
  std::vector<RegionDecl> regions;
  std::vector<Function> functions;
  std::vector<LoopBoundAnn> loop_bounds;

  const Function *find_function(const std::string &name) const;
  const GlobalDecl *find_global(const std::string &name) const;
  const StructDef *find_struct(const std::string &name) const;
  const RegionDecl *find_region(const std::string &name) const;
};

// Instruction / function identifiers, mirroring bitcode-style ids:
//   <mod.bc>:Func          <mod.bc>:Func:ordinal
std::string function_id(const Module &m, const Function &f);
std::string instr_id(const Module &m, const Function &f, size_t ordinal);

struct InstrRef {
  const Function *fn = nullptr;
  size_t block_index = 0;
  size_t index_in_block = 0;
  size_t ordinal = 0;
  const Instruction *instr = nullptr;
};

// Walks every instruction of `f` in block order with its ordinal.
std::vector<InstrRef> all_instrs(const Function &f);
std::optional<InstrRef> find_instr(const Module &m, const std::string &func,
                                   size_t ordinal);
// Resolves a full "<mod.bc>:Func:ordinal" id.
std::optional<InstrRef> find_instr_by_id(const Module &m,
                                         const std::string &id);

// Byte layout: i1 -> 1, iN -> N/8, pointer -> 8, arrays/structs packed.
uint64_t type_byte_size(const Module &m, const TypeRef &t);

// Result types of every local value (params + instruction results).
std::map<std::string, TypeRef> compute_value_types(const Module &m,
                                                   const Function &f);

bool module_equal(const Module &a, const Module &b);

//===----------------------------------------------------------------------===//
// Parse / validate / print
//===----------------------------------------------------------------------===//

struct Diagnostic {
  enum class Severity { Error, Warning };
  std::string file;
  uint32_t line = 0;
  uint32_t col = 0;
  Severity severity = Severity::Error;
  std::string message;
  std::string instr;  // offending instruction id when known

  std::string render() const;  // "file:line:col: severity: message"
};

struct ParseResult {
  std::optional<Module> module;
  std::vector<Diagnostic> diags;
  bool ok() const { return module.has_value(); }
};

// Parses and then validates; a module is only returned when both succeed.
// `source_name` seeds Module::name / default_file for untagged instructions.
ParseResult parse_module(std::string_view text, const std::string &source_name);

// Parse without validation (used by the validator tests).
ParseResult parse_module_only(std::string_view text,
                              const std::string &source_name);

std::vector<Diagnostic> validate_module(const Module &m);

std::string pretty_print(const Module &m);

ParseResult parse_module_file(const std::string &path);

} // namespace stase::mir

#endif // STASE_MIR_HPP
