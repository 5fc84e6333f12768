//===-- facts.cpp - Extensional fact extraction ---------------------------===//

#include "stase/facts.hpp"

#include "stase/cfg.hpp"

#include <sstream>

namespace stase::facts {

using datalog::Database;
using datalog::Value;
using mir::Function;
using mir::Instruction;
using mir::Module;
using mir::Opcode;
using mir::Operand;

std::string var_id(const Function &f, const std::string &local) {
  return f.name + ":%" + local;
}

std::string operand_id(const Function &f, const Operand &o) {
  switch (o.kind) {
  case Operand::Kind::Local:
    return var_id(f, o.name);
  case Operand::Kind::Global:
    return "@" + o.name;
  case Operand::Kind::Const:
    return "#" + std::to_string(o.value);
  case Operand::Kind::Null:
    return "#0";
  }
  return "#0";
}

std::string block_id(const Module &m, const Function &f,
                     const std::string &label) {
  return mir::function_id(m, f) + ":" + label;
}

namespace {

const char *kSchemaText = R"(
.decl instr_func(instr: symbol, func: symbol)
.decl instr_pos(instr: symbol, line: number, col: number)
.decl func_name(func: symbol, name: symbol)
.decl func_param(func: symbol, param: symbol, index: number)
.decl udiv_instr(instr: symbol)
.decl udiv_instr_first_operand(instr: symbol, op: symbol)
.decl udiv_instr_second_operand(instr: symbol, op: symbol)
.decl sdiv_instr(instr: symbol)
.decl sdiv_instr_first_operand(instr: symbol, op: symbol)
.decl sdiv_instr_second_operand(instr: symbol, op: symbol)
.decl add_instr(instr: symbol)
.decl add_instr_first_operand(instr: symbol, op: symbol)
.decl add_instr_second_operand(instr: symbol, op: symbol)
.decl sub_instr(instr: symbol)
.decl sub_instr_first_operand(instr: symbol, op: symbol)
.decl sub_instr_second_operand(instr: symbol, op: symbol)
.decl mul_instr(instr: symbol)
.decl mul_instr_first_operand(instr: symbol, op: symbol)
.decl mul_instr_second_operand(instr: symbol, op: symbol)
.decl load_instr_address(instr: symbol, ptr: symbol)
.decl store_instr_value(instr: symbol, val: symbol)
.decl store_instr_address(instr: symbol, ptr: symbol)
.decl gep_instr_base(instr: symbol, base: symbol)
.decl gep_instr_index(instr: symbol, pos: number, idxval: symbol)
.decl alloca_instr(instr: symbol, site: symbol)
.decl call_instr_fn(instr: symbol, callee: symbol)
.decl call_instr_arg(instr: symbol, pos: number, arg: symbol)
.decl memcpy_instr(instr: symbol, dst: symbol, src: symbol, len: symbol)
.decl free_instr(instr: symbol, ptr: symbol)
.decl global_var(var: symbol, name: symbol)
.decl block_of(instr: symbol, block: symbol)
.decl branch_edge(pred: symbol, succ: symbol)
.decl loop_header(func: symbol, block: symbol)
.decl loop_bound_const(block: symbol, bound: number)
)";

} // namespace

std::string fact_schema_text() { return kSchemaText; }

const datalog::Program &fact_schema() {
  static datalog::Program schema = [] {
    auto r = datalog::parse_rules(kSchemaText, "<fact-schema>");
    return *r.program;
  }();
  return schema;
}

FactsResult extract_facts(const Module &m) {
  FactsResult res;
  Database &db = res.db;
  // Every declared relation present, even when empty.
  for (const auto &d : fact_schema().relations)
    db.try_emplace(d.name);

  auto add = [&](const std::string &rel, datalog::Tuple t) {
    db[rel].insert(std::move(t));
  };

  for (const auto &g : m.globals)
    add("global_var", {Value("@" + g.name), Value("@" + g.name)});

  for (const auto &f : m.functions) {
    std::string fid = mir::function_id(m, f);
    add("func_name", {Value(fid), Value("@" + f.name)});
    for (size_t i = 0; i < f.params.size(); ++i)
      add("func_param", {Value(fid), Value(var_id(f, f.params[i].first)),
                         Value(static_cast<int64_t>(i))});
    if (f.is_external)
      continue;

    for (const auto &r : mir::all_instrs(f)) {
      const Instruction &in = *r.instr;
      std::string iid = mir::instr_id(m, f, r.ordinal);
      add("instr_func", {Value(iid), Value(fid)});
      add("instr_pos", {Value(iid), Value(static_cast<int64_t>(in.loc.line)),
                        Value(static_cast<int64_t>(in.loc.col))});
      add("block_of",
          {Value(iid), Value(block_id(m, f, f.blocks[r.block_index].label))});

      auto binop = [&](const char *prefix) {
        std::string p(prefix);
        add(p + "_instr", {Value(iid)});
        add(p + "_instr_first_operand",
            {Value(iid), Value(operand_id(f, in.operands[0]))});
        add(p + "_instr_second_operand",
            {Value(iid), Value(operand_id(f, in.operands[1]))});
      };
      switch (in.op) {
      case Opcode::UDiv:
        binop("udiv");
        break;
      case Opcode::SDiv:
        binop("sdiv");
        break;
      case Opcode::Add:
        binop("add");
        break;
      case Opcode::Sub:
        binop("sub");
        break;
      case Opcode::Mul:
        binop("mul");
        break;
      case Opcode::Load:
        add("load_instr_address",
            {Value(iid), Value(operand_id(f, in.operands[0]))});
        break;
      case Opcode::Store:
        add("store_instr_value",
            {Value(iid), Value(operand_id(f, in.operands[0]))});
        add("store_instr_address",
            {Value(iid), Value(operand_id(f, in.operands[1]))});
        break;
      case Opcode::Gep: {
        add("gep_instr_base",
            {Value(iid), Value(operand_id(f, in.operands[0]))});
        for (size_t i = 0; i < in.gep_path.size(); ++i) {
          const auto &sel = in.gep_path[i];
          std::string idxval = sel.kind == mir::GepSelector::Kind::Field
                                   ? "." + sel.field
                                   : operand_id(f, sel.index);
          add("gep_instr_index",
              {Value(iid), Value(static_cast<int64_t>(i)), Value(idxval)});
        }
        break;
      }
      case Opcode::Alloca:
        add("alloca_instr", {Value(iid), Value(iid)});
        break;
      case Opcode::Call: {
        const Function *callee = m.find_function(in.callee);
        std::string callee_id =
            callee ? mir::function_id(m, *callee) : ("@" + in.callee);
        add("call_instr_fn", {Value(iid), Value(callee_id)});
        for (size_t i = 0; i < in.operands.size(); ++i)
          add("call_instr_arg", {Value(iid), Value(static_cast<int64_t>(i)),
                                 Value(operand_id(f, in.operands[i]))});
        break;
      }
      case Opcode::Memcpy:
        add("memcpy_instr", {Value(iid), Value(operand_id(f, in.operands[0])),
                             Value(operand_id(f, in.operands[1])),
                             Value(operand_id(f, in.operands[2]))});
        break;
      case Opcode::Free:
        add("free_instr", {Value(iid), Value(operand_id(f, in.operands[0]))});
        break;
      default:
        break;
      }
    }

    auto g = cfg::build_cfg(f);
    for (size_t b = 0; b < g.block_count(); ++b)
      for (size_t s : g.succs[b])
        add("branch_edge", {Value(block_id(m, f, f.blocks[b].label)),
                            Value(block_id(m, f, f.blocks[s].label))});

    bool irreducible = false;
    auto loops = cfg::find_natural_loops(m, f, g, &irreducible);
    if (irreducible) {
      res.error = "irreducible control flow in function '@" + f.name + "'";
      return res;
    }
    for (const auto &loop : loops) {
      std::string hb = block_id(m, f, f.blocks[loop.header].label);
      add("loop_header", {Value(fid), Value(hb)});
      if (loop.has_const_bound)
        add("loop_bound_const",
            {Value(hb), Value(static_cast<int64_t>(loop.const_bound))});
    }
  }
  return res;
}

} // namespace stase::facts
