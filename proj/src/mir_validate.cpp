//===-- mir_validate.cpp - Module well-formedness checks ------------------===//

#include "stase/cfg.hpp"
#include "stase/mir.hpp"

#include <cstring>
#include <functional>
#include <set>

namespace stase::mir {

namespace {

struct Validator {
  const Module &m;
  std::vector<Diagnostic> diags;

  void error(const SourceLoc &loc, const std::string &msg,
             const std::string &instr = "") {
    Diagnostic d;
    d.file = loc.file;
    d.line = loc.line;
    d.col = loc.col;
    d.message = msg;
    d.instr = instr;
    diags.push_back(std::move(d));
  }

  void error_at(const std::string &msg) {
    Diagnostic d;
    d.file = m.default_file;
    d.message = msg;
    diags.push_back(std::move(d));
  }

  bool type_ok(const TypeRef &t, std::set<std::string> visiting = {}) {
    if (!t)
      return false;
    switch (t->kind) {
    case TypeKind::Void:
    case TypeKind::Int:
      return true;
    case TypeKind::Pointer:
      return t->elem != nullptr &&
             (t->elem->is_struct() ? true : type_ok(t->elem, visiting));
    case TypeKind::Array:
      return type_ok(t->elem, visiting);
    case TypeKind::Struct: {
      const StructDef *sd = m.find_struct(t->struct_name);
      if (!sd)
        return false;
      if (visiting.count(t->struct_name))
        return false; // value cycle => infinite size
      visiting.insert(t->struct_name);
      for (const auto &[fn, ft] : sd->fields)
        if (!type_ok(ft, visiting))
          return false;
      return true;
    }
    }
    return false;
  }

  void check_toplevel() {
    std::set<std::string> names;
    for (const auto &f : m.functions)
      if (!names.insert(f.name).second)
        error_at("duplicate function name '@" + f.name + "'");
    names.clear();
    for (const auto &g : m.globals) {
      if (!names.insert(g.name).second)
        error_at("duplicate global name '@" + g.name + "'");
      if (!g.type || g.type->is_void())
        error_at("global '@" + g.name + "' has invalid type");
      else if (!type_ok(g.type))
        error_at("global '@" + g.name + "' has unresolved type");
    }
    names.clear();
    for (const auto &s : m.structs) {
      if (!names.insert(s.name).second)
        error_at("duplicate struct name '%" + s.name + "'");
      std::set<std::string> fields;
      for (const auto &[fn, ft] : s.fields) {
        if (!fields.insert(fn).second)
          error_at("duplicate field '" + fn + "' in struct %" + s.name);
        if (!type_ok(ft))
          error_at("unresolved field type in struct %" + s.name);
      }
    }
    names.clear();
    for (const auto &r : m.regions) {
      if (!names.insert(r.name).second)
        error_at("duplicate region name '" + r.name + "'");
      if (!r.base_symbolic && !r.size_symbolic) {
        if (r.base + r.size < r.base)
          error_at("region '" + r.name + "' wraps the 64-bit address space");
      }
    }
    for (const auto &ann : m.loop_bounds) {
      const Function *f = m.find_function(ann.func);
      if (!f)
        error_at("!loopbound names unknown function '@" + ann.func + "'");
      else if (!f->find_block(ann.header))
        error_at("!loopbound names unknown block '" + ann.header + "' in @" +
                 ann.func);
    }
  }

  TypeRef operand_type(const std::map<std::string, TypeRef> &types,
                       const Operand &o, const TypeRef &context) {
    switch (o.kind) {
    case Operand::Kind::Local: {
      auto it = types.find(o.name);
      return it == types.end() ? nullptr : it->second;
    }
    case Operand::Kind::Global: {
      const GlobalDecl *g = m.find_global(o.name);
      return g ? Type::make_pointer(g->type) : nullptr;
    }
    case Operand::Kind::Const:
      return context; // constants adopt the instruction type
    case Operand::Kind::Null:
      return context;
    }
    return nullptr;
  }

  void check_function(const Function &f) {
    if (f.is_external)
      return;
    std::string fid = "<" + m.name + ".bc>:" + f.name;
    if (f.blocks.empty()) {
      error_at("function '@" + f.name + "' has no blocks");
      return;
    }
    std::set<std::string> labels;
    for (const auto &bb : f.blocks)
      if (!labels.insert(bb.label).second)
        error_at("duplicate block label '" + bb.label + "' in @" + f.name);

    // Definitions: params + instruction results, unique.
    std::set<std::string> defs;
    for (const auto &[pn, pt] : f.params) {
      if (!defs.insert(pn).second)
        error_at("duplicate parameter '%" + pn + "' in @" + f.name);
      if (!pt || pt->is_void() || !type_ok(pt))
        error_at("parameter '%" + pn + "' of @" + f.name + " has invalid type");
    }
    auto instrs = all_instrs(f);
    for (const auto &r : instrs) {
      if (!r.instr->result.empty() && !defs.insert(r.instr->result).second)
        error(r.instr->loc,
              "value '%" + r.instr->result + "' defined more than once",
              instr_id(m, f, r.ordinal));
    }

    // Terminators: exactly one, at the end of each block.
    for (const auto &bb : f.blocks) {
      if (bb.instrs.empty()) {
        error_at("block '" + bb.label + "' of @" + f.name + " is empty");
        continue;
      }
      if (!is_terminator(bb.instrs.back().op))
        error(bb.instrs.back().loc,
              "block '" + bb.label + "' of @" + f.name +
                  " does not end in a terminator");
      for (size_t i = 0; i + 1 < bb.instrs.size(); ++i)
        if (is_terminator(bb.instrs[i].op))
          error(bb.instrs[i].loc, "terminator in the middle of block '" +
                                      bb.label + "' of @" + f.name);
      bool seen_nonphi = false;
      for (const auto &in : bb.instrs) {
        if (in.op == Opcode::Phi && seen_nonphi)
          error(in.loc, "phi after non-phi instruction in block '" + bb.label +
                            "' of @" + f.name);
        if (in.op != Opcode::Phi)
          seen_nonphi = true;
      }
    }

    auto g = cfg::build_cfg(f);
    for (size_t i = 0; i < f.blocks.size(); ++i)
      if (!g.reachable[i])
        error_at("block '" + f.blocks[i].label + "' of @" + f.name +
                 " is unreachable");

    std::map<std::string, size_t> block_index;
    for (size_t i = 0; i < f.blocks.size(); ++i)
      block_index[f.blocks[i].label] = i;

    // Definition positions for dominance checks.
    std::map<std::string, std::pair<size_t, size_t>> def_pos; // block, ordinal
    for (const auto &[pn, pt] : f.params) {
      (void)pt;
      def_pos[pn] = {0, 0}; // params defined at entry, before everything
    }
    for (const auto &r : instrs)
      if (!r.instr->result.empty() &&
          def_pos.find(r.instr->result) == def_pos.end())
        def_pos[r.instr->result] = {r.block_index, r.ordinal};

    auto types = compute_value_types(m, f);

    auto check_use = [&](const InstrRef &use, const Operand &o,
                         bool is_phi_incoming, const std::string &phi_label) {
      if (o.kind == Operand::Kind::Global) {
        if (!m.find_global(o.name))
          error(use.instr->loc, "use of unknown global '@" + o.name + "'",
                instr_id(m, f, use.ordinal));
        return;
      }
      if (o.kind != Operand::Kind::Local)
        return;
      auto it = def_pos.find(o.name);
      if (it == def_pos.end()) {
        error(use.instr->loc, "use of undefined value '%" + o.name + "'",
              instr_id(m, f, use.ordinal));
        return;
      }
      bool is_param = false;
      for (const auto &[pn, pt] : f.params) {
        (void)pt;
        if (pn == o.name)
          is_param = true;
      }
      if (is_param)
        return;
      auto [dblock, dord] = it->second;
      if (is_phi_incoming) {
        // Def must dominate the end of the incoming block.
        auto bi = block_index.find(phi_label);
        if (bi == block_index.end())
          return; // reported as bad label elsewhere
        if (!g.reachable[bi->second])
          return;
        if (!(dblock == bi->second || g.dominates(dblock, bi->second)))
          error(use.instr->loc,
                "phi incoming '%" + o.name +
                    "' is not defined on edge from '" + phi_label + "'",
                instr_id(m, f, use.ordinal));
        return;
      }
      if (!g.reachable[use.block_index])
        return;
      if (dblock == use.block_index) {
        if (dord >= use.ordinal)
          error(use.instr->loc,
                "use of '%" + o.name + "' before its definition",
                instr_id(m, f, use.ordinal));
      } else if (!g.dominates(dblock, use.block_index)) {
        error(use.instr->loc,
              "use of '%" + o.name + "' is not dominated by its definition",
              instr_id(m, f, use.ordinal));
      }
    };

    auto expect_int = [&](const InstrRef &r, const TypeRef &t,
                          const char *what) {
      if (!t || !t->is_int())
        error(r.instr->loc, std::string(what) + " must have integer type",
              instr_id(m, f, r.ordinal));
    };

    for (const auto &r : instrs) {
      const Instruction &in = *r.instr;
      std::string iid = instr_id(m, f, r.ordinal);
      if (in.loc.line < 1)
        error(in.loc, "source line must be >= 1", iid);
      for (const auto &o : in.operands)
        check_use(r, o, false, "");
      switch (in.op) {
      case Opcode::Alloca:
        if (!in.type || in.type->is_void() || !type_ok(in.type))
          error(in.loc, "alloca of invalid type", iid);
        break;
      case Opcode::Load: {
        TypeRef pt = operand_type(types, in.operands[0], nullptr);
        if (!pt || !pt->is_pointer() || !type_equal(pt->elem, in.type))
          error(in.loc, "load address must be pointer to the loaded type", iid);
        if (in.type && !(in.type->is_int() || in.type->is_pointer()))
          error(in.loc, "load of aggregate type is not supported", iid);
        break;
      }
      case Opcode::Store: {
        TypeRef vt = operand_type(types, in.operands[0], in.type);
        TypeRef pt = operand_type(types, in.operands[1], nullptr);
        if (vt && !type_equal(vt, in.type))
          error(in.loc, "stored value type mismatch", iid);
        if (!pt || !pt->is_pointer() || !type_equal(pt->elem, in.type))
          error(in.loc, "store address must be pointer to the stored type",
                iid);
        if (in.type && !(in.type->is_int() || in.type->is_pointer()))
          error(in.loc, "store of aggregate type is not supported", iid);
        break;
      }
      case Opcode::Gep: {
        TypeRef pt = operand_type(types, in.operands[0], nullptr);
        if (!pt || !pt->is_pointer() || !type_equal(pt->elem, in.type)) {
          error(in.loc, "gep base must be pointer to the declared type", iid);
          break;
        }
        TypeRef cur = in.type;
        for (const auto &sel : in.gep_path) {
          if (sel.kind == GepSelector::Kind::Field) {
            const StructDef *sd =
                cur && cur->is_struct() ? m.find_struct(cur->struct_name)
                                        : nullptr;
            int idx = sd ? sd->field_index(sel.field) : -1;
            if (idx < 0) {
              error(in.loc, "gep field '." + sel.field + "' does not exist",
                    iid);
              cur = nullptr;
              break;
            }
            cur = sd->fields[static_cast<size_t>(idx)].second;
          } else {
            if (!cur || !cur->is_array()) {
              error(in.loc, "gep index applied to non-array type", iid);
              cur = nullptr;
              break;
            }
            if (sel.index.kind == Operand::Kind::Local) {
              check_use(r, sel.index, false, "");
              TypeRef ity = operand_type(types, sel.index, nullptr);
              if (!ity || !ity->is_int())
                error(in.loc, "gep index must be an integer", iid);
            } else if (sel.index.kind == Operand::Kind::Const) {
              if (sel.index.value >= cur->length)
                error(in.loc, "constant gep index out of bounds", iid);
            } else {
              error(in.loc, "gep index must be integer value", iid);
            }
            cur = cur->elem;
          }
        }
        break;
      }
      case Opcode::Add:
      case Opcode::Sub:
      case Opcode::Mul:
      case Opcode::UDiv:
      case Opcode::SDiv: {
        expect_int(r, in.type, "arithmetic");
        for (const auto &o : in.operands) {
          TypeRef t = operand_type(types, o, in.type);
          if (t && !type_equal(t, in.type))
            error(in.loc, "arithmetic operand width mismatch", iid);
        }
        break;
      }
      case Opcode::ICmp: {
        TypeRef a = operand_type(types, in.operands[0], in.type);
        TypeRef b = operand_type(types, in.operands[1], in.type);
        if (a && b && !type_equal(a, b))
          error(in.loc, "icmp operand types differ", iid);
        if (a && !type_equal(a, in.type))
          error(in.loc, "icmp declared type mismatch", iid);
        break;
      }
      case Opcode::Zext: {
        expect_int(r, in.type, "zext source");
        expect_int(r, in.type2, "zext destination");
        if (in.type && in.type2 && in.type->is_int() && in.type2->is_int() &&
            in.type->width >= in.type2->width)
          error(in.loc, "zext must widen", iid);
        TypeRef t = operand_type(types, in.operands[0], in.type);
        if (t && !type_equal(t, in.type))
          error(in.loc, "zext operand type mismatch", iid);
        break;
      }
      case Opcode::Trunc: {
        expect_int(r, in.type, "trunc source");
        expect_int(r, in.type2, "trunc destination");
        if (in.type && in.type2 && in.type->is_int() && in.type2->is_int() &&
            in.type->width <= in.type2->width)
          error(in.loc, "trunc must narrow", iid);
        TypeRef t = operand_type(types, in.operands[0], in.type);
        if (t && !type_equal(t, in.type))
          error(in.loc, "trunc operand type mismatch", iid);
        break;
      }
      case Opcode::Phi: {
        if (!g.reachable[r.block_index])
          break;
        std::set<std::string> incoming;
        for (const auto &[v, lbl] : in.phi_in) {
          if (!incoming.insert(lbl).second)
            error(in.loc, "duplicate phi incoming label '" + lbl + "'", iid);
          if (block_index.find(lbl) == block_index.end()) {
            error(in.loc, "phi incoming label '" + lbl + "' does not exist",
                  iid);
            continue;
          }
          check_use(r, v, true, lbl);
          TypeRef t = operand_type(types, v, in.type);
          if (t && !type_equal(t, in.type))
            error(in.loc, "phi incoming type mismatch", iid);
        }
        std::set<std::string> preds;
        for (size_t p : g.preds[r.block_index])
          preds.insert(f.blocks[p].label);
        if (preds != incoming)
          error(in.loc,
                "phi incoming labels do not match predecessors of block '" +
                    f.blocks[r.block_index].label + "'",
                iid);
        break;
      }
      case Opcode::Br:
        if (!f.find_block(in.label_a))
          error(in.loc, "branch to unknown block '" + in.label_a + "'", iid);
        break;
      case Opcode::CondBr: {
        TypeRef t = operand_type(types, in.operands[0], Type::make_int(1));
        if (t && (!t->is_int() || t->width != 1))
          error(in.loc, "condbr condition must be i1", iid);
        if (!f.find_block(in.label_a))
          error(in.loc, "branch to unknown block '" + in.label_a + "'", iid);
        if (!f.find_block(in.label_b))
          error(in.loc, "branch to unknown block '" + in.label_b + "'", iid);
        break;
      }
      case Opcode::Call: {
        const Function *callee = m.find_function(in.callee);
        if (!callee) {
          error(in.loc, "call to unknown function '@" + in.callee + "'", iid);
          break;
        }
        if (in.operands.size() != callee->params.size()) {
          error(in.loc, "call argument count mismatch for '@" + in.callee +
                            "' (expected " +
                            std::to_string(callee->params.size()) + ", got " +
                            std::to_string(in.operands.size()) + ")",
                iid);
          break;
        }
        for (size_t i = 0; i < in.operands.size(); ++i) {
          TypeRef at =
              operand_type(types, in.operands[i], callee->params[i].second);
          if (at && !type_equal(at, callee->params[i].second))
            error(in.loc,
                  "call argument " + std::to_string(i) + " type mismatch", iid);
        }
        bool callee_void = !callee->ret_type || callee->ret_type->is_void();
        if (!in.result.empty() && callee_void)
          error(in.loc, "call result bound but callee returns void", iid);
        break;
      }
      case Opcode::Ret: {
        bool fn_void = !f.ret_type || f.ret_type->is_void();
        if (in.operands.empty()) {
          if (!fn_void)
            error(in.loc, "ret without value in non-void function", iid);
        } else {
          if (fn_void) {
            error(in.loc, "ret with value in void function", iid);
          } else {
            TypeRef t = operand_type(types, in.operands[0], f.ret_type);
            if (t && !type_equal(t, f.ret_type))
              error(in.loc, "ret value type mismatch", iid);
          }
        }
        break;
      }
      case Opcode::Free: {
        TypeRef t = operand_type(types, in.operands[0], nullptr);
        if (!t || !t->is_pointer())
          error(in.loc, "free operand must be a pointer", iid);
        break;
      }
      case Opcode::Memcpy: {
        TypeRef d = operand_type(types, in.operands[0], nullptr);
        TypeRef s = operand_type(types, in.operands[1], nullptr);
        TypeRef l = operand_type(types, in.operands[2], Type::make_int(64));
        if (!d || !d->is_pointer())
          error(in.loc, "memcpy destination must be a pointer", iid);
        if (!s || !s->is_pointer())
          error(in.loc, "memcpy source must be a pointer", iid);
        if (!l || !l->is_int() || l->width != 64)
          error(in.loc, "memcpy length must be i64", iid);
        break;
      }
      case Opcode::Assert:
        check_assert_names(f, r, types);
        break;
      case Opcode::Symbolic:
        if (!in.type || !(in.type->is_int() || in.type->is_pointer()))
          error(in.loc, "symbolic value must be integer or pointer", iid);
        break;
      }
    }
  }

  void check_assert_names(const Function &f, const InstrRef &r,
                          const std::map<std::string, TypeRef> &types) {
    std::function<void(const AssertExprRef &)> walk =
        [&](const AssertExprRef &e) {
          if (!e)
            return;
          if (e->kind == AssertExpr::Kind::NameRef) {
            const std::string &n = e->name;
            if (!n.empty() && n[0] == '%') {
              if (types.find(n.substr(1)) == types.end())
                error(r.instr->loc,
                      "assert references unknown local '" + n + "'",
                      instr_id(m, f, r.ordinal));
            } else if (!n.empty() && n[0] == '@') {
              if (!m.find_global(n.substr(1)))
                error(r.instr->loc,
                      "assert references unknown global '" + n + "'",
                      instr_id(m, f, r.ordinal));
            } else {
              if (types.find(n) != types.end())
                return;
              if (m.find_global(n))
                return;
              // NAME_BASE / NAME_SIZE region symbols
              for (const char *suffix : {"_BASE", "_SIZE"}) {
                size_t sl = strlen(suffix);
                if (n.size() > sl && n.substr(n.size() - sl) == suffix &&
                    m.find_region(n.substr(0, n.size() - sl)))
                  return;
              }
              error(r.instr->loc, "assert references unknown name '" + n + "'",
                    instr_id(m, f, r.ordinal));
            }
          }
          for (const auto &a : e->args)
            walk(a);
        };
    walk(r.instr->assertion);
  }
};

} // namespace

std::vector<Diagnostic> validate_module(const Module &m) {
  Validator v{m, {}};
  if (m.name.empty())
    v.error_at("module has no name");
  v.check_toplevel();
  for (const auto &f : m.functions)
    v.check_function(f);
  return v.diags;
}

} // namespace stase::mir
