//===-- explore.cpp - Deterministic DFS symbolic exploration --------------===//

#include "stase/cfg.hpp"
#include "stase/symexec.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>

namespace stase::sym {

using mir::Function;
using mir::Instruction;
using mir::Module;
using mir::Opcode;
using mir::Operand;
using mir::TypeRef;

uint64_t byte_offset(const Module &m, const TypeRef &type,
                     const std::vector<std::string> &path) {
  uint64_t off = 0;
  TypeRef cur = type;
  for (const auto &el : path) {
    if (!cur)
      return off;
    if (cur->is_struct()) {
      const mir::StructDef *sd = m.find_struct(cur->struct_name);
      if (!sd)
        return off;
      for (const auto &[fn, ft] : sd->fields) {
        if (fn == el) {
          cur = ft;
          break;
        }
        off += mir::type_byte_size(m, ft);
      }
    } else if (cur->is_array()) {
      uint64_t idx = std::stoull(el);
      off += idx * mir::type_byte_size(m, cur->elem);
      cur = cur->elem;
    }
  }
  return off;
}

namespace {

struct PathElem {
  std::string concrete; // field name or decimal index
  ExprRef sym;          // symbolic array index (64-bit)
  bool is_sym() const { return sym != nullptr; }
};

struct SymPtr {
  uint64_t inst = 0; // 0 = no object
  std::vector<PathElem> path;
  ExprRef addr; // numeric view, 64-bit
};

struct SymVal {
  bool is_ptr = false;
  ExprRef iv;
  SymPtr pv;
};

struct Object {
  uint64_t id = 0;
  std::string static_site;
  TypeRef type;
  uint64_t addr_base = 0;
  std::map<std::string, SymVal> cells; // concrete leaf path -> value
  bool freed = false;
  bool dead = false;
};

struct LoopInfo {
  std::map<std::string, std::pair<std::set<size_t>, uint64_t>> loops;
};

struct Frame {
  const Function *fn = nullptr;
  size_t block = 0;
  size_t idx = 0;
  std::string prev_block;
  std::map<std::string, SymVal> locals;
  std::vector<uint64_t> allocas;
  std::map<std::string, uint64_t> loop_counts;
};

struct State {
  std::vector<Frame> frames;
  std::map<uint64_t, Object> heap;
  std::map<std::string, uint64_t> global_inst;
  std::vector<ExprRef> pc;
  std::map<std::string, uint64_t> sym_counters;
  uint64_t next_instance = 1;
  uint64_t next_addr = 0x100000;
  std::string fork_id;
};

std::string cell_key(const std::vector<PathElem> &path) {
  std::string key;
  for (size_t i = 0; i < path.size(); ++i) {
    if (i)
      key += ".";
    key += path[i].concrete;
  }
  return key;
}

struct Engine {
  const Module &m;
  const Bounds &bounds;
  Solver solver;
  ExplorationResult res;
  const Instruction *target_assert = nullptr;
  std::string target_func;
  std::map<std::string, LoopInfo> loop_info;
  std::map<std::string, cfg::Cfg> cfgs;
  // guided pruning inside the entry function (see below)
  std::string prune_func;
  std::set<size_t> prune_relevant;
  size_t pruned_paths = 0;

  Engine(const Module &mod, const Bounds &b, const SolverOptions &so)
      : m(mod), bounds(b), solver(so) {}

  const cfg::Cfg &cfg_of(const Function &f) {
    auto it = cfgs.find(f.name);
    if (it == cfgs.end())
      it = cfgs.emplace(f.name, cfg::build_cfg(f)).first;
    return it->second;
  }

  const LoopInfo &loops_of(const Function &f) {
    auto it = loop_info.find(f.name);
    if (it != loop_info.end())
      return it->second;
    LoopInfo info;
    bool irr = false;
    auto loops = cfg::find_natural_loops(m, f, cfg_of(f), &irr);
    for (const auto &loop : loops) {
      uint64_t bound = loop.has_const_bound ? loop.const_bound
                                            : bounds.default_loop_bound;
      for (const auto &ann : m.loop_bounds)
        if (ann.func == f.name &&
            ann.header == f.blocks[loop.header].label)
          bound = ann.bound;
      info.loops[f.blocks[loop.header].label] = {loop.body, bound};
    }
    return loop_info.emplace(f.name, std::move(info)).first->second;
  }

  ExprRef pc_conj(const State &st) {
    ExprRef acc = e_bool(true);
    for (const auto &c : st.pc)
      acc = e_and(acc, c);
    return acc;
  }

  SolveResult check(const State &st, const ExprRef &extra) {
    ++res.solver_queries;
    return solver.solve(e_and(pc_conj(st), extra));
  }

  std::string fresh_symbol(State &st, const std::string &base, unsigned w) {
    uint64_t k = st.sym_counters[base]++;
    std::string name = k == 0 ? base : base + "#" + std::to_string(k);
    res.symbols[name] = w;
    return name;
  }

  uint64_t new_object(State &st, const std::string &site, TypeRef type) {
    Object obj;
    obj.id = st.next_instance++;
    obj.static_site = site;
    obj.type = std::move(type);
    obj.addr_base = st.next_addr;
    uint64_t sz = mir::type_byte_size(m, obj.type);
    st.next_addr += std::max<uint64_t>(sz + 16, 32);
    uint64_t id = obj.id;
    st.heap.emplace(id, std::move(obj));
    return id;
  }

  SymVal zero_value(const TypeRef &t) {
    SymVal v;
    if (t->is_pointer()) {
      v.is_ptr = true;
      v.pv.addr = e_const(0, 64);
    } else {
      v.iv = e_const(0, t->is_int() ? t->width : 64);
    }
    return v;
  }

  // Fresh symbolic value: integers get a symbol; pointers get a fresh
  // zero-filled object plus a symbolic address.
  SymVal symbolic_value(State &st, const TypeRef &t, const std::string &base,
                        const std::string &site, unsigned addr_width) {
    SymVal v;
    if (t->is_pointer()) {
      v.is_ptr = true;
      v.pv.inst = new_object(st, site.empty() ? "sym" : site, t->elem);
      unsigned w = addr_width ? addr_width : 64;
      v.pv.addr =
          e_zext(e_sym(fresh_symbol(st, base + ".addr", w), w), 64);
    } else {
      v.iv = e_sym(fresh_symbol(st, base, t->width), t->width);
    }
    return v;
  }

  //--- terminal path accounting ------------------------------------------

  void record_fault(State &st, const std::string &kind, const ExprRef &extra,
                    const Model &model) {
    PathRecord r;
    r.fork_id = st.fork_id + "!";
    r.constraints = st.pc;
    if (extra && !is_true(extra))
      r.constraints.push_back(extra);
    r.model = model;
    r.note = kind;
    res.faults.push_back(std::move(r));
  }

  //--- value plumbing ------------------------------------------------------

  SymVal operand_value(State &st, Frame &fr, const Operand &o,
                       const TypeRef &context) {
    switch (o.kind) {
    case Operand::Kind::Local: {
      auto it = fr.locals.find(o.name);
      if (it != fr.locals.end())
        return it->second;
      return zero_value(context ? context : mir::Type::make_int(64));
    }
    case Operand::Kind::Global: {
      SymVal v;
      v.is_ptr = true;
      uint64_t id = st.global_inst.at(o.name);
      v.pv.inst = id;
      v.pv.addr = e_const(st.heap.at(id).addr_base, 64);
      return v;
    }
    case Operand::Kind::Const:
    case Operand::Kind::Null: {
      SymVal v;
      if (context && context->is_pointer()) {
        v.is_ptr = true;
        v.pv.addr = e_const(o.kind == Operand::Kind::Const ? o.value : 0, 64);
      } else {
        unsigned w = context && context->is_int() ? context->width : 64;
        v.iv = e_const(o.kind == Operand::Kind::Const ? o.value : 0, w);
      }
      return v;
    }
    }
    return zero_value(mir::Type::make_int(64));
  }

  ExprRef value_as_expr(const SymVal &v) {
    if (v.is_ptr)
      return v.pv.addr;
    return v.iv;
  }

  // Type reached by a pointer's concrete path within its object.
  TypeRef type_at(const Object &obj, const std::vector<PathElem> &path) {
    TypeRef cur = obj.type;
    for (const auto &el : path) {
      if (!cur)
        return nullptr;
      if (cur->is_struct()) {
        const mir::StructDef *sd = m.find_struct(cur->struct_name);
        if (!sd)
          return nullptr;
        int idx = sd->field_index(el.concrete);
        if (idx < 0)
          return nullptr;
        cur = sd->fields[static_cast<size_t>(idx)].second;
      } else if (cur->is_array()) {
        cur = cur->elem;
      } else {
        return nullptr;
      }
    }
    return cur;
  }

  // Concrete-path byte offset as an expression (symbolic indices allowed).
  ExprRef offset_expr(const Object &obj, const std::vector<PathElem> &path) {
    ExprRef off = e_const(0, 64);
    TypeRef cur = obj.type;
    for (const auto &el : path) {
      if (!cur)
        break;
      if (cur->is_struct()) {
        const mir::StructDef *sd = m.find_struct(cur->struct_name);
        if (!sd)
          break;
        uint64_t field_off = 0;
        TypeRef next;
        for (const auto &[fn, ft] : sd->fields) {
          if (fn == el.concrete) {
            next = ft;
            break;
          }
          field_off += mir::type_byte_size(m, ft);
        }
        off = e_add(off, e_const(field_off, 64));
        cur = next;
      } else if (cur->is_array()) {
        uint64_t esz = mir::type_byte_size(m, cur->elem);
        if (el.is_sym())
          off = e_add(off, e_mul(el.sym, e_const(esz, 64)));
        else
          off = e_add(off, e_const(std::stoull(el.concrete) * esz, 64));
        cur = cur->elem;
      }
    }
    return off;
  }

  SymVal read_cell(State &st, const Object &obj, const std::string &key,
                   const TypeRef &t) {
    auto it = obj.cells.find(key);
    if (it != obj.cells.end())
      return it->second;
    (void)st;
    return zero_value(t);
  }

  //--- the step machine ----------------------------------------------------

  // Return value: false when the state terminated (ret from driver, fault,
  // abandoned). Forked states are pushed onto `stack`.
  bool step(State &st, std::vector<State> &stack) {
    Frame &fr = st.frames.back();
    const auto &block = fr.fn->blocks[fr.block];
    const Instruction &in = block.instrs[fr.idx];

    auto fault_here = [&](const std::string &kind, ExprRef extra,
                          Model model) {
      record_fault(st, kind, extra, std::move(model));
    };

    switch (in.op) {
    case Opcode::Alloca: {
      uint64_t id = new_object(
          st, in.site_tag.empty() ? mir::instr_id(m, *fr.fn, ordinal_of(fr))
                                  : in.site_tag,
          in.type);
      st.frames.back().allocas.push_back(id);
      SymVal v;
      v.is_ptr = true;
      v.pv.inst = id;
      v.pv.addr = e_const(st.heap.at(id).addr_base, 64);
      set_local(st, in.result, v);
      advance(st);
      return true;
    }
    case Opcode::Symbolic: {
      std::string base = in.sym_name.empty() ? in.result : in.sym_name;
      std::string site =
          in.site_tag.empty() ? mir::instr_id(m, *fr.fn, ordinal_of(fr))
                              : in.site_tag;
      SymVal v = symbolic_value(st, in.type, base, site, in.addr_width);
      set_local(st, in.result, v);
      advance(st);
      return true;
    }
    case Opcode::Load:
      return do_load(st, in, stack);
    case Opcode::Store:
      return do_store(st, in, stack);
    case Opcode::Gep:
      return do_gep(st, in, stack);
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul: {
      SymVal a = operand_value(st, fr, in.operands[0], in.type);
      SymVal b = operand_value(st, fr, in.operands[1], in.type);
      ExprRef r = in.op == Opcode::Add   ? e_add(a.iv, b.iv)
                  : in.op == Opcode::Sub ? e_sub(a.iv, b.iv)
                                         : e_mul(a.iv, b.iv);
      SymVal v;
      v.iv = r;
      set_local(st, in.result, v);
      advance(st);
      return true;
    }
    case Opcode::UDiv:
    case Opcode::SDiv: {
      SymVal a = operand_value(st, fr, in.operands[0], in.type);
      SymVal b = operand_value(st, fr, in.operands[1], in.type);
      ExprRef zero = e_const(0, in.type->width);
      ExprRef is_zero = e_eq(b.iv, zero);
      if (is_true(is_zero)) {
        fault_here("division by zero", nullptr, {});
        return false;
      }
      if (!is_false(is_zero)) {
        auto zr = check(st, is_zero);
        if (zr.status == SolveStatus::Sat) {
          State zstate = st;
          zstate.fork_id += "Z";
          zstate.pc.push_back(is_zero);
          record_fault(zstate, "division by zero", nullptr, zr.model);
        } else if (zr.status == SolveStatus::Unknown) {
          res.truncated = true;
          res.notes.push_back("solver unknown on divisor-zero check");
        }
        auto nz = check(st, e_not(is_zero));
        if (nz.status != SolveStatus::Sat) {
          if (nz.status == SolveStatus::Unknown) {
            res.truncated = true;
            res.notes.push_back("solver unknown on divisor-nonzero check");
          }
          return false; // no feasible nonzero continuation
        }
        st.pc.push_back(e_not(is_zero)); // nonzero-divisor path obligation
      }
      SymVal v;
      v.iv = in.op == Opcode::UDiv ? e_udiv(a.iv, b.iv) : e_sdiv(a.iv, b.iv);
      set_local(st, in.result, v);
      advance(st);
      return true;
    }
    case Opcode::ICmp: {
      SymVal a = operand_value(st, fr, in.operands[0], in.type);
      SymVal b = operand_value(st, fr, in.operands[1], in.type);
      ExprRef ea = value_as_expr(a), eb = value_as_expr(b);
      ExprRef r;
      switch (in.pred) {
      case mir::ICmpPred::Eq:
        r = e_eq(ea, eb);
        break;
      case mir::ICmpPred::Ne:
        r = e_ne(ea, eb);
        break;
      case mir::ICmpPred::Ult:
        r = e_ult(ea, eb);
        break;
      case mir::ICmpPred::Ule:
        r = e_ule(ea, eb);
        break;
      case mir::ICmpPred::Ugt:
        r = e_ugt(ea, eb);
        break;
      case mir::ICmpPred::Uge:
        r = e_uge(ea, eb);
        break;
      case mir::ICmpPred::Slt:
        r = e_slt(ea, eb);
        break;
      case mir::ICmpPred::Sle:
        r = e_sle(ea, eb);
        break;
      case mir::ICmpPred::Sgt:
        r = e_sgt(ea, eb);
        break;
      case mir::ICmpPred::Sge:
        r = e_sge(ea, eb);
        break;
      }
      SymVal v;
      v.iv = r;
      set_local(st, in.result, v);
      advance(st);
      return true;
    }
    case Opcode::Zext: {
      SymVal a = operand_value(st, fr, in.operands[0], in.type);
      SymVal v;
      v.iv = e_zext(a.iv, in.type2->width);
      set_local(st, in.result, v);
      advance(st);
      return true;
    }
    case Opcode::Trunc: {
      SymVal a = operand_value(st, fr, in.operands[0], in.type);
      SymVal v;
      v.iv = e_trunc(a.iv, in.type2->width);
      set_local(st, in.result, v);
      advance(st);
      return true;
    }
    case Opcode::Phi: {
      for (const auto &[val, lbl] : in.phi_in) {
        if (lbl == fr.prev_block) {
          SymVal v = operand_value(st, fr, val, in.type);
          set_local(st, in.result, v);
          advance(st);
          return true;
        }
      }
      fault_here("phi without matching predecessor", nullptr, {});
      return false;
    }
    case Opcode::Br:
      return do_branch(st, in.label_a);
    case Opcode::CondBr: {
      SymVal c = operand_value(st, fr, in.operands[0], mir::Type::make_int(1));
      ExprRef cond = c.iv;
      if (is_true(cond))
        return do_branch(st, in.label_a);
      if (is_false(cond))
        return do_branch(st, in.label_b);
      auto tr = check(st, cond);
      auto fa = check(st, e_not(cond));
      if (tr.status == SolveStatus::Unknown ||
          fa.status == SolveStatus::Unknown) {
        res.truncated = true;
        res.notes.push_back("solver unknown at branch in @" + fr.fn->name);
        return false;
      }
      bool t_ok = tr.status == SolveStatus::Sat && !prune_target(st, in.label_a);
      bool f_ok = fa.status == SolveStatus::Sat && !prune_target(st, in.label_b);
      if (t_ok && f_ok) {
        State other = st;
        other.fork_id += "F";
        other.pc.push_back(e_not(cond));
        bool alive = branch_into(other, in.label_b);
        if (alive)
          stack.push_back(std::move(other));
        st.fork_id += "T";
        st.pc.push_back(cond);
        return do_branch(st, in.label_a);
      }
      if (t_ok) {
        if (!is_true(cond))
          st.pc.push_back(cond);
        return do_branch(st, in.label_a);
      }
      if (f_ok) {
        if (!is_false(cond))
          st.pc.push_back(e_not(cond));
        return do_branch(st, in.label_b);
      }
      ++pruned_paths;
      return false;
    }
    case Opcode::Call:
      return do_call(st, in);
    case Opcode::Ret:
      return do_ret(st, in);
    case Opcode::Free: {
      SymVal p = operand_value(st, fr, in.operands[0], nullptr);
      if (!p.is_ptr || p.pv.inst == 0) {
        fault_here("free of non-object pointer", nullptr, {});
        return false;
      }
      Object &obj = st.heap.at(p.pv.inst);
      if (obj.freed) {
        fault_here("double free", nullptr, {});
        return false;
      }
      obj.freed = true;
      advance(st);
      return true;
    }
    case Opcode::Memcpy:
      return do_memcpy(st, in, stack);
    case Opcode::Assert:
      return do_assert(st, in);
    }
    fault_here("unhandled opcode", nullptr, {});
    return false;
  }

  size_t ordinal_of(const Frame &fr) {
    size_t ord = 0;
    for (size_t b = 0; b < fr.block; ++b)
      ord += fr.fn->blocks[b].instrs.size();
    return ord + fr.idx;
  }

  void set_local(State &st, const std::string &name, const SymVal &v) {
    if (!name.empty())
      st.frames.back().locals[name] = v;
  }

  void advance(State &st) { ++st.frames.back().idx; }

  // Guided pruning: inside the entry function (frame directly under the
  // driver) branches into blocks that can reach neither K's block nor any
  // call site are abandoned.
  bool prune_target(const State &st, const std::string &label) {
    if (prune_func.empty() || st.frames.size() != 2)
      return false;
    const Frame &fr = st.frames.back();
    if (fr.fn->name != prune_func)
      return false;
    const mir::BasicBlock *bb = fr.fn->find_block(label);
    if (!bb)
      return false;
    size_t bi = static_cast<size_t>(bb - fr.fn->blocks.data());
    return prune_relevant.count(bi) == 0;
  }

  bool do_branch(State &st, const std::string &label) {
    Frame &fr = st.frames.back();
    const mir::BasicBlock *bb = fr.fn->find_block(label);
    size_t target = static_cast<size_t>(bb - fr.fn->blocks.data());
    // loop bound accounting
    const LoopInfo &info = loops_of(*fr.fn);
    auto it = info.loops.find(label);
    if (it != info.loops.end()) {
      bool back_edge = it->second.first.count(fr.block) > 0;
      uint64_t &count = fr.loop_counts[label];
      if (back_edge) {
        if (++count > it->second.second) {
          ++res.bound_abandoned;
          return false; // abandoned beyond the bound
        }
      } else {
        count = 0;
      }
    }
    fr.prev_block = fr.fn->blocks[fr.block].label;
    fr.block = target;
    fr.idx = 0;
    // phis read the predecessor environment in parallel
    std::vector<std::pair<std::string, SymVal>> phi_vals;
    for (const auto &pin : bb->instrs) {
      if (pin.op != Opcode::Phi)
        break;
      for (const auto &[val, lbl] : pin.phi_in)
        if (lbl == fr.prev_block)
          phi_vals.push_back({pin.result, operand_value(st, fr, val, pin.type)});
    }
    for (auto &[nm, v] : phi_vals)
      fr.locals[nm] = v;
    fr.idx = phi_vals.size();
    return true;
  }

  bool branch_into(State &st, const std::string &label) {
    return do_branch(st, label);
  }

  bool do_call(State &st, const Instruction &in) {
    Frame &fr = st.frames.back();
    const Function *callee = m.find_function(in.callee);
    bool treat_as_stub = !callee || callee->is_external ||
                         st.frames.size() >= bounds.call_depth;
    if (treat_as_stub) {
      TypeRef rt = callee ? callee->ret_type : mir::Type::make_int(64);
      if (!in.result.empty() && rt && !rt->is_void()) {
        SymVal v = symbolic_value(st, rt, in.callee + ".ret",
                                  "stub:" + in.callee, 0);
        set_local(st, in.result, v);
      }
      advance(st);
      return true;
    }
    Frame nf;
    nf.fn = callee;
    for (size_t i = 0; i < in.operands.size(); ++i) {
      SymVal v = operand_value(st, fr, in.operands[i],
                               callee->params[i].second);
      nf.locals[callee->params[i].first] = v;
    }
    st.frames.push_back(std::move(nf));
    return true;
  }

  bool do_ret(State &st, const Instruction &in) {
    SymVal rv;
    bool has_rv = !in.operands.empty();
    if (has_rv)
      rv = operand_value(st, st.frames.back(), in.operands[0],
                         st.frames.back().fn->ret_type);
    // release frame-local allocations
    for (uint64_t id : st.frames.back().allocas)
      st.heap.at(id).dead = true;
    st.frames.pop_back();
    if (st.frames.empty()) {
      ++res.completed_paths;
      return false;
    }
    Frame &caller = st.frames.back();
    const Instruction &call =
        caller.fn->blocks[caller.block].instrs[caller.idx];
    if (!call.result.empty() && has_rv)
      set_local(st, call.result, rv);
    advance(st);
    return true;
  }

  // Expands a pointer with at most one symbolic array index into candidate
  // (cell key, guard) pairs. Returns false on unmodeled shapes.
  bool expand_cells(State &st, const SymPtr &ptr,
                    std::vector<std::pair<std::string, ExprRef>> &out) {
    const Object &obj = st.heap.at(ptr.inst);
    std::vector<std::pair<std::vector<PathElem>, ExprRef>> partial;
    partial.push_back({{}, e_bool(true)});
    TypeRef cur = obj.type;
    for (const auto &el : ptr.path) {
      std::vector<std::pair<std::vector<PathElem>, ExprRef>> next;
      if (!el.is_sym()) {
        for (auto &[p, g] : partial) {
          auto np = p;
          np.push_back(el);
          next.push_back({std::move(np), g});
        }
        cur = cur && cur->is_struct()
                  ? [&]() -> TypeRef {
          const mir::StructDef *sd = m.find_struct(cur->struct_name);
          int idx = sd ? sd->field_index(el.concrete) : -1;
          return idx < 0 ? nullptr
                         : sd->fields[static_cast<size_t>(idx)].second;
        }()
                  : (cur && cur->is_array() ? cur->elem : nullptr);
      } else {
        if (!cur || !cur->is_array())
          return false;
        uint64_t n = cur->length;
        if (n > 256)
          return false; // expansion ceiling
        for (auto &[p, g] : partial) {
          for (uint64_t i = 0; i < n; ++i) {
            auto np = p;
            PathElem pe;
            pe.concrete = std::to_string(i);
            np.push_back(std::move(pe));
            ExprRef guard = e_and(g, e_eq(el.sym, e_const(i, 64)));
            if (is_false(guard))
              continue;
            next.push_back({std::move(np), std::move(guard)});
          }
        }
        cur = cur->elem;
      }
      partial = std::move(next);
    }
    for (auto &[p, g] : partial)
      out.push_back({cell_key(p), g});
    return true;
  }

  bool check_pointer(State &st, const SymVal &p, const char *what) {
    if (!p.is_ptr || p.pv.inst == 0) {
      record_fault(st, std::string(what) + ": null or unmodeled pointer",
                   nullptr, {});
      return false;
    }
    const Object &obj = st.heap.at(p.pv.inst);
    if (obj.dead) {
      record_fault(st, std::string(what) + ": dangling stack object", nullptr,
                   {});
      return false;
    }
    if (obj.freed) {
      record_fault(st, std::string(what) + ": use after free", nullptr, {});
      return false;
    }
    return true;
  }

  bool do_load(State &st, const Instruction &in, std::vector<State> &stack) {
    (void)stack;
    Frame &fr = st.frames.back();
    SymVal p = operand_value(st, fr, in.operands[0], nullptr);
    if (!check_pointer(st, p, "load"))
      return false;
    std::vector<std::pair<std::string, ExprRef>> cells;
    if (!expand_cells(st, p.pv, cells) || cells.empty()) {
      record_fault(st, "load: unmodeled access", nullptr, {});
      return false;
    }
    const Object &obj = st.heap.at(p.pv.inst);
    if (cells.size() == 1 && is_true(cells[0].second)) {
      SymVal v = read_cell(st, obj, cells[0].first, in.type);
      set_local(st, in.result, v);
      advance(st);
      return true;
    }
    // symbolic index: ite chain over integer cells
    if (!in.type->is_int()) {
      record_fault(st, "load: symbolic index over pointer cells", nullptr, {});
      return false;
    }
    ExprRef acc = e_const(0, in.type->width);
    for (auto it = cells.rbegin(); it != cells.rend(); ++it) {
      SymVal v = read_cell(st, obj, it->first, in.type);
      acc = e_ite(it->second, v.iv, acc);
    }
    SymVal v;
    v.iv = acc;
    set_local(st, in.result, v);
    advance(st);
    return true;
  }

  bool do_store(State &st, const Instruction &in, std::vector<State> &stack) {
    (void)stack;
    Frame &fr = st.frames.back();
    SymVal val = operand_value(st, fr, in.operands[0], in.type);
    SymVal p = operand_value(st, fr, in.operands[1], nullptr);
    if (!check_pointer(st, p, "store"))
      return false;
    std::vector<std::pair<std::string, ExprRef>> cells;
    if (!expand_cells(st, p.pv, cells) || cells.empty()) {
      record_fault(st, "store: unmodeled access", nullptr, {});
      return false;
    }
    Object &obj = st.heap.at(p.pv.inst);
    if (cells.size() == 1 && is_true(cells[0].second)) {
      obj.cells[cells[0].first] = val;
      advance(st);
      return true;
    }
    if (!in.type->is_int()) {
      record_fault(st, "store: symbolic index over pointer cells", nullptr, {});
      return false;
    }
    for (const auto &[key, guard] : cells) {
      SymVal old = read_cell(st, obj, key, in.type);
      SymVal nv;
      nv.iv = e_ite(guard, val.iv, old.iv);
      obj.cells[key] = nv;
    }
    advance(st);
    return true;
  }

  bool do_gep(State &st, const Instruction &in, std::vector<State> &stack) {
    Frame &fr = st.frames.back();
    SymVal base = operand_value(st, fr, in.operands[0], nullptr);
    if (!base.is_ptr) {
      record_fault(st, "gep on non-pointer", nullptr, {});
      return false;
    }
    SymPtr np = base.pv;
    TypeRef cur =
        np.inst ? type_at(st.heap.at(np.inst), np.path) : in.type;
    for (const auto &sel : in.gep_path) {
      if (sel.kind == mir::GepSelector::Kind::Field) {
        PathElem el;
        el.concrete = sel.field;
        np.path.push_back(std::move(el));
        if (cur && cur->is_struct()) {
          const mir::StructDef *sd = m.find_struct(cur->struct_name);
          int idx = sd ? sd->field_index(sel.field) : -1;
          cur = idx < 0 ? nullptr
                        : sd->fields[static_cast<size_t>(idx)].second;
        }
      } else {
        SymVal idx = operand_value(st, fr, sel.index, mir::Type::make_int(64));
        ExprRef ie = e_zext(idx.iv, 64);
        uint64_t n = cur && cur->is_array() ? cur->length : 0;
        if (is_const(ie)) {
          if (n && ie->value >= n) {
            record_fault(st, "gep index out of bounds", nullptr, {});
            return false;
          }
          PathElem el;
          el.concrete = std::to_string(ie->value);
          np.path.push_back(std::move(el));
        } else {
          // in-range obligation; the out-of-range side is a fault fork
          ExprRef in_range = e_ult(ie, e_const(n, 64));
          auto oor = check(st, e_not(in_range));
          if (oor.status == SolveStatus::Sat) {
            State bad = st;
            bad.fork_id += "R";
            bad.pc.push_back(e_not(in_range));
            record_fault(bad, "gep index out of bounds", nullptr, oor.model);
            (void)stack;
          } else if (oor.status == SolveStatus::Unknown) {
            res.truncated = true;
            res.notes.push_back("solver unknown on gep range check");
          }
          auto okr = check(st, in_range);
          if (okr.status != SolveStatus::Sat) {
            if (okr.status == SolveStatus::Unknown) {
              res.truncated = true;
              res.notes.push_back("solver unknown on gep range check");
            }
            return false;
          }
          st.pc.push_back(in_range);
          PathElem el;
          el.sym = ie;
          np.path.push_back(std::move(el));
        }
        cur = cur && cur->is_array() ? cur->elem : nullptr;
      }
    }
    // numeric view: extend the incoming pointer's address by the path delta
    // so symbolic base addresses survive field selection
    if (np.inst) {
      const Object &obj = st.heap.at(np.inst);
      ExprRef full = offset_expr(obj, np.path);
      ExprRef prefix = offset_expr(obj, base.pv.path);
      np.addr = e_add(base.pv.addr, e_sub(full, prefix));
    }
    SymVal v;
    v.is_ptr = true;
    v.pv = std::move(np);
    set_local(st, in.result, v);
    advance(st);
    return true;
  }

  bool do_memcpy(State &st, const Instruction &in, std::vector<State> &stack) {
    (void)stack;
    Frame &fr = st.frames.back();
    SymVal dst = operand_value(st, fr, in.operands[0], nullptr);
    SymVal src = operand_value(st, fr, in.operands[1], nullptr);
    SymVal len = operand_value(st, fr, in.operands[2], mir::Type::make_int(64));
    if (!check_pointer(st, dst, "memcpy dst") ||
        !check_pointer(st, src, "memcpy src"))
      return false;
    for (const auto &el : dst.pv.path)
      if (el.is_sym()) {
        record_fault(st, "memcpy: symbolic destination path", nullptr, {});
        return false;
      }
    for (const auto &el : src.pv.path)
      if (el.is_sym()) {
        record_fault(st, "memcpy: symbolic source path", nullptr, {});
        return false;
      }
    Object &dobj = st.heap.at(dst.pv.inst);
    Object &sobj = st.heap.at(src.pv.inst);
    std::vector<std::string> dpath, spath;
    for (const auto &el : dst.pv.path)
      dpath.push_back(el.concrete);
    for (const auto &el : src.pv.path)
      spath.push_back(el.concrete);
    uint64_t doff = byte_offset(m, dobj.type, dpath);
    uint64_t soff = byte_offset(m, sobj.type, spath);
    uint64_t dsize = mir::type_byte_size(m, dobj.type);
    uint64_t ssize = mir::type_byte_size(m, sobj.type);
    uint64_t avail = std::min(dsize - doff, ssize - soff);
    ExprRef le = e_zext(len.iv, 64);
    ExprRef over = e_ugt(le, e_const(avail, 64));
    if (is_true(over)) {
      record_fault(st, "memcpy out of bounds", nullptr, {});
      return false;
    }
    if (!is_false(over)) {
      auto ov = check(st, over);
      if (ov.status == SolveStatus::Sat) {
        State bad = st;
        bad.fork_id += "M";
        bad.pc.push_back(over);
        record_fault(bad, "memcpy out of bounds", nullptr, ov.model);
      }
      auto fit = check(st, e_not(over));
      if (fit.status != SolveStatus::Sat) {
        if (fit.status == SolveStatus::Unknown) {
          res.truncated = true;
          res.notes.push_back("solver unknown on memcpy bound");
        }
        return false;
      }
      st.pc.push_back(e_not(over));
    }
    // enumerate destination leaves from doff; copy cells guarded by len
    std::vector<std::tuple<std::string, uint64_t, uint64_t>> dleaves, sleaves;
    collect_leaves(dobj.type, "", 0, dleaves);
    collect_leaves(sobj.type, "", 0, sleaves);
    for (const auto &[dkey, off, size] : dleaves) {
      if (off < doff)
        continue;
      uint64_t rel = off - doff;
      // find the matching source leaf
      const std::string *skey = nullptr;
      for (const auto &[k, so, ss] : sleaves)
        if (so == soff + rel && ss == size)
          skey = &k;
      ExprRef copied = e_uge(le, e_const(rel + size, 64));
      ExprRef partial =
          e_and(e_ugt(le, e_const(rel, 64)), e_not(copied));
      if (!is_false(partial)) {
        auto pr = check(st, partial);
        if (pr.status == SolveStatus::Sat) {
          State bad = st;
          bad.fork_id += "P";
          bad.pc.push_back(partial);
          record_fault(bad, "memcpy splits a cell", nullptr, pr.model);
          st.pc.push_back(e_not(partial));
        }
      }
      if (is_false(copied))
        continue;
      if (!skey) {
        auto cr = check(st, copied);
        if (cr.status == SolveStatus::Sat) {
          record_fault(st, "memcpy: incompatible layouts", nullptr, cr.model);
          return false;
        }
        continue;
      }
      TypeRef cell_type = leaf_type(dobj.type, dkey);
      SymVal sval = read_cell(st, sobj, *skey, cell_type);
      SymVal dval = read_cell(st, dobj, dkey, cell_type);
      if (is_true(copied)) {
        dobj.cells[dkey] = sval;
      } else if (!cell_type->is_pointer()) {
        SymVal nv;
        nv.iv = e_ite(copied, sval.iv, dval.iv);
        dobj.cells[dkey] = nv;
      } else {
        record_fault(st, "memcpy: conditional pointer copy", nullptr, {});
        return false;
      }
    }
    advance(st);
    return true;
  }

  void collect_leaves(const TypeRef &t, const std::string &prefix, uint64_t off,
                      std::vector<std::tuple<std::string, uint64_t, uint64_t>> &out) {
    if (!t)
      return;
    if (t->is_int() || t->is_pointer()) {
      out.push_back({prefix, off, mir::type_byte_size(m, t)});
      return;
    }
    if (t->is_array()) {
      uint64_t esz = mir::type_byte_size(m, t->elem);
      for (uint64_t i = 0; i < t->length; ++i)
        collect_leaves(t->elem,
                       prefix.empty() ? std::to_string(i)
                                      : prefix + "." + std::to_string(i),
                       off + i * esz, out);
      return;
    }
    if (t->is_struct()) {
      const mir::StructDef *sd = m.find_struct(t->struct_name);
      if (!sd)
        return;
      uint64_t field_off = 0;
      for (const auto &[fn, ft] : sd->fields) {
        collect_leaves(ft, prefix.empty() ? fn : prefix + "." + fn,
                       off + field_off, out);
        field_off += mir::type_byte_size(m, ft);
      }
    }
  }

  TypeRef leaf_type(const TypeRef &root, const std::string &key) {
    TypeRef cur = root;
    std::istringstream is(key);
    std::string el;
    while (std::getline(is, el, '.')) {
      if (!cur)
        return nullptr;
      if (cur->is_struct()) {
        const mir::StructDef *sd = m.find_struct(cur->struct_name);
        int idx = sd ? sd->field_index(el) : -1;
        cur = idx < 0 ? nullptr : sd->fields[static_cast<size_t>(idx)].second;
      } else if (cur->is_array()) {
        cur = cur->elem;
      }
    }
    return cur;
  }

  //--- assertion evaluation -------------------------------------------------

  struct AVal {
    ExprRef value; // zero-extended to 64 bits
    unsigned natural = 64;
    bool is_bool = false;
    ExprRef bval;
    bool ok = true;
  };

  ExprRef sext64(const ExprRef &z, unsigned natural) {
    if (natural >= 64)
      return z;
    ExprRef signbit = e_uge(z, e_const(UINT64_C(1) << (natural - 1), 64));
    return e_sub(z, e_ite(signbit, e_const(UINT64_C(1) << natural, 64),
                          e_const(0, 64)));
  }

  AVal eval_aexpr(State &st, Frame &fr, const mir::AssertExprRef &e) {
    using K = mir::AssertExpr::Kind;
    AVal out;
    auto bad = [&]() {
      out.ok = false;
      return out;
    };
    switch (e->kind) {
    case K::True:
    case K::False: {
      out.is_bool = true;
      out.bval = e_bool(e->kind == K::True);
      return out;
    }
    case K::Const:
      out.value = e_const(e->value, 64);
      out.natural = 64;
      return out;
    case K::NameRef: {
      std::string n = e->name;
      SymVal v;
      bool found = false;
      if (!n.empty() && n[0] == '%') {
        auto it = fr.locals.find(n.substr(1));
        if (it == fr.locals.end())
          return bad();
        v = it->second;
        found = true;
      } else if (!n.empty() && n[0] == '@') {
        std::string g = n.substr(1);
        auto it = st.global_inst.find(g);
        if (it == st.global_inst.end())
          return bad();
        const mir::GlobalDecl *gd = m.find_global(g);
        v = read_cell(st, st.heap.at(it->second), "", gd->type);
        found = true;
      } else {
        auto it = fr.locals.find(n);
        if (it != fr.locals.end()) {
          v = it->second;
          found = true;
        } else if (const mir::GlobalDecl *gd = m.find_global(n)) {
          v = read_cell(st, st.heap.at(st.global_inst.at(n)), "", gd->type);
          found = true;
        } else {
          for (const char *suffix : {"_BASE", "_SIZE"}) {
            size_t sl = strlen(suffix);
            if (n.size() > sl && n.substr(n.size() - sl) == suffix) {
              const mir::RegionDecl *r =
                  m.find_region(n.substr(0, n.size() - sl));
              if (r) {
                bool base = suffix[1] == 'B';
                out.value = region_value(st, *r, base);
                out.natural = 64;
                return out;
              }
            }
          }
        }
      }
      if (!found)
        return bad();
      if (v.is_ptr) {
        out.value = v.pv.addr;
        out.natural = 64;
      } else {
        out.natural = v.iv->width;
        out.value = e_zext(v.iv, 64);
      }
      return out;
    }
    case K::And:
    case K::Or: {
      AVal a = eval_aexpr(st, fr, e->args[0]);
      AVal b = eval_aexpr(st, fr, e->args[1]);
      if (!a.ok || !b.ok || !a.is_bool || !b.is_bool)
        return bad();
      out.is_bool = true;
      out.bval = e->kind == K::And ? e_and(a.bval, b.bval)
                                   : e_or(a.bval, b.bval);
      return out;
    }
    case K::Not: {
      AVal a = eval_aexpr(st, fr, e->args[0]);
      if (!a.ok || !a.is_bool)
        return bad();
      out.is_bool = true;
      out.bval = e_not(a.bval);
      return out;
    }
    case K::Cmp: {
      AVal a = eval_aexpr(st, fr, e->args[0]);
      AVal b = eval_aexpr(st, fr, e->args[1]);
      if (!a.ok || !b.ok || a.is_bool || b.is_bool)
        return bad();
      out.is_bool = true;
      bool is_signed = e->pred == mir::ICmpPred::Slt ||
                       e->pred == mir::ICmpPred::Sle ||
                       e->pred == mir::ICmpPred::Sgt ||
                       e->pred == mir::ICmpPred::Sge;
      ExprRef x = a.value, y = b.value;
      if (is_signed) {
        x = sext64(x, a.natural);
        y = sext64(y, b.natural);
      }
      switch (e->pred) {
      case mir::ICmpPred::Eq:
        out.bval = e_eq(x, y);
        break;
      case mir::ICmpPred::Ne:
        out.bval = e_ne(x, y);
        break;
      case mir::ICmpPred::Ult:
        out.bval = e_ult(x, y);
        break;
      case mir::ICmpPred::Ule:
        out.bval = e_ule(x, y);
        break;
      case mir::ICmpPred::Ugt:
        out.bval = e_ugt(x, y);
        break;
      case mir::ICmpPred::Uge:
        out.bval = e_uge(x, y);
        break;
      case mir::ICmpPred::Slt:
        out.bval = e_slt(x, y);
        break;
      case mir::ICmpPred::Sle:
        out.bval = e_sle(x, y);
        break;
      case mir::ICmpPred::Sgt:
        out.bval = e_sgt(x, y);
        break;
      case mir::ICmpPred::Sge:
        out.bval = e_sge(x, y);
        break;
      }
      return out;
    }
    case K::Add:
    case K::Sub:
    case K::Mul:
    case K::UDiv: {
      AVal a = eval_aexpr(st, fr, e->args[0]);
      AVal b = eval_aexpr(st, fr, e->args[1]);
      if (!a.ok || !b.ok || a.is_bool || b.is_bool)
        return bad();
      switch (e->kind) {
      case K::Add:
        out.value = e_add(a.value, b.value);
        break;
      case K::Sub:
        out.value = e_sub(a.value, b.value);
        break;
      case K::Mul:
        out.value = e_mul(a.value, b.value);
        break;
      default:
        out.value = e_udiv(a.value, b.value);
        break;
      }
      out.natural = 64;
      return out;
    }
    case K::SizeofObj:
    case K::OffsetOf:
    case K::Freed: {
      // operand must resolve to a pointer value
      const mir::AssertExprRef &arg = e->args[0];
      if (arg->kind != K::NameRef)
        return bad();
      std::string n = arg->name;
      if (!n.empty() && n[0] == '%')
        n = n.substr(1);
      auto it = fr.locals.find(n);
      if (it == fr.locals.end() || !it->second.is_ptr ||
          it->second.pv.inst == 0)
        return bad();
      const Object &obj = st.heap.at(it->second.pv.inst);
      if (e->kind == K::Freed) {
        out.is_bool = true;
        out.bval = e_bool(obj.freed);
        return out;
      }
      if (e->kind == K::SizeofObj) {
        out.value = e_const(mir::type_byte_size(m, obj.type), 64);
        out.natural = 64;
        return out;
      }
      out.value = offset_expr(obj, it->second.pv.path);
      out.natural = 64;
      return out;
    }
    }
    return bad();
  }

  std::map<std::string, std::pair<ExprRef, ExprRef>> region_syms_cache;

  ExprRef region_value(State &st, const mir::RegionDecl &r, bool base) {
    (void)st;
    auto it = region_syms_cache.find(r.name);
    if (it != region_syms_cache.end())
      return base ? it->second.first : it->second.second;
    return base ? e_const(r.base, 64) : e_const(r.size, 64);
  }

  bool do_assert(State &st, const Instruction &in) {
    Frame &fr = st.frames.back();
    AVal cond = eval_aexpr(st, fr, in.assertion);
    if (!cond.ok || !cond.is_bool) {
      record_fault(st, "assertion refers to unresolved values", nullptr, {});
      return false;
    }
    bool is_target = in.target_assert;
    ExprRef a = cond.bval;
    ExprRef nota = e_not(a);
    // violating side
    auto vr = check(st, nota);
    if (vr.status == SolveStatus::Sat) {
      PathRecord rec;
      rec.fork_id = st.fork_id + (is_target ? "V" : "!");
      rec.constraints = st.pc;
      if (!is_true(nota))
        rec.constraints.push_back(nota);
      rec.model = vr.model;
      if (is_target)
        res.violating.push_back(std::move(rec));
      else {
        rec.note = "assertion failed";
        res.faults.push_back(std::move(rec));
      }
    } else if (vr.status == SolveStatus::Unknown) {
      res.truncated = true;
      res.notes.push_back("solver unknown at assertion");
    }
    // holding side continues
    auto hr = check(st, a);
    if (hr.status != SolveStatus::Sat) {
      if (hr.status == SolveStatus::Unknown) {
        res.truncated = true;
        res.notes.push_back("solver unknown at assertion (hold side)");
      }
      return false;
    }
    if (is_target) {
      PathRecord rec;
      rec.fork_id = st.fork_id + "C";
      rec.constraints = st.pc;
      if (!is_true(a))
        rec.constraints.push_back(a);
      rec.model = hr.model;
      res.covered.push_back(std::move(rec));
    }
    if (!is_true(a))
      st.pc.push_back(a);
    advance(st);
    return true;
  }

  //--- initialization and main loop ----------------------------------------

  void init_globals(State &st) {
    for (const auto &g : m.globals) {
      uint64_t id = new_object(st, "@" + g.name, g.type);
      st.global_inst[g.name] = id;
      Object &obj = st.heap.at(id);
      if (g.init == mir::GlobalDecl::Init::Const) {
        SymVal v;
        if (g.type->is_pointer()) {
          v.is_ptr = true;
          v.pv.addr = e_const(g.init_value, 64);
        } else {
          v.iv = e_const(g.init_value, g.type->width);
        }
        obj.cells[""] = v;
      } else if (g.init == mir::GlobalDecl::Init::Symbolic) {
        std::vector<std::tuple<std::string, uint64_t, uint64_t>> leaves;
        collect_leaves(g.type, "", 0, leaves);
        for (const auto &[key, off, size] : leaves) {
          (void)off;
          TypeRef lt = leaf_type(g.type, key);
          if (!lt || !lt->is_int())
            continue;
          std::string base = key.empty() ? g.name : g.name + "." + key;
          SymVal v;
          v.iv = e_sym(fresh_symbol(st, base, lt->width), lt->width);
          obj.cells[key] = v;
          (void)size;
        }
      }
    }
    // regions: symbolic base/size become named symbols with a no-wrap
    // constraint
    for (const auto &r : m.regions) {
      ExprRef base, size;
      if (r.base_symbolic) {
        base = e_sym(r.name + "_BASE", 64);
        res.symbols[r.name + "_BASE"] = 64;
      } else {
        base = e_const(r.base, 64);
      }
      if (r.size_symbolic) {
        size = e_sym(r.name + "_SIZE", 64);
        res.symbols[r.name + "_SIZE"] = 64;
      } else {
        size = e_const(r.size, 64);
      }
      region_syms_cache[r.name] = {base, size};
      if (r.base_symbolic || r.size_symbolic)
        st.pc.push_back(e_uge(e_add(base, size), base)); // no wrap
    }
  }

  void setup_pruning(const std::string &driver) {
    if (!target_assert)
      return;
    // entry function = the single function the driver calls
    const Function *drv = m.find_function(driver);
    if (!drv)
      return;
    std::string entry;
    for (const auto &r : mir::all_instrs(*drv))
      if (r.instr->op == Opcode::Call)
        entry = r.instr->callee;
    if (entry != target_func)
      return; // prune only when K sits in the entry function itself
    const Function *ef = m.find_function(entry);
    if (!ef)
      return;
    const auto &g = cfg_of(*ef);
    // K's block index
    size_t kblock = 0;
    bool found = false;
    for (const auto &r : mir::all_instrs(*ef))
      if (r.instr == target_assert) {
        kblock = r.block_index;
        found = true;
      }
    if (!found)
      return;
    // blocks that reach K's block
    std::set<size_t> reach{kblock};
    std::vector<size_t> work{kblock};
    while (!work.empty()) {
      size_t b = work.back();
      work.pop_back();
      for (size_t p : g.preds[b])
        if (!reach.count(p)) {
          reach.insert(p);
          work.push_back(p);
        }
    }
    // blocks that reach any call site (conservative: any call could recurse
    // back toward K)
    std::set<size_t> call_blocks;
    for (size_t bi = 0; bi < ef->blocks.size(); ++bi)
      for (const auto &in : ef->blocks[bi].instrs)
        if (in.op == Opcode::Call)
          call_blocks.insert(bi);
    std::set<size_t> reach_call = call_blocks;
    std::vector<size_t> work2(call_blocks.begin(), call_blocks.end());
    while (!work2.empty()) {
      size_t b = work2.back();
      work2.pop_back();
      for (size_t p : g.preds[b])
        if (!reach_call.count(p)) {
          reach_call.insert(p);
          work2.push_back(p);
        }
    }
    prune_func = entry;
    prune_relevant = reach;
    prune_relevant.insert(reach_call.begin(), reach_call.end());
  }

  void run(const std::string &driver) {
    const Function *drv = m.find_function(driver);
    if (!drv) {
      res.error = "driver function '@" + driver + "' not found";
      return;
    }
    // locate the target assertion
    for (const auto &f : m.functions)
      for (const auto &r : mir::all_instrs(f))
        if (r.instr->op == Opcode::Assert && r.instr->target_assert) {
          if (target_assert) {
            res.error = "more than one target assertion";
            return;
          }
          target_assert = r.instr;
          target_func = f.name;
        }
    setup_pruning(driver);

    State init;
    init_globals(init);
    Frame f0;
    f0.fn = drv;
    init.frames.push_back(std::move(f0));

    std::vector<State> stack;
    stack.push_back(std::move(init));
    uint64_t steps = 0;
    while (!stack.empty()) {
      if (res.states >= bounds.max_states) {
        res.truncated = true;
        res.notes.push_back("state ceiling reached");
        break;
      }
      State st = std::move(stack.back());
      stack.pop_back();
      ++res.states;
      bool alive = true;
      while (alive) {
        if (++steps > bounds.max_steps) {
          res.truncated = true;
          res.notes.push_back("step ceiling reached");
          return;
        }
        alive = step(st, stack);
      }
    }
  }
};

} // namespace

ExplorationResult explore(const Module &theta, const std::string &driver,
                          const Bounds &bounds, const SolverOptions &solver) {
  Engine eng(theta, bounds, solver);
  eng.run(driver);
  eng.res.solver_queries = eng.solver.queries();
  if (eng.solver.unknowns() > 0)
    eng.res.truncated = true;
  return std::move(eng.res);
}

SymexecStatus classify(const ExplorationResult &result) {
  if (!result.violating.empty())
    return SymexecStatus::Confirmed;
  if (!result.covered.empty())
    return SymexecStatus::Dismissed;
  if (result.truncated || result.bound_abandoned > 0)
    return SymexecStatus::Unconfirmed;
  return SymexecStatus::Dismissed;
}

const char *symexec_status_name(SymexecStatus s) {
  switch (s) {
  case SymexecStatus::Confirmed:
    return "confirmed";
  case SymexecStatus::Dismissed:
    return "dismissed";
  case SymexecStatus::Unconfirmed:
    return "unconfirmed(budget)";
  }
  return "?";
}

} // namespace stase::sym
