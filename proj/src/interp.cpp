//===-- interp.cpp - Concrete big-step interpreter (validation oracle) ----===//
//
// Deliberately independent of the symbolic engine: concrete values only,
// straight-line big-step execution under the same loop/call-depth bounds.
// Symbolic intrinsics draw their values from the supplied input map using
// the same occurrence-counted naming scheme the explorer uses.
//
//===----------------------------------------------------------------------===//

#include "stase/cfg.hpp"
#include "stase/symexec.hpp"

#include <cstring>
#include <functional>
#include <sstream>

namespace stase::sym {

using mir::Function;
using mir::Instruction;
using mir::Module;
using mir::Opcode;
using mir::Operand;
using mir::TypeRef;

namespace {

struct CPtr {
  uint64_t inst = 0;
  std::vector<std::string> path;
  uint64_t addr = 0;
};

struct CVal {
  bool is_ptr = false;
  uint64_t i = 0;    // masked to width
  unsigned width = 64;
  CPtr p;
};

struct CObject {
  uint64_t id = 0;
  std::string static_site;
  TypeRef type;
  uint64_t addr_base = 0;
  std::map<std::string, CVal> cells;
  bool freed = false;
  bool dead = false;
};

struct CFrame {
  const Function *fn = nullptr;
  size_t block = 0;
  size_t idx = 0;
  std::string prev_block;
  std::map<std::string, CVal> locals;
  std::vector<uint64_t> allocas;
  std::map<std::string, uint64_t> loop_counts;
};

struct Interp {
  const Module &m;
  const InterpOptions &opts;
  const Model &inputs;
  ConcreteResult out;

  std::map<uint64_t, CObject> heap;
  std::map<std::string, uint64_t> global_inst;
  std::map<std::string, std::pair<uint64_t, uint64_t>> regions;
  std::vector<CFrame> frames;
  std::map<std::string, uint64_t> sym_counters;
  uint64_t next_instance = 1;
  uint64_t next_addr = 0x100000;
  uint64_t steps = 0;
  bool target_seen_held = false;
  bool done = false;

  Interp(const Module &mod, const InterpOptions &o, const Model &in)
      : m(mod), opts(o), inputs(in) {}

  void finish(ConcreteResult::Verdict v, const std::string &detail = "") {
    if (done)
      return;
    out.verdict = v;
    out.detail = detail;
    done = true;
  }

  uint64_t consume_symbol(const std::string &base, unsigned width) {
    uint64_t k = sym_counters[base]++;
    std::string name = k == 0 ? base : base + "#" + std::to_string(k);
    uint64_t v = 0;
    auto it = inputs.find(name);
    if (it != inputs.end())
      v = it->second;
    v = mask_width(v, width);
    out.consumed[name] = v;
    return v;
  }

  uint64_t new_object(const std::string &site, TypeRef type) {
    CObject obj;
    obj.id = next_instance++;
    obj.static_site = site;
    obj.type = std::move(type);
    obj.addr_base = next_addr;
    uint64_t sz = mir::type_byte_size(m, obj.type);
    next_addr += std::max<uint64_t>(sz + 16, 32);
    uint64_t id = obj.id;
    heap.emplace(id, std::move(obj));
    return id;
  }

  CVal zero_of(const TypeRef &t) {
    CVal v;
    if (t->is_pointer()) {
      v.is_ptr = true;
    } else {
      v.width = t->is_int() ? t->width : 64;
    }
    return v;
  }

  CVal make_symbolic(const std::string &base, const TypeRef &t,
                     const std::string &site, unsigned addr_width) {
    CVal v;
    if (t->is_pointer()) {
      v.is_ptr = true;
      v.p.inst = new_object(site.empty() ? "sym" : site, t->elem);
      unsigned w = addr_width ? addr_width : 64;
      v.p.addr = consume_symbol(base + ".addr", w);
    } else {
      v.width = t->width;
      v.i = consume_symbol(base, t->width);
    }
    return v;
  }

  void observe(const std::string &func, const std::string &var,
               const CVal &v) {
    if (!opts.record_observations || !v.is_ptr || v.p.inst == 0)
      return;
    const CObject &obj = heap.at(v.p.inst);
    std::string path = "[";
    for (size_t i = 0; i < v.p.path.size(); ++i) {
      if (i)
        path += ",";
      // array elements collapse to * in the static abstraction
      bool numeric = !v.p.path[i].empty() &&
                     std::isdigit(static_cast<unsigned char>(v.p.path[i][0]));
      path += numeric ? "*" : v.p.path[i];
    }
    path += "]";
    out.observations.push_back({func + ":%" + var, obj.static_site, path});
  }

  void set_local(const std::string &name, const CVal &v) {
    if (name.empty())
      return;
    frames.back().locals[name] = v;
    observe(frames.back().fn->name, name, v);
  }

  CVal operand_value(const Operand &o, const TypeRef &context) {
    CFrame &fr = frames.back();
    switch (o.kind) {
    case Operand::Kind::Local: {
      auto it = fr.locals.find(o.name);
      if (it != fr.locals.end())
        return it->second;
      return zero_of(context ? context : mir::Type::make_int(64));
    }
    case Operand::Kind::Global: {
      CVal v;
      v.is_ptr = true;
      v.p.inst = global_inst.at(o.name);
      v.p.addr = heap.at(v.p.inst).addr_base;
      return v;
    }
    default: {
      CVal v;
      uint64_t raw = o.kind == Operand::Kind::Const ? o.value : 0;
      if (context && context->is_pointer()) {
        v.is_ptr = true;
        v.p.addr = raw;
      } else {
        v.width = context && context->is_int() ? context->width : 64;
        v.i = mask_width(raw, v.width);
      }
      return v;
    }
    }
  }

  std::string cell_key(const std::vector<std::string> &path) {
    std::string key;
    for (size_t i = 0; i < path.size(); ++i) {
      if (i)
        key += ".";
      key += path[i];
    }
    return key;
  }

  CVal read_cell(const CObject &obj, const std::string &key,
                 const TypeRef &t) {
    auto it = obj.cells.find(key);
    if (it != obj.cells.end())
      return it->second;
    return zero_of(t);
  }

  TypeRef type_at(const CObject &obj, const std::vector<std::string> &path) {
    TypeRef cur = obj.type;
    for (const auto &el : path) {
      if (!cur)
        return nullptr;
      if (cur->is_struct()) {
        const mir::StructDef *sd = m.find_struct(cur->struct_name);
        int idx = sd ? sd->field_index(el) : -1;
        cur = idx < 0 ? nullptr : sd->fields[static_cast<size_t>(idx)].second;
      } else if (cur->is_array()) {
        cur = cur->elem;
      } else {
        return nullptr;
      }
    }
    return cur;
  }

  bool pointer_ok(const CVal &p, const char *what) {
    if (!p.is_ptr || p.p.inst == 0) {
      finish(ConcreteResult::Verdict::Fault,
             std::string(what) + ": null or unmodeled pointer");
      return false;
    }
    const CObject &obj = heap.at(p.p.inst);
    if (obj.dead) {
      finish(ConcreteResult::Verdict::Fault,
             std::string(what) + ": dangling stack object");
      return false;
    }
    if (obj.freed) {
      finish(ConcreteResult::Verdict::Fault,
             std::string(what) + ": use after free");
      return false;
    }
    return true;
  }

  void init_globals() {
    for (const auto &g : m.globals) {
      uint64_t id = new_object("@" + g.name, g.type);
      global_inst[g.name] = id;
      CObject &obj = heap.at(id);
      if (g.init == mir::GlobalDecl::Init::Const) {
        CVal v;
        if (g.type->is_pointer()) {
          v.is_ptr = true;
          v.p.addr = g.init_value;
        } else {
          v.width = g.type->width;
          v.i = mask_width(g.init_value, v.width);
        }
        obj.cells[""] = v;
      } else if (g.init == mir::GlobalDecl::Init::Symbolic) {
        std::function<void(const TypeRef &, const std::string &)> walk =
            [&](const TypeRef &t, const std::string &prefix) {
              if (t->is_int()) {
                CVal v;
                v.width = t->width;
                v.i = consume_symbol(
                    prefix.empty() ? g.name : g.name + "." + prefix, t->width);
                obj.cells[prefix] = v;
                return;
              }
              if (t->is_array()) {
                for (uint64_t i = 0; i < t->length; ++i)
                  walk(t->elem, prefix.empty()
                                    ? std::to_string(i)
                                    : prefix + "." + std::to_string(i));
                return;
              }
              if (t->is_struct()) {
                const mir::StructDef *sd = m.find_struct(t->struct_name);
                if (!sd)
                  return;
                for (const auto &[fn, ft] : sd->fields)
                  walk(ft, prefix.empty() ? fn : prefix + "." + fn);
              }
            };
        walk(g.type, "");
      }
    }
    for (const auto &r : m.regions) {
      uint64_t base = r.base_symbolic ? consume_symbol(r.name + "_BASE", 64)
                                      : r.base;
      uint64_t size = r.size_symbolic ? consume_symbol(r.name + "_SIZE", 64)
                                      : r.size;
      regions[r.name] = {base, size};
    }
  }

  //--- loop bounds (same policy as the explorer) ---------------------------

  std::map<std::string,
           std::map<std::string, std::pair<std::set<size_t>, uint64_t>>>
      loop_cache;

  const std::map<std::string, std::pair<std::set<size_t>, uint64_t>> &
  loops_of(const Function &f) {
    auto it = loop_cache.find(f.name);
    if (it != loop_cache.end())
      return it->second;
    std::map<std::string, std::pair<std::set<size_t>, uint64_t>> info;
    auto g = cfg::build_cfg(f);
    bool irr = false;
    auto loops = cfg::find_natural_loops(m, f, g, &irr);
    for (const auto &loop : loops) {
      uint64_t bound = loop.has_const_bound ? loop.const_bound
                                            : opts.bounds.default_loop_bound;
      for (const auto &ann : m.loop_bounds)
        if (ann.func == f.name && ann.header == f.blocks[loop.header].label)
          bound = ann.bound;
      info[f.blocks[loop.header].label] = {loop.body, bound};
    }
    return loop_cache.emplace(f.name, std::move(info)).first->second;
  }

  bool branch_to(const std::string &label) {
    CFrame &fr = frames.back();
    const mir::BasicBlock *bb = fr.fn->find_block(label);
    size_t target = static_cast<size_t>(bb - fr.fn->blocks.data());
    const auto &info = loops_of(*fr.fn);
    auto it = info.find(label);
    if (it != info.end()) {
      bool back_edge = it->second.first.count(fr.block) > 0;
      uint64_t &count = fr.loop_counts[label];
      if (back_edge) {
        if (++count > it->second.second) {
          finish(ConcreteResult::Verdict::BoundExceeded,
                 "loop bound at " + fr.fn->name + ":" + label);
          return false;
        }
      } else {
        count = 0;
      }
    }
    fr.prev_block = fr.fn->blocks[fr.block].label;
    fr.block = target;
    fr.idx = 0;
    // parallel phi evaluation
    std::vector<std::pair<std::string, CVal>> phi_vals;
    for (const auto &pin : bb->instrs) {
      if (pin.op != Opcode::Phi)
        break;
      for (const auto &[val, lbl] : pin.phi_in)
        if (lbl == fr.prev_block)
          phi_vals.push_back({pin.result, operand_value(val, pin.type)});
    }
    for (auto &[nm, v] : phi_vals) {
      fr.locals[nm] = v;
      observe(fr.fn->name, nm, v);
    }
    fr.idx = phi_vals.size();
    return true;
  }

  //--- assertion expressions ------------------------------------------------

  struct CA {
    uint64_t value = 0;
    unsigned natural = 64;
    bool is_bool = false;
    bool b = false;
    bool ok = true;
  };

  int64_t sext_natural(uint64_t v, unsigned w) { return to_signed(v, w); }

  CA eval_aexpr(const mir::AssertExprRef &e) {
    using K = mir::AssertExpr::Kind;
    CFrame &fr = frames.back();
    CA out_v;
    auto bad = [&]() {
      out_v.ok = false;
      return out_v;
    };
    switch (e->kind) {
    case K::True:
    case K::False:
      out_v.is_bool = true;
      out_v.b = e->kind == K::True;
      return out_v;
    case K::Const:
      out_v.value = e->value;
      return out_v;
    case K::NameRef: {
      std::string n = e->name;
      CVal v;
      bool found = false;
      if (!n.empty() && n[0] == '%') {
        auto it = fr.locals.find(n.substr(1));
        if (it == fr.locals.end())
          return bad();
        v = it->second;
        found = true;
      } else if (!n.empty() && n[0] == '@') {
        std::string g = n.substr(1);
        auto it = global_inst.find(g);
        if (it == global_inst.end())
          return bad();
        v = read_cell(heap.at(it->second), "", m.find_global(g)->type);
        found = true;
      } else {
        auto it = fr.locals.find(n);
        if (it != fr.locals.end()) {
          v = it->second;
          found = true;
        } else if (const mir::GlobalDecl *gd = m.find_global(n)) {
          v = read_cell(heap.at(global_inst.at(n)), "", gd->type);
          found = true;
        } else {
          for (const char *suffix : {"_BASE", "_SIZE"}) {
            size_t sl = strlen(suffix);
            if (n.size() > sl && n.substr(n.size() - sl) == suffix) {
              auto rit = regions.find(n.substr(0, n.size() - sl));
              if (rit != regions.end()) {
                out_v.value =
                    suffix[1] == 'B' ? rit->second.first : rit->second.second;
                return out_v;
              }
            }
          }
        }
      }
      if (!found)
        return bad();
      if (v.is_ptr) {
        out_v.value = v.p.addr;
      } else {
        out_v.value = v.i;
        out_v.natural = v.width;
      }
      return out_v;
    }
    case K::And:
    case K::Or: {
      CA a = eval_aexpr(e->args[0]);
      CA b = eval_aexpr(e->args[1]);
      if (!a.ok || !b.ok || !a.is_bool || !b.is_bool)
        return bad();
      out_v.is_bool = true;
      out_v.b = e->kind == K::And ? (a.b && b.b) : (a.b || b.b);
      return out_v;
    }
    case K::Not: {
      CA a = eval_aexpr(e->args[0]);
      if (!a.ok || !a.is_bool)
        return bad();
      out_v.is_bool = true;
      out_v.b = !a.b;
      return out_v;
    }
    case K::Cmp: {
      CA a = eval_aexpr(e->args[0]);
      CA b = eval_aexpr(e->args[1]);
      if (!a.ok || !b.ok || a.is_bool || b.is_bool)
        return bad();
      out_v.is_bool = true;
      switch (e->pred) {
      case mir::ICmpPred::Eq:
        out_v.b = a.value == b.value;
        break;
      case mir::ICmpPred::Ne:
        out_v.b = a.value != b.value;
        break;
      case mir::ICmpPred::Ult:
        out_v.b = a.value < b.value;
        break;
      case mir::ICmpPred::Ule:
        out_v.b = a.value <= b.value;
        break;
      case mir::ICmpPred::Ugt:
        out_v.b = a.value > b.value;
        break;
      case mir::ICmpPred::Uge:
        out_v.b = a.value >= b.value;
        break;
      case mir::ICmpPred::Slt:
        out_v.b = sext_natural(a.value, a.natural) <
                  sext_natural(b.value, b.natural);
        break;
      case mir::ICmpPred::Sle:
        out_v.b = sext_natural(a.value, a.natural) <=
                  sext_natural(b.value, b.natural);
        break;
      case mir::ICmpPred::Sgt:
        out_v.b = sext_natural(a.value, a.natural) >
                  sext_natural(b.value, b.natural);
        break;
      case mir::ICmpPred::Sge:
        out_v.b = sext_natural(a.value, a.natural) >=
                  sext_natural(b.value, b.natural);
        break;
      }
      return out_v;
    }
    case K::Add:
    case K::Sub:
    case K::Mul:
    case K::UDiv: {
      CA a = eval_aexpr(e->args[0]);
      CA b = eval_aexpr(e->args[1]);
      if (!a.ok || !b.ok || a.is_bool || b.is_bool)
        return bad();
      switch (e->kind) {
      case K::Add:
        out_v.value = a.value + b.value;
        break;
      case K::Sub:
        out_v.value = a.value - b.value;
        break;
      case K::Mul:
        out_v.value = a.value * b.value;
        break;
      default:
        out_v.value = b.value == 0 ? 0 : a.value / b.value;
        break;
      }
      return out_v;
    }
    case K::SizeofObj:
    case K::OffsetOf:
    case K::Freed: {
      const mir::AssertExprRef &arg = e->args[0];
      if (arg->kind != K::NameRef)
        return bad();
      std::string n = arg->name;
      if (!n.empty() && n[0] == '%')
        n = n.substr(1);
      auto it = fr.locals.find(n);
      if (it == fr.locals.end() || !it->second.is_ptr || it->second.p.inst == 0)
        return bad();
      const CObject &obj = heap.at(it->second.p.inst);
      if (e->kind == K::Freed) {
        out_v.is_bool = true;
        out_v.b = obj.freed;
        return out_v;
      }
      if (e->kind == K::SizeofObj) {
        out_v.value = mir::type_byte_size(m, obj.type);
        return out_v;
      }
      out_v.value = byte_offset(m, obj.type, it->second.p.path);
      return out_v;
    }
    }
    return bad();
  }

  //--- execution -------------------------------------------------------------

  void step() {
    CFrame &fr = frames.back();
    const auto &block = fr.fn->blocks[fr.block];
    const Instruction &in = block.instrs[fr.idx];
    if (opts.record_trace) {
      size_t ord = 0;
      for (size_t b = 0; b < fr.block; ++b)
        ord += fr.fn->blocks[b].instrs.size();
      out.trace.push_back(mir::instr_id(m, *fr.fn, ord + fr.idx));
    }

    switch (in.op) {
    case Opcode::Alloca: {
      size_t ord = 0;
      for (size_t b = 0; b < fr.block; ++b)
        ord += fr.fn->blocks[b].instrs.size();
      ord += fr.idx;
      uint64_t id =
          new_object(in.site_tag.empty() ? mir::instr_id(m, *fr.fn, ord)
                                         : in.site_tag,
                     in.type);
      frames.back().allocas.push_back(id);
      CVal v;
      v.is_ptr = true;
      v.p.inst = id;
      v.p.addr = heap.at(id).addr_base;
      set_local(in.result, v);
      ++fr.idx;
      return;
    }
    case Opcode::Symbolic: {
      size_t ord = 0;
      for (size_t b = 0; b < fr.block; ++b)
        ord += fr.fn->blocks[b].instrs.size();
      ord += fr.idx;
      std::string base = in.sym_name.empty() ? in.result : in.sym_name;
      std::string site = in.site_tag.empty()
                             ? mir::instr_id(m, *fr.fn, ord)
                             : in.site_tag;
      CVal v = make_symbolic(base, in.type, site, in.addr_width);
      set_local(in.result, v);
      ++fr.idx;
      return;
    }
    case Opcode::Load: {
      CVal p = operand_value(in.operands[0], nullptr);
      if (!pointer_ok(p, "load"))
        return;
      CObject &obj = heap.at(p.p.inst);
      CVal v = read_cell(obj, cell_key(p.p.path), in.type);
      set_local(in.result, v);
      ++fr.idx;
      return;
    }
    case Opcode::Store: {
      CVal val = operand_value(in.operands[0], in.type);
      CVal p = operand_value(in.operands[1], nullptr);
      if (!pointer_ok(p, "store"))
        return;
      heap.at(p.p.inst).cells[cell_key(p.p.path)] = val;
      ++fr.idx;
      return;
    }
    case Opcode::Gep: {
      CVal base = operand_value(in.operands[0], nullptr);
      if (!base.is_ptr) {
        finish(ConcreteResult::Verdict::Fault, "gep on non-pointer");
        return;
      }
      CPtr np = base.p;
      TypeRef cur = np.inst ? type_at(heap.at(np.inst), np.path) : in.type;
      for (const auto &sel : in.gep_path) {
        if (sel.kind == mir::GepSelector::Kind::Field) {
          np.path.push_back(sel.field);
          if (cur && cur->is_struct()) {
            const mir::StructDef *sd = m.find_struct(cur->struct_name);
            int idx = sd ? sd->field_index(sel.field) : -1;
            cur = idx < 0 ? nullptr
                          : sd->fields[static_cast<size_t>(idx)].second;
          }
        } else {
          CVal iv = operand_value(sel.index, mir::Type::make_int(64));
          uint64_t idx = iv.i;
          uint64_t n = cur && cur->is_array() ? cur->length : 0;
          if (idx >= n) {
            finish(ConcreteResult::Verdict::Fault, "gep index out of bounds");
            return;
          }
          np.path.push_back(std::to_string(idx));
          cur = cur->elem;
        }
      }
      if (np.inst) {
        const CObject &obj = heap.at(np.inst);
        np.addr = base.p.addr + byte_offset(m, obj.type, np.path) -
                  byte_offset(m, obj.type, base.p.path);
      }
      CVal v;
      v.is_ptr = true;
      v.p = np;
      set_local(in.result, v);
      ++fr.idx;
      return;
    }
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul: {
      CVal a = operand_value(in.operands[0], in.type);
      CVal b = operand_value(in.operands[1], in.type);
      CVal v;
      v.width = in.type->width;
      uint64_t r = in.op == Opcode::Add   ? a.i + b.i
                   : in.op == Opcode::Sub ? a.i - b.i
                                          : a.i * b.i;
      v.i = mask_width(r, v.width);
      set_local(in.result, v);
      ++fr.idx;
      return;
    }
    case Opcode::UDiv:
    case Opcode::SDiv: {
      CVal a = operand_value(in.operands[0], in.type);
      CVal b = operand_value(in.operands[1], in.type);
      if (b.i == 0) {
        finish(ConcreteResult::Verdict::Fault, "division by zero");
        return;
      }
      CVal v;
      v.width = in.type->width;
      v.i = in.op == Opcode::UDiv ? mask_width(a.i / b.i, v.width)
                                  : sdiv_wrapped(a.i, b.i, v.width);
      set_local(in.result, v);
      ++fr.idx;
      return;
    }
    case Opcode::ICmp: {
      CVal a = operand_value(in.operands[0], in.type);
      CVal b = operand_value(in.operands[1], in.type);
      uint64_t av = a.is_ptr ? a.p.addr : a.i;
      uint64_t bv = b.is_ptr ? b.p.addr : b.i;
      unsigned w = a.is_ptr ? 64 : a.width;
      bool r = false;
      switch (in.pred) {
      case mir::ICmpPred::Eq:
        r = av == bv;
        break;
      case mir::ICmpPred::Ne:
        r = av != bv;
        break;
      case mir::ICmpPred::Ult:
        r = av < bv;
        break;
      case mir::ICmpPred::Ule:
        r = av <= bv;
        break;
      case mir::ICmpPred::Ugt:
        r = av > bv;
        break;
      case mir::ICmpPred::Uge:
        r = av >= bv;
        break;
      case mir::ICmpPred::Slt:
        r = to_signed(av, w) < to_signed(bv, w);
        break;
      case mir::ICmpPred::Sle:
        r = to_signed(av, w) <= to_signed(bv, w);
        break;
      case mir::ICmpPred::Sgt:
        r = to_signed(av, w) > to_signed(bv, w);
        break;
      case mir::ICmpPred::Sge:
        r = to_signed(av, w) >= to_signed(bv, w);
        break;
      }
      CVal v;
      v.width = 1;
      v.i = r ? 1 : 0;
      set_local(in.result, v);
      ++fr.idx;
      return;
    }
    case Opcode::Zext: {
      CVal a = operand_value(in.operands[0], in.type);
      CVal v;
      v.width = in.type2->width;
      v.i = a.i;
      set_local(in.result, v);
      ++fr.idx;
      return;
    }
    case Opcode::Trunc: {
      CVal a = operand_value(in.operands[0], in.type);
      CVal v;
      v.width = in.type2->width;
      v.i = mask_width(a.i, v.width);
      set_local(in.result, v);
      ++fr.idx;
      return;
    }
    case Opcode::Phi:
      // handled in branch_to; reaching one here means entry-block phi
      finish(ConcreteResult::Verdict::Error, "phi in entry block");
      return;
    case Opcode::Br:
      branch_to(in.label_a);
      return;
    case Opcode::CondBr: {
      CVal c = operand_value(in.operands[0], mir::Type::make_int(1));
      branch_to(c.i ? in.label_a : in.label_b);
      return;
    }
    case Opcode::Call: {
      const Function *callee = m.find_function(in.callee);
      bool stub = !callee || callee->is_external ||
                  frames.size() >= opts.bounds.call_depth;
      if (stub) {
        TypeRef rt = callee ? callee->ret_type : mir::Type::make_int(64);
        if (!in.result.empty() && rt && !rt->is_void()) {
          CVal v = make_symbolic(in.callee + ".ret", rt, "stub:" + in.callee,
                                 0);
          set_local(in.result, v);
        }
        ++fr.idx;
        return;
      }
      CFrame nf;
      nf.fn = callee;
      for (size_t i = 0; i < in.operands.size(); ++i) {
        CVal v = operand_value(in.operands[i], callee->params[i].second);
        nf.locals[callee->params[i].first] = v;
      }
      frames.push_back(std::move(nf));
      for (size_t i = 0; i < callee->params.size(); ++i)
        observe(callee->name, callee->params[i].first,
                frames.back().locals[callee->params[i].first]);
      return;
    }
    case Opcode::Ret: {
      CVal rv;
      bool has_rv = !in.operands.empty();
      if (has_rv)
        rv = operand_value(in.operands[0], fr.fn->ret_type);
      for (uint64_t id : frames.back().allocas)
        heap.at(id).dead = true;
      frames.pop_back();
      if (frames.empty()) {
        out.has_ret = has_rv;
        out.ret_value = rv.is_ptr ? rv.p.addr : rv.i;
        finish(target_seen_held ? ConcreteResult::Verdict::Held
                                : ConcreteResult::Verdict::Unreached);
        return;
      }
      CFrame &caller = frames.back();
      const Instruction &call =
          caller.fn->blocks[caller.block].instrs[caller.idx];
      if (!call.result.empty() && has_rv)
        set_local(call.result, rv);
      ++caller.idx;
      return;
    }
    case Opcode::Free: {
      CVal p = operand_value(in.operands[0], nullptr);
      if (!p.is_ptr || p.p.inst == 0) {
        finish(ConcreteResult::Verdict::Fault, "free of non-object pointer");
        return;
      }
      CObject &obj = heap.at(p.p.inst);
      if (obj.freed) {
        finish(ConcreteResult::Verdict::Fault, "double free");
        return;
      }
      obj.freed = true;
      ++fr.idx;
      return;
    }
    case Opcode::Memcpy: {
      CVal dst = operand_value(in.operands[0], nullptr);
      CVal src = operand_value(in.operands[1], nullptr);
      CVal len = operand_value(in.operands[2], mir::Type::make_int(64));
      if (!pointer_ok(dst, "memcpy dst") || !pointer_ok(src, "memcpy src"))
        return;
      CObject &dobj = heap.at(dst.p.inst);
      CObject &sobj = heap.at(src.p.inst);
      uint64_t doff = byte_offset(m, dobj.type, dst.p.path);
      uint64_t soff = byte_offset(m, sobj.type, src.p.path);
      uint64_t dsize = mir::type_byte_size(m, dobj.type);
      uint64_t ssize = mir::type_byte_size(m, sobj.type);
      uint64_t avail = std::min(dsize - doff, ssize - soff);
      if (len.i > avail) {
        finish(ConcreteResult::Verdict::Fault, "memcpy out of bounds");
        return;
      }
      // leaf-cell copy; a cell is copied iff fully covered
      std::function<void(const TypeRef &, const std::string &, uint64_t)>
          no_op = nullptr;
      std::vector<std::tuple<std::string, uint64_t, uint64_t>> dleaves,
          sleaves;
      std::function<void(const TypeRef &, const std::string &, uint64_t,
                         std::vector<std::tuple<std::string, uint64_t,
                                                uint64_t>> &)>
          collect = [&](const TypeRef &t, const std::string &prefix,
                        uint64_t off,
                        std::vector<std::tuple<std::string, uint64_t,
                                               uint64_t>> &outv) {
            if (!t)
              return;
            if (t->is_int() || t->is_pointer()) {
              outv.push_back({prefix, off, mir::type_byte_size(m, t)});
              return;
            }
            if (t->is_array()) {
              uint64_t esz = mir::type_byte_size(m, t->elem);
              for (uint64_t i = 0; i < t->length; ++i)
                collect(t->elem,
                        prefix.empty() ? std::to_string(i)
                                       : prefix + "." + std::to_string(i),
                        off + i * esz, outv);
              return;
            }
            const mir::StructDef *sd = m.find_struct(t->struct_name);
            if (!sd)
              return;
            uint64_t foff = 0;
            for (const auto &[fn, ft] : sd->fields) {
              collect(ft, prefix.empty() ? fn : prefix + "." + fn, off + foff,
                      outv);
              foff += mir::type_byte_size(m, ft);
            }
          };
      collect(dobj.type, "", 0, dleaves);
      collect(sobj.type, "", 0, sleaves);
      for (const auto &[dkey, off, size] : dleaves) {
        if (off < doff)
          continue;
        uint64_t rel = off - doff;
        if (rel >= len.i)
          continue;
        if (rel + size > len.i) {
          finish(ConcreteResult::Verdict::Fault, "memcpy splits a cell");
          return;
        }
        const std::string *skey = nullptr;
        TypeRef stype;
        for (const auto &[k, so, ss] : sleaves)
          if (so == soff + rel && ss == size)
            skey = &k;
        if (!skey) {
          finish(ConcreteResult::Verdict::Fault,
                 "memcpy: incompatible layouts");
          return;
        }
        (void)stype;
        // default-zero reads propagate as zero values
        auto sit = sobj.cells.find(*skey);
        if (sit != sobj.cells.end())
          dobj.cells[dkey] = sit->second;
        else
          dobj.cells.erase(dkey);
      }
      ++fr.idx;
      return;
    }
    case Opcode::Assert: {
      CA cond = eval_aexpr(in.assertion);
      if (!cond.ok || !cond.is_bool) {
        finish(ConcreteResult::Verdict::Error,
               "assertion refers to unresolved values");
        return;
      }
      if (in.target_assert) {
        if (!cond.b) {
          finish(ConcreteResult::Verdict::Violated);
          return;
        }
        target_seen_held = true;
      } else if (!cond.b) {
        finish(ConcreteResult::Verdict::Fault, "assertion failed");
        return;
      }
      ++fr.idx;
      return;
    }
    }
    finish(ConcreteResult::Verdict::Error, "unhandled opcode");
  }

  void run(const std::string &entry) {
    const Function *f = m.find_function(entry);
    if (!f || f->is_external) {
      finish(ConcreteResult::Verdict::Error,
             "entry function '@" + entry + "' not found");
      return;
    }
    init_globals();
    CFrame fr;
    fr.fn = f;
    // direct invocation of a function with parameters gets zero arguments;
    // instrumented modules call through the driver instead
    for (const auto &[pn, pt] : f->params)
      fr.locals[pn] = zero_of(pt);
    frames.push_back(std::move(fr));
    while (!done) {
      if (++steps > opts.bounds.max_steps) {
        finish(ConcreteResult::Verdict::BoundExceeded, "step ceiling");
        return;
      }
      step();
    }
  }
};

} // namespace

ConcreteResult interpret_concrete(const Module &m, const std::string &entry,
                                  const Model &inputs,
                                  const InterpOptions &opts) {
  Interp interp(m, opts, inputs);
  interp.run(entry);
  return std::move(interp.out);
}

} // namespace stase::sym
