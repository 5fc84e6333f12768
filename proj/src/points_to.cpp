//===-- points_to.cpp - Worklist subset solver ----------------------------===//

#include "stase/points_to.hpp"

#include "stase/facts.hpp"

#include <algorithm>
#include <sstream>

namespace stase::pts {

using mir::Function;
using mir::Instruction;
using mir::Module;
using mir::Opcode;
using mir::Operand;
using mir::TypeRef;

std::string Cell::path_string() const {
  std::string out = "[";
  for (size_t i = 0; i < path.size(); ++i) {
    if (i)
      out += ",";
    out += path[i];
  }
  return out + "]";
}

std::string input_site_id(const Function &f, const std::string &param) {
  return "input:" + f.name + ":%" + param;
}

datalog::TupleSet PointsToResult::export_tuples() const {
  datalog::TupleSet out;
  for (const auto &[var, cells] : var_cells)
    for (const auto &c : cells)
      out.insert({datalog::Value(std::string("_")), datalog::Value(c.site),
                  datalog::Value(c.path_string()), datalog::Value(var)});
  return out;
}

bool PointsToResult::var_has_site(const std::string &var,
                                  const std::string &site) const {
  auto it = var_cells.find(var);
  if (it == var_cells.end())
    return false;
  for (const auto &c : it->second)
    if (c.site == site)
      return true;
  return false;
}

namespace {

// Walks a field path against a type; returns the reached type or null when
// the path does not fit.
TypeRef walk_path(const Module &m, TypeRef t,
                  const std::vector<std::string> &path, size_t from = 0) {
  for (size_t i = from; i < path.size(); ++i) {
    if (!t)
      return nullptr;
    if (path[i] == "*") {
      if (!t->is_array())
        return nullptr;
      t = t->elem;
    } else {
      if (!t->is_struct())
        return nullptr;
      const mir::StructDef *sd = m.find_struct(t->struct_name);
      if (!sd)
        return nullptr;
      int idx = sd->field_index(path[i]);
      if (idx < 0)
        return nullptr;
      t = sd->fields[static_cast<size_t>(idx)].second;
    }
  }
  return t;
}

// All paths from `t` to scalar (int/pointer) leaves, including the empty path
// when `t` itself is scalar.
void leaf_paths(const Module &m, const TypeRef &t, std::vector<std::string> &acc,
                std::vector<std::vector<std::string>> &out) {
  if (!t)
    return;
  if (t->is_int() || t->is_pointer()) {
    out.push_back(acc);
    return;
  }
  if (t->is_array()) {
    acc.push_back("*");
    leaf_paths(m, t->elem, acc, out);
    acc.pop_back();
    return;
  }
  if (t->is_struct()) {
    const mir::StructDef *sd = m.find_struct(t->struct_name);
    if (!sd)
      return;
    for (const auto &[fn, ft] : sd->fields) {
      acc.push_back(fn);
      leaf_paths(m, ft, acc, out);
      acc.pop_back();
    }
  }
}

struct Solver {
  const Module &m;
  PointsToResult res;
  bool changed = false;

  void add_site(const std::string &id, AllocSite::Origin origin, TypeRef type) {
    auto it = res.sites.find(id);
    if (it == res.sites.end()) {
      res.sites[id] = AllocSite{id, origin, std::move(type)};
    }
  }

  bool add_var_cell(const std::string &var, const Cell &c) {
    if (res.var_cells[var].insert(c).second) {
      changed = true;
      return true;
    }
    return false;
  }

  bool add_heap_cell(const Cell &at, const Cell &pointee) {
    if (res.heap[at].insert(pointee).second) {
      changed = true;
      return true;
    }
    return false;
  }

  std::set<Cell> operand_cells(const Function &f, const Operand &o) {
    switch (o.kind) {
    case Operand::Kind::Local: {
      auto it = res.var_cells.find(facts::var_id(f, o.name));
      return it == res.var_cells.end() ? std::set<Cell>{} : it->second;
    }
    case Operand::Kind::Global:
      return {Cell{"@" + o.name, {}}};
    default:
      return {};
    }
  }

  // Sites are registered once, before the fixpoint loop.
  void register_sites() {
    for (const auto &g : m.globals)
      add_site("@" + g.name, AllocSite::Origin::Global, g.type);
    for (const auto &f : m.functions) {
      for (const auto &[pn, pt] : f.params) {
        TypeRef obj = pt->is_pointer() ? pt->elem : pt;
        add_site(input_site_id(f, pn), AllocSite::Origin::EntryInput, obj);
      }
      if (f.is_external)
        continue;
      for (const auto &r : mir::all_instrs(f)) {
        const Instruction &in = *r.instr;
        std::string iid = mir::instr_id(m, f, r.ordinal);
        if (in.op == Opcode::Alloca)
          add_site(iid, AllocSite::Origin::Alloca, in.type);
        else if (in.op == Opcode::Symbolic && in.type->is_pointer())
          add_site(iid, AllocSite::Origin::Symbolic, in.type->elem);
        else if (in.op == Opcode::Call) {
          const Function *callee = m.find_function(in.callee);
          if (callee && callee->is_external && !in.result.empty()) {
            TypeRef rt = callee->ret_type;
            add_site("stub:" + iid, AllocSite::Origin::StubReturn,
                     rt && rt->is_pointer() ? rt->elem : rt);
          }
        }
      }
    }
  }

  void seed() {
    for (const auto &f : m.functions)
      for (const auto &[pn, pt] : f.params) {
        (void)pt;
        add_var_cell(facts::var_id(f, pn), Cell{input_site_id(f, pn), {}});
      }
    // globals participate in the exported relation under their own name so
    // config-listed attacker globals can act as taint sources
    for (const auto &g : m.globals)
      add_var_cell("@" + g.name, Cell{"@" + g.name, {}});
  }

  void flow_function(const Function &f) {
    for (const auto &r : mir::all_instrs(f)) {
      const Instruction &in = *r.instr;
      std::string iid = mir::instr_id(m, f, r.ordinal);
      switch (in.op) {
      case Opcode::Alloca:
        add_var_cell(facts::var_id(f, in.result), Cell{iid, {}});
        break;
      case Opcode::Symbolic:
        if (in.type->is_pointer())
          add_var_cell(facts::var_id(f, in.result), Cell{iid, {}});
        break;
      case Opcode::Load: {
        std::string dst = facts::var_id(f, in.result);
        for (const Cell &c : operand_cells(f, in.operands[0])) {
          add_var_cell(dst, c); // loaded-from provenance
          auto it = res.heap.find(c);
          if (it != res.heap.end())
            for (const Cell &h : it->second)
              add_var_cell(dst, h);
        }
        break;
      }
      case Opcode::Store: {
        auto val = operand_cells(f, in.operands[0]);
        if (val.empty())
          break;
        for (const Cell &c : operand_cells(f, in.operands[1]))
          for (const Cell &v : val)
            add_heap_cell(c, v);
        break;
      }
      case Opcode::Gep: {
        std::string dst = facts::var_id(f, in.result);
        std::vector<std::string> ext;
        for (const auto &sel : in.gep_path)
          ext.push_back(sel.kind == mir::GepSelector::Kind::Field ? sel.field
                                                                  : "*");
        for (const Cell &c : operand_cells(f, in.operands[0])) {
          auto sit = res.sites.find(c.site);
          if (sit == res.sites.end())
            continue;
          TypeRef at = walk_path(m, sit->second.type, c.path);
          Cell nc = c;
          nc.path.insert(nc.path.end(), ext.begin(), ext.end());
          if (walk_path(m, at, ext)) // ill-typed extensions are skipped
            add_var_cell(dst, nc);
        }
        break;
      }
      case Opcode::Phi: {
        std::string dst = facts::var_id(f, in.result);
        for (const auto &[v, lbl] : in.phi_in) {
          (void)lbl;
          for (const Cell &c : operand_cells(f, v))
            add_var_cell(dst, c);
        }
        break;
      }
      case Opcode::Zext:
      case Opcode::Trunc: {
        std::string dst = facts::var_id(f, in.result);
        for (const Cell &c : operand_cells(f, in.operands[0]))
          add_var_cell(dst, c);
        break;
      }
      case Opcode::Call: {
        const Function *callee = m.find_function(in.callee);
        if (!callee)
          break;
        if (callee->is_external) {
          if (!in.result.empty())
            add_var_cell(facts::var_id(f, in.result),
                         Cell{"stub:" + iid, {}});
          break;
        }
        for (size_t i = 0;
             i < in.operands.size() && i < callee->params.size(); ++i) {
          std::string pvar =
              facts::var_id(*callee, callee->params[i].first);
          for (const Cell &c : operand_cells(f, in.operands[i]))
            add_var_cell(pvar, c);
        }
        if (!in.result.empty()) {
          std::string dst = facts::var_id(f, in.result);
          for (const auto &rr : mir::all_instrs(*callee)) {
            if (rr.instr->op != Opcode::Ret || rr.instr->operands.empty())
              continue;
            for (const Cell &c : operand_cells(*callee, rr.instr->operands[0]))
              add_var_cell(dst, c);
          }
        }
        break;
      }
      case Opcode::Memcpy: {
        auto dsts = operand_cells(f, in.operands[0]);
        auto srcs = operand_cells(f, in.operands[1]);
        for (const Cell &sd : dsts) {
          auto dit = res.sites.find(sd.site);
          if (dit == res.sites.end())
            continue;
          TypeRef dt = walk_path(m, dit->second.type, sd.path);
          for (const Cell &ss : srcs) {
            auto sit = res.sites.find(ss.site);
            if (sit == res.sites.end())
              continue;
            TypeRef st = walk_path(m, sit->second.type, ss.path);
            if (!st || !dt)
              continue;
            std::vector<std::vector<std::string>> paths;
            std::vector<std::string> acc;
            leaf_paths(m, st, acc, paths);
            for (const auto &q : paths) {
              if (!walk_path(m, dt, q))
                continue; // field-incompatible
              Cell from = ss, to = sd;
              from.path.insert(from.path.end(), q.begin(), q.end());
              to.path.insert(to.path.end(), q.begin(), q.end());
              add_heap_cell(to, from); // copied contents carry provenance
              auto hit = res.heap.find(from);
              if (hit != res.heap.end())
                for (const Cell &h : hit->second)
                  add_heap_cell(to, h);
            }
          }
        }
        break;
      }
      default:
        break;
      }
    }
  }

  PointsToResult run() {
    register_sites();
    seed();
    do {
      changed = false;
      for (const auto &f : m.functions)
        if (!f.is_external)
          flow_function(f);
    } while (changed);
    return std::move(res);
  }
};

} // namespace

PointsToResult run_pointer_analysis(const Module &m) {
  Solver s{m, {}, false};
  return s.run();
}

} // namespace stase::pts
