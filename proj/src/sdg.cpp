//===-- sdg.cpp - Dependence graph construction ---------------------------===//

#include "stase/cfg.hpp"
#include "stase/facts.hpp"
#include "stase/slicer.hpp"

#include <algorithm>
#include <functional>
#include <queue>

namespace stase::slicer {

using mir::Function;
using mir::Instruction;
using mir::Module;
using mir::Opcode;
using mir::Operand;
using pts::Cell;

std::string NodeId::to_string() const {
  switch (kind) {
  case Kind::Entry:
    return "entry:" + func;
  case Kind::FormalIn:
    return "fin:" + func + ":" + std::to_string(index);
  case Kind::FormalOut:
    return "fout:" + func;
  case Kind::Instr:
    return func + ":" + std::to_string(ordinal);
  case Kind::ActualIn:
    return "ain:" + func + ":" + std::to_string(ordinal) + ":" +
           std::to_string(index);
  case Kind::ActualOut:
    return "aout:" + func + ":" + std::to_string(ordinal);
  }
  return "?";
}

void Sdg::add_edge(const NodeId &from, const NodeId &to, EdgeKind k) {
  auto &v = succs[from];
  for (const auto &[n, ek] : v)
    if (n == to && ek == k)
      return;
  v.push_back({to, k});
  preds[to].push_back({from, k});
  if (k == EdgeKind::Summary)
    ++summary_edges;
}

bool Sdg::has_edge(const NodeId &from, const NodeId &to, EdgeKind k) const {
  auto it = succs.find(from);
  if (it == succs.end())
    return false;
  for (const auto &[n, ek] : it->second)
    if (n == to && ek == k)
      return true;
  return false;
}

namespace {

NodeId instr_node(const std::string &func, size_t ordinal) {
  NodeId n;
  n.kind = NodeId::Kind::Instr;
  n.func = func;
  n.ordinal = ordinal;
  return n;
}
NodeId entry_node(const std::string &func) {
  NodeId n;
  n.kind = NodeId::Kind::Entry;
  n.func = func;
  return n;
}
NodeId formal_in(const std::string &func, int i) {
  NodeId n;
  n.kind = NodeId::Kind::FormalIn;
  n.func = func;
  n.index = i;
  return n;
}
NodeId formal_out(const std::string &func) {
  NodeId n;
  n.kind = NodeId::Kind::FormalOut;
  n.func = func;
  return n;
}
NodeId actual_in(const std::string &func, size_t ordinal, int i) {
  NodeId n;
  n.kind = NodeId::Kind::ActualIn;
  n.func = func;
  n.ordinal = ordinal;
  n.index = i;
  return n;
}
NodeId actual_out(const std::string &func, size_t ordinal) {
  NodeId n;
  n.kind = NodeId::Kind::ActualOut;
  n.func = func;
  n.ordinal = ordinal;
  return n;
}

// One path is a prefix of the other: the cells overlap (whole-object vs
// member accesses alias).
bool cells_overlap(const Cell &a, const Cell &b) {
  if (a.site != b.site)
    return false;
  size_t n = std::min(a.path.size(), b.path.size());
  for (size_t i = 0; i < n; ++i)
    if (a.path[i] != b.path[i])
      return false;
  return true;
}

struct Builder {
  const Module &m;
  const pts::PointsToResult &pts;
  Sdg g;

  // memory reads/writes per instruction node
  std::map<NodeId, std::vector<Cell>> writes, reads;

  std::set<Cell> cells_of(const Function &f, const Operand &o) {
    if (o.kind == Operand::Kind::Global)
      return {Cell{"@" + o.name, {}}};
    if (o.kind != Operand::Kind::Local)
      return {};
    auto it = pts.var_cells.find(facts::var_id(f, o.name));
    return it == pts.var_cells.end() ? std::set<Cell>{} : it->second;
  }

  void leaf_cells(const Cell &base, std::vector<Cell> &out) {
    auto sit = pts.sites.find(base.site);
    if (sit == pts.sites.end()) {
      out.push_back(base);
      return;
    }
    // expand to leaves under the base path
    std::function<void(mir::TypeRef, Cell)> walk = [&](mir::TypeRef t, Cell c) {
      if (!t || t->is_int() || t->is_pointer()) {
        out.push_back(std::move(c));
        return;
      }
      if (t->is_array()) {
        c.path.push_back("*");
        walk(t->elem, std::move(c));
        return;
      }
      if (t->is_struct()) {
        const mir::StructDef *sd = m.find_struct(t->struct_name);
        if (!sd) {
          out.push_back(std::move(c));
          return;
        }
        for (const auto &[fn, ft] : sd->fields) {
          Cell child = c;
          child.path.push_back(fn);
          walk(ft, std::move(child));
        }
      }
    };
    // type at base.path
    mir::TypeRef t = sit->second.type;
    for (const auto &el : base.path) {
      if (!t)
        break;
      if (el == "*") {
        t = t->is_array() ? t->elem : nullptr;
      } else if (t->is_struct()) {
        const mir::StructDef *sd = m.find_struct(t->struct_name);
        int idx = sd ? sd->field_index(el) : -1;
        t = idx < 0 ? nullptr : sd->fields[static_cast<size_t>(idx)].second;
      } else {
        t = nullptr;
      }
    }
    walk(t, base);
  }

  // Definition node of a local value within f, considering calls (their
  // results live on the actual-out node).
  std::map<std::string, std::map<std::string, NodeId>> def_nodes; // per func

  void index_defs(const Function &f) {
    auto &defs = def_nodes[f.name];
    for (size_t i = 0; i < f.params.size(); ++i)
      defs[f.params[i].first] = formal_in(f.name, static_cast<int>(i));
    for (const auto &r : mir::all_instrs(f)) {
      if (r.instr->result.empty())
        continue;
      if (r.instr->op == Opcode::Call)
        defs[r.instr->result] = actual_out(f.name, r.ordinal);
      else
        defs[r.instr->result] = instr_node(f.name, r.ordinal);
    }
  }

  void use_edge(const Function &f, const Operand &o, const NodeId &user) {
    if (o.kind != Operand::Kind::Local)
      return;
    auto &defs = def_nodes[f.name];
    auto it = defs.find(o.name);
    if (it != defs.end())
      g.add_edge(it->second, user, EdgeKind::Data);
  }

  void build_function(const Function &f) {
    auto cfgraph = cfg::build_cfg(f);
    auto cdeps = cfg::control_dependence(cfgraph);
    NodeId fentry = entry_node(f.name);
    for (size_t i = 0; i < f.params.size(); ++i)
      g.add_edge(fentry, formal_in(f.name, static_cast<int>(i)),
                 EdgeKind::Control);

    // terminator ordinal per block (for control dep edges)
    std::vector<size_t> term_ordinal(f.blocks.size(), 0);
    {
      size_t ordinal = 0;
      for (size_t bi = 0; bi < f.blocks.size(); ++bi) {
        for (size_t ii = 0; ii < f.blocks[bi].instrs.size(); ++ii, ++ordinal)
          if (ii + 1 == f.blocks[bi].instrs.size())
            term_ordinal[bi] = ordinal;
      }
    }

    for (const auto &r : mir::all_instrs(f)) {
      const Instruction &in = *r.instr;
      NodeId node = instr_node(f.name, r.ordinal);
      // control dependences
      const auto &bdeps = cdeps[r.block_index];
      if (bdeps.empty()) {
        g.add_edge(fentry, node, EdgeKind::Control);
      } else {
        for (size_t cb : bdeps)
          g.add_edge(instr_node(f.name, term_ordinal[cb]), node,
                     EdgeKind::Control);
      }

      // data dependences and call structure
      if (in.op == Opcode::Call) {
        const Function *callee = m.find_function(in.callee);
        for (size_t i = 0; i < in.operands.size(); ++i) {
          NodeId ain = actual_in(f.name, r.ordinal, static_cast<int>(i));
          g.add_edge(node, ain, EdgeKind::Control);
          use_edge(f, in.operands[i], ain);
          if (callee && !callee->is_external)
            g.add_edge(ain, formal_in(callee->name, static_cast<int>(i)),
                       EdgeKind::ParamIn);
        }
        if (!in.result.empty()) {
          NodeId aout = actual_out(f.name, r.ordinal);
          g.add_edge(node, aout, EdgeKind::Control);
          if (callee && !callee->is_external)
            g.add_edge(formal_out(callee->name), aout, EdgeKind::ParamOut);
        }
        if (callee && !callee->is_external)
          g.add_edge(node, entry_node(callee->name), EdgeKind::Call);
      } else if (in.op == Opcode::Phi) {
        for (const auto &[v, lbl] : in.phi_in) {
          (void)lbl;
          use_edge(f, v, node);
        }
      } else if (in.op == Opcode::Gep) {
        use_edge(f, in.operands[0], node);
        for (const auto &sel : in.gep_path)
          if (sel.kind == mir::GepSelector::Kind::Index)
            use_edge(f, sel.index, node);
      } else if (in.op == Opcode::Assert) {
        // assertion operands: locals referenced by name
        std::function<void(const mir::AssertExprRef &)> walk =
            [&](const mir::AssertExprRef &e) {
              if (!e)
                return;
              if (e->kind == mir::AssertExpr::Kind::NameRef) {
                std::string n = e->name;
                if (!n.empty() && n[0] == '%')
                  n = n.substr(1);
                use_edge(f, Operand::local(n), node);
              }
              for (const auto &a : e->args)
                walk(a);
            };
        walk(in.assertion);
      } else {
        for (const auto &o : in.operands)
          use_edge(f, o, node);
      }

      if (in.op == Opcode::Ret) {
        if (!in.operands.empty())
          g.add_edge(node, formal_out(f.name), EdgeKind::Data);
      }

      // memory effects
      switch (in.op) {
      case Opcode::Store:
        for (const Cell &c : cells_of(f, in.operands[1]))
          writes[node].push_back(c);
        break;
      case Opcode::Load:
        for (const Cell &c : cells_of(f, in.operands[0]))
          reads[node].push_back(c);
        break;
      case Opcode::Free:
        // freeing mutates the object's liveness; treat as a write so uses
        // after the free depend on it
        for (const Cell &c : cells_of(f, in.operands[0]))
          leaf_cells(c, writes[node]);
        break;
      case Opcode::Memcpy:
        for (const Cell &c : cells_of(f, in.operands[0]))
          leaf_cells(c, writes[node]);
        for (const Cell &c : cells_of(f, in.operands[1]))
          leaf_cells(c, reads[node]);
        break;
      case Opcode::Assert: {
        // region/global/freed atoms read memory state; globals only
        std::function<void(const mir::AssertExprRef &)> walk =
            [&](const mir::AssertExprRef &e) {
              if (!e)
                return;
              if (e->kind == mir::AssertExpr::Kind::NameRef) {
                std::string n = e->name;
                if (!n.empty() && n[0] == '@')
                  reads[node].push_back(Cell{n, {}});
                else if (n.empty() || n[0] != '%') {
                  if (m.find_global(n))
                    reads[node].push_back(Cell{"@" + n, {}});
                }
              }
              if (e->kind == mir::AssertExpr::Kind::Freed)
                for (const auto &a : e->args)
                  if (a->kind == mir::AssertExpr::Kind::NameRef) {
                    std::string n = a->name;
                    if (!n.empty() && n[0] == '%')
                      n = n.substr(1);
                    for (const Cell &c : cells_of(f, Operand::local(n)))
                      leaf_cells(c, reads[node]);
                  }
              for (const auto &a : e->args)
                walk(a);
            };
        walk(in.assertion);
        break;
      }
      default:
        break;
      }
    }
  }

  // Summary edges: actual-in -> actual-out when the callee's formal-out is
  // reachable from the formal-in through intraprocedural edges and nested
  // summaries.
  void close_summaries() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto &f : m.functions) {
        if (f.is_external)
          continue;
        // nodes reachable from each formal-in within this function
        for (size_t i = 0; i < f.params.size(); ++i) {
          NodeId fin = formal_in(f.name, static_cast<int>(i));
          std::set<NodeId> seen{fin};
          std::queue<NodeId> work;
          work.push(fin);
          bool reaches_out = false;
          while (!work.empty() && !reaches_out) {
            NodeId cur = work.front();
            work.pop();
            auto it = g.succs.find(cur);
            if (it == g.succs.end())
              continue;
            for (const auto &[next, kind] : it->second) {
              if (kind == EdgeKind::Call || kind == EdgeKind::ParamIn ||
                  kind == EdgeKind::ParamOut)
                continue; // stay intraprocedural; summaries bridge calls
              if (next.func != f.name &&
                  next.kind != NodeId::Kind::FormalOut)
                continue;
              if (next == formal_out(f.name)) {
                reaches_out = true;
                break;
              }
              if (next.func == f.name && seen.insert(next).second)
                work.push(next);
            }
          }
          if (!reaches_out)
            continue;
          // install summary edges at every call site of f
          for (const auto &caller : m.functions) {
            if (caller.is_external)
              continue;
            for (const auto &r : mir::all_instrs(caller)) {
              if (r.instr->op != Opcode::Call || r.instr->callee != f.name)
                continue;
              if (r.instr->result.empty())
                continue;
              NodeId ain =
                  actual_in(caller.name, r.ordinal, static_cast<int>(i));
              NodeId aout = actual_out(caller.name, r.ordinal);
              if (!g.has_edge(ain, aout, EdgeKind::Summary)) {
                g.add_edge(ain, aout, EdgeKind::Summary);
                changed = true;
              }
            }
          }
        }
      }
    }
  }

  void add_memory_edges() {
    for (const auto &[wnode, wcells] : writes)
      for (const auto &[rnode, rcells] : reads) {
        if (wnode == rnode)
          continue;
        bool overlap = false;
        for (const Cell &w : wcells) {
          for (const Cell &r : rcells)
            if (cells_overlap(w, r)) {
              overlap = true;
              break;
            }
          if (overlap)
            break;
        }
        if (overlap)
          g.add_edge(wnode, rnode, EdgeKind::DataMem);
      }
  }

  std::string check_mutual_recursion() {
    // call graph SCCs; size > 1 is unsupported (self loops are fine)
    std::map<std::string, std::vector<std::string>> callees;
    for (const auto &f : m.functions) {
      if (f.is_external)
        continue;
      for (const auto &r : mir::all_instrs(f))
        if (r.instr->op == Opcode::Call) {
          const Function *callee = m.find_function(r.instr->callee);
          if (callee && !callee->is_external)
            callees[f.name].push_back(callee->name);
        }
    }
    // Tarjan over function names
    std::map<std::string, int> index, low;
    std::map<std::string, bool> on_stack;
    std::vector<std::string> stack;
    int next = 0;
    std::string offender;
    std::function<void(const std::string &)> visit =
        [&](const std::string &v) {
          index[v] = low[v] = next++;
          stack.push_back(v);
          on_stack[v] = true;
          for (const auto &w : callees[v]) {
            if (!index.count(w)) {
              visit(w);
              low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
              low[v] = std::min(low[v], index[w]);
            }
          }
          if (low[v] == index[v]) {
            std::vector<std::string> comp;
            for (;;) {
              std::string w = stack.back();
              stack.pop_back();
              on_stack[w] = false;
              comp.push_back(w);
              if (w == v)
                break;
            }
            if (comp.size() > 1 && offender.empty()) {
              std::sort(comp.begin(), comp.end());
              offender = comp[0];
              for (size_t i = 1; i < comp.size(); ++i)
                offender += ", " + comp[i];
            }
          }
        };
    for (const auto &f : m.functions)
      if (!f.is_external && !index.count(f.name))
        visit(f.name);
    return offender;
  }
};

} // namespace

SdgResult build_sdg(const Module &m, const pts::PointsToResult &pts) {
  SdgResult res;
  Builder b{m, pts, {}, {}, {}, {}};
  b.g.module = &m;
  std::string mutual = b.check_mutual_recursion();
  if (!mutual.empty()) {
    res.error = "mutual recursion is not supported (cycle through: " + mutual +
                ")";
    return res;
  }
  for (const auto &f : m.functions)
    if (!f.is_external)
      b.index_defs(f);
  for (const auto &f : m.functions)
    if (!f.is_external)
      b.build_function(f);
  b.add_memory_edges();
  b.close_summaries();
  res.sdg = std::move(b.g);
  return res;
}

//===----------------------------------------------------------------------===//
// Two-pass slice
//===----------------------------------------------------------------------===//

namespace {

std::set<NodeId> backward_reach(const Sdg &g, const std::set<NodeId> &from,
                                const std::set<EdgeKind> &skip) {
  std::set<NodeId> seen = from;
  std::vector<NodeId> work(from.begin(), from.end());
  while (!work.empty()) {
    NodeId cur = work.back();
    work.pop_back();
    auto it = g.preds.find(cur);
    if (it == g.preds.end())
      continue;
    for (const auto &[prev, kind] : it->second) {
      if (skip.count(kind))
        continue;
      if (seen.insert(prev).second)
        work.push_back(prev);
    }
  }
  return seen;
}

} // namespace

Slice two_pass_slice(const Sdg &g, const mir::InstrRef &criterion) {
  Slice s;
  s.criterion = NodeId{NodeId::Kind::Instr, criterion.fn->name,
                       criterion.ordinal, -1};
  // Pass 1: do not descend through param-out edges.
  auto pass1 =
      backward_reach(g, {s.criterion}, {EdgeKind::ParamOut});
  // Pass 2: from everything seen, do not re-ascend through call/param-in.
  auto pass2 = backward_reach(g, pass1, {EdgeKind::Call, EdgeKind::ParamIn});
  s.nodes = std::move(pass2);

  const mir::Module &m = *g.module;
  for (const auto &n : s.nodes) {
    switch (n.kind) {
    case NodeId::Kind::Instr:
    case NodeId::Kind::ActualIn:
    case NodeId::Kind::ActualOut:
      s.instrs.insert({n.func, n.ordinal});
      s.retained_funcs.insert(n.func);
      break;
    case NodeId::Kind::Entry:
    case NodeId::Kind::FormalIn:
    case NodeId::Kind::FormalOut:
      s.retained_funcs.insert(n.func);
      break;
    }
  }
  // Lines reported as discarded are restricted to instructions that can
  // execute before K is reached: within K's function, blocks that reach K's
  // block (or earlier instructions of it). Post-K code is not part of the
  // entry-to-target trace.
  std::vector<bool> reaches_k;
  {
    const mir::Function &kf = *criterion.fn;
    auto kcfg = cfg::build_cfg(kf);
    reaches_k.assign(kf.blocks.size(), false);
    std::vector<size_t> work{criterion.block_index};
    reaches_k[criterion.block_index] = true;
    while (!work.empty()) {
      size_t b = work.back();
      work.pop_back();
      for (size_t p : kcfg.preds[b])
        if (!reaches_k[p]) {
          reaches_k[p] = true;
          work.push_back(p);
        }
    }
  }
  // line bookkeeping + stub-safe functions
  for (const auto &f : m.functions) {
    if (f.is_external)
      continue;
    bool is_kfunc = &f == criterion.fn;
    bool any_retained = false;
    for (const auto &r : mir::all_instrs(f)) {
      bool retained = s.contains_instr(f.name, r.ordinal);
      any_retained |= retained;
      if (retained) {
        s.retained_lines[r.instr->loc.file].insert(r.instr->loc.line);
        continue;
      }
      if (is_kfunc) {
        bool pre_k = reaches_k[r.block_index] &&
                     (r.block_index != criterion.block_index ||
                      r.index_in_block <= criterion.index_in_block);
        if (!pre_k)
          continue;
      }
      s.discarded_lines[r.instr->loc.file].insert(r.instr->loc.line);
    }
    if (!any_retained)
      s.stub_safe_functions.push_back(f.name);
  }
  // a line with any retained instruction is not discarded
  for (auto &[file, lines] : s.discarded_lines) {
    auto rit = s.retained_lines.find(file);
    if (rit == s.retained_lines.end())
      continue;
    for (uint32_t l : rit->second)
      lines.erase(l);
  }
  return s;
}

} // namespace stase::slicer
