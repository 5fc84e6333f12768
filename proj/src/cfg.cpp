//===-- cfg.cpp - CFG construction, dominators, loops ---------------------===//

#include "stase/cfg.hpp"

#include <algorithm>
#include <functional>

namespace stase::cfg {

using mir::Function;
using mir::Instruction;
using mir::Module;
using mir::Opcode;

namespace {

// Iterative idom computation (Cooper, Harvey, Kennedy) over an RPO order.
// `roots` are nodes with no predecessor in the walked direction.
std::vector<int> compute_idoms(size_t n, const std::vector<std::vector<size_t>> &preds,
                               const std::vector<size_t> &rpo, size_t root) {
  std::vector<int> idom(n, -1);
  std::vector<int> rpo_num(n, -1);
  for (size_t i = 0; i < rpo.size(); ++i)
    rpo_num[rpo[i]] = static_cast<int>(i);
  idom[root] = static_cast<int>(root);
  auto intersect = [&](int a, int b) {
    while (a != b) {
      while (rpo_num[static_cast<size_t>(a)] > rpo_num[static_cast<size_t>(b)])
        a = idom[static_cast<size_t>(a)];
      while (rpo_num[static_cast<size_t>(b)] > rpo_num[static_cast<size_t>(a)])
        b = idom[static_cast<size_t>(b)];
    }
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i : rpo) {
      if (i == root)
        continue;
      int new_idom = -1;
      for (size_t p : preds[i]) {
        if (idom[p] == -1)
          continue;
        if (new_idom == -1)
          new_idom = static_cast<int>(p);
        else
          new_idom = intersect(new_idom, static_cast<int>(p));
      }
      if (new_idom != -1 && idom[i] != new_idom) {
        idom[i] = new_idom;
        changed = true;
      }
    }
  }
  idom[root] = -1;
  return idom;
}

std::vector<size_t> postorder(size_t n, size_t root,
                              const std::vector<std::vector<size_t>> &succs) {
  std::vector<size_t> order;
  std::vector<char> seen(n, 0);
  std::function<void(size_t)> walk = [&](size_t b) {
    if (seen[b])
      return;
    seen[b] = 1;
    for (size_t s : succs[b])
      walk(s);
    order.push_back(b);
  };
  walk(root);
  return order;
}

} // namespace

bool Cfg::dominates(size_t a, size_t b) const {
  if (!reachable[a] || !reachable[b])
    return false;
  size_t cur = b;
  for (;;) {
    if (cur == a)
      return true;
    int up = idom[cur];
    if (up < 0)
      return false;
    cur = static_cast<size_t>(up);
  }
}

bool Cfg::postdominates(size_t a, size_t b) const {
  size_t cur = b;
  for (;;) {
    if (cur == a)
      return true;
    int up = ipostdom[cur];
    if (up < 0)
      return false;
    cur = static_cast<size_t>(up);
  }
}

Cfg build_cfg(const Function &f) {
  Cfg g;
  g.fn = &f;
  size_t n = f.blocks.size();
  g.succs.assign(n, {});
  g.preds.assign(n, {});
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < n; ++i)
    index[f.blocks[i].label] = i;
  for (size_t i = 0; i < n; ++i) {
    if (f.blocks[i].instrs.empty())
      continue;
    const Instruction &t = f.blocks[i].instrs.back();
    auto add_edge = [&](const std::string &lbl) {
      auto it = index.find(lbl);
      if (it == index.end())
        return;
      g.succs[i].push_back(it->second);
      g.preds[it->second].push_back(i);
    };
    if (t.op == Opcode::Br) {
      add_edge(t.label_a);
    } else if (t.op == Opcode::CondBr) {
      add_edge(t.label_a);
      if (t.label_b != t.label_a)
        add_edge(t.label_b);
    }
  }
  if (n == 0)
    return g;

  // Forward: reachability, RPO, dominators.
  auto po = postorder(n, 0, g.succs);
  g.rpo.assign(po.rbegin(), po.rend());
  g.reachable.assign(n, false);
  for (size_t b : g.rpo)
    g.reachable[b] = true;
  g.idom = compute_idoms(n, g.preds, g.rpo, 0);

  // Backward: postdominators against a virtual exit. Every ret block is an
  // exit predecessor; blocks that cannot reach an exit (infinite loops) get a
  // direct virtual-exit edge so the tree is total and control deps stay
  // conservative.
  size_t vexit = n;
  std::vector<std::vector<size_t>> rsuccs(n + 1), rpreds(n + 1);
  auto radd = [&](size_t from, size_t to) {
    rsuccs[from].push_back(to);
    rpreds[to].push_back(from);
  };
  std::vector<bool> exits(n, false);
  for (size_t i = 0; i < n; ++i) {
    if (!f.blocks[i].instrs.empty() &&
        f.blocks[i].instrs.back().op == Opcode::Ret)
      exits[i] = true;
  }
  g.reaches_exit.assign(n, false);
  {
    // Backward BFS from exits over forward edges.
    std::vector<size_t> work;
    for (size_t i = 0; i < n; ++i)
      if (exits[i]) {
        g.reaches_exit[i] = true;
        work.push_back(i);
      }
    while (!work.empty()) {
      size_t b = work.back();
      work.pop_back();
      for (size_t p : g.preds[b])
        if (!g.reaches_exit[p]) {
          g.reaches_exit[p] = true;
          work.push_back(p);
        }
    }
  }
  for (size_t i = 0; i < n; ++i) {
    // reversed edges
    for (size_t s : g.succs[i])
      radd(s, i);
    if (exits[i] || (g.reachable[i] && !g.reaches_exit[i]))
      radd(vexit, i);
  }
  auto rpo_back = postorder(n + 1, vexit, rsuccs);
  std::reverse(rpo_back.begin(), rpo_back.end());
  auto pidom = compute_idoms(n + 1, rpreds, rpo_back, vexit);
  g.ipostdom.assign(n, -1);
  for (size_t i = 0; i < n; ++i)
    g.ipostdom[i] = pidom[i] == static_cast<int>(vexit) ? -1 : pidom[i];
  return g;
}

std::vector<std::set<size_t>> control_dependence(const Cfg &cfg) {
  size_t n = cfg.block_count();
  std::vector<std::set<size_t>> deps(n);
  // b is control dependent on a iff a has successors s1 where b postdominates
  // s1 (or b == s1) and b does not postdominate a.
  for (size_t a = 0; a < n; ++a) {
    if (!cfg.reachable[a] || cfg.succs[a].size() < 2)
      continue;
    for (size_t s : cfg.succs[a]) {
      // Walk the postdominator chain from s up to (but excluding) a's
      // immediate postdominator; everything on the way is control dep on a.
      size_t runner = s;
      int stop = cfg.ipostdom[a];
      while (static_cast<int>(runner) != stop) {
        deps[runner].insert(a);
        int up = cfg.ipostdom[runner];
        if (up < 0)
          break;
        runner = static_cast<size_t>(up);
      }
    }
  }
  return deps;
}

namespace {

// Matches the counted-loop shape: header's condbr compares an induction
// variable (phi in header) against a constant; the latch increments the phi
// by a constant step. Returns the trip count on success.
bool match_const_bound(const Module &m, const Function &f, const Cfg &cfg,
                       const NaturalLoop &loop, uint64_t *bound) {
  (void)cfg;
  const auto &header = f.blocks[loop.header];
  if (header.instrs.empty())
    return false;
  const Instruction &term = header.instrs.back();
  if (term.op != Opcode::CondBr)
    return false;
  // One successor must leave the loop.
  size_t then_idx = 0, else_idx = 0;
  {
    const mir::BasicBlock *tb = f.find_block(term.label_a);
    const mir::BasicBlock *eb = f.find_block(term.label_b);
    if (!tb || !eb)
      return false;
    then_idx = static_cast<size_t>(tb - f.blocks.data());
    else_idx = static_cast<size_t>(eb - f.blocks.data());
  }
  bool then_in = loop.body.count(then_idx) > 0;
  bool else_in = loop.body.count(else_idx) > 0;
  if (then_in == else_in)
    return false;
  if (term.operands[0].kind != mir::Operand::Kind::Local)
    return false;
  // Find the compare defining the condition within the header.
  const Instruction *cmp = nullptr;
  for (const auto &in : header.instrs)
    if (in.result == term.operands[0].name && in.op == Opcode::ICmp)
      cmp = &in;
  if (!cmp)
    return false;
  // One side is the induction phi, the other a constant.
  const mir::Operand *ind = nullptr, *lim = nullptr;
  if (cmp->operands[0].kind == mir::Operand::Kind::Local &&
      cmp->operands[1].kind == mir::Operand::Kind::Const) {
    ind = &cmp->operands[0];
    lim = &cmp->operands[1];
  } else if (cmp->operands[1].kind == mir::Operand::Kind::Local &&
             cmp->operands[0].kind == mir::Operand::Kind::Const) {
    ind = &cmp->operands[1];
    lim = &cmp->operands[0];
  } else {
    return false;
  }
  // The induction variable is a phi in the header with a constant initial
  // value from outside and an add/sub of constant step around the loop.
  const Instruction *phi = nullptr;
  for (const auto &in : header.instrs)
    if (in.op == Opcode::Phi && in.result == ind->name)
      phi = &in;
  if (!phi || phi->phi_in.size() != 2)
    return false;
  uint64_t init = 0;
  const mir::Operand *step_val = nullptr;
  bool found_init = false;
  for (const auto &[v, lbl] : phi->phi_in) {
    const mir::BasicBlock *pb = f.find_block(lbl);
    if (!pb)
      return false;
    size_t pi = static_cast<size_t>(pb - f.blocks.data());
    if (loop.body.count(pi)) {
      step_val = &v;
    } else if (v.kind == mir::Operand::Kind::Const) {
      init = v.value;
      found_init = true;
    }
  }
  if (!found_init || !step_val || step_val->kind != mir::Operand::Kind::Local)
    return false;
  const Instruction *step = nullptr;
  for (const auto &r : mir::all_instrs(f))
    if (r.instr->result == step_val->name)
      step = r.instr;
  if (!step || (step->op != Opcode::Add && step->op != Opcode::Sub))
    return false;
  uint64_t stepc = 0;
  if (step->operands[0].kind == mir::Operand::Kind::Local &&
      step->operands[0].name == ind->name &&
      step->operands[1].kind == mir::Operand::Kind::Const)
    stepc = step->operands[1].value;
  else if (step->op == Opcode::Add &&
           step->operands[1].kind == mir::Operand::Kind::Local &&
           step->operands[1].name == ind->name &&
           step->operands[0].kind == mir::Operand::Kind::Const)
    stepc = step->operands[0].value;
  else
    return false;
  if (stepc == 0)
    return false;
  (void)m;
  // Conservative trip count for the canonical ascending form
  // (i = init; i < limit; i += step) with the in-loop branch on success.
  uint64_t limit = lim->value;
  bool exit_on_false = then_in; // cond true stays in loop
  if (step->op == Opcode::Add && exit_on_false &&
      (cmp->pred == mir::ICmpPred::Ult || cmp->pred == mir::ICmpPred::Slt) &&
      ind == &cmp->operands[0]) {
    if (limit <= init) {
      *bound = 0;
      return true;
    }
    *bound = (limit - init + stepc - 1) / stepc;
    return true;
  }
  if (step->op == Opcode::Add && exit_on_false &&
      (cmp->pred == mir::ICmpPred::Ule || cmp->pred == mir::ICmpPred::Sle) &&
      ind == &cmp->operands[0]) {
    if (limit < init) {
      *bound = 0;
      return true;
    }
    *bound = (limit - init) / stepc + 1;
    return true;
  }
  return false;
}

} // namespace

std::vector<NaturalLoop> find_natural_loops(const Module &m, const Function &f,
                                            const Cfg &cfg, bool *irreducible) {
  if (irreducible)
    *irreducible = false;
  std::map<size_t, NaturalLoop> by_header;
  size_t n = cfg.block_count();
  for (size_t b = 0; b < n; ++b) {
    if (!cfg.reachable[b])
      continue;
    for (size_t s : cfg.succs[b]) {
      if (!cfg.dominates(s, b)) {
        // A back edge in DFS terms that is not dominator-based means the CFG
        // is irreducible.
        // Detect retreating edges: s appears before b in RPO.
        continue;
      }
      // Back edge b -> s: collect the natural loop.
      NaturalLoop &loop = by_header[s];
      loop.header = s;
      loop.latches.push_back(b);
      loop.body.insert(s);
      std::vector<size_t> work{b};
      while (!work.empty()) {
        size_t x = work.back();
        work.pop_back();
        if (loop.body.count(x))
          continue;
        loop.body.insert(x);
        for (size_t p : cfg.preds[x])
          work.push_back(p);
      }
    }
  }
  // Irreducibility: a retreating edge (by RPO) that is not a dominator back
  // edge.
  std::vector<int> rpo_num(n, -1);
  for (size_t i = 0; i < cfg.rpo.size(); ++i)
    rpo_num[cfg.rpo[i]] = static_cast<int>(i);
  for (size_t b = 0; b < n; ++b) {
    if (!cfg.reachable[b])
      continue;
    for (size_t s : cfg.succs[b]) {
      if (rpo_num[s] >= 0 && rpo_num[s] <= rpo_num[b] && !cfg.dominates(s, b)) {
        if (irreducible)
          *irreducible = true;
      }
    }
  }
  std::vector<NaturalLoop> out;
  for (auto &[h, loop] : by_header) {
    std::sort(loop.latches.begin(), loop.latches.end());
    loop.has_const_bound = match_const_bound(m, f, cfg, loop, &loop.const_bound);
    out.push_back(std::move(loop));
  }
  return out;
}

} // namespace stase::cfg
