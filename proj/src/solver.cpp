//===-- solver.cpp - Built-in decision procedure and SMT bridge -----------===//
//
// solve() pipeline: flatten the conjunction, propagate symbol=constant
// equalities, fold, derive per-symbol unsigned intervals from the remaining
// top-level conjuncts, then enumerate when the pruned domain product fits the
// bit budget. A deterministic value probe runs first so wide-but-trivial
// queries (null checks on 64-bit addresses) resolve without enumeration.
// Everything else escalates to an SMT-LIB2 script and, when configured, an
// external solver process.
//
//===----------------------------------------------------------------------===//

#include "stase/symexec.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace stase::sym {

Solver::Solver(SolverOptions opts) : opts_(std::move(opts)) {}

namespace {

void flatten_and(const ExprRef &e, std::vector<ExprRef> &out) {
  if (e->op == Expr::Op::And) {
    flatten_and(e->args[0], out);
    flatten_and(e->args[1], out);
  } else {
    out.push_back(e);
  }
}

ExprRef substitute(const ExprRef &e, const Model &pin) {
  if (e->op == Expr::Op::Sym) {
    auto it = pin.find(e->sym);
    return it == pin.end() ? e : e_const(it->second, e->width);
  }
  if (e->args.empty())
    return e;
  std::vector<ExprRef> args;
  bool changed = false;
  for (const auto &a : e->args) {
    auto na = substitute(a, pin);
    changed |= na != a;
    args.push_back(std::move(na));
  }
  if (!changed)
    return e;
  switch (e->op) {
  case Expr::Op::Add:
    return e_add(args[0], args[1]);
  case Expr::Op::Sub:
    return e_sub(args[0], args[1]);
  case Expr::Op::Mul:
    return e_mul(args[0], args[1]);
  case Expr::Op::UDiv:
    return e_udiv(args[0], args[1]);
  case Expr::Op::SDiv:
    return e_sdiv(args[0], args[1]);
  case Expr::Op::And:
    return e_and(args[0], args[1]);
  case Expr::Op::Or:
    return e_or(args[0], args[1]);
  case Expr::Op::Not:
    return e_not(args[0]);
  case Expr::Op::Eq:
    return e_eq(args[0], args[1]);
  case Expr::Op::Ult:
    return e_ult(args[0], args[1]);
  case Expr::Op::Slt:
    return e_slt(args[0], args[1]);
  case Expr::Op::Zext:
    return e_zext(args[0], e->width);
  case Expr::Op::Trunc:
    return e_trunc(args[0], e->width);
  case Expr::Op::Ite:
    return e_ite(args[0], args[1], args[2]);
  default:
    return e;
  }
}

// Unwraps zext chains down to a bare symbol.
const Expr *bare_symbol(const ExprRef &e) {
  const Expr *cur = e.get();
  while (cur->op == Expr::Op::Zext)
    cur = cur->args[0].get();
  return cur->op == Expr::Op::Sym ? cur : nullptr;
}

struct Interval {
  uint64_t lo = 0;
  uint64_t hi = UINT64_MAX; // inclusive, within symbol width
};

// Conservative per-symbol intervals from one top-level conjunct.
void refine_interval(const ExprRef &conj, std::map<std::string, Interval> &iv,
                     const std::map<std::string, unsigned> &widths) {
  auto clamp_hi = [&](const std::string &s, uint64_t hi) {
    auto &i = iv[s];
    i.hi = std::min(i.hi, hi);
  };
  auto clamp_lo = [&](const std::string &s, uint64_t lo) {
    auto &i = iv[s];
    i.lo = std::max(i.lo, lo);
  };
  (void)widths;
  if (conj->op == Expr::Op::Eq) {
    const Expr *s = bare_symbol(conj->args[0]);
    if (s && is_const(conj->args[1])) {
      clamp_lo(s->sym, conj->args[1]->value);
      clamp_hi(s->sym, conj->args[1]->value);
    }
    s = bare_symbol(conj->args[1]);
    if (s && is_const(conj->args[0])) {
      clamp_lo(s->sym, conj->args[0]->value);
      clamp_hi(s->sym, conj->args[0]->value);
    }
    return;
  }
  if (conj->op == Expr::Op::Ult) {
    const Expr *s = bare_symbol(conj->args[0]);
    if (s && is_const(conj->args[1]) && conj->args[1]->value > 0)
      clamp_hi(s->sym, conj->args[1]->value - 1);
    s = bare_symbol(conj->args[1]);
    if (s && is_const(conj->args[0]) && conj->args[0]->value < UINT64_MAX)
      clamp_lo(s->sym, conj->args[0]->value + 1);
    return;
  }
  // not(a < b)  ==  a >= b
  if (conj->op == Expr::Op::Not && conj->args[0]->op == Expr::Op::Ult) {
    const auto &lt = conj->args[0];
    const Expr *s = bare_symbol(lt->args[0]);
    if (s && is_const(lt->args[1]))
      clamp_lo(s->sym, lt->args[1]->value); // s >= c
    s = bare_symbol(lt->args[1]);
    if (s && is_const(lt->args[0]))
      clamp_hi(s->sym, lt->args[0]->value); // c >= s
    return;
  }
}

uint64_t width_max(unsigned w) {
  return w >= 64 ? UINT64_MAX : (UINT64_C(1) << w) - 1;
}

} // namespace

SolveResult Solver::solve(const ExprRef &boolean) {
  std::string key = expr_to_string(boolean);
  auto cached = cache_.find(key);
  if (cached != cache_.end())
    return cached->second;
  ++queries_;

  SolveResult res;
  ExprRef cur = boolean;
  Model pinned;
  // Equality propagation to a fixed point (small formulas; a few rounds).
  for (int round = 0; round < 8; ++round) {
    if (is_const(cur))
      break;
    std::vector<ExprRef> conjuncts;
    flatten_and(cur, conjuncts);
    Model found;
    for (const auto &c : conjuncts) {
      if (c->op != Expr::Op::Eq)
        continue;
      const Expr *s = bare_symbol(c->args[0]);
      if (s && is_const(c->args[1]) && !pinned.count(s->sym))
        found[s->sym] = c->args[1]->value;
      s = bare_symbol(c->args[1]);
      if (s && is_const(c->args[0]) && !pinned.count(s->sym))
        found[s->sym] = c->args[0]->value;
    }
    if (found.empty())
      break;
    for (const auto &[k, v] : found)
      pinned[k] = v;
    cur = substitute(cur, pinned);
  }

  if (is_true(cur)) {
    res.status = SolveStatus::Sat;
    res.model = pinned;
    cache_[key] = res;
    return res;
  }
  if (is_false(cur)) {
    res.status = SolveStatus::Unsat;
    cache_[key] = res;
    return res;
  }

  std::map<std::string, unsigned> syms;
  collect_symbols(cur, syms);

  // Deterministic value probe: candidate values per symbol from the
  // constants appearing in the formula. Any hit is a verified model.
  {
    std::map<std::string, std::vector<uint64_t>> candidates;
    std::set<uint64_t> consts{0, 1};
    std::function<void(const ExprRef &)> collect_consts =
        [&](const ExprRef &e) {
          if (e->op == Expr::Op::Const) {
            consts.insert(e->value);
            consts.insert(e->value + 1);
            if (e->value > 0)
              consts.insert(e->value - 1);
          }
          for (const auto &a : e->args)
            collect_consts(a);
        };
    collect_consts(cur);
    size_t combo = 1;
    for (const auto &[name, width] : syms) {
      auto &c = candidates[name];
      for (uint64_t v : consts)
        if (v <= width_max(width))
          c.push_back(v);
      c.push_back(width_max(width));
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
      combo *= c.size();
      if (combo > 65536)
        break;
    }
    if (combo <= 65536 && !syms.empty()) {
      std::vector<std::string> names;
      for (const auto &[name, width] : syms) {
        (void)width;
        names.push_back(name);
      }
      std::vector<size_t> idx(names.size(), 0);
      for (;;) {
        Model m = pinned;
        for (size_t i = 0; i < names.size(); ++i)
          m[names[i]] = candidates[names[i]][idx[i]];
        if (eval_expr(cur, m)) {
          res.status = SolveStatus::Sat;
          res.model = std::move(m);
          cache_[key] = res;
          return res;
        }
        size_t i = 0;
        for (; i < names.size(); ++i) {
          if (++idx[i] < candidates[names[i]].size())
            break;
          idx[i] = 0;
        }
        if (i == names.size())
          break;
      }
    }
  }

  // Interval pruning + bounded enumeration for UNSAT completeness.
  std::map<std::string, Interval> iv;
  {
    std::vector<ExprRef> conjuncts;
    flatten_and(cur, conjuncts);
    for (const auto &c : conjuncts)
      refine_interval(c, iv, syms);
  }
  long double domain = 1.0L;
  bool enumerable = true;
  std::vector<std::pair<std::string, Interval>> order;
  for (const auto &[name, width] : syms) {
    Interval i;
    auto it = iv.find(name);
    if (it != iv.end())
      i = it->second;
    i.hi = std::min(i.hi, width_max(width));
    if (i.lo > i.hi) {
      res.status = SolveStatus::Unsat;
      cache_[key] = res;
      return res;
    }
    domain *= static_cast<long double>(i.hi - i.lo) + 1.0L;
    order.push_back({name, i});
  }
  long double budget = 1.0L;
  for (unsigned b = 0; b < opts_.budget_bits; ++b)
    budget *= 2.0L;
  if (domain > budget)
    enumerable = false;

  if (enumerable) {
    std::vector<uint64_t> val(order.size());
    for (size_t i = 0; i < order.size(); ++i)
      val[i] = order[i].second.lo;
    for (;;) {
      Model m = pinned;
      for (size_t i = 0; i < order.size(); ++i)
        m[order[i].first] = val[i];
      if (eval_expr(cur, m)) {
        res.status = SolveStatus::Sat;
        res.model = std::move(m);
        cache_[key] = res;
        return res;
      }
      size_t i = 0;
      for (; i < order.size(); ++i) {
        if (val[i] < order[i].second.hi) {
          ++val[i];
          break;
        }
        val[i] = order[i].second.lo;
      }
      if (i == order.size() || order.empty())
        break;
    }
    res.status = SolveStatus::Unsat;
    cache_[key] = res;
    return res;
  }

  // SMT-LIB2 escalation.
  std::vector<ExprRef> conjuncts;
  flatten_and(cur, conjuncts);
  std::string script = emit_smt2(conjuncts);
  if (!opts_.smt_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opts_.smt_dir, ec);
    std::string path =
        opts_.smt_dir + "/query_" + std::to_string(emitted_++) + ".smt2";
    std::ofstream out(path, std::ios::binary);
    out << script;
    res.smt2_file = path;
  }
  if (!opts_.external_cmd.empty()) {
    std::string path = res.smt2_file;
    if (path.empty()) {
      path = (std::filesystem::temp_directory_path() /
              ("stase_query_" + std::to_string(emitted_++) + ".smt2"))
                 .string();
      std::ofstream out(path, std::ios::binary);
      out << script;
    }
    std::string cmd = opts_.external_cmd + " " + path + " 2>/dev/null";
    std::string output;
    if (FILE *pipe = popen(cmd.c_str(), "r")) {
      char buf[4096];
      size_t n;
      while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0)
        output.append(buf, n);
      pclose(pipe);
    }
    std::istringstream is(output);
    std::string first;
    std::getline(is, first);
    if (first == "unsat") {
      res.status = SolveStatus::Unsat;
      cache_[key] = res;
      return res;
    }
    if (first == "sat") {
      // parse (define-fun |name| () (_ BitVec w) #xHH / #bBB / (_ bvN w))
      Model m = pinned;
      std::string rest((std::istreambuf_iterator<char>(is)),
                       std::istreambuf_iterator<char>());
      size_t pos = 0;
      while ((pos = rest.find("define-fun", pos)) != std::string::npos) {
        pos += 10;
        size_t nstart = rest.find_first_not_of(" |", pos);
        size_t nend = rest.find_first_of("| (", nstart);
        if (nstart == std::string::npos || nend == std::string::npos)
          break;
        std::string name = rest.substr(nstart, nend - nstart);
        size_t vpos = rest.find_first_of("#", nend);
        size_t bvpos = rest.find("(_ bv", nend);
        uint64_t value = 0;
        bool got = false;
        if (vpos != std::string::npos &&
            (bvpos == std::string::npos || vpos < bvpos)) {
          char kind = rest[vpos + 1];
          size_t dstart = vpos + 2;
          size_t dend = rest.find_first_of(") \n", dstart);
          std::string digits = rest.substr(dstart, dend - dstart);
          try {
            value = std::stoull(digits, nullptr, kind == 'x' ? 16 : 2);
            got = true;
          } catch (...) {
          }
        } else if (bvpos != std::string::npos) {
          size_t dstart = bvpos + 5;
          size_t dend = rest.find_first_of(" )", dstart);
          try {
            value = std::stoull(rest.substr(dstart, dend - dstart));
            got = true;
          } catch (...) {
          }
        }
        if (got)
          m[name] = value;
        pos = nend;
      }
      if (eval_expr(cur, m)) { // model check before trusting the solver
        res.status = SolveStatus::Sat;
        res.model = std::move(m);
        cache_[key] = res;
        return res;
      }
    }
  }
  res.status = SolveStatus::Unknown;
  ++unknowns_;
  cache_[key] = res;
  return res;
}

} // namespace stase::sym
