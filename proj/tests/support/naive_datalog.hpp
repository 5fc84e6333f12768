//===-- naive_datalog.hpp - Naive fixpoint oracle (test-only) -------------===//
//
// Straightforward stratified naive iteration: per stratum, apply every rule
// against the full database until nothing changes. Kept independent of the
// semi-naive engine; only the parsed Program structures are shared.
//
//===----------------------------------------------------------------------===//

#ifndef STASE_TESTS_NAIVE_DATALOG_HPP
#define STASE_TESTS_NAIVE_DATALOG_HPP

#include "stase/datalog.hpp"

#include <map>
#include <optional>

namespace stase::test_support {

using datalog::Database;
using datalog::Value;

inline std::optional<Value> naive_term_value(
    const datalog::Term &t, const std::map<std::string, Value> &env) {
  using K = datalog::Term::Kind;
  switch (t.kind) {
  case K::ConstStr:
    return Value(t.text);
  case K::ConstNum:
    return Value(t.num);
  case K::Var: {
    auto it = env.find(t.text);
    if (it == env.end())
      return std::nullopt;
    return it->second;
  }
  default:
    return std::nullopt;
  }
}

inline bool naive_match(const datalog::Atom &atom, const datalog::Tuple &tuple,
                        std::map<std::string, Value> &env) {
  using K = datalog::Term::Kind;
  for (size_t i = 0; i < atom.args.size(); ++i) {
    const auto &t = atom.args[i];
    switch (t.kind) {
    case K::Wildcard:
      break;
    case K::ConstStr:
      if (!(tuple[i] == Value(t.text)))
        return false;
      break;
    case K::ConstNum:
      if (!(tuple[i] == Value(t.num)))
        return false;
      break;
    case K::Var: {
      auto it = env.find(t.text);
      if (it == env.end())
        env.emplace(t.text, tuple[i]);
      else if (!(it->second == tuple[i]))
        return false;
      break;
    }
    }
  }
  return true;
}

inline bool naive_builtin(const datalog::Literal &lit,
                          const std::map<std::string, Value> &env) {
  auto a = naive_term_value(lit.lhs, env);
  auto b = naive_term_value(lit.rhs, env);
  if (!a || !b)
    return false;
  using Op = datalog::BuiltinOp;
  switch (lit.op) {
  case Op::Eq:
    return *a == *b;
  case Op::Ne:
    return !(*a == *b);
  case Op::Substr:
    return std::holds_alternative<std::string>(*a) &&
           std::holds_alternative<std::string>(*b) &&
           std::get<std::string>(*b).find(std::get<std::string>(*a)) !=
               std::string::npos;
  default:
    break;
  }
  if (!std::holds_alternative<int64_t>(*a) ||
      !std::holds_alternative<int64_t>(*b))
    return false;
  int64_t x = std::get<int64_t>(*a), y = std::get<int64_t>(*b);
  switch (lit.op) {
  case Op::Lt:
    return x < y;
  case Op::Le:
    return x <= y;
  case Op::Gt:
    return x > y;
  case Op::Ge:
    return x >= y;
  default:
    return false;
  }
}

inline void naive_expand(const datalog::Rule &rule, size_t idx,
                         std::map<std::string, Value> env, const Database &db,
                         datalog::TupleSet &out) {
  if (idx == rule.body.size()) {
    datalog::Tuple t;
    for (const auto &arg : rule.head.args) {
      auto v = naive_term_value(arg, env);
      if (!v)
        return;
      t.push_back(*v);
    }
    out.insert(std::move(t));
    return;
  }
  const auto &lit = rule.body[idx];
  using K = datalog::Literal::Kind;
  if (lit.kind == K::Builtin) {
    if (naive_builtin(lit, env))
      naive_expand(rule, idx + 1, std::move(env), db, out);
    return;
  }
  auto it = db.find(lit.atom.relation);
  const datalog::TupleSet empty;
  const datalog::TupleSet &rel = it == db.end() ? empty : it->second;
  if (lit.kind == K::Negative) {
    for (const auto &tuple : rel) {
      auto scratch = env;
      if (naive_match(lit.atom, tuple, scratch))
        return; // a witness exists; negation fails
    }
    naive_expand(rule, idx + 1, std::move(env), db, out);
    return;
  }
  for (const auto &tuple : rel) {
    auto scratch = env;
    if (naive_match(lit.atom, tuple, scratch))
      naive_expand(rule, idx + 1, std::move(scratch), db, out);
  }
}

inline Database naive_evaluate(const datalog::Program &p,
                               const Database &facts) {
  Database db = facts;
  for (const auto &stratum : p.strata) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (size_t ri : stratum) {
        datalog::TupleSet derived;
        naive_expand(p.rules[ri], 0, {}, db, derived);
        auto &target = db[p.rules[ri].head.relation];
        for (const auto &t : derived)
          if (target.insert(t).second)
            changed = true;
      }
    }
  }
  for (const auto &d : p.relations)
    db.try_emplace(d.name);
  return db;
}

} // namespace stase::test_support

#endif // STASE_TESTS_NAIVE_DATALOG_HPP
