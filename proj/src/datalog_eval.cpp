//===-- datalog_eval.cpp - Semi-naive stratified evaluation ---------------===//

#include "stase/datalog.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace stase::datalog {

namespace {

using Env = std::map<std::string, Value>;

bool unify_term(const Term &t, const Value &v, Env &env) {
  switch (t.kind) {
  case Term::Kind::Wildcard:
    return true;
  case Term::Kind::ConstStr:
    return std::holds_alternative<std::string>(v) &&
           std::get<std::string>(v) == t.text;
  case Term::Kind::ConstNum:
    return std::holds_alternative<int64_t>(v) && std::get<int64_t>(v) == t.num;
  case Term::Kind::Var: {
    auto it = env.find(t.text);
    if (it == env.end()) {
      env.emplace(t.text, v);
      return true;
    }
    return it->second == v;
  }
  }
  return false;
}

std::optional<Value> term_value(const Term &t, const Env &env) {
  switch (t.kind) {
  case Term::Kind::ConstStr:
    return Value(t.text);
  case Term::Kind::ConstNum:
    return Value(t.num);
  case Term::Kind::Var: {
    auto it = env.find(t.text);
    if (it == env.end())
      return std::nullopt;
    return it->second;
  }
  case Term::Kind::Wildcard:
    return std::nullopt;
  }
  return std::nullopt;
}

bool eval_builtin(const Literal &lit, const Env &env) {
  auto a = term_value(lit.lhs, env);
  auto b = term_value(lit.rhs, env);
  if (!a || !b)
    return false; // safety checks make this unreachable
  switch (lit.op) {
  case BuiltinOp::Eq:
    return *a == *b;
  case BuiltinOp::Ne:
    return !(*a == *b);
  case BuiltinOp::Substr: {
    if (!std::holds_alternative<std::string>(*a) ||
        !std::holds_alternative<std::string>(*b))
      return false;
    return std::get<std::string>(*b).find(std::get<std::string>(*a)) !=
           std::string::npos;
  }
  default: {
    if (!std::holds_alternative<int64_t>(*a) ||
        !std::holds_alternative<int64_t>(*b))
      return false;
    int64_t x = std::get<int64_t>(*a), y = std::get<int64_t>(*b);
    switch (lit.op) {
    case BuiltinOp::Lt:
      return x < y;
    case BuiltinOp::Le:
      return x <= y;
    case BuiltinOp::Gt:
      return x > y;
    case BuiltinOp::Ge:
      return x >= y;
    default:
      return false;
    }
  }
  }
}

bool atom_matches_any(const Atom &atom, const TupleSet &rel, const Env &env) {
  for (const auto &tuple : rel) {
    Env scratch = env;
    bool ok = true;
    for (size_t i = 0; i < atom.args.size(); ++i)
      if (!unify_term(atom.args[i], tuple[i], scratch)) {
        ok = false;
        break;
      }
    if (ok)
      return true;
  }
  return false;
}

const TupleSet &rel_or_empty(const Database &db, const std::string &name) {
  static const TupleSet empty;
  auto it = db.find(name);
  return it == db.end() ? empty : it->second;
}

struct Evaluator {
  const Program &prog;
  const EvalOptions &opts;
  Database db;
  size_t total_tuples = 0;
  bool overflow = false;

  // Evaluates one rule; when delta_pos >= 0 that positive literal reads from
  // `delta` instead of the full database. New head tuples land in `out`.
  void eval_rule(const Rule &rule, int delta_pos, const Database &delta,
                 TupleSet &out) {
    std::function<void(size_t, Env &)> step = [&](size_t idx, Env &env) {
      if (overflow)
        return;
      if (idx == rule.body.size()) {
        Tuple t;
        t.reserve(rule.head.args.size());
        for (const auto &arg : rule.head.args) {
          auto v = term_value(arg, env);
          if (!v)
            return; // unbound head var; rejected by safety checks
          t.push_back(std::move(*v));
        }
        out.insert(std::move(t));
        return;
      }
      const Literal &lit = rule.body[idx];
      switch (lit.kind) {
      case Literal::Kind::Positive: {
        int pos_index = 0;
        for (size_t j = 0; j < idx; ++j)
          if (rule.body[j].kind == Literal::Kind::Positive)
            ++pos_index;
        const TupleSet &rel =
            (delta_pos >= 0 && pos_index == delta_pos)
                ? rel_or_empty(delta, lit.atom.relation)
                : rel_or_empty(db, lit.atom.relation);
        for (const auto &tuple : rel) {
          Env scratch = env;
          bool ok = true;
          for (size_t i = 0; i < lit.atom.args.size(); ++i)
            if (!unify_term(lit.atom.args[i], tuple[i], scratch)) {
              ok = false;
              break;
            }
          if (ok)
            step(idx + 1, scratch);
        }
        return;
      }
      case Literal::Kind::Negative:
        if (!atom_matches_any(lit.atom, rel_or_empty(db, lit.atom.relation),
                              env))
          step(idx + 1, env);
        return;
      case Literal::Kind::Builtin:
        if (eval_builtin(lit, env))
          step(idx + 1, env);
        return;
      }
    };
    Env env;
    step(0, env);
  }

  bool add_tuples(const std::string &rel, const TupleSet &tuples,
                  Database &delta_out) {
    bool added = false;
    TupleSet &target = db[rel];
    for (const auto &t : tuples) {
      if (target.insert(t).second) {
        delta_out[rel].insert(t);
        ++total_tuples;
        added = true;
        if (total_tuples > opts.max_tuples) {
          overflow = true;
          return added;
        }
      }
    }
    return added;
  }

  void run_stratum(const std::vector<size_t> &rule_indices) {
    // Which relations are derived inside this stratum (delta tracking).
    std::set<std::string> local;
    for (size_t ri : rule_indices)
      local.insert(prog.rules[ri].head.relation);

    // Round 0: naive pass over current database.
    Database delta;
    for (size_t ri : rule_indices) {
      TupleSet out;
      eval_rule(prog.rules[ri], -1, {}, out);
      add_tuples(prog.rules[ri].head.relation, out, delta);
      if (overflow)
        return;
    }
    // Semi-naive rounds: join each positive in-stratum literal against the
    // previous delta.
    while (!delta.empty() && !overflow) {
      Database next_delta;
      for (size_t ri : rule_indices) {
        const Rule &rule = prog.rules[ri];
        int pos_index = -1;
        for (const auto &lit : rule.body) {
          if (lit.kind != Literal::Kind::Positive)
            continue;
          ++pos_index;
          if (!local.count(lit.atom.relation))
            continue;
          if (delta.find(lit.atom.relation) == delta.end())
            continue;
          TupleSet out;
          eval_rule(rule, pos_index, delta, out);
          add_tuples(rule.head.relation, out, next_delta);
          if (overflow)
            return;
        }
      }
      delta = std::move(next_delta);
    }
  }
};

} // namespace

EvalResult evaluate_fixpoint(const Program &p, const Database &facts,
                             const EvalOptions &opts) {
  EvalResult res;
  for (const auto &[name, tuples] : facts) {
    const RelationDecl *d = p.find_relation(name);
    if (!d) {
      res.error = "facts populate undeclared relation '" + name + "'";
      return res;
    }
    if (d->intensional) {
      res.error = "facts populate intensional relation '" + name + "'";
      return res;
    }
    for (const auto &t : tuples)
      if (t.size() != d->arity()) {
        res.error = "arity mismatch in facts for relation '" + name + "'";
        return res;
      }
  }
  Evaluator ev{p, opts, facts};
  for (const auto &[name, tuples] : facts)
    ev.total_tuples += tuples.size();
  for (const auto &stratum : p.strata) {
    ev.run_stratum(stratum);
    if (ev.overflow) {
      res.overflow = true;
      res.error = "tuple ceiling exceeded (" + std::to_string(opts.max_tuples) +
                  " tuples)";
      return res;
    }
  }
  // Every declared relation appears in the output, empty or not.
  for (const auto &d : p.relations)
    ev.db.try_emplace(d.name);
  res.db = std::move(ev.db);
  return res;
}

std::optional<TupleSet> query(const Database &db, const std::string &relation,
                              const std::vector<std::optional<Value>> &pattern) {
  auto it = db.find(relation);
  if (it == db.end())
    return std::nullopt;
  TupleSet out;
  for (const auto &t : it->second) {
    if (t.size() != pattern.size())
      continue;
    bool ok = true;
    for (size_t i = 0; i < pattern.size(); ++i)
      if (pattern[i] && !(*pattern[i] == t[i])) {
        ok = false;
        break;
      }
    if (ok)
      out.insert(t);
  }
  return out;
}

std::string value_to_string(const Value &v) {
  if (std::holds_alternative<int64_t>(v))
    return std::to_string(std::get<int64_t>(v));
  return std::get<std::string>(v);
}

bool write_facts_dir(const Database &db, const std::string &dir,
                     std::string *error) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    if (error)
      *error = "cannot create directory " + dir;
    return false;
  }
  for (const auto &[name, tuples] : db) {
    std::ofstream out(dir + "/" + name + ".facts", std::ios::binary);
    if (!out) {
      if (error)
        *error = "cannot write " + dir + "/" + name + ".facts";
      return false;
    }
    for (const auto &t : tuples) {
      for (size_t i = 0; i < t.size(); ++i) {
        if (i)
          out << '\t';
        out << value_to_string(t[i]);
      }
      out << '\n';
    }
  }
  return true;
}

bool read_facts_dir(const Program &schema, const std::string &dir,
                    Database *out, std::string *error) {
  out->clear();
  for (const auto &d : schema.relations) {
    std::string path = dir + "/" + d.name + ".facts";
    std::ifstream in(path, std::ios::binary);
    if (!in)
      continue; // absent file = empty relation
    TupleSet &set = (*out)[d.name];
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty())
        continue;
      Tuple t;
      size_t start = 0;
      for (size_t col = 0; col < d.arity(); ++col) {
        size_t tab = line.find('\t', start);
        std::string cell = tab == std::string::npos
                               ? line.substr(start)
                               : line.substr(start, tab - start);
        start = tab == std::string::npos ? line.size() : tab + 1;
        if (d.attrs[col].second == AttrType::Number) {
          try {
            t.push_back(Value(static_cast<int64_t>(std::stoll(cell))));
          } catch (...) {
            if (error)
              *error = path + ":" + std::to_string(lineno) +
                       ": expected number in column " + std::to_string(col + 1);
            return false;
          }
        } else {
          t.push_back(Value(cell));
        }
      }
      set.insert(std::move(t));
    }
  }
  return true;
}

} // namespace stase::datalog
