//===-- datalog_parse.cpp - Rule DSL parser and stratifier ----------------===//

#include "stase/datalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

namespace stase::datalog {

Term Term::var(std::string n) {
  Term t;
  t.kind = Kind::Var;
  t.text = std::move(n);
  return t;
}
Term Term::wildcard() {
  Term t;
  t.kind = Kind::Wildcard;
  return t;
}
Term Term::str(std::string s) {
  Term t;
  t.kind = Kind::ConstStr;
  t.text = std::move(s);
  return t;
}
Term Term::number(int64_t n) {
  Term t;
  t.kind = Kind::ConstNum;
  t.num = n;
  return t;
}

const RelationDecl *Program::find_relation(const std::string &name) const {
  for (const auto &r : relations)
    if (r.name == name)
      return &r;
  return nullptr;
}

namespace {

struct Tok {
  enum class Kind { Ident, Var, Wildcard, Number, String, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  int64_t num = 0;
  uint32_t line = 1, col = 1;
};

struct RuleLexer {
  std::string_view text;
  size_t pos = 0;
  uint32_t line = 1, col = 1;

  void bump() {
    if (pos < text.size() && text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  void skip() {
    for (;;) {
      while (pos < text.size() &&
             std::isspace(static_cast<unsigned char>(text[pos])))
        bump();
      if (text.substr(pos, 2) == "//") {
        while (pos < text.size() && text[pos] != '\n')
          bump();
        continue;
      }
      if (text.substr(pos, 2) == "/*") {
        while (pos < text.size() && text.substr(pos, 2) != "*/")
          bump();
        bump();
        bump();
        continue;
      }
      break;
    }
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  Tok next() {
    skip();
    Tok t;
    t.line = line;
    t.col = col;
    if (pos >= text.size())
      return t;
    char c = text[pos];
    if (c == '"') {
      t.kind = Tok::Kind::String;
      bump();
      while (pos < text.size() && text[pos] != '"') {
        t.text += text[pos];
        bump();
      }
      bump();
      return t;
    }
    if (c == '?') {
      t.kind = Tok::Kind::Var;
      bump();
      while (pos < text.size() && ident_char(text[pos])) {
        t.text += text[pos];
        bump();
      }
      return t;
    }
    if (c == '_' && (pos + 1 >= text.size() || !ident_char(text[pos + 1]))) {
      t.kind = Tok::Kind::Wildcard;
      bump();
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos + 1 < text.size() &&
         std::isdigit(static_cast<unsigned char>(text[pos + 1])))) {
      t.kind = Tok::Kind::Number;
      std::string num;
      if (c == '-') {
        num += c;
        bump();
      }
      while (pos < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[pos]))) {
        num += text[pos];
        bump();
      }
      t.num = std::stoll(num);
      t.text = num;
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
        (c == '.' && pos + 1 < text.size() &&
         std::isalpha(static_cast<unsigned char>(text[pos + 1])))) {
      t.kind = Tok::Kind::Ident;
      if (c == '.') { // ".decl" directive
        t.text += c;
        bump();
      }
      while (pos < text.size()) {
        char d = text[pos];
        if (ident_char(d)) {
          t.text += d;
          bump();
          continue;
        }
        // Dots join qualified names (subset.var_points_to) but a trailing
        // dot is the clause terminator.
        if (d == '.' && pos + 1 < text.size() && ident_char(text[pos + 1])) {
          t.text += d;
          bump();
          continue;
        }
        break;
      }
      return t;
    }
    t.kind = Tok::Kind::Punct;
    if (text.substr(pos, 2) == ":-") {
      t.text = ":-";
      bump();
      bump();
      return t;
    }
    if (text.substr(pos, 2) == "!=" || text.substr(pos, 2) == "<=" ||
        text.substr(pos, 2) == ">=" || text.substr(pos, 2) == "==") {
      t.text = text.substr(pos, 2);
      bump();
      bump();
      return t;
    }
    t.text = std::string(1, c);
    bump();
    return t;
  }
};

struct RuleParser {
  std::string source;
  RuleLexer lex;
  Tok cur;
  std::vector<mir::Diagnostic> diags;
  bool failed = false;
  Program prog;

  void advance() { cur = lex.next(); }

  void err(const std::string &msg, uint32_t line = 0, uint32_t col = 0) {
    if (failed)
      return;
    mir::Diagnostic d;
    d.file = source;
    d.line = line ? line : cur.line;
    d.col = col ? col : cur.col;
    d.message = msg;
    diags.push_back(std::move(d));
    failed = true;
  }

  bool eat_punct(const std::string &p) {
    if (cur.kind == Tok::Kind::Punct && cur.text == p) {
      advance();
      return true;
    }
    return false;
  }

  void expect_punct(const std::string &p) {
    if (!eat_punct(p))
      err("expected '" + p + "'");
  }

  void parse_decl() {
    advance(); // .decl
    RelationDecl d;
    if (cur.kind != Tok::Kind::Ident) {
      err("expected relation name");
      return;
    }
    d.name = cur.text;
    advance();
    expect_punct("(");
    do {
      if (cur.kind != Tok::Kind::Ident) {
        err("expected attribute name");
        return;
      }
      std::string attr = cur.text;
      advance();
      expect_punct(":");
      if (cur.kind != Tok::Kind::Ident ||
          (cur.text != "symbol" && cur.text != "number")) {
        err("expected attribute type 'symbol' or 'number'");
        return;
      }
      d.attrs.emplace_back(attr, cur.text == "symbol" ? AttrType::Symbol
                                                      : AttrType::Number);
      advance();
    } while (eat_punct(","));
    expect_punct(")");
    if (failed)
      return;
    for (const auto &r : prog.relations)
      if (r.name == d.name) {
        err("relation '" + d.name + "' declared twice");
        return;
      }
    prog.relations.push_back(std::move(d));
  }

  std::optional<Term> parse_term() {
    switch (cur.kind) {
    case Tok::Kind::Var: {
      Term t = Term::var(cur.text);
      advance();
      return t;
    }
    case Tok::Kind::Wildcard:
      advance();
      return Term::wildcard();
    case Tok::Kind::String: {
      Term t = Term::str(cur.text);
      advance();
      return t;
    }
    case Tok::Kind::Number: {
      Term t = Term::number(cur.num);
      advance();
      return t;
    }
    default:
      err("expected term");
      return std::nullopt;
    }
  }

  std::optional<Atom> parse_atom() {
    if (cur.kind != Tok::Kind::Ident) {
      err("expected relation name");
      return std::nullopt;
    }
    Atom a;
    a.relation = cur.text;
    advance();
    expect_punct("(");
    if (!eat_punct(")")) {
      do {
        auto t = parse_term();
        if (!t)
          return std::nullopt;
        a.args.push_back(std::move(*t));
      } while (eat_punct(","));
      expect_punct(")");
    }
    if (failed)
      return std::nullopt;
    const RelationDecl *d = prog.find_relation(a.relation);
    if (!d) {
      err("relation '" + a.relation + "' used before declaration");
      return std::nullopt;
    }
    if (d->arity() != a.args.size()) {
      err("relation '" + a.relation + "' expects " +
          std::to_string(d->arity()) + " arguments, got " +
          std::to_string(a.args.size()));
      return std::nullopt;
    }
    // Constant/attr type agreement.
    for (size_t i = 0; i < a.args.size(); ++i) {
      const Term &t = a.args[i];
      if (t.kind == Term::Kind::ConstStr && d->attrs[i].second != AttrType::Symbol)
        err("string constant in number attribute of '" + a.relation + "'");
      if (t.kind == Term::Kind::ConstNum && d->attrs[i].second != AttrType::Number)
        err("numeric constant in symbol attribute of '" + a.relation + "'");
    }
    return a;
  }

  void parse_clause() {
    uint32_t line = cur.line;
    auto head = parse_atom();
    if (!head)
      return;
    Rule r;
    r.head = std::move(*head);
    r.line = line;
    if (eat_punct(":-")) {
      do {
        Literal lit;
        if (eat_punct("!")) {
          lit.kind = Literal::Kind::Negative;
          auto a = parse_atom();
          if (!a)
            return;
          lit.atom = std::move(*a);
        } else if (cur.kind == Tok::Kind::Ident && cur.text == "substr") {
          advance();
          lit.kind = Literal::Kind::Builtin;
          lit.op = BuiltinOp::Substr;
          expect_punct("(");
          auto a = parse_term();
          expect_punct(",");
          auto b = parse_term();
          expect_punct(")");
          if (!a || !b)
            return;
          lit.lhs = *a;
          lit.rhs = *b;
        } else if (cur.kind == Tok::Kind::Ident) {
          // Peek: atom (followed by '(') or nothing valid.
          lit.kind = Literal::Kind::Positive;
          auto a = parse_atom();
          if (!a)
            return;
          lit.atom = std::move(*a);
        } else {
          // builtin comparison: term op term
          auto a = parse_term();
          if (!a)
            return;
          lit.kind = Literal::Kind::Builtin;
          if (eat_punct("=") || eat_punct("=="))
            lit.op = BuiltinOp::Eq;
          else if (eat_punct("!="))
            lit.op = BuiltinOp::Ne;
          else if (eat_punct("<="))
            lit.op = BuiltinOp::Le;
          else if (eat_punct("<"))
            lit.op = BuiltinOp::Lt;
          else if (eat_punct(">="))
            lit.op = BuiltinOp::Ge;
          else if (eat_punct(">"))
            lit.op = BuiltinOp::Gt;
          else {
            err("expected builtin comparison operator");
            return;
          }
          auto b = parse_term();
          if (!b)
            return;
          lit.lhs = *a;
          lit.rhs = *b;
        }
        r.body.push_back(std::move(lit));
      } while (eat_punct(","));
    }
    expect_punct(".");
    if (!failed)
      prog.rules.push_back(std::move(r));
  }

  void run(std::string_view text) {
    lex.text = text;
    advance();
    while (!failed && cur.kind != Tok::Kind::End) {
      if (cur.kind == Tok::Kind::Ident && cur.text == ".decl")
        parse_decl();
      else
        parse_clause();
    }
  }
};

// Safety: every head variable, negated-atom variable, and builtin variable
// must be bound by a positive body atom. Head wildcards are rejected.
void check_safety(const Program &p, std::vector<mir::Diagnostic> &diags,
                  const std::string &source) {
  for (const auto &r : p.rules) {
    std::set<std::string> bound;
    for (const auto &lit : r.body)
      if (lit.kind == Literal::Kind::Positive)
        for (const auto &t : lit.atom.args)
          if (t.kind == Term::Kind::Var)
            bound.insert(t.text);
    auto complain = [&](const std::string &msg) {
      mir::Diagnostic d;
      d.file = source;
      d.line = r.line;
      d.message = msg;
      diags.push_back(std::move(d));
    };
    for (const auto &t : r.head.args) {
      if (t.kind == Term::Kind::Wildcard)
        complain("wildcard in head of rule for '" + r.head.relation + "'");
      if (t.kind == Term::Kind::Var && !bound.count(t.text))
        complain("unsafe rule: head variable '?" + t.text +
                 "' is not bound by a positive body atom");
    }
    for (const auto &lit : r.body) {
      if (lit.kind == Literal::Kind::Negative) {
        for (const auto &t : lit.atom.args)
          if (t.kind == Term::Kind::Var && !bound.count(t.text))
            complain("unsafe negation: variable '?" + t.text +
                     "' is not bound by a positive body atom");
      } else if (lit.kind == Literal::Kind::Builtin) {
        for (const Term *t : {&lit.lhs, &lit.rhs}) {
          if (t->kind == Term::Kind::Var && !bound.count(t->text))
            complain("unsafe constraint: variable '?" + t->text +
                     "' is not bound by a positive body atom");
          if (t->kind == Term::Kind::Wildcard)
            complain("wildcard in builtin constraint");
        }
      }
    }
  }
}

// Stratification via SCCs over the relation dependency graph. A negative
// edge inside an SCC is non-stratifiable. Rules land in the stratum of
// their head's SCC; strata are emitted in dependency order.
bool stratify(Program &p, std::vector<mir::Diagnostic> &diags,
              const std::string &source) {
  std::map<std::string, size_t> rel_index;
  for (size_t i = 0; i < p.relations.size(); ++i)
    rel_index[p.relations[i].name] = i;
  size_t n = p.relations.size();
  // edges[to] = {(from, negative)}
  std::vector<std::vector<std::pair<size_t, bool>>> out_edges(n);
  for (const auto &r : p.rules) {
    size_t head = rel_index[r.head.relation];
    p.relations[head].intensional = true;
    for (const auto &lit : r.body) {
      if (lit.kind == Literal::Kind::Builtin)
        continue;
      size_t dep = rel_index[lit.atom.relation];
      out_edges[dep].push_back({head, lit.kind == Literal::Kind::Negative});
    }
  }
  // Tarjan SCC.
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<size_t> stack;
  int next_index = 0, ncomp = 0;
  std::function<void(size_t)> strongconnect = [&](size_t v) {
    index[v] = low[v] = next_index++;
    stack.push_back(v);
    on_stack[v] = 1;
    for (auto [w, neg] : out_edges[v]) {
      (void)neg;
      if (index[w] < 0) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      for (;;) {
        size_t w = stack.back();
        stack.pop_back();
        on_stack[w] = 0;
        comp[w] = ncomp;
        if (w == v)
          break;
      }
      ++ncomp;
    }
  };
  for (size_t v = 0; v < n; ++v)
    if (index[v] < 0)
      strongconnect(v);
  // Negative edge within one SCC -> error.
  for (size_t v = 0; v < n; ++v)
    for (auto [w, neg] : out_edges[v])
      if (neg && comp[v] == comp[w]) {
        mir::Diagnostic d;
        d.file = source;
        d.message = "negation through relation '" + p.relations[v].name +
                    "' is not stratifiable";
        diags.push_back(std::move(d));
        return false;
      }
  // Topological order of SCCs: Tarjan numbers components in reverse
  // topological order of the condensation, so higher comp ids come first.
  // Compute stratum per component as 1 + max over incoming deps.
  std::vector<int> comp_stratum(static_cast<size_t>(ncomp), 0);
  // Process components in topological order (ncomp-1 .. 0).
  for (int c = ncomp - 1; c >= 0; --c) {
    for (size_t v = 0; v < n; ++v) {
      if (comp[v] != c)
        continue;
      for (auto [w, neg] : out_edges[v]) {
        (void)neg;
        if (comp[w] == c)
          continue;
        comp_stratum[static_cast<size_t>(comp[w])] =
            std::max(comp_stratum[static_cast<size_t>(comp[w])],
                     comp_stratum[static_cast<size_t>(c)] + 1);
      }
    }
  }
  int max_stratum = 0;
  for (int s : comp_stratum)
    max_stratum = std::max(max_stratum, s);
  p.strata.assign(static_cast<size_t>(max_stratum) + 1, {});
  for (size_t i = 0; i < p.rules.size(); ++i) {
    size_t head = rel_index[p.rules[i].head.relation];
    int s = comp_stratum[static_cast<size_t>(comp[head])];
    p.strata[static_cast<size_t>(s)].push_back(i);
  }
  // Drop empty strata for compactness.
  std::vector<std::vector<size_t>> packed;
  for (auto &s : p.strata)
    if (!s.empty())
      packed.push_back(std::move(s));
  p.strata = std::move(packed);
  return true;
}

} // namespace

ParseRulesResult parse_rules(std::string_view text,
                             const std::string &source_name) {
  RuleParser rp;
  rp.source = source_name;
  rp.run(text);
  ParseRulesResult res;
  res.diags = std::move(rp.diags);
  if (rp.failed)
    return res;
  check_safety(rp.prog, res.diags, source_name);
  if (!res.diags.empty())
    return res;
  if (!stratify(rp.prog, res.diags, source_name))
    return res;
  res.program = std::move(rp.prog);
  return res;
}

ParseRulesResult parse_rules_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ParseRulesResult r;
    mir::Diagnostic d;
    d.file = path;
    d.message = "cannot open rule file";
    r.diags.push_back(std::move(d));
    return r;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str(), path);
}

ParseRulesResult merge_programs(const std::vector<Program> &parts) {
  ParseRulesResult res;
  Program merged;
  for (const auto &p : parts) {
    for (const auto &r : p.relations) {
      const RelationDecl *existing = merged.find_relation(r.name);
      if (!existing) {
        RelationDecl copy = r;
        copy.intensional = false;
        merged.relations.push_back(copy);
      } else if (existing->attrs != r.attrs) {
        mir::Diagnostic d;
        d.message = "conflicting declarations for relation '" + r.name + "'";
        res.diags.push_back(std::move(d));
        return res;
      }
    }
    for (const auto &r : p.rules)
      merged.rules.push_back(r);
  }
  std::vector<mir::Diagnostic> diags;
  if (!stratify(merged, diags, "<merged>")) {
    res.diags = std::move(diags);
    return res;
  }
  res.program = std::move(merged);
  return res;
}

} // namespace stase::datalog
