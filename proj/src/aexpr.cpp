//===-- aexpr.cpp - Assertion expression AST, printer, parser -------------===//

#include "stase/mir.hpp"

#include <cctype>
#include <sstream>

namespace stase::mir {

namespace {

AssertExprRef make(AssertExpr::Kind k) {
  auto e = std::make_shared<AssertExpr>();
  e->kind = k;
  return e;
}

} // namespace

AssertExprRef aexpr_true() { return make(AssertExpr::Kind::True); }
AssertExprRef aexpr_false() { return make(AssertExpr::Kind::False); }

AssertExprRef aexpr_const(uint64_t v) {
  auto e = std::make_shared<AssertExpr>();
  e->kind = AssertExpr::Kind::Const;
  e->value = v;
  return e;
}

AssertExprRef aexpr_name(std::string name) {
  auto e = std::make_shared<AssertExpr>();
  e->kind = AssertExpr::Kind::NameRef;
  e->name = std::move(name);
  return e;
}

AssertExprRef aexpr_not(AssertExprRef a) {
  auto e = std::make_shared<AssertExpr>();
  e->kind = AssertExpr::Kind::Not;
  e->args = {std::move(a)};
  return e;
}

AssertExprRef aexpr_and(AssertExprRef a, AssertExprRef b) {
  auto e = std::make_shared<AssertExpr>();
  e->kind = AssertExpr::Kind::And;
  e->args = {std::move(a), std::move(b)};
  return e;
}

AssertExprRef aexpr_or(AssertExprRef a, AssertExprRef b) {
  auto e = std::make_shared<AssertExpr>();
  e->kind = AssertExpr::Kind::Or;
  e->args = {std::move(a), std::move(b)};
  return e;
}

AssertExprRef aexpr_cmp(ICmpPred pred, AssertExprRef a, AssertExprRef b) {
  auto e = std::make_shared<AssertExpr>();
  e->kind = AssertExpr::Kind::Cmp;
  e->pred = pred;
  e->args = {std::move(a), std::move(b)};
  return e;
}

AssertExprRef aexpr_arith(AssertExpr::Kind k, AssertExprRef a,
                          AssertExprRef b) {
  auto e = std::make_shared<AssertExpr>();
  e->kind = k;
  e->args = {std::move(a), std::move(b)};
  return e;
}

AssertExprRef aexpr_unary(AssertExpr::Kind k, AssertExprRef a) {
  auto e = std::make_shared<AssertExpr>();
  e->kind = k;
  e->args = {std::move(a)};
  return e;
}

bool aexpr_equal(const AssertExprRef &a, const AssertExprRef &b) {
  if (a == b)
    return true;
  if (!a || !b)
    return false;
  if (a->kind != b->kind || a->pred != b->pred || a->value != b->value ||
      a->name != b->name || a->args.size() != b->args.size())
    return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!aexpr_equal(a->args[i], b->args[i]))
      return false;
  return true;
}

//===----------------------------------------------------------------------===//
// Printing
//===----------------------------------------------------------------------===//

namespace {

const char *pred_str(ICmpPred p) {
  switch (p) {
  case ICmpPred::Eq:
    return "==";
  case ICmpPred::Ne:
    return "!=";
  case ICmpPred::Ult:
    return "<";
  case ICmpPred::Ule:
    return "<=";
  case ICmpPred::Ugt:
    return ">";
  case ICmpPred::Uge:
    return ">=";
  case ICmpPred::Slt:
    return "<s";
  case ICmpPred::Sle:
    return "<=s";
  case ICmpPred::Sgt:
    return ">s";
  case ICmpPred::Sge:
    return ">=s";
  }
  return "?";
}

// Precedence classes for minimal parenthesisation.
int prec(const AssertExpr &e) {
  switch (e.kind) {
  case AssertExpr::Kind::Or:
    return 1;
  case AssertExpr::Kind::And:
    return 2;
  case AssertExpr::Kind::Cmp:
    return 3;
  case AssertExpr::Kind::Add:
  case AssertExpr::Kind::Sub:
    return 4;
  case AssertExpr::Kind::Mul:
  case AssertExpr::Kind::UDiv:
    return 5;
  default:
    return 6;
  }
}

void print(const AssertExpr &e, std::ostream &os, int parent_prec) {
  int p = prec(e);
  bool paren = p < parent_prec;
  if (paren)
    os << "(";
  switch (e.kind) {
  case AssertExpr::Kind::True:
    os << "true";
    break;
  case AssertExpr::Kind::False:
    os << "false";
    break;
  case AssertExpr::Kind::Const:
    os << e.value;
    break;
  case AssertExpr::Kind::NameRef:
    os << e.name;
    break;
  case AssertExpr::Kind::And:
    print(*e.args[0], os, p);
    os << " && ";
    print(*e.args[1], os, p + 1);
    break;
  case AssertExpr::Kind::Or:
    print(*e.args[0], os, p);
    os << " || ";
    print(*e.args[1], os, p + 1);
    break;
  case AssertExpr::Kind::Not:
    os << "!";
    print(*e.args[0], os, 6);
    break;
  case AssertExpr::Kind::Cmp:
    print(*e.args[0], os, p + 1);
    os << " " << pred_str(e.pred) << " ";
    print(*e.args[1], os, p + 1);
    break;
  case AssertExpr::Kind::Add:
    print(*e.args[0], os, p);
    os << " + ";
    print(*e.args[1], os, p + 1);
    break;
  case AssertExpr::Kind::Sub:
    print(*e.args[0], os, p);
    os << " - ";
    print(*e.args[1], os, p + 1);
    break;
  case AssertExpr::Kind::Mul:
    print(*e.args[0], os, p);
    os << " * ";
    print(*e.args[1], os, p + 1);
    break;
  case AssertExpr::Kind::UDiv:
    print(*e.args[0], os, p);
    os << " / ";
    print(*e.args[1], os, p + 1);
    break;
  case AssertExpr::Kind::SizeofObj:
    os << "sizeof(";
    print(*e.args[0], os, 0);
    os << ")";
    break;
  case AssertExpr::Kind::OffsetOf:
    os << "offset(";
    print(*e.args[0], os, 0);
    os << ")";
    break;
  case AssertExpr::Kind::Freed:
    os << "freed(";
    print(*e.args[0], os, 0);
    os << ")";
    break;
  }
  if (paren)
    os << ")";
}

} // namespace

std::string aexpr_to_string(const AssertExprRef &e) {
  if (!e)
    return "true";
  std::ostringstream os;
  print(*e, os, 0);
  return os.str();
}

//===----------------------------------------------------------------------===//
// Parsing
//===----------------------------------------------------------------------===//

namespace {

struct AexprParser {
  std::string_view text;
  size_t pos = 0;
  std::string error;

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t'))
      ++pos;
  }

  bool eat(std::string_view tok) {
    skip_ws();
    if (text.substr(pos, tok.size()) == tok) {
      // Keywords must not swallow identifier prefixes.
      if (!tok.empty() && (std::isalpha(static_cast<unsigned char>(tok[0])))) {
        size_t end = pos + tok.size();
        if (end < text.size() &&
            (std::isalnum(static_cast<unsigned char>(text[end])) ||
             text[end] == '_'))
          return false;
      }
      pos += tok.size();
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  bool fail(const std::string &msg) {
    if (error.empty())
      error = msg + " at offset " + std::to_string(pos);
    return false;
  }

  std::string ident() {
    skip_ws();
    std::string out;
    if (pos < text.size() && (text[pos] == '%' || text[pos] == '@')) {
      out += text[pos];
      ++pos;
    }
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '_' || text[pos] == '.')) {
      out += text[pos];
      ++pos;
    }
    return out;
  }

  AssertExprRef parse_or() {
    auto lhs = parse_and();
    if (!lhs)
      return nullptr;
    while (eat("||") || eat("or")) {
      auto rhs = parse_and();
      if (!rhs)
        return nullptr;
      lhs = aexpr_or(lhs, rhs);
    }
    return lhs;
  }

  AssertExprRef parse_and() {
    auto lhs = parse_not();
    if (!lhs)
      return nullptr;
    while (eat("&&") || eat("and")) {
      auto rhs = parse_not();
      if (!rhs)
        return nullptr;
      lhs = aexpr_and(lhs, rhs);
    }
    return lhs;
  }

  AssertExprRef parse_not() {
    if (eat("!")) {
      // Careful: "!=" belongs to a comparison, not negation; the caller of
      // parse_not only reaches here at boolean positions so a lone '!'
      // followed by '=' is malformed anyway.
      auto a = parse_not();
      if (!a)
        return nullptr;
      return aexpr_not(a);
    }
    return parse_cmp();
  }

  AssertExprRef parse_cmp() {
    skip_ws();
    // "(" may open either a boolean group or an arithmetic group. Try a
    // boolean parse first and backtrack.
    if (peek() == '(') {
      size_t save = pos;
      std::string save_err = error;
      ++pos;
      auto inner = parse_or();
      if (inner && eat(")")) {
        // A grouped boolean not followed by an arithmetic operator.
        skip_ws();
        char c = peek();
        if (c != '+' && c != '-' && c != '*' && c != '/' && c != '<' &&
            c != '>' && c != '=' && c != '!')
          return inner;
      }
      pos = save;
      error = save_err;
    }
    if (eat("true"))
      return aexpr_true();
    if (eat("false"))
      return aexpr_false();
    if (eat("freed")) {
      if (!eat("("))
        return fail("expected '(' after freed"), nullptr;
      auto a = parse_arith();
      if (!a || !eat(")"))
        return fail("malformed freed()"), nullptr;
      return aexpr_unary(AssertExpr::Kind::Freed, a);
    }
    auto lhs = parse_arith();
    if (!lhs)
      return nullptr;
    ICmpPred pred;
    if (eat("=="))
      pred = ICmpPred::Eq;
    else if (eat("!="))
      pred = ICmpPred::Ne;
    else if (eat("<=s"))
      pred = ICmpPred::Sle;
    else if (eat(">=s"))
      pred = ICmpPred::Sge;
    else if (eat("<s"))
      pred = ICmpPred::Slt;
    else if (eat(">s"))
      pred = ICmpPred::Sgt;
    else if (eat("<="))
      pred = ICmpPred::Ule;
    else if (eat(">="))
      pred = ICmpPred::Uge;
    else if (eat("<"))
      pred = ICmpPred::Ult;
    else if (eat(">"))
      pred = ICmpPred::Ugt;
    else
      return fail("expected comparison operator"), nullptr;
    auto rhs = parse_arith();
    if (!rhs)
      return nullptr;
    return aexpr_cmp(pred, lhs, rhs);
  }

  AssertExprRef parse_arith() {
    auto lhs = parse_term();
    if (!lhs)
      return nullptr;
    for (;;) {
      if (eat("+")) {
        auto rhs = parse_term();
        if (!rhs)
          return nullptr;
        lhs = aexpr_arith(AssertExpr::Kind::Add, lhs, rhs);
      } else if (eat("-")) {
        auto rhs = parse_term();
        if (!rhs)
          return nullptr;
        lhs = aexpr_arith(AssertExpr::Kind::Sub, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  AssertExprRef parse_term() {
    auto lhs = parse_factor();
    if (!lhs)
      return nullptr;
    for (;;) {
      if (eat("*")) {
        auto rhs = parse_factor();
        if (!rhs)
          return nullptr;
        lhs = aexpr_arith(AssertExpr::Kind::Mul, lhs, rhs);
      } else if (eat("/")) {
        auto rhs = parse_factor();
        if (!rhs)
          return nullptr;
        lhs = aexpr_arith(AssertExpr::Kind::UDiv, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  AssertExprRef parse_factor() {
    skip_ws();
    if (eat("(")) {
      auto a = parse_arith();
      if (!a || !eat(")"))
        return fail("unbalanced arithmetic group"), nullptr;
      return a;
    }
    if (eat("sizeof")) {
      if (!eat("("))
        return fail("expected '(' after sizeof"), nullptr;
      auto a = parse_factor();
      if (!a || !eat(")"))
        return fail("malformed sizeof()"), nullptr;
      return aexpr_unary(AssertExpr::Kind::SizeofObj, a);
    }
    if (eat("offset")) {
      if (!eat("("))
        return fail("expected '(' after offset"), nullptr;
      auto a = parse_factor();
      if (!a || !eat(")"))
        return fail("malformed offset()"), nullptr;
      return aexpr_unary(AssertExpr::Kind::OffsetOf, a);
    }
    char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c))) {
      uint64_t v = 0;
      skip_ws();
      if (text.substr(pos, 2) == "0x" || text.substr(pos, 2) == "0X") {
        pos += 2;
        size_t start = pos;
        while (pos < text.size() &&
               std::isxdigit(static_cast<unsigned char>(text[pos]))) {
          v = v * 16 +
              static_cast<uint64_t>(
                  std::isdigit(static_cast<unsigned char>(text[pos]))
                      ? text[pos] - '0'
                      : std::tolower(static_cast<unsigned char>(text[pos])) -
                            'a' + 10);
          ++pos;
        }
        if (pos == start)
          return fail("malformed hex literal"), nullptr;
      } else {
        while (pos < text.size() &&
               std::isdigit(static_cast<unsigned char>(text[pos]))) {
          v = v * 10 + static_cast<uint64_t>(text[pos] - '0');
          ++pos;
        }
      }
      return aexpr_const(v);
    }
    std::string id = ident();
    if (id.empty())
      return fail("expected operand"), nullptr;
    return aexpr_name(id);
  }
};

} // namespace

AssertExprRef parse_aexpr(std::string_view text, std::string *error) {
  AexprParser p;
  p.text = text;
  auto e = p.parse_or();
  if (e) {
    p.skip_ws();
    if (p.pos != text.size()) {
      e = nullptr;
      p.fail("trailing input");
    }
  }
  if (!e && error)
    *error = p.error.empty() ? "malformed expression" : p.error;
  return e;
}

} // namespace stase::mir
