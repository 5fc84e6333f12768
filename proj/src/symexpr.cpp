//===-- symexpr.cpp - Expression construction, evaluation, printing -------===//

#include "stase/symexec.hpp"

#include <algorithm>
#include <sstream>

namespace stase::sym {

uint64_t mask_width(uint64_t v, unsigned w) {
  return w >= 64 ? v : (v & ((UINT64_C(1) << w) - 1));
}

int64_t to_signed(uint64_t v, unsigned w) {
  if (w >= 64)
    return static_cast<int64_t>(v);
  uint64_t sign = UINT64_C(1) << (w - 1);
  uint64_t m = mask_width(v, w);
  return (m & sign) ? static_cast<int64_t>(m | ~((UINT64_C(1) << w) - 1))
                    : static_cast<int64_t>(m);
}

uint64_t sdiv_wrapped(uint64_t a, uint64_t b, unsigned w) {
  int64_t sa = to_signed(a, w), sb = to_signed(b, w);
  if (sb == -1) {
    // MIN / -1 wraps back to MIN at every width
    int64_t minw = w >= 64 ? INT64_MIN : -(INT64_C(1) << (w - 1));
    if (sa == minw)
      return mask_width(static_cast<uint64_t>(minw), w);
  }
  return mask_width(static_cast<uint64_t>(sa / sb), w);
}

namespace {

ExprRef make(Expr::Op op, unsigned w, std::vector<ExprRef> args) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->width = w;
  e->args = std::move(args);
  return e;
}

uint64_t cval(const ExprRef &e) { return e->value; }

} // namespace

ExprRef e_const(uint64_t v, unsigned w) {
  auto e = std::make_shared<Expr>();
  e->op = Expr::Op::Const;
  e->width = w;
  e->value = mask_width(v, w);
  return e;
}

ExprRef e_bool(bool b) { return e_const(b ? 1 : 0, 1); }

ExprRef e_sym(std::string name, unsigned w) {
  auto e = std::make_shared<Expr>();
  e->op = Expr::Op::Sym;
  e->width = w;
  e->sym = std::move(name);
  return e;
}

bool is_const(const ExprRef &e) { return e && e->op == Expr::Op::Const; }
bool is_true(const ExprRef &e) { return is_const(e) && e->value != 0; }
bool is_false(const ExprRef &e) { return is_const(e) && e->value == 0; }

ExprRef e_add(ExprRef a, ExprRef b) {
  unsigned w = a->width;
  if (is_const(a) && is_const(b))
    return e_const(cval(a) + cval(b), w);
  if (is_const(b) && cval(b) == 0)
    return a;
  if (is_const(a) && cval(a) == 0)
    return b;
  return make(Expr::Op::Add, w, {std::move(a), std::move(b)});
}

ExprRef e_sub(ExprRef a, ExprRef b) {
  unsigned w = a->width;
  if (is_const(a) && is_const(b))
    return e_const(cval(a) - cval(b), w);
  if (is_const(b) && cval(b) == 0)
    return a;
  return make(Expr::Op::Sub, w, {std::move(a), std::move(b)});
}

ExprRef e_mul(ExprRef a, ExprRef b) {
  unsigned w = a->width;
  if (is_const(a) && is_const(b))
    return e_const(cval(a) * cval(b), w);
  if (is_const(b) && cval(b) == 1)
    return a;
  if (is_const(a) && cval(a) == 1)
    return b;
  if ((is_const(a) && cval(a) == 0) || (is_const(b) && cval(b) == 0))
    return e_const(0, w);
  return make(Expr::Op::Mul, w, {std::move(a), std::move(b)});
}

ExprRef e_udiv(ExprRef a, ExprRef b) {
  unsigned w = a->width;
  if (is_const(a) && is_const(b) && cval(b) != 0)
    return e_const(cval(a) / cval(b), w);
  if (is_const(b) && cval(b) == 1)
    return a;
  return make(Expr::Op::UDiv, w, {std::move(a), std::move(b)});
}

ExprRef e_sdiv(ExprRef a, ExprRef b) {
  unsigned w = a->width;
  if (is_const(a) && is_const(b) && cval(b) != 0)
    return e_const(sdiv_wrapped(cval(a), cval(b), w), w);
  return make(Expr::Op::SDiv, w, {std::move(a), std::move(b)});
}

ExprRef e_and(ExprRef a, ExprRef b) {
  if (is_false(a) || is_false(b))
    return e_bool(false);
  if (is_true(a))
    return b;
  if (is_true(b))
    return a;
  return make(Expr::Op::And, 1, {std::move(a), std::move(b)});
}

ExprRef e_or(ExprRef a, ExprRef b) {
  if (is_true(a) || is_true(b))
    return e_bool(true);
  if (is_false(a))
    return b;
  if (is_false(b))
    return a;
  return make(Expr::Op::Or, 1, {std::move(a), std::move(b)});
}

ExprRef e_not(ExprRef a) {
  if (is_const(a))
    return e_bool(a->value == 0);
  if (a->op == Expr::Op::Not)
    return a->args[0];
  return make(Expr::Op::Not, 1, {std::move(a)});
}

ExprRef e_eq(ExprRef a, ExprRef b) {
  if (is_const(a) && is_const(b))
    return e_bool(mask_width(cval(a), a->width) ==
                  mask_width(cval(b), b->width));
  return make(Expr::Op::Eq, 1, {std::move(a), std::move(b)});
}

ExprRef e_ne(ExprRef a, ExprRef b) { return e_not(e_eq(std::move(a), std::move(b))); }

ExprRef e_ult(ExprRef a, ExprRef b) {
  if (is_const(a) && is_const(b))
    return e_bool(cval(a) < cval(b));
  return make(Expr::Op::Ult, 1, {std::move(a), std::move(b)});
}

ExprRef e_ule(ExprRef a, ExprRef b) { return e_not(e_ult(b, a)); }
ExprRef e_ugt(ExprRef a, ExprRef b) { return e_ult(std::move(b), std::move(a)); }
ExprRef e_uge(ExprRef a, ExprRef b) { return e_not(e_ult(std::move(a), std::move(b))); }

ExprRef e_slt(ExprRef a, ExprRef b) {
  if (is_const(a) && is_const(b))
    return e_bool(to_signed(cval(a), a->width) < to_signed(cval(b), b->width));
  return make(Expr::Op::Slt, 1, {std::move(a), std::move(b)});
}

ExprRef e_sle(ExprRef a, ExprRef b) { return e_not(e_slt(b, a)); }
ExprRef e_sgt(ExprRef a, ExprRef b) { return e_slt(std::move(b), std::move(a)); }
ExprRef e_sge(ExprRef a, ExprRef b) { return e_not(e_slt(std::move(a), std::move(b))); }

ExprRef e_zext(ExprRef a, unsigned w) {
  if (a->width == w)
    return a;
  if (is_const(a))
    return e_const(mask_width(cval(a), a->width), w);
  return make(Expr::Op::Zext, w, {std::move(a)});
}

ExprRef e_trunc(ExprRef a, unsigned w) {
  if (a->width == w)
    return a;
  if (is_const(a))
    return e_const(cval(a), w);
  return make(Expr::Op::Trunc, w, {std::move(a)});
}

ExprRef e_ite(ExprRef c, ExprRef a, ExprRef b) {
  if (is_true(c))
    return a;
  if (is_false(c))
    return b;
  unsigned w = a->width;
  return make(Expr::Op::Ite, w, {std::move(c), std::move(a), std::move(b)});
}

uint64_t eval_expr(const ExprRef &e, const Model &model) {
  switch (e->op) {
  case Expr::Op::Const:
    return e->value;
  case Expr::Op::Sym: {
    auto it = model.find(e->sym);
    return it == model.end() ? 0 : mask_width(it->second, e->width);
  }
  case Expr::Op::Add:
    return mask_width(eval_expr(e->args[0], model) + eval_expr(e->args[1], model),
                      e->width);
  case Expr::Op::Sub:
    return mask_width(eval_expr(e->args[0], model) - eval_expr(e->args[1], model),
                      e->width);
  case Expr::Op::Mul:
    return mask_width(eval_expr(e->args[0], model) * eval_expr(e->args[1], model),
                      e->width);
  case Expr::Op::UDiv: {
    uint64_t b = eval_expr(e->args[1], model);
    return b == 0 ? 0 : mask_width(eval_expr(e->args[0], model) / b, e->width);
  }
  case Expr::Op::SDiv: {
    uint64_t b = eval_expr(e->args[1], model);
    if (mask_width(b, e->width) == 0)
      return 0;
    return sdiv_wrapped(eval_expr(e->args[0], model), b, e->width);
  }
  case Expr::Op::And:
    return (eval_expr(e->args[0], model) & eval_expr(e->args[1], model)) & 1;
  case Expr::Op::Or:
    return (eval_expr(e->args[0], model) | eval_expr(e->args[1], model)) & 1;
  case Expr::Op::Not:
    return eval_expr(e->args[0], model) ? 0 : 1;
  case Expr::Op::Eq:
    return eval_expr(e->args[0], model) == eval_expr(e->args[1], model) ? 1 : 0;
  case Expr::Op::Ult:
    return eval_expr(e->args[0], model) < eval_expr(e->args[1], model) ? 1 : 0;
  case Expr::Op::Slt:
    return to_signed(eval_expr(e->args[0], model), e->args[0]->width) <
                   to_signed(eval_expr(e->args[1], model), e->args[1]->width)
               ? 1
               : 0;
  case Expr::Op::Zext:
    return eval_expr(e->args[0], model);
  case Expr::Op::Trunc:
    return mask_width(eval_expr(e->args[0], model), e->width);
  case Expr::Op::Ite:
    return eval_expr(e->args[0], model) ? eval_expr(e->args[1], model)
                                        : eval_expr(e->args[2], model);
  }
  return 0;
}

void collect_symbols(const ExprRef &e, std::map<std::string, unsigned> &out) {
  if (e->op == Expr::Op::Sym)
    out[e->sym] = e->width;
  for (const auto &a : e->args)
    collect_symbols(a, out);
}

namespace {

int expr_prec(const Expr &e) {
  switch (e.op) {
  case Expr::Op::Or:
    return 1;
  case Expr::Op::And:
    return 2;
  case Expr::Op::Eq:
  case Expr::Op::Ult:
  case Expr::Op::Slt:
    return 3;
  case Expr::Op::Add:
  case Expr::Op::Sub:
    return 4;
  case Expr::Op::Mul:
  case Expr::Op::UDiv:
  case Expr::Op::SDiv:
    return 5;
  default:
    return 6;
  }
}

void print_expr(const ExprRef &e, std::ostream &os, int parent) {
  int p = expr_prec(*e);
  bool paren = p < parent;
  // boolean symbols in constraint position read as comparisons with zero
  if (e->op == Expr::Op::Sym && e->width == 1) {
    if (3 < parent)
      os << "(";
    os << e->sym << " != 0";
    if (3 < parent)
      os << ")";
    return;
  }
  if (e->op == Expr::Op::Not && e->args[0]->op == Expr::Op::Sym &&
      e->args[0]->width == 1) {
    if (3 < parent)
      os << "(";
    os << e->args[0]->sym << " = 0";
    if (3 < parent)
      os << ")";
    return;
  }
  // not(eq(a,b)) renders as a != b
  if (e->op == Expr::Op::Not && e->args[0]->op == Expr::Op::Eq) {
    const auto &eq = e->args[0];
    if (3 < parent)
      os << "(";
    print_expr(eq->args[0], os, 4);
    os << " != ";
    print_expr(eq->args[1], os, 4);
    if (3 < parent)
      os << ")";
    return;
  }
  // not(ult(b,a)) renders as a <= b
  if (e->op == Expr::Op::Not && e->args[0]->op == Expr::Op::Ult) {
    const auto &lt = e->args[0];
    if (3 < parent)
      os << "(";
    print_expr(lt->args[1], os, 4);
    os << " <= ";
    print_expr(lt->args[0], os, 4);
    if (3 < parent)
      os << ")";
    return;
  }
  if (e->op == Expr::Op::Not && e->args[0]->op == Expr::Op::Slt) {
    const auto &lt = e->args[0];
    if (3 < parent)
      os << "(";
    print_expr(lt->args[1], os, 4);
    os << " <=s ";
    print_expr(lt->args[0], os, 4);
    if (3 < parent)
      os << ")";
    return;
  }
  if (paren)
    os << "(";
  switch (e->op) {
  case Expr::Op::Const:
    os << e->value;
    break;
  case Expr::Op::Sym:
    os << e->sym;
    break;
  case Expr::Op::Add:
    print_expr(e->args[0], os, p);
    os << " + ";
    print_expr(e->args[1], os, p + 1);
    break;
  case Expr::Op::Sub:
    print_expr(e->args[0], os, p);
    os << " - ";
    print_expr(e->args[1], os, p + 1);
    break;
  case Expr::Op::Mul:
    print_expr(e->args[0], os, p);
    os << " * ";
    print_expr(e->args[1], os, p + 1);
    break;
  case Expr::Op::UDiv:
    print_expr(e->args[0], os, p);
    os << " / ";
    print_expr(e->args[1], os, p + 1);
    break;
  case Expr::Op::SDiv:
    print_expr(e->args[0], os, p);
    os << " /s ";
    print_expr(e->args[1], os, p + 1);
    break;
  case Expr::Op::And:
    print_expr(e->args[0], os, p);
    os << " and ";
    print_expr(e->args[1], os, p + 1);
    break;
  case Expr::Op::Or:
    print_expr(e->args[0], os, p);
    os << " or ";
    print_expr(e->args[1], os, p + 1);
    break;
  case Expr::Op::Not:
    os << "!";
    print_expr(e->args[0], os, 6);
    break;
  case Expr::Op::Eq:
    print_expr(e->args[0], os, p + 1);
    os << " = ";
    print_expr(e->args[1], os, p + 1);
    break;
  case Expr::Op::Ult:
    print_expr(e->args[0], os, p + 1);
    os << " < ";
    print_expr(e->args[1], os, p + 1);
    break;
  case Expr::Op::Slt:
    print_expr(e->args[0], os, p + 1);
    os << " <s ";
    print_expr(e->args[1], os, p + 1);
    break;
  case Expr::Op::Zext:
  case Expr::Op::Trunc:
    // widths are noise in reports; print the operand
    print_expr(e->args[0], os, parent);
    break;
  case Expr::Op::Ite:
    os << "ite(";
    print_expr(e->args[0], os, 0);
    os << ", ";
    print_expr(e->args[1], os, 0);
    os << ", ";
    print_expr(e->args[2], os, 0);
    os << ")";
    break;
  }
  if (paren)
    os << ")";
}

} // namespace

std::string expr_to_string(const ExprRef &e) {
  std::ostringstream os;
  print_expr(e, os, 0);
  return os.str();
}

//===----------------------------------------------------------------------===//
// SMT-LIB2 emission (QF_BV; every term is a BitVec, booleans are BitVec 1)
//===----------------------------------------------------------------------===//

namespace {

void smt_term(const ExprRef &e, std::ostream &os) {
  auto bv1 = [&](const char *pred, const ExprRef &a, const ExprRef &b) {
    os << "(ite (" << pred << " ";
    smt_term(a, os);
    os << " ";
    smt_term(b, os);
    os << ") #b1 #b0)";
  };
  switch (e->op) {
  case Expr::Op::Const: {
    os << "(_ bv" << e->value << " " << e->width << ")";
    break;
  }
  case Expr::Op::Sym:
    os << "|" << e->sym << "|";
    break;
  case Expr::Op::Add:
  case Expr::Op::Sub:
  case Expr::Op::Mul:
  case Expr::Op::UDiv:
  case Expr::Op::SDiv: {
    const char *fn = e->op == Expr::Op::Add    ? "bvadd"
                     : e->op == Expr::Op::Sub  ? "bvsub"
                     : e->op == Expr::Op::Mul  ? "bvmul"
                     : e->op == Expr::Op::UDiv ? "bvudiv"
                                               : "bvsdiv";
    os << "(" << fn << " ";
    smt_term(e->args[0], os);
    os << " ";
    smt_term(e->args[1], os);
    os << ")";
    break;
  }
  case Expr::Op::And:
  case Expr::Op::Or: {
    os << "(" << (e->op == Expr::Op::And ? "bvand" : "bvor") << " ";
    smt_term(e->args[0], os);
    os << " ";
    smt_term(e->args[1], os);
    os << ")";
    break;
  }
  case Expr::Op::Not:
    os << "(bvnot ";
    smt_term(e->args[0], os);
    os << ")";
    break;
  case Expr::Op::Eq:
    bv1("=", e->args[0], e->args[1]);
    break;
  case Expr::Op::Ult:
    bv1("bvult", e->args[0], e->args[1]);
    break;
  case Expr::Op::Slt:
    bv1("bvslt", e->args[0], e->args[1]);
    break;
  case Expr::Op::Zext:
    os << "((_ zero_extend " << (e->width - e->args[0]->width) << ") ";
    smt_term(e->args[0], os);
    os << ")";
    break;
  case Expr::Op::Trunc:
    os << "((_ extract " << (e->width - 1) << " 0) ";
    smt_term(e->args[0], os);
    os << ")";
    break;
  case Expr::Op::Ite:
    os << "(ite (= ";
    smt_term(e->args[0], os);
    os << " #b1) ";
    smt_term(e->args[1], os);
    os << " ";
    smt_term(e->args[2], os);
    os << ")";
    break;
  }
}

} // namespace

std::string emit_smt2(const std::vector<ExprRef> &conjuncts) {
  std::ostringstream os;
  os << "(set-logic QF_BV)\n";
  std::map<std::string, unsigned> syms;
  for (const auto &e : conjuncts)
    collect_symbols(e, syms);
  for (const auto &[name, width] : syms)
    os << "(declare-fun |" << name << "| () (_ BitVec " << width << "))\n";
  for (const auto &e : conjuncts) {
    os << "(assert (= ";
    smt_term(e, os);
    os << " #b1))\n";
  }
  os << "(check-sat)\n(get-model)\n";
  return os.str();
}

} // namespace stase::sym
