//===-- mir_parse.cpp - Mini-IR text parser -------------------------------===//

#include "stase/mir.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace stase::mir {

namespace {

struct Token {
  enum class Kind { Ident, Number, String, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  uint64_t value = 0;
  uint32_t line = 0, col = 0;
  size_t offset = 0;
};

class Lexer {
public:
  Lexer(std::string_view text) : text_(text) {
    next_ = lex();
    advance();
  }

  const Token &cur() const { return cur_; }
  const Token &next() const { return next_; }

  void advance() {
    cur_ = next_;
    next_ = lex();
  }

  // Raw text slice, used to capture assert expressions.
  std::string_view raw(size_t from, size_t to) const {
    return text_.substr(from, to - from);
  }

private:
  Token lex() {
    skip();
    Token t;
    t.line = line_;
    t.col = col_;
    t.offset = pos_;
    if (pos_ >= text_.size()) {
      t.kind = Token::Kind::End;
      return t;
    }
    char c = text_[pos_];
    if (c == '"') {
      t.kind = Token::Kind::String;
      take();
      while (pos_ < text_.size() && text_[pos_] != '"') {
        t.text += text_[pos_];
        take();
      }
      if (pos_ < text_.size())
        take();
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      t.kind = Token::Kind::Number;
      std::string num;
      if (text_.substr(pos_, 2) == "0x" || text_.substr(pos_, 2) == "0X") {
        num += text_[pos_];
        take();
        num += text_[pos_];
        take();
        while (pos_ < text_.size() &&
               std::isxdigit(static_cast<unsigned char>(text_[pos_]))) {
          num += text_[pos_];
          take();
        }
        t.value = std::stoull(num, nullptr, 16);
      } else {
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          num += text_[pos_];
          take();
        }
        t.value = std::stoull(num);
      }
      t.text = num;
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '%' ||
        c == '@' || c == '!') {
      t.kind = Token::Kind::Ident;
      if (c == '%' || c == '@' || c == '!') {
        t.text += c;
        take();
      }
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_' || text_[pos_] == '.')) {
        t.text += text_[pos_];
        take();
      }
      return t;
    }
    if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
      t.kind = Token::Kind::Punct;
      t.text = "->";
      take();
      take();
      return t;
    }
    t.kind = Token::Kind::Punct;
    t.text = std::string(1, c);
    take();
    return t;
  }

  void skip() {
    for (;;) {
      while (pos_ < text_.size() &&
             (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r' ||
              text_[pos_] == '\n'))
        take();
      if (pos_ < text_.size() && text_[pos_] == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n')
          take();
        continue;
      }
      break;
    }
  }

  void take() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  size_t pos_ = 0;
  uint32_t line_ = 1, col_ = 1;
  Token cur_, next_;
};

class Parser {
public:
  Parser(std::string_view text, std::string source_name)
      : lex_(text), text_(text), source_(std::move(source_name)) {}

  ParseResult run() {
    Module m;
    m.name = stem(source_);
    m.default_file = source_;
    while (!failed_ && lex_.cur().kind != Token::Kind::End) {
      const Token &t = lex_.cur();
      if (t.kind != Token::Kind::Ident) {
        err("expected top-level item, found '" + t.text + "'");
        break;
      }
      if (t.text == "module") {
        lex_.advance();
        m.name = expect_ident("module name");
      } else if (t.text == "!file") {
        lex_.advance();
        expect_punct("(");
        m.default_file = expect_string("file name");
        expect_punct(")");
      } else if (t.text == "struct") {
        parse_struct(m);
      } else if (t.text == "global") {
        parse_global(m);
      } else if (t.text == "region") {
        parse_region(m);
      } else if (t.text == "extern") {
        parse_extern(m);
      } else if (t.text == "fn") {
        parse_fn(m);
      } else if (t.text == "!loopbound") {
        parse_loopbound(m);
      } else {
        err("unknown top-level item '" + t.text + "'");
        break;
      }
    }
    ParseResult r;
    r.diags = diags_;
    if (!failed_) {
      infer_return_types(m);
      r.module = std::move(m);
    }
    return r;
  }

private:
  Lexer lex_;
  std::string_view text_;
  std::string source_;
  std::vector<Diagnostic> diags_;
  bool failed_ = false;

  static std::string stem(const std::string &path) {
    size_t slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    size_t dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
  }

  void err(const std::string &msg) {
    if (failed_)
      return;
    Diagnostic d;
    d.file = source_;
    d.line = lex_.cur().line;
    d.col = lex_.cur().col;
    d.message = msg;
    diags_.push_back(std::move(d));
    failed_ = true;
  }

  std::string expect_ident(const std::string &what) {
    if (failed_)
      return "";
    if (lex_.cur().kind != Token::Kind::Ident) {
      err("expected " + what);
      return "";
    }
    std::string s = lex_.cur().text;
    lex_.advance();
    return s;
  }

  std::string expect_sigil_ident(char sigil, const std::string &what) {
    std::string s = expect_ident(what);
    if (failed_)
      return "";
    if (s.empty() || s[0] != sigil) {
      err("expected " + what + " prefixed with '" + std::string(1, sigil) + "'");
      return "";
    }
    return s.substr(1);
  }

  void expect_punct(const std::string &p) {
    if (failed_)
      return;
    if (lex_.cur().kind != Token::Kind::Punct || lex_.cur().text != p) {
      err("expected '" + p + "'");
      return;
    }
    lex_.advance();
  }

  bool eat_punct(const std::string &p) {
    if (failed_)
      return false;
    if (lex_.cur().kind == Token::Kind::Punct && lex_.cur().text == p) {
      lex_.advance();
      return true;
    }
    return false;
  }

  bool eat_ident(const std::string &s) {
    if (failed_)
      return false;
    if (lex_.cur().kind == Token::Kind::Ident && lex_.cur().text == s) {
      lex_.advance();
      return true;
    }
    return false;
  }

  uint64_t expect_number(const std::string &what) {
    if (failed_)
      return 0;
    if (lex_.cur().kind != Token::Kind::Number) {
      err("expected " + what);
      return 0;
    }
    uint64_t v = lex_.cur().value;
    lex_.advance();
    return v;
  }

  std::string expect_string(const std::string &what) {
    if (failed_)
      return "";
    if (lex_.cur().kind != Token::Kind::String) {
      err("expected string for " + what);
      return "";
    }
    std::string s = lex_.cur().text;
    lex_.advance();
    return s;
  }

  TypeRef parse_type() {
    if (failed_)
      return nullptr;
    TypeRef base;
    const Token &t = lex_.cur();
    if (t.kind == Token::Kind::Ident) {
      if (t.text == "void")
        base = Type::make_void();
      else if (t.text == "i1" || t.text == "i8" || t.text == "i16" ||
               t.text == "i32" || t.text == "i64")
        base = Type::make_int(static_cast<unsigned>(std::stoul(t.text.substr(1))));
      else if (t.text.size() > 1 && t.text[0] == '%')
        base = Type::make_struct(t.text.substr(1));
      if (base)
        lex_.advance();
    } else if (t.kind == Token::Kind::Punct && t.text == "[") {
      lex_.advance();
      uint64_t n = expect_number("array length");
      if (!eat_ident("x"))
        err("expected 'x' in array type");
      TypeRef elem = parse_type();
      expect_punct("]");
      if (!failed_)
        base = Type::make_array(elem, n);
    }
    if (!base) {
      err("expected type");
      return nullptr;
    }
    while (eat_punct("*"))
      base = Type::make_pointer(base);
    return base;
  }

  Operand parse_operand() {
    Operand o;
    if (failed_)
      return o;
    const Token &t = lex_.cur();
    if (t.kind == Token::Kind::Number) {
      o = Operand::constant(t.value);
      lex_.advance();
      return o;
    }
    if (t.kind == Token::Kind::Punct && t.text == "-") {
      lex_.advance();
      uint64_t v = expect_number("constant");
      return Operand::constant(~v + 1);
    }
    if (t.kind == Token::Kind::Ident) {
      if (t.text == "null") {
        lex_.advance();
        return Operand::null();
      }
      if (t.text.size() > 1 && t.text[0] == '%') {
        o = Operand::local(t.text.substr(1));
        lex_.advance();
        return o;
      }
      if (t.text.size() > 1 && t.text[0] == '@') {
        o = Operand::global(t.text.substr(1));
        lex_.advance();
        return o;
      }
    }
    err("expected operand");
    return o;
  }

  void parse_struct(Module &m) {
    lex_.advance(); // struct
    StructDef sd;
    sd.name = expect_sigil_ident('%', "struct name");
    expect_punct("{");
    if (!eat_punct("}")) {
      do {
        std::string fname = expect_ident("field name");
        expect_punct(":");
        TypeRef ft = parse_type();
        if (failed_)
          return;
        sd.fields.emplace_back(fname, ft);
      } while (eat_punct(","));
      expect_punct("}");
    }
    m.structs.push_back(std::move(sd));
  }

  void parse_global(Module &m) {
    lex_.advance(); // global
    GlobalDecl g;
    g.name = expect_sigil_ident('@', "global name");
    expect_punct(":");
    g.type = parse_type();
    if (eat_punct("=")) {
      if (eat_ident("symbolic"))
        g.init = GlobalDecl::Init::Symbolic;
      else if (eat_ident("zeroinit"))
        g.init = GlobalDecl::Init::Zero;
      else {
        g.init = GlobalDecl::Init::Const;
        if (eat_punct("-"))
          g.init_value = ~expect_number("initializer") + 1;
        else
          g.init_value = expect_number("initializer");
      }
    }
    if (!failed_)
      m.globals.push_back(std::move(g));
  }

  void parse_region(Module &m) {
    lex_.advance(); // region
    RegionDecl r;
    r.name = expect_ident("region name");
    if (!eat_ident("base"))
      err("expected 'base'");
    expect_punct("=");
    if (eat_ident("symbolic"))
      r.base_symbolic = true;
    else
      r.base = expect_number("region base");
    if (!eat_ident("size"))
      err("expected 'size'");
    expect_punct("=");
    if (eat_ident("symbolic"))
      r.size_symbolic = true;
    else
      r.size = expect_number("region size");
    if (!failed_)
      m.regions.push_back(std::move(r));
  }

  void parse_extern(Module &m) {
    lex_.advance(); // extern
    Function f;
    f.is_external = true;
    f.name = expect_sigil_ident('@', "function name");
    expect_punct("(");
    if (!eat_punct(")")) {
      int idx = 0;
      do {
        TypeRef pt = parse_type();
        if (failed_)
          return;
        f.params.emplace_back("arg" + std::to_string(idx++), pt);
      } while (eat_punct(","));
      expect_punct(")");
    }
    f.ret_type = Type::make_void();
    if (eat_punct("->"))
      f.ret_type = parse_type();
    if (!failed_)
      m.functions.push_back(std::move(f));
  }

  void parse_loopbound(Module &m) {
    lex_.advance();
    expect_punct("(");
    LoopBoundAnn ann;
    ann.func = expect_sigil_ident('@', "function name");
    expect_punct(",");
    ann.header = expect_ident("block label");
    expect_punct(",");
    ann.bound = expect_number("loop bound");
    expect_punct(")");
    if (!failed_)
      m.loop_bounds.push_back(std::move(ann));
  }

  void parse_fn(Module &m) {
    lex_.advance(); // fn
    Function f;
    f.name = expect_sigil_ident('@', "function name");
    expect_punct("(");
    if (!eat_punct(")")) {
      do {
        std::string pn = expect_sigil_ident('%', "parameter name");
        expect_punct(":");
        TypeRef pt = parse_type();
        if (failed_)
          return;
        f.params.emplace_back(pn, pt);
      } while (eat_punct(","));
      expect_punct(")");
    }
    if (eat_punct("->"))
      f.ret_type = parse_type();
    expect_punct("{");
    while (!failed_ && !eat_punct("}")) {
      // Block label: ident ':'
      if (lex_.cur().kind != Token::Kind::Ident ||
          lex_.next().text != ":" || lex_.next().kind != Token::Kind::Punct) {
        err("expected block label");
        break;
      }
      BasicBlock bb;
      bb.label = lex_.cur().text;
      lex_.advance();
      lex_.advance(); // ':'
      while (!failed_) {
        const Token &t = lex_.cur();
        if (t.kind == Token::Kind::Punct && t.text == "}")
          break;
        if (t.kind == Token::Kind::Ident && lex_.next().kind == Token::Kind::Punct &&
            lex_.next().text == ":" && t.text[0] != '%' && t.text[0] != '@')
          break; // next block label
        if (t.kind == Token::Kind::End) {
          err("unterminated function body");
          break;
        }
        Instruction in = parse_instr();
        if (!failed_)
          bb.instrs.push_back(std::move(in));
      }
      f.blocks.push_back(std::move(bb));
    }
    if (!failed_)
      m.functions.push_back(std::move(f));
  }

  Instruction parse_instr() {
    Instruction in;
    in.loc.file.clear(); // empty = untagged; filled in after parsing
    in.loc.line = lex_.cur().line;
    in.loc.col = lex_.cur().col;
    if (lex_.cur().kind == Token::Kind::Ident && lex_.cur().text.size() > 1 &&
        lex_.cur().text[0] == '%' && lex_.next().text == "=") {
      in.result = lex_.cur().text.substr(1);
      lex_.advance();
      lex_.advance(); // '='
    }
    std::string op = expect_ident("opcode");
    if (failed_)
      return in;
    if (op == "alloca") {
      in.op = Opcode::Alloca;
      in.type = parse_type();
    } else if (op == "load") {
      in.op = Opcode::Load;
      in.type = parse_type();
      expect_punct(",");
      in.operands.push_back(parse_operand());
    } else if (op == "store") {
      in.op = Opcode::Store;
      in.type = parse_type();
      in.operands.push_back(parse_operand());
      expect_punct(",");
      in.operands.push_back(parse_operand());
    } else if (op == "gep") {
      in.op = Opcode::Gep;
      in.type = parse_type(); // pointee type of the base
      expect_punct(",");
      in.operands.push_back(parse_operand());
      while (eat_punct(",")) {
        GepSelector sel;
        if (eat_punct(".")) {
          sel.kind = GepSelector::Kind::Field;
          sel.field = expect_ident("gep field name");
        } else if (eat_punct("[")) {
          sel.kind = GepSelector::Kind::Index;
          sel.index = parse_operand();
          expect_punct("]");
        } else {
          err("expected gep selector ('.field' or '[index]')");
          return in;
        }
        in.gep_path.push_back(std::move(sel));
      }
    } else if (op == "add" || op == "sub" || op == "mul" || op == "udiv" ||
               op == "sdiv") {
      in.op = op == "add"    ? Opcode::Add
              : op == "sub"  ? Opcode::Sub
              : op == "mul"  ? Opcode::Mul
              : op == "udiv" ? Opcode::UDiv
                             : Opcode::SDiv;
      in.type = parse_type();
      in.operands.push_back(parse_operand());
      expect_punct(",");
      in.operands.push_back(parse_operand());
    } else if (op == "icmp") {
      in.op = Opcode::ICmp;
      std::string pred = expect_ident("icmp predicate");
      if (pred == "eq")
        in.pred = ICmpPred::Eq;
      else if (pred == "ne")
        in.pred = ICmpPred::Ne;
      else if (pred == "ult")
        in.pred = ICmpPred::Ult;
      else if (pred == "ule")
        in.pred = ICmpPred::Ule;
      else if (pred == "ugt")
        in.pred = ICmpPred::Ugt;
      else if (pred == "uge")
        in.pred = ICmpPred::Uge;
      else if (pred == "slt")
        in.pred = ICmpPred::Slt;
      else if (pred == "sle")
        in.pred = ICmpPred::Sle;
      else if (pred == "sgt")
        in.pred = ICmpPred::Sgt;
      else if (pred == "sge")
        in.pred = ICmpPred::Sge;
      else
        err("unknown icmp predicate '" + pred + "'");
      in.type = parse_type();
      in.operands.push_back(parse_operand());
      expect_punct(",");
      in.operands.push_back(parse_operand());
    } else if (op == "zext" || op == "trunc") {
      in.op = op == "zext" ? Opcode::Zext : Opcode::Trunc;
      in.type = parse_type();
      in.operands.push_back(parse_operand());
      if (!eat_ident("to"))
        err("expected 'to'");
      in.type2 = parse_type();
    } else if (op == "phi") {
      in.op = Opcode::Phi;
      in.type = parse_type();
      do {
        expect_punct("[");
        Operand v = parse_operand();
        expect_punct(",");
        std::string lbl = expect_ident("phi label");
        expect_punct("]");
        if (!failed_)
          in.phi_in.emplace_back(v, lbl);
      } while (eat_punct(","));
    } else if (op == "br") {
      in.op = Opcode::Br;
      in.label_a = expect_ident("branch target");
    } else if (op == "condbr") {
      in.op = Opcode::CondBr;
      in.operands.push_back(parse_operand());
      expect_punct(",");
      in.label_a = expect_ident("branch target");
      expect_punct(",");
      in.label_b = expect_ident("branch target");
    } else if (op == "call") {
      in.op = Opcode::Call;
      in.callee = expect_sigil_ident('@', "callee");
      expect_punct("(");
      if (!eat_punct(")")) {
        do {
          in.operands.push_back(parse_operand());
        } while (eat_punct(","));
        expect_punct(")");
      }
    } else if (op == "ret") {
      in.op = Opcode::Ret;
      const Token &t = lex_.cur();
      bool has_val = false;
      if (t.kind == Token::Kind::Number)
        has_val = true;
      else if (t.kind == Token::Kind::Punct && t.text == "-")
        has_val = true;
      else if (t.kind == Token::Kind::Ident && t.text == "null")
        has_val = true;
      else if (t.kind == Token::Kind::Ident && t.text.size() > 1 &&
               t.text[0] == '@')
        has_val = true;
      else if (t.kind == Token::Kind::Ident && t.text.size() > 1 &&
               t.text[0] == '%' && lex_.next().text != "=")
        has_val = true;
      if (has_val)
        in.operands.push_back(parse_operand());
    } else if (op == "free") {
      in.op = Opcode::Free;
      in.operands.push_back(parse_operand());
    } else if (op == "memcpy") {
      in.op = Opcode::Memcpy;
      in.operands.push_back(parse_operand());
      expect_punct(",");
      in.operands.push_back(parse_operand());
      expect_punct(",");
      in.operands.push_back(parse_operand());
    } else if (op == "assert") {
      in.op = Opcode::Assert;
      if (lex_.cur().text != "(") {
        err("expected '(' after assert");
        return in;
      }
      size_t start = lex_.cur().offset + 1;
      int depth = 0;
      size_t end = start;
      // Capture the raw parenthesised expression.
      while (lex_.cur().kind != Token::Kind::End) {
        if (lex_.cur().kind == Token::Kind::Punct && lex_.cur().text == "(")
          ++depth;
        else if (lex_.cur().kind == Token::Kind::Punct &&
                 lex_.cur().text == ")") {
          --depth;
          if (depth == 0) {
            end = lex_.cur().offset;
            lex_.advance();
            break;
          }
        }
        lex_.advance();
      }
      if (depth != 0) {
        err("unbalanced assert expression");
        return in;
      }
      std::string error;
      in.assertion = parse_aexpr(lex_.raw(start, end), &error);
      if (!in.assertion) {
        err("malformed assert expression: " + error);
        return in;
      }
      if (eat_ident("!target"))
        in.target_assert = true;
    } else if (op == "symbolic") {
      in.op = Opcode::Symbolic;
      in.type = parse_type();
      if (lex_.cur().kind == Token::Kind::String) {
        in.sym_name = lex_.cur().text;
        lex_.advance();
      }
    } else {
      err("unknown opcode '" + op + "'");
      return in;
    }
    // Optional annotations, in any order.
    for (;;) {
      if (eat_ident("!site")) {
        expect_punct("(");
        in.site_tag = expect_string("site tag");
        expect_punct(")");
      } else if (eat_ident("!addrw")) {
        expect_punct("(");
        in.addr_width = static_cast<unsigned>(expect_number("address width"));
        expect_punct(")");
      } else if (eat_ident("!loc")) {
        expect_punct("(");
        in.loc.file = expect_string("file");
        expect_punct(",");
        in.loc.line = static_cast<uint32_t>(expect_number("line"));
        if (eat_punct(",")) {
          in.loc.col = static_cast<uint32_t>(expect_number("column"));
        } else {
          in.loc.col = 0;
        }
        expect_punct(")");
      } else {
        break;
      }
    }
    return in;
  }

  void infer_return_types(Module &m) {
    // Two passes resolve chains like f calling g where g's type is inferred.
    for (int round = 0; round < 3; ++round) {
      bool changed = false;
      for (auto &f : m.functions) {
        if (f.ret_type || f.is_external)
          continue;
        bool any_value_ret = false;
        TypeRef inferred;
        auto types = compute_value_types(m, f);
        for (const auto &r : all_instrs(f)) {
          if (r.instr->op != Opcode::Ret)
            continue;
          if (r.instr->operands.empty())
            continue;
          any_value_ret = true;
          const Operand &o = r.instr->operands[0];
          if (o.kind == Operand::Kind::Local) {
            auto it = types.find(o.name);
            if (it != types.end())
              inferred = it->second;
          } else if (o.kind == Operand::Kind::Global) {
            // address of a global
            const GlobalDecl *g = m.find_global(o.name);
            if (g)
              inferred = Type::make_pointer(g->type);
          }
        }
        if (!any_value_ret) {
          f.ret_type = Type::make_void();
          changed = true;
        } else if (inferred) {
          f.ret_type = inferred;
          changed = true;
        }
      }
      if (!changed)
        break;
    }
  }
};

} // namespace

ParseResult parse_module_only(std::string_view text,
                              const std::string &source_name) {
  Parser p(text, source_name);
  ParseResult r = p.run();
  if (r.module) {
    // Untagged instructions take the module's default file.
    for (auto &f : r.module->functions)
      for (auto &bb : f.blocks)
        for (auto &in : bb.instrs)
          if (in.loc.file.empty())
            in.loc.file = r.module->default_file;
  }
  return r;
}

ParseResult parse_module(std::string_view text, const std::string &source_name) {
  ParseResult r = parse_module_only(text, source_name);
  if (!r.module)
    return r;
  auto vdiags = validate_module(*r.module);
  bool bad = false;
  for (const auto &d : vdiags) {
    if (d.severity == Diagnostic::Severity::Error)
      bad = true;
    r.diags.push_back(d);
  }
  if (bad)
    r.module.reset();
  return r;
}

ParseResult parse_module_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ParseResult r;
    Diagnostic d;
    d.file = path;
    d.message = "cannot open file";
    r.diags.push_back(std::move(d));
    return r;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_module(ss.str(), path);
}

} // namespace stase::mir
