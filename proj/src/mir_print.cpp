//===-- mir_print.cpp - Canonical mini-IR text output ---------------------===//

#include "stase/mir.hpp"

#include <sstream>

namespace stase::mir {

namespace {

const char *icmp_pred_name(ICmpPred p) {
  switch (p) {
  case ICmpPred::Eq:
    return "eq";
  case ICmpPred::Ne:
    return "ne";
  case ICmpPred::Ult:
    return "ult";
  case ICmpPred::Ule:
    return "ule";
  case ICmpPred::Ugt:
    return "ugt";
  case ICmpPred::Uge:
    return "uge";
  case ICmpPred::Slt:
    return "slt";
  case ICmpPred::Sle:
    return "sle";
  case ICmpPred::Sgt:
    return "sgt";
  case ICmpPred::Sge:
    return "sge";
  }
  return "?";
}

void print_operand(std::ostream &os, const Operand &o) {
  switch (o.kind) {
  case Operand::Kind::Local:
    os << "%" << o.name;
    break;
  case Operand::Kind::Global:
    os << "@" << o.name;
    break;
  case Operand::Kind::Const:
    os << o.value;
    break;
  case Operand::Kind::Null:
    os << "null";
    break;
  }
}

void print_instr(std::ostream &os, const Instruction &in) {
  os << "  ";
  if (!in.result.empty())
    os << "%" << in.result << " = ";
  switch (in.op) {
  case Opcode::Alloca:
    os << "alloca " << type_to_string(in.type);
    break;
  case Opcode::Load:
    os << "load " << type_to_string(in.type) << ", ";
    print_operand(os, in.operands[0]);
    break;
  case Opcode::Store:
    os << "store " << type_to_string(in.type) << " ";
    print_operand(os, in.operands[0]);
    os << ", ";
    print_operand(os, in.operands[1]);
    break;
  case Opcode::Gep:
    os << "gep " << type_to_string(in.type) << ", ";
    print_operand(os, in.operands[0]);
    for (const auto &sel : in.gep_path) {
      if (sel.kind == GepSelector::Kind::Field) {
        os << ", ." << sel.field;
      } else {
        os << ", [";
        print_operand(os, sel.index);
        os << "]";
      }
    }
    break;
  case Opcode::Add:
  case Opcode::Sub:
  case Opcode::Mul:
  case Opcode::UDiv:
  case Opcode::SDiv:
    os << opcode_name(in.op) << " " << type_to_string(in.type) << " ";
    print_operand(os, in.operands[0]);
    os << ", ";
    print_operand(os, in.operands[1]);
    break;
  case Opcode::ICmp:
    os << "icmp " << icmp_pred_name(in.pred) << " " << type_to_string(in.type)
       << " ";
    print_operand(os, in.operands[0]);
    os << ", ";
    print_operand(os, in.operands[1]);
    break;
  case Opcode::Zext:
  case Opcode::Trunc:
    os << opcode_name(in.op) << " " << type_to_string(in.type) << " ";
    print_operand(os, in.operands[0]);
    os << " to " << type_to_string(in.type2);
    break;
  case Opcode::Phi: {
    os << "phi " << type_to_string(in.type) << " ";
    bool first = true;
    for (const auto &[v, lbl] : in.phi_in) {
      if (!first)
        os << ", ";
      first = false;
      os << "[";
      print_operand(os, v);
      os << ", " << lbl << "]";
    }
    break;
  }
  case Opcode::Br:
    os << "br " << in.label_a;
    break;
  case Opcode::CondBr:
    os << "condbr ";
    print_operand(os, in.operands[0]);
    os << ", " << in.label_a << ", " << in.label_b;
    break;
  case Opcode::Call: {
    os << "call @" << in.callee << "(";
    bool first = true;
    for (const auto &o : in.operands) {
      if (!first)
        os << ", ";
      first = false;
      print_operand(os, o);
    }
    os << ")";
    break;
  }
  case Opcode::Ret:
    os << "ret";
    if (!in.operands.empty()) {
      os << " ";
      print_operand(os, in.operands[0]);
    }
    break;
  case Opcode::Free:
    os << "free ";
    print_operand(os, in.operands[0]);
    break;
  case Opcode::Memcpy:
    os << "memcpy ";
    print_operand(os, in.operands[0]);
    os << ", ";
    print_operand(os, in.operands[1]);
    os << ", ";
    print_operand(os, in.operands[2]);
    break;
  case Opcode::Assert:
    os << "assert (" << aexpr_to_string(in.assertion) << ")";
    if (in.target_assert)
      os << " !target";
    break;
  case Opcode::Symbolic:
    os << "symbolic " << type_to_string(in.type);
    if (!in.sym_name.empty())
      os << " \"" << in.sym_name << "\"";
    break;
  }
  if (!in.site_tag.empty())
    os << " !site(\"" << in.site_tag << "\")";
  if (in.addr_width)
    os << " !addrw(" << in.addr_width << ")";
  os << " !loc(\"" << in.loc.file << "\"," << in.loc.line << "," << in.loc.col
     << ")";
  os << "\n";
}

} // namespace

std::string pretty_print(const Module &m) {
  std::ostringstream os;
  os << "module " << m.name << "\n";
  os << "!file(\"" << m.default_file << "\")\n";
  // Struct declarations come first so types resolve on re-parse.
  for (const auto &s : m.structs) {
    os << "struct %" << s.name << " { ";
    bool first = true;
    for (const auto &[fn, ft] : s.fields) {
      if (!first)
        os << ", ";
      first = false;
      os << fn << ": " << type_to_string(ft);
    }
    os << " }\n";
  }
  for (const auto &r : m.regions) {
    os << "region " << r.name << " base=";
    if (r.base_symbolic)
      os << "symbolic";
    else
      os << r.base;
    os << " size=";
    if (r.size_symbolic)
      os << "symbolic";
    else
      os << r.size;
    os << "\n";
  }
  for (const auto &g : m.globals) {
    os << "global @" << g.name << ": " << type_to_string(g.type);
    switch (g.init) {
    case GlobalDecl::Init::Zero:
      os << " = zeroinit";
      break;
    case GlobalDecl::Init::Const:
      os << " = " << g.init_value;
      break;
    case GlobalDecl::Init::Symbolic:
      os << " = symbolic";
      break;
    }
    os << "\n";
  }
  for (const auto &ann : m.loop_bounds)
    os << "!loopbound(@" << ann.func << ", " << ann.header << ", " << ann.bound
       << ")\n";
  for (const auto &f : m.functions) {
    if (f.is_external) {
      os << "extern @" << f.name << "(";
      bool first = true;
      for (const auto &[pn, pt] : f.params) {
        (void)pn;
        if (!first)
          os << ", ";
        first = false;
        os << type_to_string(pt);
      }
      os << ")";
      if (f.ret_type && !f.ret_type->is_void())
        os << " -> " << type_to_string(f.ret_type);
      os << "\n";
      continue;
    }
    os << "\nfn @" << f.name << "(";
    bool first = true;
    for (const auto &[pn, pt] : f.params) {
      if (!first)
        os << ", ";
      first = false;
      os << "%" << pn << ": " << type_to_string(pt);
    }
    os << ")";
    if (f.ret_type && !f.ret_type->is_void())
      os << " -> " << type_to_string(f.ret_type);
    os << " {\n";
    for (const auto &bb : f.blocks) {
      os << bb.label << ":\n";
      for (const auto &in : bb.instrs)
        print_instr(os, in);
    }
    os << "}\n";
  }
  return os.str();
}

} // namespace stase::mir
