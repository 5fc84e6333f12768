//===-- mir_types.cpp - Type and module helpers ---------------------------===//

#include "stase/mir.hpp"

#include <algorithm>
#include <sstream>

namespace stase::mir {

TypeRef Type::make_void() {
  static TypeRef t = [] {
    auto p = std::make_shared<Type>();
    p->kind = TypeKind::Void;
    return p;
  }();
  return t;
}

TypeRef Type::make_int(unsigned width) {
  auto p = std::make_shared<Type>();
  p->kind = TypeKind::Int;
  p->width = width;
  return p;
}

TypeRef Type::make_pointer(TypeRef pointee) {
  auto p = std::make_shared<Type>();
  p->kind = TypeKind::Pointer;
  p->elem = std::move(pointee);
  return p;
}

TypeRef Type::make_array(TypeRef elem, uint64_t length) {
  auto p = std::make_shared<Type>();
  p->kind = TypeKind::Array;
  p->elem = std::move(elem);
  p->length = length;
  return p;
}

TypeRef Type::make_struct(std::string name) {
  auto p = std::make_shared<Type>();
  p->kind = TypeKind::Struct;
  p->struct_name = std::move(name);
  return p;
}

bool type_equal(const TypeRef &a, const TypeRef &b) {
  if (a == b)
    return true;
  if (!a || !b)
    return false;
  if (a->kind != b->kind)
    return false;
  switch (a->kind) {
  case TypeKind::Void:
    return true;
  case TypeKind::Int:
    return a->width == b->width;
  case TypeKind::Pointer:
    return type_equal(a->elem, b->elem);
  case TypeKind::Array:
    return a->length == b->length && type_equal(a->elem, b->elem);
  case TypeKind::Struct:
    return a->struct_name == b->struct_name;
  }
  return false;
}

std::string type_to_string(const TypeRef &t) {
  if (!t)
    return "<null>";
  switch (t->kind) {
  case TypeKind::Void:
    return "void";
  case TypeKind::Int:
    return "i" + std::to_string(t->width);
  case TypeKind::Pointer:
    return type_to_string(t->elem) + "*";
  case TypeKind::Array:
    return "[" + std::to_string(t->length) + " x " + type_to_string(t->elem) +
           "]";
  case TypeKind::Struct:
    return "%" + t->struct_name;
  }
  return "<bad>";
}

const char *opcode_name(Opcode op) {
  switch (op) {
  case Opcode::Alloca:
    return "alloca";
  case Opcode::Load:
    return "load";
  case Opcode::Store:
    return "store";
  case Opcode::Gep:
    return "gep";
  case Opcode::Add:
    return "add";
  case Opcode::Sub:
    return "sub";
  case Opcode::Mul:
    return "mul";
  case Opcode::UDiv:
    return "udiv";
  case Opcode::SDiv:
    return "sdiv";
  case Opcode::ICmp:
    return "icmp";
  case Opcode::Zext:
    return "zext";
  case Opcode::Trunc:
    return "trunc";
  case Opcode::Phi:
    return "phi";
  case Opcode::Br:
    return "br";
  case Opcode::CondBr:
    return "condbr";
  case Opcode::Call:
    return "call";
  case Opcode::Ret:
    return "ret";
  case Opcode::Free:
    return "free";
  case Opcode::Memcpy:
    return "memcpy";
  case Opcode::Assert:
    return "assert";
  case Opcode::Symbolic:
    return "symbolic";
  }
  return "<bad>";
}

bool is_terminator(Opcode op) {
  return op == Opcode::Br || op == Opcode::CondBr || op == Opcode::Ret;
}

Operand Operand::local(std::string n) {
  Operand o;
  o.kind = Kind::Local;
  o.name = std::move(n);
  return o;
}
Operand Operand::global(std::string n) {
  Operand o;
  o.kind = Kind::Global;
  o.name = std::move(n);
  return o;
}
Operand Operand::constant(uint64_t v) {
  Operand o;
  o.kind = Kind::Const;
  o.value = v;
  return o;
}
Operand Operand::null() {
  Operand o;
  o.kind = Kind::Null;
  return o;
}

bool Operand::operator==(const Operand &o) const {
  return kind == o.kind && name == o.name && value == o.value;
}

bool GepSelector::operator==(const GepSelector &o) const {
  return kind == o.kind && field == o.field && index == o.index;
}

int StructDef::field_index(const std::string &fname) const {
  for (size_t i = 0; i < fields.size(); ++i)
    if (fields[i].first == fname)
      return static_cast<int>(i);
  return -1;
}

const BasicBlock *Function::find_block(const std::string &label) const {
  for (const auto &b : blocks)
    if (b.label == label)
      return &b;
  return nullptr;
}

int Function::param_index(const std::string &pname) const {
  for (size_t i = 0; i < params.size(); ++i)
    if (params[i].first == pname)
      return static_cast<int>(i);
  return -1;
}

const Function *Module::find_function(const std::string &n) const {
  for (const auto &f : functions)
    if (f.name == n)
      return &f;
  return nullptr;
}

const GlobalDecl *Module::find_global(const std::string &n) const {
  for (const auto &g : globals)
    if (g.name == n)
      return &g;
  return nullptr;
}

const StructDef *Module::find_struct(const std::string &n) const {
  for (const auto &s : structs)
    if (s.name == n)
      return &s;
  return nullptr;
}

const RegionDecl *Module::find_region(const std::string &n) const {
  for (const auto &r : regions)
    if (r.name == n)
      return &r;
  return nullptr;
}

std::string function_id(const Module &m, const Function &f) {
  return "<" + m.name + ".bc>:" + f.name;
}

std::string instr_id(const Module &m, const Function &f, size_t ordinal) {
  return function_id(m, f) + ":" + std::to_string(ordinal);
}

std::vector<InstrRef> all_instrs(const Function &f) {
  std::vector<InstrRef> out;
  size_t ordinal = 0;
  for (size_t bi = 0; bi < f.blocks.size(); ++bi) {
    const auto &bb = f.blocks[bi];
    for (size_t ii = 0; ii < bb.instrs.size(); ++ii) {
      InstrRef r;
      r.fn = &f;
      r.block_index = bi;
      r.index_in_block = ii;
      r.ordinal = ordinal++;
      r.instr = &bb.instrs[ii];
      out.push_back(r);
    }
  }
  return out;
}

std::optional<InstrRef> find_instr(const Module &m, const std::string &func,
                                   size_t ordinal) {
  const Function *f = m.find_function(func);
  if (!f)
    return std::nullopt;
  for (const auto &r : all_instrs(*f))
    if (r.ordinal == ordinal)
      return r;
  return std::nullopt;
}

std::optional<InstrRef> find_instr_by_id(const Module &m,
                                         const std::string &id) {
  // <mod.bc>:Func:ordinal
  size_t close = id.find(">:");
  if (id.empty() || id[0] != '<' || close == std::string::npos)
    return std::nullopt;
  std::string rest = id.substr(close + 2);
  size_t colon = rest.rfind(':');
  if (colon == std::string::npos)
    return std::nullopt;
  std::string func = rest.substr(0, colon);
  size_t ordinal = 0;
  try {
    ordinal = std::stoull(rest.substr(colon + 1));
  } catch (...) {
    return std::nullopt;
  }
  return find_instr(m, func, ordinal);
}

uint64_t type_byte_size(const Module &m, const TypeRef &t) {
  if (!t)
    return 0;
  switch (t->kind) {
  case TypeKind::Void:
    return 0;
  case TypeKind::Int:
    return t->width == 1 ? 1 : t->width / 8;
  case TypeKind::Pointer:
    return 8;
  case TypeKind::Array:
    return t->length * type_byte_size(m, t->elem);
  case TypeKind::Struct: {
    const StructDef *sd = m.find_struct(t->struct_name);
    if (!sd)
      return 0;
    uint64_t sz = 0;
    for (const auto &[fn, ft] : sd->fields)
      sz += type_byte_size(m, ft);
    return sz;
  }
  }
  return 0;
}

namespace {

// Result type of a gep chain starting at `base` (the pointee type).
TypeRef gep_result_pointee(const Module &m, TypeRef cur,
                           const std::vector<GepSelector> &path) {
  for (const auto &sel : path) {
    if (!cur)
      return nullptr;
    if (sel.kind == GepSelector::Kind::Field) {
      if (!cur->is_struct())
        return nullptr;
      const StructDef *sd = m.find_struct(cur->struct_name);
      if (!sd)
        return nullptr;
      int idx = sd->field_index(sel.field);
      if (idx < 0)
        return nullptr;
      cur = sd->fields[static_cast<size_t>(idx)].second;
    } else {
      if (!cur->is_array())
        return nullptr;
      cur = cur->elem;
    }
  }
  return cur;
}

} // namespace

std::map<std::string, TypeRef> compute_value_types(const Module &m,
                                                   const Function &f) {
  std::map<std::string, TypeRef> types;
  for (const auto &[pn, pt] : f.params)
    types[pn] = pt;
  for (const auto &r : all_instrs(f)) {
    const Instruction &in = *r.instr;
    if (in.result.empty())
      continue;
    TypeRef t;
    switch (in.op) {
    case Opcode::Alloca:
      t = Type::make_pointer(in.type);
      break;
    case Opcode::Load:
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::UDiv:
    case Opcode::SDiv:
    case Opcode::Phi:
    case Opcode::Symbolic:
      t = in.type;
      break;
    case Opcode::Gep: {
      TypeRef pointee = gep_result_pointee(m, in.type, in.gep_path);
      t = pointee ? Type::make_pointer(pointee) : nullptr;
      break;
    }
    case Opcode::ICmp:
      t = Type::make_int(1);
      break;
    case Opcode::Zext:
    case Opcode::Trunc:
      t = in.type2;
      break;
    case Opcode::Call: {
      const Function *callee = m.find_function(in.callee);
      t = callee ? callee->ret_type : nullptr;
      break;
    }
    default:
      break;
    }
    if (t)
      types[in.result] = t;
  }
  return types;
}

namespace {

bool instr_equal(const Instruction &a, const Instruction &b) {
  return a.op == b.op && a.result == b.result && type_equal(a.type, b.type) &&
         type_equal(a.type2, b.type2) && a.pred == b.pred &&
         a.operands == b.operands && a.gep_path == b.gep_path &&
         a.phi_in == b.phi_in && a.callee == b.callee &&
         a.label_a == b.label_a && a.label_b == b.label_b &&
         aexpr_equal(a.assertion, b.assertion) &&
         a.target_assert == b.target_assert && a.sym_name == b.sym_name &&
         a.site_tag == b.site_tag && a.addr_width == b.addr_width &&
         a.loc == b.loc;
}

} // namespace

bool module_equal(const Module &a, const Module &b) {
  if (a.name != b.name || a.default_file != b.default_file)
    return false;
  if (a.structs.size() != b.structs.size() ||
      a.globals.size() != b.globals.size() ||
      a.regions.size() != b.regions.size() ||
      a.functions.size() != b.functions.size() ||
      a.loop_bounds.size() != b.loop_bounds.size())
    return false;
  for (size_t i = 0; i < a.structs.size(); ++i) {
    const auto &sa = a.structs[i], &sb = b.structs[i];
    if (sa.name != sb.name || sa.fields.size() != sb.fields.size())
      return false;
    for (size_t j = 0; j < sa.fields.size(); ++j)
      if (sa.fields[j].first != sb.fields[j].first ||
          !type_equal(sa.fields[j].second, sb.fields[j].second))
        return false;
  }
  for (size_t i = 0; i < a.globals.size(); ++i) {
    const auto &ga = a.globals[i], &gb = b.globals[i];
    if (ga.name != gb.name || !type_equal(ga.type, gb.type) ||
        ga.init != gb.init || ga.init_value != gb.init_value)
      return false;
  }
  for (size_t i = 0; i < a.regions.size(); ++i) {
    const auto &ra = a.regions[i], &rb = b.regions[i];
    if (ra.name != rb.name || ra.base_symbolic != rb.base_symbolic ||
        ra.size_symbolic != rb.size_symbolic || ra.base != rb.base ||
        ra.size != rb.size)
      return false;
  }
  for (size_t i = 0; i < a.loop_bounds.size(); ++i) {
    const auto &la = a.loop_bounds[i], &lb = b.loop_bounds[i];
    if (la.func != lb.func || la.header != lb.header || la.bound != lb.bound)
      return false;
  }
  for (size_t i = 0; i < a.functions.size(); ++i) {
    const auto &fa = a.functions[i], &fb = b.functions[i];
    if (fa.name != fb.name || fa.is_external != fb.is_external ||
        !type_equal(fa.ret_type, fb.ret_type) ||
        fa.params.size() != fb.params.size() ||
        fa.blocks.size() != fb.blocks.size())
      return false;
    for (size_t j = 0; j < fa.params.size(); ++j)
      if (fa.params[j].first != fb.params[j].first ||
          !type_equal(fa.params[j].second, fb.params[j].second))
        return false;
    for (size_t j = 0; j < fa.blocks.size(); ++j) {
      const auto &ba = fa.blocks[j], &bb = fb.blocks[j];
      if (ba.label != bb.label || ba.instrs.size() != bb.instrs.size())
        return false;
      for (size_t k = 0; k < ba.instrs.size(); ++k)
        if (!instr_equal(ba.instrs[k], bb.instrs[k]))
          return false;
    }
  }
  return true;
}

std::string Diagnostic::render() const {
  std::ostringstream os;
  os << file << ":" << line << ":" << col << ": "
     << (severity == Severity::Error ? "error" : "warning") << ": " << message;
  return os.str();
}

} // namespace stase::mir
