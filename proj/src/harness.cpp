//===-- harness.cpp - ECH rewriting, PEH generation, instrumentation ------===//

#include "stase/harness.hpp"

#include "stase/cfg.hpp"
#include "stase/facts.hpp"
#include "stase/points_to.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace stase::harness {

using config::InputSpec;
using mir::Function;
using mir::Instruction;
using mir::Module;
using mir::Opcode;
using mir::Operand;
using mir::TypeRef;

//===----------------------------------------------------------------------===//
// ECH
//===----------------------------------------------------------------------===//

EchApplyResult build_ech(const Module &m, const config::EchConfig &ech) {
  EchApplyResult res;
  Module out = m;
  for (const auto &name : ech.symbolic_params) {
    bool hit = false;
    for (auto &r : out.regions)
      if (r.name == name) {
        if (!r.base_symbolic || !r.size_symbolic) {
          r.base_symbolic = true;
          r.size_symbolic = true;
          res.rewrites.push_back("region " + name + " -> symbolic base/size");
        }
        hit = true;
      }
    for (auto &g : out.globals)
      if (g.name == name) {
        if (g.init != mir::GlobalDecl::Init::Symbolic) {
          g.init = mir::GlobalDecl::Init::Symbolic;
          res.rewrites.push_back("global @" + name + " -> symbolic");
        }
        hit = true;
      }
    if (!hit) {
      res.error = "symbolic_params entry '" + name + "' not found";
      return res;
    }
  }
  for (const auto &name : ech.pcd_globals) {
    bool hit = false;
    for (auto &g : out.globals)
      if (g.name == name) {
        if (g.init != mir::GlobalDecl::Init::Symbolic) {
          g.init = mir::GlobalDecl::Init::Symbolic;
          res.rewrites.push_back("pcd global @" + name + " -> symbolic");
        }
        hit = true;
      }
    if (!hit) {
      res.error = "pcd entry '@" + name + "' not found";
      return res;
    }
  }
  for (const auto &[name, value] : ech.guids) {
    for (auto &g : out.globals) {
      if (g.name == name + "_hi" &&
          (g.init != mir::GlobalDecl::Init::Const ||
           g.init_value != value.first)) {
        g.init = mir::GlobalDecl::Init::Const;
        g.init_value = value.first;
        res.rewrites.push_back("guid @" + g.name + " set");
      }
      if (g.name == name + "_lo" &&
          (g.init != mir::GlobalDecl::Init::Const ||
           g.init_value != value.second)) {
        g.init = mir::GlobalDecl::Init::Const;
        g.init_value = value.second;
        res.rewrites.push_back("guid @" + g.name + " set");
      }
    }
  }
  // Table-accessor rewrite: `%t = call @Accessor()` becomes an address-of
  // gep on the configured global. One-for-one so ordinals are stable.
  for (auto &f : out.functions) {
    if (f.is_external)
      continue;
    for (auto &bb : f.blocks)
      for (auto &in : bb.instrs) {
        if (in.op != Opcode::Call)
          continue;
        auto it = ech.table_stubs.find(in.callee);
        if (it == ech.table_stubs.end())
          continue;
        const mir::GlobalDecl *g = out.find_global(it->second);
        if (!g) {
          res.error = "table stub target '@" + it->second + "' not found";
          return res;
        }
        if (!in.operands.empty() || in.result.empty()) {
          res.error = "table accessor '@" + in.callee +
                      "' must take no arguments and produce a result";
          return res;
        }
        res.rewrites.push_back("call @" + in.callee + " -> &@" + it->second +
                               " in @" + f.name);
        in.op = Opcode::Gep;
        in.type = g->type;
        in.operands = {Operand::global(it->second)};
        in.gep_path.clear();
        in.callee.clear();
      }
  }
  auto diags = mir::validate_module(out);
  for (const auto &d : diags)
    if (d.severity == mir::Diagnostic::Severity::Error) {
      res.error = "ech output fails validation: " + d.render();
      return res;
    }
  res.module = std::move(out);
  return res;
}

//===----------------------------------------------------------------------===//
// PEH
//===----------------------------------------------------------------------===//

namespace {

std::string display_for_spec(const InputSpec &spec, const Function &entry_fn) {
  if (spec.kind == InputSpec::Kind::Global)
    return spec.global_name;
  std::string base = entry_fn.params[static_cast<size_t>(spec.param_index)].first;
  // pointer inputs read like the dereferenced object they expose
  if (spec.deref || spec.object)
    return "*" + base;
  return base;
}

} // namespace

PehResult generate_peh(const slicer::VulnerabilityDescription &vd,
                       const Module &m, const PehOptions &opts) {
  PehResult res;
  const Function *entry_fn = m.find_function(vd.entry);
  if (!entry_fn) {
    res.error = "vd entry '@" + vd.entry + "' not found in module";
    return res;
  }
  if (!mir::find_instr_by_id(m, vd.instr)) {
    res.error = "vd instruction '" + vd.instr + "' not found in module";
    return res;
  }
  PathExplorationHarness peh;
  peh.vd_id = vd.id;
  peh.entry = vd.entry;
  peh.call_depth = opts.call_depth;
  peh.default_loop_bound = opts.default_loop_bound;
  peh.assertion_file = vd.file;
  peh.assertion_line = vd.line;
  peh.assertion_text = vd.assertion_text;
  peh.stubs = vd.stub_functions;
  for (const auto &spec : vd.input_specs) {
    SymbolicVarPlan plan;
    plan.spec = spec;
    plan.display = display_for_spec(spec, *entry_fn);
    peh.symbolic_vars.push_back(std::move(plan));
  }
  // Loop bounds for every loop of the retained functions: the constant trip
  // count when detected, otherwise the configured default.
  for (const auto &fname : vd.retained_funcs) {
    const Function *f = m.find_function(fname);
    if (!f || f->is_external)
      continue;
    auto g = cfg::build_cfg(*f);
    bool irr = false;
    auto loops = cfg::find_natural_loops(m, *f, g, &irr);
    for (const auto &loop : loops) {
      uint64_t bound =
          loop.has_const_bound ? loop.const_bound : opts.default_loop_bound;
      peh.loop_bounds[{fname, f->blocks[loop.header].label}] = bound;
    }
  }
  res.peh = std::move(peh);
  return res;
}

std::string PathExplorationHarness::serialize() const {
  std::ostringstream os;
  os << "# STASE path exploration harness\n";
  os << "vd = " << vd_id << "\n";
  os << "entry = " << entry << "\n";
  os << "driver = " << driver << "\n";
  os << "assertion = " << assertion_file << ":" << assertion_line << "\n";
  os << "assertion_text = " << assertion_text << "\n";
  os << "call_depth = " << call_depth << "\n";
  os << "default_loop_bound = " << default_loop_bound << "\n";
  for (const auto &sv : symbolic_vars) {
    os << "symbolic = " << sv.display << " ;";
    if (sv.spec.kind == InputSpec::Kind::Param)
      os << " param " << sv.spec.param_index;
    else
      os << " global " << sv.spec.global_name;
    if (sv.spec.deref)
      os << " deref";
    if (sv.spec.object)
      os << " object";
    if (sv.spec.symbolic_addr)
      os << " addr";
    if (sv.spec.width)
      os << " width=" << sv.spec.width;
    if (!sv.spec.fields.empty()) {
      os << " fields ";
      for (size_t i = 0; i < sv.spec.fields.size(); ++i) {
        if (i)
          os << ",";
        for (size_t j = 0; j < sv.spec.fields[i].path.size(); ++j) {
          if (j)
            os << ".";
          os << sv.spec.fields[i].path[j];
        }
        if (sv.spec.fields[i].width)
          os << ":" << sv.spec.fields[i].width;
      }
    }
    os << "\n";
  }
  for (const auto &s : stubs)
    os << "stub = " << s << "\n";
  for (const auto &[key, bound] : loop_bounds)
    os << "loopbound = " << key.first << " " << key.second << " " << bound
       << "\n";
  return os.str();
}

PehParseResult parse_peh(std::string_view text) {
  PehParseResult res;
  PathExplorationHarness peh;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      continue;
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string &s) {
      size_t b = s.find_first_not_of(" \t");
      size_t e = s.find_last_not_of(" \t\r");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(val);
    if (key == "vd")
      peh.vd_id = val;
    else if (key == "entry")
      peh.entry = val;
    else if (key == "driver")
      peh.driver = val;
    else if (key == "assertion") {
      size_t colon = val.rfind(':');
      if (colon == std::string::npos) {
        res.error = "malformed assertion location";
        return res;
      }
      peh.assertion_file = val.substr(0, colon);
      peh.assertion_line =
          static_cast<uint32_t>(std::stoul(val.substr(colon + 1)));
    } else if (key == "assertion_text")
      peh.assertion_text = val;
    else if (key == "call_depth")
      peh.call_depth = static_cast<unsigned>(std::stoul(val));
    else if (key == "default_loop_bound")
      peh.default_loop_bound = std::stoull(val);
    else if (key == "symbolic") {
      SymbolicVarPlan plan;
      size_t semi = val.find(';');
      plan.display = val.substr(0, semi);
      trim(plan.display);
      if (semi != std::string::npos) {
        std::istringstream ss(val.substr(semi + 1));
        std::string tok;
        ss >> tok;
        if (tok == "param") {
          plan.spec.kind = InputSpec::Kind::Param;
          ss >> plan.spec.param_index;
        } else if (tok == "global") {
          plan.spec.kind = InputSpec::Kind::Global;
          ss >> plan.spec.global_name;
        }
        while (ss >> tok) {
          if (tok == "deref")
            plan.spec.deref = true;
          else if (tok == "object")
            plan.spec.object = true;
          else if (tok == "addr")
            plan.spec.symbolic_addr = true;
          else if (tok.rfind("width=", 0) == 0)
            plan.spec.width = static_cast<unsigned>(std::stoul(tok.substr(6)));
          else if (tok == "fields") {
            std::string list;
            ss >> list;
            std::istringstream ls(list);
            std::string item;
            while (std::getline(ls, item, ',')) {
              InputSpec::FieldSpec fs;
              std::string path = item;
              size_t colon = item.find(':');
              if (colon != std::string::npos) {
                path = item.substr(0, colon);
                fs.width =
                    static_cast<unsigned>(std::stoul(item.substr(colon + 1)));
              }
              std::string part;
              std::istringstream ps(path);
              while (std::getline(ps, part, '.'))
                fs.path.push_back(part);
              plan.spec.fields.push_back(std::move(fs));
            }
          }
        }
      }
      peh.symbolic_vars.push_back(std::move(plan));
    } else if (key == "stub")
      peh.stubs.push_back(val);
    else if (key == "theta")
      peh.theta_file = val;
    else if (key == "digest")
      peh.digest = val;
    else if (key == "loopbound") {
      std::istringstream ss(val);
      std::string fn, hdr;
      uint64_t bound;
      if (ss >> fn >> hdr >> bound)
        peh.loop_bounds[{fn, hdr}] = bound;
    }
  }
  if (peh.entry.empty()) {
    res.error = "peh manifest missing entry";
    return res;
  }
  res.peh = std::move(peh);
  return res;
}

PehParseResult parse_peh_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    PehParseResult r;
    r.error = "cannot open " + path;
    return r;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_peh(ss.str());
}

//===----------------------------------------------------------------------===//
// Instrumentation
//===----------------------------------------------------------------------===//

namespace {

uint64_t fnv1a(const std::string &s, uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct DriverBuilder {
  const Module &m;
  const Function &entry_fn;
  mir::BasicBlock block;
  int tmp = 0;
  std::string err;

  std::string fresh(const std::string &hint) {
    return "__in" + std::to_string(tmp++) + "_" + hint;
  }

  void push(Instruction in) {
    in.loc.file = "<driver>";
    in.loc.line = static_cast<uint32_t>(block.instrs.size() + 1);
    block.instrs.push_back(std::move(in));
  }

  // symbolic value of `width` (or the type's natural width), widened to the
  // target integer type; returns the operand holding the final value.
  Operand symbolic_scalar(const TypeRef &target, unsigned width,
                          const std::string &name) {
    unsigned natural = target->width;
    unsigned w = width && width < natural ? width : natural;
    Instruction sym;
    sym.op = Opcode::Symbolic;
    sym.type = mir::Type::make_int(w);
    sym.result = fresh("sym");
    sym.sym_name = name;
    std::string sval = sym.result;
    push(std::move(sym));
    if (w == natural)
      return Operand::local(sval);
    Instruction zx;
    zx.op = Opcode::Zext;
    zx.type = mir::Type::make_int(w);
    zx.type2 = target;
    zx.operands = {Operand::local(sval)};
    zx.result = fresh("wide");
    std::string wval = zx.result;
    push(std::move(zx));
    return Operand::local(wval);
  }

  // Materializes one entry argument per the input spec. Returns the operand
  // to pass to the entry call.
  Operand materialize(const InputSpec *spec, size_t param_index) {
    const auto &[pname, ptype] = entry_fn.params[param_index];
    std::string site = "input:" + entry_fn.name + ":%" + pname;
    if (!ptype->is_pointer()) {
      if (!spec)
        return Operand::constant(0);
      return symbolic_scalar(ptype, spec->width, pname);
    }
    TypeRef pointee = ptype->elem;
    std::string obj;
    if (spec && spec->symbolic_addr) {
      Instruction sp;
      sp.op = Opcode::Symbolic;
      sp.type = ptype;
      sp.result = fresh("obj");
      sp.sym_name = pname;
      sp.site_tag = site;
      sp.addr_width = spec->width;
      obj = sp.result;
      push(std::move(sp));
    } else {
      Instruction al;
      al.op = Opcode::Alloca;
      al.type = pointee;
      al.result = fresh("obj");
      al.site_tag = site;
      obj = al.result;
      push(std::move(al));
    }
    if (spec && spec->deref) {
      if (!pointee->is_int()) {
        err = "deref input requires pointer-to-integer parameter %" + pname;
        return Operand::null();
      }
      Operand v = symbolic_scalar(pointee, spec->width, pname);
      Instruction st;
      st.op = Opcode::Store;
      st.type = pointee;
      st.operands = {v, Operand::local(obj)};
      push(std::move(st));
    }
    if (spec && !spec->fields.empty()) {
      for (const auto &fs : spec->fields) {
        // walk the field path for the leaf type
        TypeRef cur = pointee;
        for (const auto &fn : fs.path) {
          const mir::StructDef *sd =
              cur && cur->is_struct() ? m.find_struct(cur->struct_name)
                                      : nullptr;
          int idx = sd ? sd->field_index(fn) : -1;
          if (idx < 0) {
            err = "field path invalid for input %" + pname;
            return Operand::null();
          }
          cur = sd->fields[static_cast<size_t>(idx)].second;
        }
        if (!cur->is_int()) {
          err = "symbolic field must be an integer: %" + pname;
          return Operand::null();
        }
        std::string display = pname;
        for (const auto &fn : fs.path)
          display += "." + fn;
        Operand v = symbolic_scalar(cur, fs.width, display);
        Instruction gep;
        gep.op = Opcode::Gep;
        gep.type = pointee;
        gep.operands = {Operand::local(obj)};
        for (const auto &fn : fs.path) {
          mir::GepSelector sel;
          sel.kind = mir::GepSelector::Kind::Field;
          sel.field = fn;
          gep.gep_path.push_back(sel);
        }
        gep.result = fresh("fld");
        std::string fld = gep.result;
        push(std::move(gep));
        Instruction st;
        st.op = Opcode::Store;
        st.type = cur;
        st.operands = {v, Operand::local(fld)};
        push(std::move(st));
      }
    }
    return Operand::local(obj);
  }
};

} // namespace

InstrumentResult instrument(const Module &m_after_ech,
                            const slicer::VulnerabilityDescription &vd,
                            const PathExplorationHarness &peh,
                            const InstrumentOptions &opts) {
  InstrumentResult res;
  Module theta = m_after_ech;
  std::ostringstream digest_src;

  if (theta.find_function(kDriverName)) {
    res.error = "module already instrumented (driver present)";
    return res;
  }

  // 1. Stub bodies: a fresh symbolic return value per call, signature kept.
  if (opts.apply_stubs) {
    for (const auto &stub : peh.stubs) {
      Function *f = nullptr;
      for (auto &fn : theta.functions)
        if (fn.name == stub)
          f = &fn;
      if (!f) {
        res.error = "stub function '@" + stub + "' not found";
        return res;
      }
      if (f->name == vd.entry) {
        res.error = "entry point cannot be stubbed";
        return res;
      }
      mir::BasicBlock body;
      body.label = "entry";
      bool has_ret = f->ret_type && !f->ret_type->is_void();
      if (has_ret) {
        Instruction sym;
        sym.op = Opcode::Symbolic;
        sym.type = f->ret_type;
        sym.result = "__stub_ret";
        sym.sym_name = f->name + ".ret";
        sym.site_tag = "stubret:" + f->name;
        sym.loc = {"<stub>", 1, 0};
        body.instrs.push_back(std::move(sym));
      }
      Instruction ret;
      ret.op = Opcode::Ret;
      if (has_ret)
        ret.operands = {Operand::local("__stub_ret")};
      ret.loc = {"<stub>", 2, 0};
      body.instrs.push_back(std::move(ret));
      f->blocks = {std::move(body)};
      digest_src << "stub:" << stub << "\n";
    }
  }

  // 2. Target assertion immediately before K.
  auto kref = mir::find_instr_by_id(theta, vd.instr);
  if (!kref) {
    res.error = "target instruction not found: " + vd.instr;
    return res;
  }
  {
    Function *kf = nullptr;
    for (auto &fn : theta.functions)
      if (fn.name == kref->fn->name)
        kf = &fn;
    auto &instrs = kf->blocks[kref->block_index].instrs;
    // exactly-one-target-assert invariant
    for (const auto &f : theta.functions)
      for (const auto &bb : f.blocks)
        for (const auto &in : bb.instrs)
          if (in.op == Opcode::Assert && in.target_assert) {
            res.error = "module already carries a target assertion";
            return res;
          }
    Instruction chk;
    chk.op = Opcode::Assert;
    chk.assertion = vd.assertion;
    chk.target_assert = true;
    chk.loc.file = vd.file;
    chk.loc.line = vd.line;
    chk.loc.col = 0;
    instrs.insert(instrs.begin() +
                      static_cast<std::ptrdiff_t>(kref->index_in_block),
                  std::move(chk));
    digest_src << "assert:" << vd.instr << ":" << vd.assertion_text << "\n";
  }

  // 3. Driver with the symbolic prologue.
  {
    const Function *entry_fn = theta.find_function(vd.entry);
    if (!entry_fn) {
      res.error = "entry '@" + vd.entry + "' not found";
      return res;
    }
    DriverBuilder db{theta, *entry_fn, {}, 0, {}};
    db.block.label = "entry";
    // attacker globals first
    for (const auto &sv : peh.symbolic_vars) {
      if (sv.spec.kind != InputSpec::Kind::Global)
        continue;
      const mir::GlobalDecl *g = theta.find_global(sv.spec.global_name);
      if (!g) {
        res.error = "input global '@" + sv.spec.global_name + "' not found";
        return res;
      }
      if (!g->type->is_int()) {
        res.error = "symbolic input global must be an integer: @" + g->name;
        return res;
      }
      Operand v = db.symbolic_scalar(g->type, sv.spec.width, g->name);
      Instruction st;
      st.op = Opcode::Store;
      st.type = g->type;
      st.operands = {v, Operand::global(g->name)};
      db.push(std::move(st));
    }
    // entry arguments
    std::vector<Operand> args;
    for (size_t i = 0; i < entry_fn->params.size(); ++i) {
      const InputSpec *spec = nullptr;
      for (const auto &sv : peh.symbolic_vars)
        if (sv.spec.kind == InputSpec::Kind::Param &&
            sv.spec.param_index == static_cast<int>(i))
          spec = &sv.spec;
      args.push_back(db.materialize(spec, i));
      if (!db.err.empty()) {
        res.error = db.err;
        return res;
      }
    }
    Instruction call;
    call.op = Opcode::Call;
    call.callee = vd.entry;
    call.operands = std::move(args);
    if (entry_fn->ret_type && !entry_fn->ret_type->is_void())
      call.result = "__entry_ret";
    db.push(std::move(call));
    Instruction ret;
    ret.op = Opcode::Ret;
    db.push(std::move(ret));

    Function driver;
    driver.name = kDriverName;
    driver.ret_type = mir::Type::make_void();
    driver.blocks = {std::move(db.block)};
    theta.functions.push_back(std::move(driver));
    digest_src << "driver:" << vd.entry << "\n";
  }

  // 4. Loop bound annotations for the engines.
  theta.loop_bounds.clear();
  for (const auto &[key, bound] : peh.loop_bounds) {
    theta.loop_bounds.push_back({key.first, key.second, bound});
    digest_src << "loop:" << key.first << ":" << key.second << ":" << bound
               << "\n";
  }

  auto diags = mir::validate_module(theta);
  for (const auto &d : diags)
    if (d.severity == mir::Diagnostic::Severity::Error) {
      res.error = "instrumented module fails validation: " + d.render();
      return res;
    }

  InstrumentedSegment seg;
  seg.module = std::move(theta);
  seg.vd_id = vd.id;
  seg.target_instr = vd.instr;
  {
    std::ostringstream hex;
    hex << std::hex << fnv1a(digest_src.str());
    seg.digest = hex.str();
  }
  res.segment = std::move(seg);
  return res;
}

} // namespace stase::harness
