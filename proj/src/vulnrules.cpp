//===-- vulnrules.cpp - Candidate-finding driver --------------------------===//

#include "stase/vulnrules.hpp"

#include "stase/facts.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

namespace stase::rules {

using config::category_name;
using datalog::Value;
using mir::Opcode;

bool CandidateFinding::operator<(const CandidateFinding &o) const {
  return std::tie(category, file, line, instr, taint_sinks, entry,
                  taint_source) < std::tie(o.category, o.file, o.line, o.instr,
                                           o.taint_sinks, o.entry,
                                           o.taint_source);
}

bool CandidateFinding::operator==(const CandidateFinding &o) const {
  return category == o.category && entry == o.entry && func == o.func &&
         instr == o.instr && file == o.file && line == o.line &&
         taint_source == o.taint_source && taint_sinks == o.taint_sinks;
}

std::string display_value_name(const std::string &var_id) {
  if (var_id.empty())
    return var_id;
  if (var_id[0] == '@')
    return var_id.substr(1);
  if (var_id[0] == '#')
    return var_id.substr(1);
  size_t mark = var_id.find(":%");
  if (mark != std::string::npos)
    return var_id.substr(mark + 2);
  return var_id;
}

namespace {

std::string short_func_name(const std::string &func_id) {
  // "<mod.bc>:Name" -> "Name"; already-short names pass through.
  size_t close = func_id.find(">:");
  return close == std::string::npos ? func_id : func_id.substr(close + 2);
}

size_t ordinal_of(const std::string &instr_id) {
  size_t colon = instr_id.rfind(':');
  return colon == std::string::npos
             ? 0
             : static_cast<size_t>(std::stoull(instr_id.substr(colon + 1)));
}

std::string str(const datalog::Value &v) { return std::get<std::string>(v); }
int64_t num(const datalog::Value &v) { return std::get<int64_t>(v); }

struct Driver {
  const mir::Module &m;
  const AnalysisConfig &cfg;
  const datalog::Database &db;
  RulesResult &out;
  // taint source var id -> entrypoints configured to control it
  std::map<std::string, std::set<std::string>> source_entries;

  void build_source_map() {
    for (const auto &in : cfg.inputs) {
      if (in.kind == config::InputSpec::Kind::Param) {
        const mir::Function *f = m.find_function(in.entry);
        if (!f)
          continue;
        const std::string &pname =
            f->params[static_cast<size_t>(in.param_index)].first;
        source_entries[facts::var_id(*f, pname)].insert(in.entry);
      } else {
        source_entries["@" + in.global_name].insert(in.entry);
      }
    }
  }

  void emit(VulnCategory cat, const std::string &func_id,
            const std::string &instr_id, int64_t line,
            const std::string &source, std::vector<std::string> sinks,
            const std::string &dividend = "") {
    auto ref = mir::find_instr_by_id(m, instr_id);
    if (!ref)
      return;
    CandidateFinding f;
    f.category = cat;
    f.func = short_func_name(func_id);
    f.instr = instr_id;
    f.ordinal = ordinal_of(instr_id);
    f.file = ref->instr->loc.file;
    f.line = static_cast<uint32_t>(line);
    f.taint_source = source;
    f.taint_sinks = std::move(sinks);
    f.dividend = dividend;
    auto it = source_entries.find(source);
    if (it == source_entries.end())
      return; // source is not a configured input of any entrypoint
    for (const auto &e : it->second) {
      f.entry = e;
      out.findings.push_back(f);
    }
  }

  const datalog::TupleSet &rel(const std::string &name) {
    static const datalog::TupleSet empty;
    auto it = db.find(name);
    return it == db.end() ? empty : it->second;
  }

  void collect(VulnCategory cat) {
    switch (cat) {
    case VulnCategory::DivisionByZero:
      for (const auto &t : rel("divisor_tainted_division_primitive"))
        emit(cat, str(t[0]), str(t[4]), num(t[5]), str(t[3]), {str(t[2])},
             str(t[1]));
      break;
    case VulnCategory::IntegerOverflow:
      for (const auto &t : rel("operand_tainted_overflow_primitive"))
        emit(cat, str(t[0]), str(t[5]), num(t[6]), str(t[3]), {str(t[4])});
      break;
    case VulnCategory::IntegerUnderflow:
      for (const auto &t : rel("operand_tainted_underflow_primitive"))
        emit(cat, str(t[0]), str(t[5]), num(t[6]), str(t[3]), {str(t[4])});
      break;
    case VulnCategory::BufferOverflow:
      for (const auto &t : rel("tainted_buffer_overflow_memcpy"))
        emit(cat, str(t[0]), str(t[5]), num(t[6]), str(t[3]), {str(t[4])});
      for (const auto &t : rel("tainted_buffer_overflow_store"))
        emit(cat, str(t[0]), str(t[3]), num(t[4]), str(t[2]), {str(t[1])});
      break;
    case VulnCategory::OutOfBoundsAccess:
      for (const auto &t : rel("tainted_oob_access_primitive"))
        emit(cat, str(t[0]), str(t[4]), num(t[5]), str(t[3]), {str(t[2])});
      break;
    case VulnCategory::UseAfterFree:
      for (const auto &t : rel("tainted_use_after_free_primitive"))
        emit(cat, str(t[0]), str(t[4]), num(t[5]), str(t[3]), {str(t[1])});
      break;
    case VulnCategory::SmramWrite:
      for (const auto &t : rel("tainted_smram_write_primitive"))
        emit(cat, str(t[0]), str(t[3]), num(t[4]), str(t[2]), {str(t[1])});
      break;
    case VulnCategory::SmramRead:
      for (const auto &t : rel("tainted_smram_read_primitive"))
        emit(cat, str(t[0]), str(t[3]), num(t[4]), str(t[2]), {str(t[1])});
      break;
    case VulnCategory::SmmCallout:
      for (const auto &t : rel("callout_primitive")) {
        auto ref = mir::find_instr_by_id(m, str(t[3]));
        if (!ref)
          continue;
        CandidateFinding f;
        f.category = cat;
        f.entry = short_func_name(str(t[0]));
        f.func = short_func_name(str(t[1]));
        f.instr = str(t[3]);
        f.ordinal = ordinal_of(f.instr);
        f.file = ref->instr->loc.file;
        f.line = static_cast<uint32_t>(num(t[4]));
        out.findings.push_back(std::move(f));
      }
      break;
    }
  }
};

} // namespace

RulesResult run_vuln_rules(const mir::Module &m,
                           const datalog::Database &fact_db,
                           const pts::PointsToResult &pts,
                           const AnalysisConfig &cfg,
                           const std::string &rules_dir) {
  RulesResult res;
  // Assemble the program: schema decls + prelude + enabled categories +
  // config-generated entry clauses.
  std::vector<datalog::Program> parts;
  parts.push_back(facts::fact_schema());
  {
    auto vp = datalog::parse_rules(pts::kVarPointsToDecl, "<var-points-to>");
    parts.push_back(*vp.program);
  }
  auto prelude =
      datalog::parse_rules_file(rules_dir + "/support/taint.dl");
  if (!prelude.ok()) {
    res.error = "taint prelude failed to parse";
    for (const auto &d : prelude.diags)
      res.error += "\n  " + d.render();
    return res;
  }
  parts.push_back(*prelude.program);
  for (VulnCategory c : config::kAllCategories) {
    if (!cfg.category_enabled(c))
      continue;
    std::string path =
        rules_dir + "/" + std::string(category_name(c)) + ".dl";
    auto pr = datalog::parse_rules_file(path);
    if (!pr.ok()) {
      res.error = "rule file " + path + " failed to parse";
      for (const auto &d : pr.diags)
        res.error += "\n  " + d.render();
      return res;
    }
    parts.push_back(*pr.program);
  }
  {
    auto gen = datalog::parse_rules(
        ".decl entrypoint(func: symbol)\n.decl entryinput(var: symbol)\n"
        ".decl func_name(func: symbol, name: symbol)\n"
        ".decl func_param(func: symbol, param: symbol, index: number)\n"
        ".decl global_var(var: symbol, name: symbol)\n" +
            config::generated_entry_rules(cfg),
        "<analysis-config>");
    if (!gen.ok()) {
      res.error = "generated entry rules failed to parse";
      return res;
    }
    parts.push_back(*gen.program);
  }
  auto merged = datalog::merge_programs(parts);
  if (!merged.ok()) {
    res.error = "rule programs failed to merge";
    for (const auto &d : merged.diags)
      res.error += "\n  " + d.render();
    return res;
  }

  datalog::Database facts_in = fact_db;
  facts_in[pts::kVarPointsToRelation] = pts.export_tuples();
  // Forbidden callees from config patterns, matched against function names.
  for (const auto &f : m.functions)
    for (const auto &pat : cfg.forbidden_patterns)
      if (config::glob_match(pat, f.name))
        facts_in["forbidden_callee"].insert(
            {Value(mir::function_id(m, f))});
  facts_in.try_emplace("forbidden_callee");

  auto eval = datalog::evaluate_fixpoint(*merged.program, facts_in);
  if (!eval.ok()) {
    res.error = eval.error;
    return res;
  }
  res.db = std::move(eval.db);

  Driver driver{m, cfg, res.db, res, {}};
  driver.build_source_map();
  for (VulnCategory c : config::kAllCategories)
    if (cfg.category_enabled(c))
      driver.collect(c);

  std::sort(res.findings.begin(), res.findings.end());
  res.findings.erase(std::unique(res.findings.begin(), res.findings.end(),
                                 [](const auto &a, const auto &b) {
                                   return a == b;
                                 }),
                     res.findings.end());
  return res;
}

//===----------------------------------------------------------------------===//
// Assertion templates
//===----------------------------------------------------------------------===//

std::string assertion_template_text(VulnCategory c) {
  switch (c) {
  case VulnCategory::DivisionByZero:
    return "assert(%1 != 0)";
  case VulnCategory::IntegerOverflow:
    return "assert(no unsigned wrap in %1 op %2 at width w)";
  case VulnCategory::IntegerUnderflow:
    return "assert(%1 >= %2)";
  case VulnCategory::OutOfBoundsAccess:
    return "assert(%1 >= 0 && %1 < Sizeof(%2))";
  case VulnCategory::BufferOverflow:
    return "assert(offset(%1) + %2 <= sizeof(%1))";
  case VulnCategory::UseAfterFree:
    return "assert(!freed(%1))";
  case VulnCategory::SmramRead:
  case VulnCategory::SmramWrite:
    return "assert(%2 <= R_BASE + R_SIZE && %1 <= R_BASE + R_SIZE && "
           "(%2 == 0 || %1 + %2 <= R_BASE + R_SIZE))";
  case VulnCategory::SmmCallout:
    return "assert(false)";
  }
  return "";
}

namespace {

using mir::AssertExpr;
using mir::AssertExprRef;

// Operand -> assertion leaf in display (bare-name) form. Bare names resolve
// local first, then global, then region symbol.
AssertExprRef leaf_for_operand(const mir::Operand &o) {
  switch (o.kind) {
  case mir::Operand::Kind::Local:
    return mir::aexpr_name(o.name);
  case mir::Operand::Kind::Global:
    return mir::aexpr_name("@" + o.name);
  case mir::Operand::Kind::Const:
    return mir::aexpr_const(o.value);
  case mir::Operand::Kind::Null:
    return mir::aexpr_const(0);
  }
  return mir::aexpr_const(0);
}

// Finds the instruction operand whose fact id equals `sink_id`.
const mir::Operand *operand_by_id(const mir::Function &f,
                                  const mir::Instruction &in,
                                  const std::string &sink_id) {
  for (const auto &o : in.operands)
    if (facts::operand_id(f, o) == sink_id)
      return &o;
  return nullptr;
}

AssertExprRef region_no_overlap(const std::string &region,
                                AssertExprRef buf, AssertExprRef size) {
  using K = AssertExpr::Kind;
  auto limit = mir::aexpr_arith(K::Add, mir::aexpr_name(region + "_BASE"),
                                mir::aexpr_name(region + "_SIZE"));
  auto c1 = mir::aexpr_cmp(mir::ICmpPred::Ule, size, limit);
  auto c2 = mir::aexpr_cmp(mir::ICmpPred::Ule, buf, limit);
  auto zero = mir::aexpr_cmp(mir::ICmpPred::Eq, size, mir::aexpr_const(0));
  auto sum = mir::aexpr_cmp(mir::ICmpPred::Ule,
                            mir::aexpr_arith(K::Add, buf, size), limit);
  return mir::aexpr_and(mir::aexpr_and(c1, c2), mir::aexpr_or(zero, sum));
}

} // namespace

std::optional<AssertionInstance>
instantiate_assertion(const mir::Module &m, const AnalysisConfig &cfg,
                      const CandidateFinding &finding, std::string *error) {
  using K = AssertExpr::Kind;
  auto fail = [&](const std::string &msg) -> std::optional<AssertionInstance> {
    if (error)
      *error = msg;
    return std::nullopt;
  };
  auto ref = mir::find_instr_by_id(m, finding.instr);
  if (!ref)
    return fail("finding instruction not found: " + finding.instr);
  const mir::Function &f = *ref->fn;
  const mir::Instruction &in = *ref->instr;
  AssertExprRef expr;
  switch (finding.category) {
  case VulnCategory::DivisionByZero: {
    if (in.operands.size() != 2)
      return fail("division finding without two operands");
    expr = mir::aexpr_cmp(mir::ICmpPred::Ne, leaf_for_operand(in.operands[1]),
                          mir::aexpr_const(0));
    break;
  }
  case VulnCategory::IntegerOverflow: {
    unsigned w = in.type ? in.type->width : 64;
    auto a = leaf_for_operand(in.operands[0]);
    auto b = leaf_for_operand(in.operands[1]);
    if (in.op == Opcode::Add) {
      if (w < 64) {
        uint64_t maxw = (UINT64_C(1) << w) - 1;
        expr = mir::aexpr_cmp(mir::ICmpPred::Ule, mir::aexpr_arith(K::Add, a, b),
                              mir::aexpr_const(maxw));
      } else {
        expr = mir::aexpr_cmp(mir::ICmpPred::Uge, mir::aexpr_arith(K::Add, a, b),
                              a);
      }
    } else { // mul
      if (w < 64) {
        uint64_t maxw = (UINT64_C(1) << w) - 1;
        expr = mir::aexpr_cmp(mir::ICmpPred::Ule, mir::aexpr_arith(K::Mul, a, b),
                              mir::aexpr_const(maxw));
      } else {
        auto divided = mir::aexpr_arith(K::UDiv, mir::aexpr_arith(K::Mul, a, b),
                                        b);
        expr = mir::aexpr_or(
            mir::aexpr_cmp(mir::ICmpPred::Eq, b, mir::aexpr_const(0)),
            mir::aexpr_cmp(mir::ICmpPred::Eq, divided, a));
      }
    }
    break;
  }
  case VulnCategory::IntegerUnderflow: {
    expr = mir::aexpr_cmp(mir::ICmpPred::Uge, leaf_for_operand(in.operands[0]),
                          leaf_for_operand(in.operands[1]));
    break;
  }
  case VulnCategory::OutOfBoundsAccess: {
    if (finding.taint_sinks.empty())
      return fail("out-of-bounds finding without sink");
    // Locate the tainted index selector and the array it indexes.
    mir::TypeRef cur = in.type;
    const mir::Operand *idx = nullptr;
    uint64_t len = 0;
    for (const auto &sel : in.gep_path) {
      if (sel.kind == mir::GepSelector::Kind::Index) {
        if (facts::operand_id(f, sel.index) == finding.taint_sinks[0] &&
            cur && cur->is_array()) {
          idx = &sel.index;
          len = cur->length;
          break;
        }
      }
      // advance the walked type
      if (sel.kind == mir::GepSelector::Kind::Field && cur && cur->is_struct()) {
        const mir::StructDef *sd = m.find_struct(cur->struct_name);
        int fi = sd ? sd->field_index(sel.field) : -1;
        cur = fi < 0 ? nullptr : sd->fields[static_cast<size_t>(fi)].second;
      } else if (cur && cur->is_array()) {
        cur = cur->elem;
      }
    }
    if (!idx)
      return fail("tainted gep index not found in " + finding.instr);
    auto iv = leaf_for_operand(*idx);
    expr = mir::aexpr_and(
        mir::aexpr_cmp(mir::ICmpPred::Sge, iv, mir::aexpr_const(0)),
        mir::aexpr_cmp(mir::ICmpPred::Slt, iv, mir::aexpr_const(len)));
    break;
  }
  case VulnCategory::BufferOverflow: {
    AssertExprRef buf, len;
    if (in.op == Opcode::Memcpy) {
      buf = leaf_for_operand(in.operands[0]);
      len = leaf_for_operand(in.operands[2]);
    } else if (in.op == Opcode::Store) {
      buf = leaf_for_operand(in.operands[1]);
      len = mir::aexpr_const(mir::type_byte_size(m, in.type));
    } else {
      return fail("buffer-overflow finding on unexpected opcode");
    }
    expr = mir::aexpr_cmp(
        mir::ICmpPred::Ule,
        mir::aexpr_arith(K::Add, mir::aexpr_unary(K::OffsetOf, buf), len),
        mir::aexpr_unary(K::SizeofObj, buf));
    break;
  }
  case VulnCategory::UseAfterFree: {
    const mir::Operand *ptr = in.op == Opcode::Load ? &in.operands[0]
                              : in.op == Opcode::Store
                                  ? &in.operands[1]
                                  : nullptr;
    if (!ptr)
      return fail("use-after-free finding on unexpected opcode");
    expr = mir::aexpr_not(
        mir::aexpr_unary(K::Freed, leaf_for_operand(*ptr)));
    break;
  }
  case VulnCategory::SmramRead:
  case VulnCategory::SmramWrite: {
    if (cfg.regions.empty())
      return fail("smram category requires a configured region");
    const std::string &region = cfg.regions[0];
    AssertExprRef buf, size;
    if (in.op == Opcode::Memcpy) {
      buf = leaf_for_operand(
          in.operands[finding.category == VulnCategory::SmramWrite ? 0 : 1]);
      size = leaf_for_operand(in.operands[2]);
    } else if (in.op == Opcode::Store) {
      buf = leaf_for_operand(in.operands[1]);
      size = mir::aexpr_const(mir::type_byte_size(m, in.type));
    } else if (in.op == Opcode::Load) {
      buf = leaf_for_operand(in.operands[0]);
      size = mir::aexpr_const(mir::type_byte_size(m, in.type));
    } else {
      return fail("smram finding on unexpected opcode");
    }
    expr = region_no_overlap(region, buf, size);
    break;
  }
  case VulnCategory::SmmCallout:
    expr = mir::aexpr_false();
    break;
  }
  AssertionInstance inst;
  inst.expr = expr;
  inst.text = "assert(" + mir::aexpr_to_string(expr) + ")";
  return inst;
}

} // namespace stase::rules
