//===-- test_slicer.cpp - SDG, two-pass slicing, VD tests -----------------===//

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stase/facts.hpp"
#include "stase/points_to.hpp"
#include "stase/slicer.hpp"
#include "stase/vulnrules.hpp"

#include <fstream>
#include <sstream>

using namespace stase;

#ifndef STASE_REPO_DIR
#define STASE_REPO_DIR "."
#endif

namespace {

std::string repo(const std::string &rel) {
  return std::string(STASE_REPO_DIR) + "/" + rel;
}

struct Analyzed {
  mir::Module module;
  pts::PointsToResult pts;
  slicer::Sdg sdg;
};

Analyzed analyze(const std::string &text, const char *name = "t.mir") {
  auto r = mir::parse_module(text, name);
  REQUIRE(r.ok());
  Analyzed a;
  a.module = std::move(*r.module);
  a.pts = pts::run_pointer_analysis(a.module);
  auto s = slicer::build_sdg(a.module, a.pts);
  REQUIRE(s.ok());
  a.sdg = std::move(*s.sdg);
  return a;
}

} // namespace

TEST_CASE("straight-line function has no internal control deps") {
  auto a = analyze(R"(
fn @f(%x: i64) -> i64 {
e:
  %a = add i64 %x, 1
  %b = mul i64 %a, 2
  ret %b
}
)");
  for (const auto &[from, edges] : a.sdg.succs) {
    if (from.kind != slicer::NodeId::Kind::Instr)
      continue;
    for (const auto &[to, kind] : edges) {
      if (kind == slicer::EdgeKind::Control)
        CHECK(to.kind != slicer::NodeId::Kind::Instr);
    }
  }
}

TEST_CASE("diamond: both stores control-dependent on branch, use depends on both") {
  auto a = analyze(R"(
fn @f(%c: i1) -> i64 {
e:
  %p = alloca i64
  condbr %c, t, f2
t:
  store i64 1, %p
  br j
f2:
  store i64 2, %p
  br j
j:
  %v = load i64, %p
  ret %v
}
)");
  const auto &f = a.module.functions[0];
  // ordinals: 0 alloca, 1 condbr, 2 store, 3 br, 4 store, 5 br, 6 load, 7 ret
  slicer::NodeId condbr{slicer::NodeId::Kind::Instr, f.name, 1, -1};
  slicer::NodeId store1{slicer::NodeId::Kind::Instr, f.name, 2, -1};
  slicer::NodeId store2{slicer::NodeId::Kind::Instr, f.name, 4, -1};
  slicer::NodeId load{slicer::NodeId::Kind::Instr, f.name, 6, -1};
  CHECK(a.sdg.has_edge(condbr, store1, slicer::EdgeKind::Control));
  CHECK(a.sdg.has_edge(condbr, store2, slicer::EdgeKind::Control));
  CHECK(a.sdg.has_edge(store1, load, slicer::EdgeKind::DataMem));
  CHECK(a.sdg.has_edge(store2, load, slicer::EdgeKind::DataMem));

  // slicing from the load keeps both stores and the branch
  auto ref = mir::find_instr(a.module, "f", 6);
  auto slice = slicer::two_pass_slice(a.sdg, *ref);
  CHECK(slice.contains_instr("f", 2));
  CHECK(slice.contains_instr("f", 4));
  CHECK(slice.contains_instr("f", 1));
}

TEST_CASE("identity function slice = {param, ret}") {
  auto a = analyze("fn @id(%a: i64) -> i64 { e: ret %a }");
  auto ref = mir::find_instr(a.module, "id", 0);
  auto slice = slicer::two_pass_slice(a.sdg, *ref);
  CHECK(slice.contains_instr("id", 0));
  bool has_formal = false, has_entry = false;
  for (const auto &n : slice.nodes) {
    if (n.kind == slicer::NodeId::Kind::FormalIn && n.index == 0)
      has_formal = true;
    if (n.kind == slicer::NodeId::Kind::Entry)
      has_entry = true;
  }
  CHECK(has_formal);
  CHECK(has_entry);
}

TEST_CASE("mutual recursion is rejected with the SCC named") {
  auto r = mir::parse_module(R"(
fn @a(%x: i64) -> i64 { e: %r = call @b(%x)
  ret %r }
fn @b(%x: i64) -> i64 { e: %r = call @a(%x)
  ret %r }
)",
                             "t.mir");
  REQUIRE(r.ok());
  auto p = pts::run_pointer_analysis(*r.module);
  auto s = slicer::build_sdg(*r.module, p);
  CHECK(!s.ok());
  CHECK(s.error.find("mutual recursion") != std::string::npos);
  CHECK(s.error.find("a") != std::string::npos);
  CHECK(s.error.find("b") != std::string::npos);
}

TEST_CASE("self recursion is allowed") {
  auto r = mir::parse_module(R"(
fn @fact(%n: i64) -> i64 {
e:
  %z = icmp eq i64 %n, 0
  condbr %z, base, rec
base:
  ret 1
rec:
  %n1 = sub i64 %n, 1
  %r = call @fact(%n1)
  %out = mul i64 %r, %n
  ret %out
}
)",
                             "t.mir");
  REQUIRE(r.ok());
  auto p = pts::run_pointer_analysis(*r.module);
  auto s = slicer::build_sdg(*r.module, p);
  CHECK(s.ok());
}

TEST_CASE("summary edge present iff actual-in can affect actual-out") {
  auto a = analyze(R"(
fn @pick(%x: i64, %y: i64) -> i64 {
e:
  %r = add i64 %x, 1
  ret %r
}
fn @main(%a: i64, %b: i64) -> i64 {
e:
  %v = call @pick(%a, %b)
  ret %v
}
)");
  // param 0 flows to the result, param 1 does not
  slicer::NodeId ain0{slicer::NodeId::Kind::ActualIn, "main", 0, 0};
  slicer::NodeId ain1{slicer::NodeId::Kind::ActualIn, "main", 0, 1};
  slicer::NodeId aout{slicer::NodeId::Kind::ActualOut, "main", 0, -1};
  CHECK(a.sdg.has_edge(ain0, aout, slicer::EdgeKind::Summary));
  CHECK(!a.sdg.has_edge(ain1, aout, slicer::EdgeKind::Summary));
}

//===----------------------------------------------------------------------===//
// Inline-and-reach oracle: on programs <= 3 functions without recursion,
// two-pass slicing equals reachability in the inlined dependence graph.
//===----------------------------------------------------------------------===//

namespace {

// Brute-force oracle: checks whether `src` instruction can influence the
// criterion by inlining: builds the SDG and searches backward over ALL edge
// kinds but tracking call-context strings so mismatched call/return pairs are
// rejected. For <=3 small functions this is exact context-sensitive
// reachability.
bool oracle_influences(const slicer::Sdg &g, const slicer::NodeId &from,
                       const slicer::NodeId &criterion) {
  // state: (node, context stack of call-site ids); bounded depth
  struct State {
    slicer::NodeId node;
    std::vector<std::string> ctx;
    bool operator<(const State &o) const {
      if (node != o.node)
        return node < o.node;
      return ctx < o.ctx;
    }
  };
  std::set<State> seen;
  std::vector<State> work{{criterion, {}}};
  while (!work.empty()) {
    State cur = work.back();
    work.pop_back();
    if (cur.node == from)
      return true;
    if (!seen.insert(cur).second)
      continue;
    if (cur.ctx.size() > 6)
      continue;
    auto it = g.preds.find(cur.node);
    if (it == g.preds.end())
      continue;
    for (const auto &[prev, kind] : it->second) {
      State next{prev, cur.ctx};
      switch (kind) {
      case slicer::EdgeKind::Summary:
        continue; // the oracle works on the expanded graph only
      case slicer::EdgeKind::ParamIn: {
        // ascending from formal-in to actual-in: only along matching context
        std::string site = prev.func + ":" + std::to_string(prev.ordinal);
        if (!cur.ctx.empty()) {
          if (cur.ctx.back() != site)
            continue;
          next.ctx.pop_back();
        }
        break;
      }
      case slicer::EdgeKind::Call: {
        std::string site = prev.func + ":" + std::to_string(prev.ordinal);
        if (!cur.ctx.empty()) {
          if (cur.ctx.back() != site)
            continue;
          next.ctx.pop_back();
        }
        break;
      }
      case slicer::EdgeKind::ParamOut:
        // descending into the callee: push the call site
        next.ctx.push_back(cur.node.func + ":" +
                           std::to_string(cur.node.ordinal));
        break;
      default:
        break;
      }
      work.push_back(std::move(next));
    }
  }
  return false;
}

} // namespace

TEST_CASE("two-pass slice matches context-sensitive oracle on small programs") {
  const char *programs[] = {
      R"(
fn @scale(%v: i64, %k: i64) -> i64 {
e:
  %r = mul i64 %v, %k
  ret %r
}
fn @main(%a: i64, %b: i64, %c: i64) -> i64 {
e:
  %x = call @scale(%a, %b)
  %dead = add i64 %c, 5
  %y = add i64 %x, 1
  ret %y
}
)",
      R"(
fn @get(%p: i64*) -> i64 {
e:
  %v = load i64, %p
  ret %v
}
fn @put(%p: i64*, %v: i64) {
e:
  store i64 %v, %p
  ret
}
fn @main(%a: i64) -> i64 {
e:
  %buf = alloca i64
  call @put(%buf, %a)
  %out = call @get(%buf)
  ret %out
}
)",
  };
  for (const char *text : programs) {
    auto a = analyze(text);
    const auto *main_fn = a.module.find_function("main");
    REQUIRE(main_fn != nullptr);
    // criterion: main's ret instruction
    auto instrs = mir::all_instrs(*main_fn);
    size_t ret_ord = instrs.back().ordinal;
    auto ref = mir::find_instr(a.module, "main", ret_ord);
    auto slice = slicer::two_pass_slice(a.sdg, *ref);
    slicer::NodeId crit{slicer::NodeId::Kind::Instr, "main", ret_ord, -1};
    // compare per instruction node
    for (const auto &f : a.module.functions) {
      if (f.is_external)
        continue;
      for (const auto &r : mir::all_instrs(f)) {
        slicer::NodeId n{slicer::NodeId::Kind::Instr, f.name, r.ordinal, -1};
        bool in_slice = slice.nodes.count(n) > 0;
        bool oracle = oracle_influences(a.sdg, n, crit);
        INFO(f.name << ":" << r.ordinal);
        CHECK(in_slice == oracle);
      }
    }
  }
}

//===----------------------------------------------------------------------===//
// The worked example: tpm_div
//===----------------------------------------------------------------------===//

TEST_CASE("tpm_div: udiv sits at ordinal 32, line 70") {
  auto r = mir::parse_module_file(repo("corpus/tpm_div.mir"));
  REQUIRE(r.ok());
  auto ref = mir::find_instr_by_id(
      *r.module, "<injected_Tcg2Smm.bc>:TpmNvsCommunciate:32");
  REQUIRE(ref.has_value());
  CHECK(ref->instr->op == mir::Opcode::UDiv);
  CHECK(ref->instr->loc.line == 70);
  CHECK(ref->instr->loc.file == "injected_Tcg2Smm.c");
}

TEST_CASE("tpm_div: slice from the udiv discards exactly line 60") {
  auto r = mir::parse_module_file(repo("corpus/tpm_div.mir"));
  REQUIRE(r.ok());
  auto p = pts::run_pointer_analysis(*r.module);
  auto s = slicer::build_sdg(*r.module, p);
  REQUIRE(s.ok());
  auto ref = mir::find_instr(*r.module, "TpmNvsCommunciate", 32);
  auto slice = slicer::two_pass_slice(*s.sdg, *ref);
  REQUIRE(slice.discarded_lines.count("injected_Tcg2Smm.c") == 1);
  CHECK(slice.discarded_lines.at("injected_Tcg2Smm.c") ==
        std::set<uint32_t>{60});
  CHECK(slice.stub_safe_functions.empty());
}

TEST_CASE("vd serialization round-trips") {
  slicer::VulnerabilityDescription vd;
  vd.id = "001_division_by_zero";
  vd.category = config::VulnCategory::DivisionByZero;
  vd.program = "injected_Tcg2Smm";
  vd.entry = "TpmNvsCommunciate";
  vd.inputs = {"CommBufferSize"};
  vd.assertion_text = "assert(TempCommBufferSize != 0)";
  std::string err;
  vd.assertion = mir::parse_aexpr("TempCommBufferSize != 0", &err);
  vd.instr = "<injected_Tcg2Smm.bc>:TpmNvsCommunciate:32";
  vd.file = "injected_Tcg2Smm.c";
  vd.line = 70;
  vd.discarded_locations = {"injected_Tcg2Smm.c:60"};
  vd.taint_source = "TpmNvsCommunciate:%CommBufferSize";
  vd.taint_sinks = {"TpmNvsCommunciate:%TempCommBufferSize"};
  vd.retained_funcs = {"TpmNvsCommunciate"};
  config::InputSpec spec;
  spec.entry = "TpmNvsCommunciate";
  spec.kind = config::InputSpec::Kind::Param;
  spec.param_index = 3;
  spec.deref = true;
  spec.width = 8;
  vd.input_specs = {spec};

  std::string text = vd.serialize();
  auto back = slicer::parse_vuln_description(text);
  REQUIRE(back.ok());
  CHECK(back.vd->id == vd.id);
  CHECK(back.vd->entry == vd.entry);
  CHECK(back.vd->assertion_text == vd.assertion_text);
  CHECK(mir::aexpr_equal(back.vd->assertion, vd.assertion));
  CHECK(back.vd->line == 70);
  CHECK(back.vd->discarded_locations == vd.discarded_locations);
  REQUIRE(back.vd->input_specs.size() == 1);
  CHECK(back.vd->input_specs[0].param_index == 3);
  CHECK(back.vd->input_specs[0].deref);
  CHECK(back.vd->input_specs[0].width == 8);
  CHECK(back.vd->serialize() == text);
}

TEST_CASE("finding whose entry cannot reach K is dropped with a reason") {
  // @Island divides by a value loaded from the attacker global, but the
  // configured entry point never calls it.
  auto r = mir::parse_module(R"(
global @mShared: i64 = 0
fn @Entry(%x: i64) -> i64 {
e:
  ret %x
}
fn @Island() -> i64 {
e:
  %v = load i64, @mShared
  %q = udiv i64 100, %v
  ret %q
}
)",
                             "t.mir");
  REQUIRE(r.ok());
  auto cfg = config::load_analysis_config(
      "[entrypoints]\nEntry global mShared width=8\n"
      "[categories]\ndivision_by_zero\n",
      "t.cfg", *r.module);
  REQUIRE(cfg.ok());
  auto fr = facts::extract_facts(*r.module);
  auto p = pts::run_pointer_analysis(*r.module);
  auto rr = rules::run_vuln_rules(*r.module, fr.db, p, *cfg.config, 
                                  std::string(STASE_REPO_DIR) + "/rules");
  REQUIRE(rr.ok());
  REQUIRE(rr.findings.size() == 1);
  CHECK(rr.findings[0].entry == "Entry");
  auto sdg = slicer::build_sdg(*r.module, p);
  auto kref = mir::find_instr_by_id(*r.module, rr.findings[0].instr);
  auto slice = slicer::two_pass_slice(*sdg.sdg, *kref);
  auto vd = slicer::emit_vuln_description(*r.module, *cfg.config,
                                          rr.findings[0], slice);
  CHECK(!vd.ok());
  CHECK(vd.drop_reason.find("non-exploitable") != std::string::npos);
}
