//===-- test_harness.cpp - ECH, PEH, instrumentation tests ----------------===//

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stase/harness.hpp"
#include "stase/symexec.hpp"
#include "support/pipeline_helpers.hpp"

using namespace stase;

#ifndef STASE_REPO_DIR
#define STASE_REPO_DIR "."
#endif

namespace {
std::string repo(const std::string &rel) {
  return std::string(STASE_REPO_DIR) + "/" + rel;
}

const char *kEchProgram = R"(
module ech_demo
struct %TBL { Lock: i64, Spare: i64 }
region SMRAM base=4096 size=256
global @mPcdReclaim: i1 = 0
global @mMaxAddress: i64 = 65536
global @gProtoGuid_hi: i64 = 0
global @gProtoGuid_lo: i64 = 0
global @gTbl: %TBL
extern @GetTbl() -> %TBL*

fn @Gate() -> i64 {
e:
  %flag = load i1, @mPcdReclaim
  condbr %flag, reclaim, keep
reclaim:
  ret 1
keep:
  ret 2
}

fn @UseTbl() -> i64 {
e:
  %t = call @GetTbl()
  %lp = gep %TBL, %t, .Lock
  %v = load i64, %lp
  ret %v
}
)";

mir::Module parse_ech_demo() {
  auto r = mir::parse_module(kEchProgram, "ech_demo.mir");
  REQUIRE(r.ok());
  return std::move(*r.module);
}

} // namespace

TEST_CASE("empty ECH config leaves the module byte-identical") {
  auto m = parse_ech_demo();
  config::EchConfig empty;
  auto out = harness::build_ech(m, empty);
  REQUIRE(out.ok());
  CHECK(mir::pretty_print(m) == mir::pretty_print(*out.module));
  CHECK(out.rewrites.empty());
}

TEST_CASE("ECH is idempotent") {
  auto m = parse_ech_demo();
  config::EchConfig ech;
  ech.symbolic_params = {"SMRAM", "mMaxAddress"};
  ech.pcd_globals = {"mPcdReclaim"};
  ech.guids["gProtoGuid"] = {0x1122334455667788ull, 0x99aabbccddeeff00ull};
  ech.table_stubs["GetTbl"] = "gTbl";
  auto once = harness::build_ech(m, ech);
  REQUIRE(once.ok());
  auto twice = harness::build_ech(*once.module, ech);
  REQUIRE(twice.ok());
  CHECK(mir::module_equal(*once.module, *twice.module));
  CHECK(twice.rewrites.empty());
}

TEST_CASE("PCD global becomes symbolic and both gated branches are explored") {
  auto m = parse_ech_demo();
  // without the ECH the gate is concrete: one completed path
  {
    auto ex = sym::explore(m, "Gate", {}, {});
    REQUIRE(ex.ok());
    CHECK(ex.completed_paths == 1);
  }
  config::EchConfig ech;
  ech.pcd_globals = {"mPcdReclaim"};
  auto out = harness::build_ech(m, ech);
  REQUIRE(out.ok());
  const auto *g = out.module->find_global("mPcdReclaim");
  CHECK(g->init == mir::GlobalDecl::Init::Symbolic);
  auto ex = sym::explore(*out.module, "Gate", {}, {});
  REQUIRE(ex.ok());
  CHECK(ex.completed_paths == 2);
}

TEST_CASE("symbolic region produces named 64-bit symbols with no-wrap") {
  auto m = parse_ech_demo();
  config::EchConfig ech;
  ech.symbolic_params = {"SMRAM"};
  auto out = harness::build_ech(m, ech);
  REQUIRE(out.ok());
  const auto *r = out.module->find_region("SMRAM");
  CHECK(r->base_symbolic);
  CHECK(r->size_symbolic);
  auto ex = sym::explore(*out.module, "Gate", {}, {});
  REQUIRE(ex.ok());
  CHECK(ex.symbols.count("SMRAM_BASE") == 1);
  CHECK(ex.symbols.at("SMRAM_BASE") == 64);
  CHECK(ex.symbols.count("SMRAM_SIZE") == 1);
}

TEST_CASE("table accessor call becomes a direct reference, ordinals stable") {
  auto m = parse_ech_demo();
  size_t before = mir::all_instrs(*m.find_function("UseTbl")).size();
  config::EchConfig ech;
  ech.table_stubs["GetTbl"] = "gTbl";
  auto out = harness::build_ech(m, ech);
  REQUIRE(out.ok());
  const auto *f = out.module->find_function("UseTbl");
  CHECK(mir::all_instrs(*f).size() == before);
  const auto &first = f->blocks[0].instrs[0];
  CHECK(first.op == mir::Opcode::Gep);
  CHECK(first.operands[0].name == "gTbl");
  CHECK(first.result == "t");
  CHECK(mir::validate_module(*out.module).empty());
  // post-rewrite the table read resolves concretely
  auto ex = sym::explore(*out.module, "UseTbl", {}, {});
  REQUIRE(ex.ok());
  CHECK(ex.completed_paths == 1);
}

TEST_CASE("guid constants land in the _hi/_lo pair") {
  auto m = parse_ech_demo();
  config::EchConfig ech;
  ech.guids["gProtoGuid"] = {0xdead, 0xbeef};
  auto out = harness::build_ech(m, ech);
  REQUIRE(out.ok());
  CHECK(out.module->find_global("gProtoGuid_hi")->init_value == 0xdead);
  CHECK(out.module->find_global("gProtoGuid_lo")->init_value == 0xbeef);
}

TEST_CASE("unresolved ECH name is an error") {
  auto m = parse_ech_demo();
  config::EchConfig ech;
  ech.symbolic_params = {"NoSuchThing"};
  auto out = harness::build_ech(m, ech);
  CHECK(!out.ok());
}

//===----------------------------------------------------------------------===//
// PEH + instrumentation
//===----------------------------------------------------------------------===//

namespace {

test_support::HarnessedFinding tpm_finding() {
  auto chain = test_support::run_static(repo("corpus/tpm_div.mir"),
                                        repo("corpus/tpm_div.analysis.cfg"),
                                        repo("rules"));
  REQUIRE(chain.ok());
  REQUIRE(!chain.findings.empty());
  auto h = test_support::harness_finding(chain, chain.findings[0], "t");
  REQUIRE(h.ok());
  return h;
}

} // namespace

TEST_CASE("instrumented module validates and has exactly one target assert") {
  auto h = tpm_finding();
  CHECK(mir::validate_module(h.theta).empty());
  size_t targets = 0;
  for (const auto &f : h.theta.functions)
    for (const auto &r : mir::all_instrs(f))
      if (r.instr->op == mir::Opcode::Assert && r.instr->target_assert)
        ++targets;
  CHECK(targets == 1);
}

TEST_CASE("assertion sits immediately before K in the same block") {
  auto h = tpm_finding();
  const auto *f = h.theta.find_function("TpmNvsCommunciate");
  REQUIRE(f != nullptr);
  bool found = false;
  for (const auto &bb : f->blocks)
    for (size_t i = 0; i + 1 < bb.instrs.size(); ++i)
      if (bb.instrs[i].op == mir::Opcode::Assert &&
          bb.instrs[i].target_assert) {
        found = true;
        CHECK(bb.instrs[i + 1].op == mir::Opcode::UDiv);
        CHECK(bb.instrs[i].loc.line == 70);
      }
  CHECK(found);
}

TEST_CASE("empty stub set leaves every function body intact") {
  auto h = tpm_finding();
  CHECK(h.vd.stub_functions.empty());
  auto orig = mir::parse_module_file(repo("corpus/tpm_div.mir"));
  const auto *before = orig.module->find_function("TpmNvsCommunciate");
  const auto *after = h.theta.find_function("TpmNvsCommunciate");
  // one extra instruction: the injected assertion
  CHECK(mir::all_instrs(*after).size() ==
        mir::all_instrs(*before).size() + 1);
}

TEST_CASE("stub bodies are one symbolic return; call sites are preserved") {
  auto chain = test_support::run_static(repo("corpus/memcpy_len.mir"),
                                        repo("corpus/memcpy_len.analysis.cfg"),
                                        repo("rules"));
  REQUIRE(chain.ok());
  auto h = test_support::harness_finding(chain, chain.findings[0], "t");
  REQUIRE(h.ok());
  REQUIRE(h.vd.stub_functions == std::vector<std::string>{"LogEvent"});
  const auto *stub = h.theta.find_function("LogEvent");
  REQUIRE(stub != nullptr);
  REQUIRE(stub->blocks.size() == 1);
  REQUIRE(stub->blocks[0].instrs.size() == 2);
  CHECK(stub->blocks[0].instrs[0].op == mir::Opcode::Symbolic);
  CHECK(stub->blocks[0].instrs[0].sym_name == "LogEvent.ret");
  CHECK(stub->blocks[0].instrs[1].op == mir::Opcode::Ret);
  // control-flow integrity: every original call site survives
  auto count_calls = [](const mir::Module &m, const std::string &callee) {
    size_t n = 0;
    for (const auto &f : m.functions)
      for (const auto &r : mir::all_instrs(f))
        if (r.instr->op == mir::Opcode::Call && r.instr->callee == callee)
          ++n;
    return n;
  };
  CHECK(count_calls(h.theta, "LogEvent") ==
        count_calls(chain.module, "LogEvent"));
}

TEST_CASE("peh covers exactly the contributing fields") {
  auto chain = test_support::run_static(repo("corpus/smm_profile.mir"),
                                        repo("corpus/smm_profile.analysis.cfg"),
                                        repo("rules"));
  REQUIRE(chain.ok());
  auto h = test_support::harness_finding(chain, chain.findings[0], "t");
  REQUIRE(h.ok());
  REQUIRE(h.peh.symbolic_vars.size() == 2);
  CHECK(h.peh.symbolic_vars[0].display == "*CommBuffer");
  REQUIRE(h.peh.symbolic_vars[0].spec.fields.size() == 1);
  CHECK(h.peh.symbolic_vars[0].spec.fields[0].path ==
        std::vector<std::string>{"Header", "Command"});
  CHECK(h.peh.symbolic_vars[1].display == "*CommBufferSize");
  // the driver symbolizes the listed field, not the whole struct
  const auto *driver = h.theta.find_function(harness::kDriverName);
  REQUIRE(driver != nullptr);
  size_t sym_count = 0;
  for (const auto &r : mir::all_instrs(*driver))
    if (r.instr->op == mir::Opcode::Symbolic)
      ++sym_count;
  // CommBuffer address + Header.Command + *CommBufferSize
  CHECK(sym_count == 3);
}

TEST_CASE("peh manifest serializes and parses back") {
  auto h = tpm_finding();
  std::string text = h.peh.serialize();
  auto back = harness::parse_peh(text);
  REQUIRE(back.ok());
  CHECK(back.peh->entry == h.peh.entry);
  CHECK(back.peh->call_depth == h.peh.call_depth);
  CHECK(back.peh->default_loop_bound == h.peh.default_loop_bound);
  CHECK(back.peh->assertion_file == h.peh.assertion_file);
  CHECK(back.peh->assertion_line == h.peh.assertion_line);
  REQUIRE(back.peh->symbolic_vars.size() == h.peh.symbolic_vars.size());
  CHECK(back.peh->symbolic_vars[0].display == h.peh.symbolic_vars[0].display);
  CHECK(back.peh->symbolic_vars[0].spec.width ==
        h.peh.symbolic_vars[0].spec.width);
  CHECK(back.peh->stubs == h.peh.stubs);
  CHECK(back.peh->loop_bounds == h.peh.loop_bounds);
}

TEST_CASE("loops in retained functions get bound annotations") {
  auto chain = test_support::run_static(repo("corpus/ring_buf.mir"),
                                        repo("corpus/ring_buf.analysis.cfg"),
                                        repo("rules"));
  REQUIRE(chain.ok());
  auto h = test_support::harness_finding(chain, chain.findings[0], "t");
  REQUIRE(h.ok());
  REQUIRE(h.theta.loop_bounds.size() == 1);
  CHECK(h.theta.loop_bounds[0].func == "RingDrain");
  CHECK(h.theta.loop_bounds[0].header == "head");
  CHECK(h.theta.loop_bounds[0].bound == 4); // constant trip count
}

TEST_CASE("stubbed pointer return keeps the caller's null check two-way") {
  // Stubs return null-checkable symbolic pointers so callers keep both
  // branches of their validity checks.
  auto r = mir::parse_module(R"(
struct %Ctx { v: i64 }
fn @GetContext() -> %Ctx* {
e:
  %p = symbolic %Ctx* "ctx"
  ret %p
}
fn @main() -> i64 {
e:
  %c = call @GetContext()
  %isnull = icmp eq %Ctx* %c, null
  condbr %isnull, bail, use
bail:
  ret 0
use:
  %vp = gep %Ctx, %c, .v
  %v = load i64, %vp
  ret %v
}
)",
                             "t.mir");
  REQUIRE(r.ok());
  auto ex = sym::explore(*r.module, "main", {}, {});
  REQUIRE(ex.ok());
  // both the null and non-null branches are feasible
  CHECK(ex.completed_paths == 2);
}

TEST_CASE("smram write assertion follows the published overlap formula") {
  // region base=0x1000 size=0x100: a buffer at 0x2000 fails the <=-end
  // conditions, so the assertion itself evaluates false there
  std::string err;
  auto e = mir::parse_aexpr(
      "8 <= 4096 + 256 && 8192 <= 4096 + 256 && (8 == 0 || 8192 + 8 <= 4096 + "
      "256)",
      &err);
  REQUIRE(e != nullptr);
  // evaluate through a throwaway module+assert
  auto r = mir::parse_module(
      "fn @f() -> i64 { e: assert (8 <= 4096 + 256 && 8192 <= 4096 + 256 && "
      "(8 == 0 || 8192 + 8 <= 4096 + 256)) !target\n ret 0 }",
      "t.mir");
  REQUIRE(r.ok());
  auto run = sym::interpret_concrete(*r.module, "f", {});
  CHECK(run.verdict == sym::ConcreteResult::Verdict::Violated);
  // and a buffer inside the window satisfies it: buf=0x1000, size=8
  auto r2 = mir::parse_module(
      "fn @f() -> i64 { e: assert (8 <= 4096 + 256 && 4096 <= 4096 + 256 && "
      "(8 == 0 || 4096 + 8 <= 4096 + 256)) !target\n ret 0 }",
      "t.mir");
  auto run2 = sym::interpret_concrete(*r2.module, "f", {});
  CHECK(run2.verdict == sym::ConcreteResult::Verdict::Held);
}
