//===-- test_vulnrules.cpp - Rule driver and assertion template tests -----===//

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stase/facts.hpp"
#include "stase/vulnrules.hpp"

using namespace stase;
using config::VulnCategory;

#ifndef STASE_REPO_DIR
#define STASE_REPO_DIR "."
#endif

namespace {

std::string repo(const std::string &rel) {
  return std::string(STASE_REPO_DIR) + "/" + rel;
}

struct Ctx {
  mir::Module module;
  datalog::Database facts_db;
  pts::PointsToResult pts;
  config::AnalysisConfig cfg;
};

Ctx setup(const std::string &mir_text, const std::string &cfg_text,
          const char *name = "t.mir") {
  auto r = mir::parse_module(mir_text, name);
  REQUIRE(r.ok());
  Ctx c;
  c.module = std::move(*r.module);
  auto fr = facts::extract_facts(c.module);
  REQUIRE(fr.ok());
  c.facts_db = std::move(fr.db);
  c.pts = pts::run_pointer_analysis(c.module);
  auto cr = config::load_analysis_config(cfg_text, "t.cfg", c.module);
  if (!cr.ok())
    for (const auto &d : cr.diags)
      MESSAGE(d.render());
  REQUIRE(cr.ok());
  c.cfg = std::move(*cr.config);
  return c;
}

} // namespace

TEST_CASE("config: param index out of range") {
  auto r = mir::parse_module(
      "fn @h(%a: i64, %b: i64, %c: i64, %d: i64) { e: ret }", "t.mir");
  REQUIRE(r.ok());
  auto cr = config::load_analysis_config(
      "[entrypoints]\nh param 7 deref\n", "t.cfg", *r.module);
  CHECK(!cr.ok());
  bool found = false;
  for (const auto &d : cr.diags)
    if (d.message.find("out of range") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("config: unknown entrypoint and region") {
  auto r = mir::parse_module("fn @h() { e: ret }", "t.mir");
  auto cr = config::load_analysis_config("[entrypoints]\nnope\n", "t.cfg",
                                         *r.module);
  CHECK(!cr.ok());
  auto cr2 =
      config::load_analysis_config("[regions]\nSMRAM\n", "t.cfg", *r.module);
  CHECK(!cr2.ok());
}

TEST_CASE("config: empty entrypoint list is valid, zero findings downstream") {
  auto c = setup("fn @h(%p: i64*) -> i64 { e: %v = load i64, %p\n %q = udiv "
                 "i64 4, %v\n ret %q }",
                 "");
  auto rr = rules::run_vuln_rules(c.module, c.facts_db, c.pts, c.cfg,
                                  repo("rules"));
  REQUIRE(rr.ok());
  CHECK(rr.findings.empty());
}

TEST_CASE("generated entry rules take the func_name/func_param shape") {
  auto r = mir::parse_module(
      "fn @SmmProfileHandler(%h: i64, %ctx: i8*, %buf: i8*, %size: i64*) { e: "
      "ret }",
      "t.mir");
  REQUIRE(r.ok());
  auto cr = config::load_analysis_config(
      "[entrypoints]\nSmmProfileHandler param 2 deref\n", "t.cfg", *r.module);
  REQUIRE(cr.ok());
  std::string rules_text = config::generated_entry_rules(*cr.config);
  CHECK(rules_text.find("entrypoint(?f) :- func_name(?f, "
                        "\"@SmmProfileHandler\").") != std::string::npos);
  CHECK(rules_text.find("func_param(?f, ?v, 2)") != std::string::npos);
}

TEST_CASE("tpm_div: one division candidate with the documented fields") {
  auto parsed = mir::parse_module_file(repo("corpus/tpm_div.mir"));
  REQUIRE(parsed.ok());
  Ctx c;
  c.module = std::move(*parsed.module);
  auto fr = facts::extract_facts(c.module);
  c.facts_db = std::move(fr.db);
  c.pts = pts::run_pointer_analysis(c.module);
  auto cr = config::load_analysis_config_file(
      repo("corpus/tpm_div.analysis.cfg"), c.module);
  REQUIRE(cr.ok());
  c.cfg = std::move(*cr.config);

  auto rr = rules::run_vuln_rules(c.module, c.facts_db, c.pts, c.cfg,
                                  repo("rules"));
  REQUIRE(rr.ok());
  REQUIRE(rr.findings.size() == 1);
  const auto &f = rr.findings[0];
  CHECK(f.category == VulnCategory::DivisionByZero);
  CHECK(f.entry == "TpmNvsCommunciate");
  CHECK(f.instr == "<injected_Tcg2Smm.bc>:TpmNvsCommunciate:32");
  CHECK(f.line == 70);
  CHECK(f.taint_sinks ==
        std::vector<std::string>{"TpmNvsCommunciate:%TempCommBufferSize"});

  // the untainted division_primitive relation still holds the instruction
  auto &prim = rr.db.at("division_primitive");
  CHECK(prim.size() == 1);

  std::string err;
  auto inst = rules::instantiate_assertion(c.module, c.cfg, f, &err);
  REQUIRE(inst.has_value());
  CHECK(inst->text == "assert(TempCommBufferSize != 0)");
}

TEST_CASE("constant divisor: primitive without taint join") {
  auto c = setup(R"(
fn @h(%size: i64*) -> i64 {
e:
  %x = udiv i64 12, 4
  ret %x
}
)",
                 "[entrypoints]\nh param 0 deref\n");
  auto rr = rules::run_vuln_rules(c.module, c.facts_db, c.pts, c.cfg,
                                  repo("rules"));
  REQUIRE(rr.ok());
  CHECK(rr.findings.empty());
  CHECK(rr.db.at("division_primitive").size() == 1);
  CHECK(rr.db.at("divisor_tainted_division_primitive").empty());
}

TEST_CASE("rule/engine agreement: driver output equals direct evaluation") {
  auto parsed = mir::parse_module_file(repo("corpus/tpm_div.mir"));
  REQUIRE(parsed.ok());
  mir::Module m = std::move(*parsed.module);
  auto fr = facts::extract_facts(m);
  auto p = pts::run_pointer_analysis(m);
  auto cr =
      config::load_analysis_config_file(repo("corpus/tpm_div.analysis.cfg"), m);
  REQUIRE(cr.ok());

  // direct route: assemble and evaluate the same programs by hand
  std::vector<datalog::Program> parts;
  parts.push_back(facts::fact_schema());
  parts.push_back(
      *datalog::parse_rules(pts::kVarPointsToDecl, "<vp>").program);
  parts.push_back(
      *datalog::parse_rules_file(repo("rules/support/taint.dl")).program);
  parts.push_back(
      *datalog::parse_rules_file(repo("rules/division_by_zero.dl")).program);
  parts.push_back(*datalog::parse_rules(
                       ".decl entrypoint(func: symbol)\n"
                       ".decl entryinput(var: symbol)\n"
                       ".decl func_name(func: symbol, name: symbol)\n"
                       ".decl func_param(func: symbol, param: symbol, index: "
                       "number)\n"
                       ".decl global_var(var: symbol, name: symbol)\n" +
                           config::generated_entry_rules(*cr.config),
                       "<gen>")
                       .program);
  auto merged = datalog::merge_programs(parts);
  REQUIRE(merged.ok());
  datalog::Database facts_in = fr.db;
  facts_in[pts::kVarPointsToRelation] = p.export_tuples();
  facts_in.try_emplace("forbidden_callee");
  auto eval = datalog::evaluate_fixpoint(*merged.program, facts_in);
  REQUIRE(eval.ok());

  auto rr = rules::run_vuln_rules(m, fr.db, p, *cr.config, repo("rules"));
  REQUIRE(rr.ok());
  CHECK(eval.db.at("divisor_tainted_division_primitive") ==
        rr.db.at("divisor_tainted_division_primitive"));
  // every finding corresponds to exactly one head tuple
  CHECK(rr.findings.size() ==
        eval.db.at("divisor_tainted_division_primitive").size());
}

TEST_CASE("category isolation: disabling a category removes its findings") {
  std::string prog = R"(
fn @h(%p: i64*, %n: i64*) -> i64 {
e:
  %v = load i64, %p
  %w = load i64, %n
  %d = udiv i64 16, %v
  %s = sub i64 %d, %w
  ret %s
}
)";
  auto c1 = setup(prog, "[entrypoints]\nh param 0 deref\nh param 1 deref\n");
  auto rr1 = rules::run_vuln_rules(c1.module, c1.facts_db, c1.pts, c1.cfg,
                                   repo("rules"));
  REQUIRE(rr1.ok());
  std::set<VulnCategory> cats1;
  for (const auto &f : rr1.findings)
    cats1.insert(f.category);
  CHECK(cats1.count(VulnCategory::DivisionByZero) == 1);
  CHECK(cats1.count(VulnCategory::IntegerUnderflow) == 1);

  auto c2 = setup(prog, "[entrypoints]\nh param 0 deref\nh param 1 deref\n"
                        "[categories]\ninteger_underflow\n");
  auto rr2 = rules::run_vuln_rules(c2.module, c2.facts_db, c2.pts, c2.cfg,
                                   repo("rules"));
  REQUIRE(rr2.ok());
  for (const auto &f : rr2.findings)
    CHECK(f.category == VulnCategory::IntegerUnderflow);
  // restricting categories removes exactly the other categories' findings
  std::vector<rules::CandidateFinding> rr1_underflow;
  for (const auto &f : rr1.findings)
    if (f.category == VulnCategory::IntegerUnderflow)
      rr1_underflow.push_back(f);
  CHECK(rr1_underflow.size() == rr2.findings.size());
  for (size_t i = 0; i < rr1_underflow.size(); ++i)
    CHECK(rr1_underflow[i] == rr2.findings[i]);
}

TEST_CASE("taint monotonicity: enlarging attacker inputs never removes findings") {
  std::string prog = R"(
fn @h(%p: i64*, %n: i64*) -> i64 {
e:
  %v = load i64, %p
  %w = load i64, %n
  %d = udiv i64 %w, %v
  ret %d
}
)";
  auto small = setup(prog, "[entrypoints]\nh param 0 deref\n");
  auto rs = rules::run_vuln_rules(small.module, small.facts_db, small.pts,
                                  small.cfg, repo("rules"));
  auto big = setup(prog, "[entrypoints]\nh param 0 deref\nh param 1 deref\n");
  auto rb = rules::run_vuln_rules(big.module, big.facts_db, big.pts, big.cfg,
                                  repo("rules"));
  REQUIRE(rs.ok());
  REQUIRE(rb.ok());
  for (const auto &f : rs.findings) {
    bool found = false;
    for (const auto &g : rb.findings)
      if (f == g)
        found = true;
    CHECK(found);
  }
  CHECK(rb.findings.size() >= rs.findings.size());
}

TEST_CASE("smm callout: reachability and forbidden patterns") {
  std::string prog = R"(
extern @gBS_AllocatePool(i64) -> i64
extern @gBS_FreePool(i64) -> i64
fn @helper(%n: i64) -> i64 {
e:
  %r = call @gBS_AllocatePool(%n)
  ret %r
}
fn @handler(%n: i64) -> i64 {
e:
  %r = call @helper(%n)
  ret %r
}
fn @island(%n: i64) -> i64 {
e:
  %r = call @gBS_FreePool(%n)
  ret %r
}
)";
  auto c = setup(prog, "[entrypoints]\nhandler\n[forbidden]\ngBS_*\n"
                       "[categories]\nsmm_callout\n");
  auto rr = rules::run_vuln_rules(c.module, c.facts_db, c.pts, c.cfg,
                                  repo("rules"));
  REQUIRE(rr.ok());
  // the island's forbidden call is not reachable from the entrypoint
  REQUIRE(rr.findings.size() == 1);
  CHECK(rr.findings[0].category == VulnCategory::SmmCallout);
  CHECK(rr.findings[0].func == "helper");
  CHECK(rr.findings[0].entry == "handler");
  std::string err;
  auto inst =
      rules::instantiate_assertion(c.module, c.cfg, rr.findings[0], &err);
  REQUIRE(inst.has_value());
  CHECK(inst->text == "assert(false)");
}

TEST_CASE("out-of-bounds assertion instantiates index bounds") {
  std::string prog = R"(
struct %Pkt { BitMap: [8 x i8], Len: i8 }
fn @h(%p: %Pkt*) -> i8 {
e:
  %lp = gep %Pkt, %p, .Len
  %len = load i8, %lp
  %idx = zext i8 %len to i64
  %cell = gep %Pkt, %p, .BitMap, [%idx]
  %v = load i8, %cell
  ret %v
}
)";
  auto c = setup(prog, "[entrypoints]\nh param 0 object fields Len:8\n"
                       "[categories]\nout_of_bounds_access\n");
  auto rr = rules::run_vuln_rules(c.module, c.facts_db, c.pts, c.cfg,
                                  repo("rules"));
  REQUIRE(rr.ok());
  REQUIRE(rr.findings.size() == 1);
  std::string err;
  auto inst =
      rules::instantiate_assertion(c.module, c.cfg, rr.findings[0], &err);
  REQUIRE(inst.has_value());
  CHECK(inst->text == "assert(idx >=s 0 && idx <s 8)");
}

TEST_CASE("smram write assertion uses the configured region") {
  std::string prog = R"(
region SMRAM base=4096 size=256
struct %Req { Dst: i64, Val: i64 }
fn @h(%req: %Req*, %out: i64*) -> i64 {
e:
  %v = load i64, %out
  store i64 7, %out
  ret %v
}
)";
  auto c = setup(prog, "[entrypoints]\nh param 1 deref addr\n[regions]\nSMRAM\n"
                       "[categories]\nsmram_write\n");
  auto rr = rules::run_vuln_rules(c.module, c.facts_db, c.pts, c.cfg,
                                  repo("rules"));
  REQUIRE(rr.ok());
  REQUIRE(rr.findings.size() == 1);
  std::string err;
  auto inst =
      rules::instantiate_assertion(c.module, c.cfg, rr.findings[0], &err);
  REQUIRE(inst.has_value());
  CHECK(inst->text.find("SMRAM_BASE + SMRAM_SIZE") != std::string::npos);
  CHECK(inst->text.find("out") != std::string::npos);

  // direct arithmetic check per the no-overlap shape: concrete region
  // base=0x1000,size=0x100 and buf=0x2000,size=8 evaluates true
  std::string e2;
  auto expr = mir::parse_aexpr("8 <= 4096 + 256 && 8192 <= 4096 + 256 && (8 == "
                               "0 || 8192 + 8 <= 4096 + 256)",
                               &e2);
  REQUIRE(expr != nullptr); // shape parses; evaluation happens in symexec tests
}

TEST_CASE("use-after-free assertion") {
  std::string prog = R"(
fn @h(%p: i64*, %c: i1) -> i64 {
e:
  condbr %c, doit, skip
doit:
  free %p
  br skip
skip:
  %v = load i64, %p
  ret %v
}
)";
  auto c = setup(prog, "[entrypoints]\nh param 0 deref\n"
                       "[categories]\nuse_after_free\n");
  auto rr = rules::run_vuln_rules(c.module, c.facts_db, c.pts, c.cfg,
                                  repo("rules"));
  REQUIRE(rr.ok());
  REQUIRE(rr.findings.size() == 1);
  std::string err;
  auto inst =
      rules::instantiate_assertion(c.module, c.cfg, rr.findings[0], &err);
  REQUIRE(inst.has_value());
  CHECK(inst->text == "assert(!freed(p))");
}

TEST_CASE("buffer overflow via tainted memcpy length") {
  std::string prog = R"(
struct %Msg { Data: [8 x i8], Len: i8 }
fn @h(%m: %Msg*) -> i64 {
e:
  %buf = alloca [8 x i8]
  %lp = gep %Msg, %m, .Len
  %len8 = load i8, %lp
  %len = zext i8 %len8 to i64
  %b0 = gep [8 x i8], %buf, [0]
  %m0 = gep %Msg, %m, .Data, [0]
  memcpy %b0, %m0, %len
  ret %len
}
)";
  auto c = setup(prog, "[entrypoints]\nh param 0 object fields Len:8\n"
                       "[categories]\nbuffer_overflow\n");
  auto rr = rules::run_vuln_rules(c.module, c.facts_db, c.pts, c.cfg,
                                  repo("rules"));
  REQUIRE(rr.ok());
  REQUIRE(!rr.findings.empty());
  std::string err;
  auto inst =
      rules::instantiate_assertion(c.module, c.cfg, rr.findings[0], &err);
  REQUIRE(inst.has_value());
  CHECK(inst->text.find("offset(") != std::string::npos);
  CHECK(inst->text.find("sizeof(") != std::string::npos);
}

TEST_CASE("extension rule file parses and joins via substr") {
  auto pr = datalog::parse_rules_file(repo("rules/division_by_zero_calls.dl"));
  REQUIRE(pr.ok());
  CHECK(pr.program->rules.size() == 1);
}
