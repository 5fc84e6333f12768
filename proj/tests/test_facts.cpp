//===-- test_facts.cpp - Fact extraction tests ----------------------------===//

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stase/cfg.hpp"
#include "stase/facts.hpp"
#include "stase/mir.hpp"

#include <random>
#include <sstream>

using namespace stase;
using datalog::Value;

TEST_CASE("single-load function yields the documented instr_func fact") {
  auto r = mir::parse_module(R"(
module SmramProfileRecord
struct %MEMORY_PROFILE_CONTEXT_DATA { Signature: i64 }
global @mSmramProfileContextPtr: %MEMORY_PROFILE_CONTEXT_DATA*

fn @GetSmramProfileContext() -> %MEMORY_PROFILE_CONTEXT_DATA* {
entry:
  %r = load %MEMORY_PROFILE_CONTEXT_DATA*, @mSmramProfileContextPtr
  ret %r
}
)",
                             "SmramProfileRecord.mir");
  REQUIRE(r.ok());
  auto fr = facts::extract_facts(*r.module);
  REQUIRE(fr.ok());
  datalog::Tuple expect{
      Value(std::string("<SmramProfileRecord.bc>:GetSmramProfileContext:0")),
      Value(std::string("<SmramProfileRecord.bc>:GetSmramProfileContext"))};
  CHECK(fr.db.at("instr_func").count(expect) == 1);
}

TEST_CASE("ret-only function has one instr_func tuple and no arithmetic") {
  auto r = mir::parse_module("fn @f() { e: ret }", "t.mir");
  REQUIRE(r.ok());
  auto fr = facts::extract_facts(*r.module);
  REQUIRE(fr.ok());
  CHECK(fr.db.at("instr_func").size() == 1);
  for (const char *rel : {"udiv_instr", "sdiv_instr", "add_instr", "sub_instr",
                          "mul_instr"})
    CHECK(fr.db.at(rel).empty());
}

TEST_CASE("totality: every instruction in exactly one instr_func and instr_pos") {
  auto r = mir::parse_module(R"(
fn @g(%a: i64, %b: i64) -> i64 {
e:
  %s = add i64 %a, %b
  %d = udiv i64 %s, %b
  %c = icmp ult i64 %d, 10
  condbr %c, t, f
t:
  ret %d
f:
  ret %s
}
)",
                             "t.mir");
  REQUIRE(r.ok());
  auto fr = facts::extract_facts(*r.module);
  REQUIRE(fr.ok());
  size_t total = 0;
  for (const auto &f : r.module->functions)
    total += mir::all_instrs(f).size();
  CHECK(fr.db.at("instr_func").size() == total);
  CHECK(fr.db.at("instr_pos").size() == total);
  CHECK(fr.db.at("block_of").size() == total);
}

namespace {

// Independent oracle: count opcodes by direct AST walk.
std::map<std::string, size_t> opcode_counts(const mir::Module &m) {
  std::map<std::string, size_t> counts;
  for (const auto &f : m.functions)
    for (const auto &r : mir::all_instrs(f))
      counts[mir::opcode_name(r.instr->op)]++;
  return counts;
}

std::string gen_arith_module(std::mt19937 &rng) {
  std::uniform_int_distribution<int> d(0, 4);
  std::ostringstream os;
  os << "fn @f(%a: i64, %b: i64) -> i64 {\ne:\n";
  std::vector<std::string> vals{"%a", "%b"};
  int n = 2 + d(rng);
  for (int i = 0; i < n; ++i) {
    const char *ops[] = {"add", "sub", "mul", "udiv", "sdiv"};
    std::string name = "%v" + std::to_string(i);
    os << "  " << name << " = " << ops[d(rng)] << " i64 "
       << vals[static_cast<size_t>(d(rng)) % vals.size()] << ", "
       << vals[static_cast<size_t>(d(rng)) % vals.size()] << "\n";
    vals.push_back(name);
  }
  os << "  ret " << vals.back() << "\n}\n";
  return os.str();
}

} // namespace

TEST_CASE("opcode relation cardinality equals AST count on generated modules") {
  std::mt19937 rng(4242);
  for (int iter = 0; iter < 40; ++iter) {
    auto r = mir::parse_module(gen_arith_module(rng), "gen.mir");
    REQUIRE(r.ok());
    auto fr = facts::extract_facts(*r.module);
    REQUIRE(fr.ok());
    auto counts = opcode_counts(*r.module);
    for (const char *op : {"udiv", "sdiv", "add", "sub", "mul"}) {
      size_t expect = counts.count(op) ? counts[op] : 0;
      CHECK(fr.db.at(std::string(op) + "_instr").size() == expect);
      CHECK(fr.db.at(std::string(op) + "_instr_first_operand").size() == expect);
    }
  }
}

static const char *kLoopProgram = R"(
fn @loops(%n: i64) -> i64 {
entry:
  br outer_head
outer_head:
  %i = phi i64 [0, entry], [%i2, outer_latch]
  %ci = icmp ult i64 %i, 4
  condbr %ci, inner_pre, done
inner_pre:
  br inner_head
inner_head:
  %j = phi i64 [0, inner_pre], [%j2, inner_body]
  %cj = icmp ult i64 %j, 3
  condbr %cj, inner_body, outer_latch
inner_body:
  %j2 = add i64 %j, 1
  br inner_head
outer_latch:
  %i2 = add i64 %i, 1
  br outer_head
done:
  ret %i
}
)";

TEST_CASE("nested constant loops: two headers, two bounds") {
  auto r = mir::parse_module(kLoopProgram, "t.mir");
  REQUIRE(r.ok());
  auto fr = facts::extract_facts(*r.module);
  REQUIRE(fr.ok());
  CHECK(fr.db.at("loop_header").size() == 2);
  REQUIRE(fr.db.at("loop_bound_const").size() == 2);
  std::set<int64_t> bounds;
  for (const auto &t : fr.db.at("loop_bound_const"))
    bounds.insert(std::get<int64_t>(t[1]));
  CHECK(bounds == std::set<int64_t>{3, 4});
}

TEST_CASE("parameter-bounded loop emits header but no constant bound") {
  auto r = mir::parse_module(R"(
fn @f(%n: i64) -> i64 {
entry:
  br head
head:
  %i = phi i64 [0, entry], [%i2, body]
  %c = icmp ult i64 %i, %n
  condbr %c, body, done
body:
  %i2 = add i64 %i, 1
  br head
done:
  ret %i
}
)",
                             "t.mir");
  REQUIRE(r.ok());
  auto fr = facts::extract_facts(*r.module);
  REQUIRE(fr.ok());
  CHECK(fr.db.at("loop_header").size() == 1);
  CHECK(fr.db.at("loop_bound_const").empty());
}

TEST_CASE("loop soundness: every back edge covered by a loop header") {
  auto r = mir::parse_module(kLoopProgram, "t.mir");
  REQUIRE(r.ok());
  const auto &f = r.module->functions[0];
  auto g = cfg::build_cfg(f);
  auto fr = facts::extract_facts(*r.module);
  std::set<std::string> headers;
  for (const auto &t : fr.db.at("loop_header"))
    headers.insert(std::get<std::string>(t[1]));
  for (size_t b = 0; b < g.block_count(); ++b)
    for (size_t s : g.succs[b])
      if (g.dominates(s, b)) {
        std::string hb = facts::block_id(*r.module, f, f.blocks[s].label);
        CHECK(headers.count(hb) == 1);
      }
}

TEST_CASE("fact schema parses and covers every extracted relation") {
  const auto &schema = facts::fact_schema();
  CHECK(schema.relations.size() >= 30);
  auto r = mir::parse_module("fn @f() { e: ret }", "t.mir");
  auto fr = facts::extract_facts(*r.module);
  for (const auto &[rel, tuples] : fr.db) {
    (void)tuples;
    CHECK(schema.find_relation(rel) != nullptr);
  }
}
