//===-- test_mir.cpp - Parser, validator, printer tests -------------------===//

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stase/cfg.hpp"
#include "stase/mir.hpp"

#include <random>

using namespace stase;

TEST_CASE("minimal well-formed program") {
  auto r = mir::parse_module("fn @f(%a:i32) { e: ret %a }", "t.mir");
  REQUIRE(r.ok());
  CHECK(r.module->functions.size() == 1);
  const auto &f = r.module->functions[0];
  CHECK(f.name == "f");
  CHECK(f.blocks.size() == 1);
  CHECK(f.blocks[0].instrs.size() == 1);
  CHECK(f.ret_type->is_int());
  CHECK(f.ret_type->width == 32);
}

TEST_CASE("use of undefined value is a validation error") {
  auto r = mir::parse_module("fn @f() { e: %x = udiv i32 %y, 0 }", "t.mir");
  CHECK(!r.ok());
  bool found = false;
  for (const auto &d : r.diags)
    if (d.message.find("undefined value '%y'") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("block without terminator is diagnosed with the block name") {
  auto r = mir::parse_module(
      "fn @f() { e: %x = add i32 1, 2\n ret }", "t.mir");
  REQUIRE(r.ok()); // 'ret' terminates; now remove it
  auto r2 = mir::parse_module("fn @g(%a:i32) { e: %x = add i32 %a, 2 }", "t.mir");
  CHECK(!r2.ok());
  bool found = false;
  for (const auto &d : r2.diags)
    if (d.message.find("does not end in a terminator") != std::string::npos &&
        d.message.find("'e'") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("duplicate function names produce one diagnostic per duplicate") {
  std::string one = "fn @dup() { e: ret }\n";
  auto r2 = mir::parse_module(one + one, "t.mir");
  CHECK(!r2.ok());
  int count2 = 0;
  for (const auto &d : r2.diags)
    if (d.message.find("duplicate function name") != std::string::npos)
      ++count2;
  CHECK(count2 == 1);
  auto r3 = mir::parse_module(one + one + one, "t.mir");
  int count3 = 0;
  for (const auto &d : r3.diags)
    if (d.message.find("duplicate function name") != std::string::npos)
      ++count3;
  CHECK(count3 == 2);
}

TEST_CASE("syntax error carries position") {
  auto r = mir::parse_module("fn @f() { e: bogus }", "t.mir");
  CHECK(!r.ok());
  REQUIRE(!r.diags.empty());
  CHECK(r.diags[0].line >= 1);
  CHECK(r.diags[0].render().find("error") != std::string::npos);
}

static const char *kStructProgram = R"(
module demo
!file("demo.c")
struct %Hdr { Command: i8, ReturnStatus: i8 }
struct %Comm { Header: %Hdr, Payload: [8 x i8] }
region SMRAM base=64 size=32
global @mLock: i1 = 0
global @mCount: i64 = symbolic

fn @helper(%x: i64) -> i64 {
entry:
  %y = add i64 %x, 1
  ret %y
}

fn @main(%buf: %Comm*, %n: i64) -> i64 {
entry:
  %cmd_p = gep %Comm, %buf, .Header, .Command
  %cmd = load i8, %cmd_p
  %wide = zext i8 %cmd to i64
  %ok = icmp ult i64 %wide, 4
  condbr %ok, then, else
then:
  %a = call @helper(%n)
  br join
else:
  br join
join:
  %v = phi i64 [%a, then], [0, else]
  assert (%v <= 255 && SMRAM_BASE + SMRAM_SIZE > 0)
  ret %v
}
)";

TEST_CASE("struct program parses, validates, and round-trips") {
  auto r = mir::parse_module(kStructProgram, "demo.mir");
  REQUIRE(r.ok());
  CHECK(r.module->name == "demo");
  CHECK(r.module->default_file == "demo.c");
  CHECK(r.module->structs.size() == 2);
  CHECK(r.module->regions.size() == 1);

  std::string printed = mir::pretty_print(*r.module);
  auto r2 = mir::parse_module(printed, "demo.mir");
  REQUIRE(r2.ok());
  CHECK(mir::module_equal(*r.module, *r2.module));
  // struct declarations precede functions in the output
  CHECK(printed.find("struct %Hdr") < printed.find("fn @helper"));
}

TEST_CASE("instruction ids use the bitcode-style format") {
  auto r = mir::parse_module(kStructProgram, "demo.mir");
  REQUIRE(r.ok());
  const auto *f = r.module->find_function("helper");
  REQUIRE(f != nullptr);
  CHECK(mir::instr_id(*r.module, *f, 0) == "<demo.bc>:helper:0");
  CHECK(mir::function_id(*r.module, *f) == "<demo.bc>:helper");
  auto ref = mir::find_instr_by_id(*r.module, "<demo.bc>:helper:1");
  REQUIRE(ref.has_value());
  CHECK(ref->instr->op == mir::Opcode::Ret);
}

TEST_CASE("assert expression parser round-trips") {
  std::string err;
  auto e = mir::parse_aexpr(
      "TempCommBufferSize != 0 && (a + 2 * b <= 255 || freed(%p))", &err);
  REQUIRE(e != nullptr);
  std::string s = mir::aexpr_to_string(e);
  auto e2 = mir::parse_aexpr(s, &err);
  REQUIRE(e2 != nullptr);
  CHECK(mir::aexpr_equal(e, e2));
  CHECK(s.find("TempCommBufferSize != 0") != std::string::npos);
}

TEST_CASE("assert referencing unknown name fails validation") {
  auto r = mir::parse_module(
      "fn @f() { e: assert (nosuchthing == 0)\n ret }", "t.mir");
  CHECK(!r.ok());
}

TEST_CASE("phi incoming labels must match predecessors") {
  auto r = mir::parse_module(R"(
fn @f(%c: i1) -> i64 {
e:
  condbr %c, a, b
a:
  br j
b:
  br j
j:
  %v = phi i64 [1, a]
  ret %v
}
)",
                             "t.mir");
  CHECK(!r.ok());
}

TEST_CASE("call arity and unknown callee checks") {
  auto r = mir::parse_module("fn @f() { e: call @nope()\n ret }", "t.mir");
  CHECK(!r.ok());
  auto r2 = mir::parse_module(R"(
fn @g(%a: i64) { e: ret }
fn @f() { e: call @g(1, 2)
  ret }
)",
                              "t.mir");
  CHECK(!r2.ok());
}

TEST_CASE("region wrap check") {
  auto r = mir::parse_module(
      "region R base=0xffffffffffffffff size=2\nfn @f() { e: ret }", "t.mir");
  CHECK(!r.ok());
}

TEST_CASE("externs parse and calls to them validate") {
  auto r = mir::parse_module(R"(
extern @ext(i64) -> i64
fn @f(%x: i64) -> i64 {
e:
  %r = call @ext(%x)
  ret %r
}
)",
                             "t.mir");
  REQUIRE(r.ok());
  CHECK(r.module->functions[0].is_external);
}

//===----------------------------------------------------------------------===//
// Property test: random valid modules round-trip through print+parse.
//===----------------------------------------------------------------------===//

namespace {

// Generates straight-line arithmetic functions with optional diamonds.
std::string gen_module(std::mt19937 &rng) {
  std::uniform_int_distribution<int> small(0, 3);
  std::ostringstream os;
  os << "module gen\n";
  int nfuncs = 1 + small(rng) % 2;
  for (int f = 0; f < nfuncs; ++f) {
    os << "fn @f" << f << "(%a: i64, %b: i64) -> i64 {\n";
    os << "entry:\n";
    int nvals = 1 + small(rng);
    std::vector<std::string> vals{"%a", "%b"};
    for (int i = 0; i < nvals; ++i) {
      std::string name = "%v" + std::to_string(i);
      const char *ops[] = {"add", "sub", "mul"};
      os << "  " << name << " = " << ops[small(rng) % 3] << " i64 "
         << vals[static_cast<size_t>(small(rng)) % vals.size()] << ", "
         << vals[static_cast<size_t>(small(rng)) % vals.size()] << "\n";
      vals.push_back(name);
    }
    if (small(rng) == 0) {
      os << "  %c = icmp ult i64 %a, %b\n";
      os << "  condbr %c, t, e2\n";
      os << "t:\n  br j\n";
      os << "e2:\n  br j\n";
      os << "j:\n  %m = phi i64 [" << vals.back() << ", t], [0, e2]\n";
      os << "  ret %m\n";
    } else {
      os << "  ret " << vals.back() << "\n";
    }
    os << "}\n";
  }
  return os.str();
}

} // namespace

TEST_CASE("round-trip property over generated modules") {
  std::mt19937 rng(12345);
  for (int iter = 0; iter < 60; ++iter) {
    std::string text = gen_module(rng);
    auto r = mir::parse_module(text, "gen.mir");
    REQUIRE(r.ok());
    std::string printed = mir::pretty_print(*r.module);
    auto r2 = mir::parse_module(printed, "gen.mir");
    REQUIRE(r2.ok());
    CHECK(mir::module_equal(*r.module, *r2.module));
    // determinism: parsing identical text twice gives equal modules
    auto r3 = mir::parse_module(text, "gen.mir");
    REQUIRE(r3.ok());
    CHECK(mir::module_equal(*r.module, *r3.module));
  }
}

TEST_CASE("natural loop detection finds constant bounds") {
  auto r = mir::parse_module(R"(
fn @loop10() -> i64 {
entry:
  br head
head:
  %i = phi i64 [0, entry], [%inc, body]
  %c = icmp ult i64 %i, 10
  condbr %c, body, done
body:
  %inc = add i64 %i, 1
  br head
done:
  ret %i
}
)",
                             "t.mir");
  REQUIRE(r.ok());
  const auto &f = r.module->functions[0];
  auto g = cfg::build_cfg(f);
  bool irr = false;
  auto loops = cfg::find_natural_loops(*r.module, f, g, &irr);
  CHECK(!irr);
  REQUIRE(loops.size() == 1);
  CHECK(f.blocks[loops[0].header].label == "head");
  CHECK(loops[0].has_const_bound);
  CHECK(loops[0].const_bound == 10);
}

TEST_CASE("parameter-bounded loop has no constant bound") {
  auto r = mir::parse_module(R"(
fn @loopn(%n: i64) -> i64 {
entry:
  br head
head:
  %i = phi i64 [0, entry], [%inc, body]
  %c = icmp ult i64 %i, %n
  condbr %c, body, done
body:
  %inc = add i64 %i, 1
  br head
done:
  ret %i
}
)",
                             "t.mir");
  REQUIRE(r.ok());
  const auto &f = r.module->functions[0];
  auto g = cfg::build_cfg(f);
  bool irr = false;
  auto loops = cfg::find_natural_loops(*r.module, f, g, &irr);
  REQUIRE(loops.size() == 1);
  CHECK(!loops[0].has_const_bound);
}

#ifndef STASE_REPO_DIR
#define STASE_REPO_DIR "."
#endif

#include <filesystem>

TEST_CASE("every bundled corpus module validates and round-trips") {
  size_t checked = 0;
  for (const auto &entry : std::filesystem::directory_iterator(
           std::string(STASE_REPO_DIR) + "/corpus")) {
    if (entry.path().extension() != ".mir")
      continue;
    ++checked;
    auto r = mir::parse_module_file(entry.path().string());
    INFO(entry.path().filename().string());
    REQUIRE(r.ok());
    auto r2 = mir::parse_module(mir::pretty_print(*r.module),
                                entry.path().filename().string());
    REQUIRE(r2.ok());
    CHECK(mir::module_equal(*r.module, *r2.module));
  }
  CHECK(checked >= 18);
}
