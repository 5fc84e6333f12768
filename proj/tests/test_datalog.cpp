//===-- test_datalog.cpp - Engine parser and evaluation tests -------------===//

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stase/datalog.hpp"
#include "support/naive_datalog.hpp"

#include <filesystem>
#include <random>
#include <sstream>

using namespace stase;
using datalog::Database;
using datalog::Value;

namespace {

Database edges(std::initializer_list<std::pair<const char *, const char *>> es) {
  Database db;
  for (auto [a, b] : es)
    db["edge"].insert({Value(std::string(a)), Value(std::string(b))});
  return db;
}

const char *kPathRules = R"(
.decl edge(a: symbol, b: symbol)
.decl path(a: symbol, b: symbol)
path(?x, ?y) :- edge(?x, ?y).
path(?x, ?z) :- path(?x, ?y), edge(?y, ?z).
)";

} // namespace

TEST_CASE("textbook transitive closure") {
  auto pr = datalog::parse_rules(kPathRules, "path.dl");
  REQUIRE(pr.ok());
  auto res = datalog::evaluate_fixpoint(*pr.program, edges({{"a", "b"}, {"b", "c"}}));
  REQUIRE(res.ok());
  datalog::TupleSet expect{{Value(std::string("a")), Value(std::string("b"))},
                           {Value(std::string("b")), Value(std::string("c"))},
                           {Value(std::string("a")), Value(std::string("c"))}};
  CHECK(res.db.at("path") == expect);
}

TEST_CASE("empty facts give empty intensional relations") {
  auto pr = datalog::parse_rules(kPathRules, "path.dl");
  REQUIRE(pr.ok());
  auto res = datalog::evaluate_fixpoint(*pr.program, {});
  REQUIRE(res.ok());
  CHECK(res.db.at("path").empty());
}

TEST_CASE("query with pattern") {
  auto pr = datalog::parse_rules(kPathRules, "path.dl");
  auto res = datalog::evaluate_fixpoint(*pr.program, edges({{"a", "b"}, {"b", "c"}}));
  auto q = datalog::query(res.db, "path", {Value(std::string("a")), std::nullopt});
  REQUIRE(q.has_value());
  CHECK(q->size() == 2);
  auto q2 = datalog::query(res.db, "nosuch", {});
  CHECK(!q2.has_value());
  // all-constant pattern behaves as membership
  auto q3 = datalog::query(res.db, "path",
                           {Value(std::string("a")), Value(std::string("c"))});
  CHECK(q3->size() == 1);
  auto q4 = datalog::query(res.db, "path",
                           {Value(std::string("c")), Value(std::string("a"))});
  CHECK(q4->empty());
}

TEST_CASE("unsafe rule: unbound head variable") {
  auto pr = datalog::parse_rules(R"(
.decl q(a: symbol)
.decl p(a: symbol)
p(?x) :- q(?y).
)",
                                 "t.dl");
  CHECK(!pr.ok());
  bool found = false;
  for (const auto &d : pr.diags)
    if (d.message.find("unsafe rule") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("non-stratifiable negation") {
  auto pr = datalog::parse_rules(R"(
.decl q(a: symbol)
.decl p(a: symbol)
p(?x) :- q(?x), !p(?x).
)",
                                 "t.dl");
  CHECK(!pr.ok());
  bool found = false;
  for (const auto &d : pr.diags)
    if (d.message.find("not stratifiable") != std::string::npos)
      found = true;
  CHECK(found);
}

TEST_CASE("arity mismatch") {
  auto pr = datalog::parse_rules(R"(
.decl q(a: symbol, b: symbol)
.decl p(a: symbol)
p(?x) :- q(?x).
)",
                                 "t.dl");
  CHECK(!pr.ok());
}

TEST_CASE("undeclared relation") {
  auto pr = datalog::parse_rules("p(?x) :- q(?x).", "t.dl");
  CHECK(!pr.ok());
}

TEST_CASE("stratified negation evaluates lower strata first") {
  auto pr = datalog::parse_rules(R"(
.decl node(a: symbol)
.decl edge(a: symbol, b: symbol)
.decl reach(a: symbol)
.decl unreached(a: symbol)
reach(?x) :- edge("root", ?x).
reach(?y) :- reach(?x), edge(?x, ?y).
unreached(?x) :- node(?x), !reach(?x).
)",
                                 "t.dl");
  REQUIRE(pr.ok());
  Database facts;
  for (const char *n : {"root", "a", "b", "c"})
    facts["node"].insert({Value(std::string(n))});
  facts["edge"].insert({Value(std::string("root")), Value(std::string("a"))});
  facts["edge"].insert({Value(std::string("a")), Value(std::string("b"))});
  auto res = datalog::evaluate_fixpoint(*pr.program, facts);
  REQUIRE(res.ok());
  datalog::TupleSet expect{{Value(std::string("c"))},
                           {Value(std::string("root"))}};
  CHECK(res.db.at("unreached") == expect);
}

TEST_CASE("division and taint rules parse verbatim in the documented syntax") {
  // The published rule surface (qualified names, ?vars, wildcards), plus
  // the declarations it needs.
  auto pr = datalog::parse_rules(R"(
.decl udiv_instr(instr: symbol)
.decl udiv_instr_first_operand(instr: symbol, op: symbol)
.decl udiv_instr_second_operand(instr: symbol, op: symbol)
.decl instr_func(instr: symbol, func: symbol)
.decl instr_pos(instr: symbol, line: number, col: number)
.decl func_name(func: symbol, name: symbol)
.decl func_param(func: symbol, param: symbol, index: number)
.decl entrypoint(func: symbol)
.decl entry_point(func: symbol)
.decl entryinput(taintentry: symbol)
.decl subset.var_points_to(ctx: symbol, site: symbol, field: symbol, var: symbol)
.decl tainttracking(taintsource: symbol, taintsink: symbol)
.decl divisioninstructions(divid: symbol, divis: symbol, instr: symbol)
.decl division_primitive(func: symbol, divid: symbol, divis: symbol, instr: symbol, line: number)
.decl divisor_tainted_division_primitive(func: symbol, divid: symbol, divis: symbol, taintsource: symbol, instr: symbol, line: number)

divisioninstructions(?divid, ?divis, ?instr):-
    udiv_instr(?instr),
    udiv_instr_first_operand(?instr, ?divid),
    udiv_instr_second_operand(?instr, ?divis).

division_primitive(?func, ?divid, ?divis, ?instr, ?line):-
  instr_func(?instr, ?func),
  divisioninstructions(?divid, ?divis, ?instr),
  instr_pos(?instr, ?line, ?col).

entrypoint(?func):-
  func_name(?func, "@SmmProfileHandler").
entryinput(?taintentry):-
  entry_point(?func),
  func_param(?func, ?taintentry, 2).

tainttracking(?taintsource, ?taintsink):-
  entryinput(?taintsource),
  subset.var_points_to(_, ?samealloc, _, ?taintsource),
  subset.var_points_to(_, ?samealloc, _, ?taintsink).

divisor_tainted_division_primitive(?func, ?divid, ?divis, ?taintsource,
?instr, ?line) :-
  tainttracking(?taintsource, ?divis),
  instr_func(?instr, ?func),
  divisioninstructions (?divid, ?divis, ?instr),
  instr_pos(?instr, ?line, ?col).
)",
                                 "division_taint.dl");
  REQUIRE(pr.ok());
  CHECK(pr.program->rules.size() == 6);
  // the first rule has three body atoms
  CHECK(pr.program->rules[0].body.size() == 3);
}

TEST_CASE("substr builtin") {
  auto pr = datalog::parse_rules(R"(
.decl callee(name: symbol)
.decl divlike(name: symbol)
divlike(?n) :- callee(?n), substr("Div", ?n).
)",
                                 "t.dl");
  REQUIRE(pr.ok());
  Database facts;
  facts["callee"].insert({Value(std::string("SafeDivide"))});
  facts["callee"].insert({Value(std::string("CopyMem"))});
  auto res = datalog::evaluate_fixpoint(*pr.program, facts);
  REQUIRE(res.ok());
  CHECK(res.db.at("divlike").size() == 1);
}

TEST_CASE("facts in intensional relation rejected") {
  auto pr = datalog::parse_rules(kPathRules, "t.dl");
  Database facts;
  facts["path"].insert({Value(std::string("a")), Value(std::string("b"))});
  auto res = datalog::evaluate_fixpoint(*pr.program, facts);
  CHECK(!res.ok());
}

TEST_CASE("tuple ceiling produces explicit overflow error") {
  auto pr = datalog::parse_rules(kPathRules, "t.dl");
  Database facts;
  // complete graph on 30 nodes -> 900 paths
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j)
      facts["edge"].insert(
          {Value("n" + std::to_string(i)), Value("n" + std::to_string(j))});
  datalog::EvalOptions opts;
  opts.max_tuples = 1000;
  auto res = datalog::evaluate_fixpoint(*pr.program, facts, opts);
  CHECK(!res.ok());
  CHECK(res.overflow);
}

TEST_CASE("idempotence: re-running on facts plus derived output is a fixpoint") {
  auto pr = datalog::parse_rules(kPathRules, "t.dl");
  auto res = datalog::evaluate_fixpoint(
      *pr.program, edges({{"a", "b"}, {"b", "c"}, {"c", "a"}}));
  REQUIRE(res.ok());
  // Feed the derived output back as extensional facts for a copy program in
  // which 'path' is extensional (no rules redefine it with the same name).
  auto pr2 = datalog::parse_rules(R"(
.decl edge(a: symbol, b: symbol)
.decl path(a: symbol, b: symbol)
.decl path2(a: symbol, b: symbol)
path2(?x, ?y) :- edge(?x, ?y).
path2(?x, ?z) :- path2(?x, ?y), edge(?y, ?z).
)",
                                  "t.dl");
  REQUIRE(pr2.ok());
  Database facts2;
  facts2["edge"] = res.db.at("edge");
  facts2["path"] = res.db.at("path");
  auto res2 = datalog::evaluate_fixpoint(*pr2.program, facts2);
  REQUIRE(res2.ok());
  CHECK(res2.db.at("path2") == res.db.at("path"));
}

TEST_CASE("facts round-trip through TSV files") {
  auto pr = datalog::parse_rules(kPathRules, "t.dl");
  Database facts = edges({{"a", "b"}, {"b", "c"}});
  std::string dir =
      (std::filesystem::temp_directory_path() / "stase_dl_io").string();
  std::string err;
  REQUIRE(datalog::write_facts_dir(facts, dir, &err));
  Database back;
  REQUIRE(datalog::read_facts_dir(*pr.program, dir, &back, &err));
  CHECK(back.at("edge") == facts.at("edge"));
  std::filesystem::remove_all(dir);
}

//===----------------------------------------------------------------------===//
// Randomized semi-naive vs naive agreement (also exercised by acceptance
// criterion 6 at a larger count).
//===----------------------------------------------------------------------===//

namespace {

struct RandomInstance {
  datalog::Program program;
  Database facts;
};

// Random programs over unary/binary relations r0..r4 with up to 5 rules and
// occasional negation across strata.
std::optional<RandomInstance> random_instance(std::mt19937 &rng) {
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> d4(0, 3);
  std::uniform_int_distribution<int> d12(0, 11);
  std::ostringstream src;
  int nrel = 3 + d4(rng) % 2;       // extensional e0, e1; intensional i0..
  src << ".decl e0(a: symbol, b: symbol)\n";
  src << ".decl e1(a: symbol)\n";
  for (int i = 0; i < nrel; ++i)
    src << ".decl i" << i << "(a: symbol, b: symbol)\n";
  src << ".decl top(a: symbol)\n";
  int nrules = 2 + d4(rng);
  for (int r = 0; r < nrules; ++r) {
    int head = r % nrel;
    src << "i" << head << "(?x, ?y) :- e0(?x, ?y)";
    if (coin(rng))
      src << ", e1(?x)";
    if (head > 0 && coin(rng))
      src << ", i" << (head - 1) << "(?x, ?y)";
    if (head > 0 && coin(rng))
      src << ", i" << (head - 1) << "(?y, ?x)";
    src << ".\n";
    if (coin(rng)) {
      // recursive step
      src << "i" << head << "(?x, ?z) :- i" << head << "(?x, ?y), e0(?y, ?z).\n";
    }
  }
  // a negation layer on top
  src << "top(?x) :- e1(?x), !i0(?x, ?x).\n";
  auto pr = datalog::parse_rules(src.str(), "rand.dl");
  if (!pr.ok())
    return std::nullopt;
  RandomInstance inst;
  inst.program = *pr.program;
  int nconst = 2 + d12(rng);
  int nfacts = 1 + d12(rng);
  for (int i = 0; i < nfacts; ++i) {
    std::string a = "c" + std::to_string(d12(rng) % nconst);
    std::string b = "c" + std::to_string(d12(rng) % nconst);
    inst.facts["e0"].insert({Value(a), Value(b)});
    if (coin(rng))
      inst.facts["e1"].insert({Value(a)});
  }
  return inst;
}

} // namespace

TEST_CASE("semi-naive equals naive on random programs") {
  std::mt19937 rng(777);
  int done = 0;
  while (done < 60) {
    auto inst = random_instance(rng);
    if (!inst)
      continue;
    ++done;
    auto semi = datalog::evaluate_fixpoint(inst->program, inst->facts);
    REQUIRE(semi.ok());
    auto naive = test_support::naive_evaluate(inst->program, inst->facts);
    CHECK(semi.db == naive);
  }
}

TEST_CASE("monotonicity within a stratum") {
  auto pr = datalog::parse_rules(kPathRules, "t.dl");
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> d(0, 7);
  for (int iter = 0; iter < 20; ++iter) {
    Database facts;
    for (int i = 0; i < 6; ++i)
      facts["edge"].insert({Value("n" + std::to_string(d(rng))),
                            Value("n" + std::to_string(d(rng)))});
    auto before = datalog::evaluate_fixpoint(*pr.program, facts);
    facts["edge"].insert({Value("n" + std::to_string(d(rng))),
                          Value("n" + std::to_string(d(rng)))});
    auto after = datalog::evaluate_fixpoint(*pr.program, facts);
    REQUIRE(before.ok());
    REQUIRE(after.ok());
    for (const auto &t : before.db.at("path"))
      CHECK(after.db.at("path").count(t) == 1);
  }
}
