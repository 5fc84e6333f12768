//===-- test_cli.cpp - CLI subcommand and stage-composition tests ---------===//

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef STASE_REPO_DIR
#define STASE_REPO_DIR "."
#endif
#ifndef STASE_CLI
#define STASE_CLI "stase"
#endif

namespace {

namespace fs = std::filesystem;

std::string repo(const std::string &rel) {
  return std::string(STASE_REPO_DIR) + "/" + rel;
}

struct RunResult {
  int code = -1;
  std::string output;
};

RunResult run(const std::string &args) {
  std::string cmd = std::string(STASE_CLI) + " " + args + " 2>&1";
  RunResult r;
  FILE *pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    r.output.append(buf.data(), n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tmpdir(const char *name) {
  std::string d = (fs::temp_directory_path() / name).string();
  fs::remove_all(d);
  return d;
}

} // namespace

TEST_CASE("unknown flag is a usage error") {
  auto r = run("pipeline --no-such-flag");
  CHECK(r.code != 0);
}

TEST_CASE("missing subcommand is a usage error") {
  auto r = run("");
  CHECK(r.code != 0);
}

TEST_CASE("corpus --list enumerates programs with seeded manifests") {
  auto r = run("corpus --list --dir " + repo("corpus"));
  CHECK(r.code == 0);
  CHECK(r.output.find("tpm_div") != std::string::npos);
  CHECK(r.output.find("seeded: division_by_zero@70") != std::string::npos);
  CHECK(r.output.find("pxebc_offer") != std::string::npos);
}

TEST_CASE("pipeline --fail-on-confirmed flips the exit code") {
  std::string out = tmpdir("stase_cli_fail");
  auto r = run("pipeline " + repo("corpus/tpm_div.mir") + " --config " +
               repo("corpus/tpm_div.analysis.cfg") + " --rules " +
               repo("rules") + " --out " + out + " --fail-on-confirmed");
  CHECK(r.code == 3);
  fs::remove_all(out);
}

TEST_CASE("stage composition equals the in-process pipeline byte-for-byte") {
  std::string staged = tmpdir("stase_cli_staged");
  std::string direct = tmpdir("stase_cli_direct");
  std::string mir = repo("corpus/tpm_div.mir");
  std::string cfg = repo("corpus/tpm_div.analysis.cfg");
  std::string rules = repo("rules");

  // stage by stage, each consuming the previous stage's files
  auto r1 = run("facts " + mir + " --out " + staged);
  REQUIRE(r1.code == 0);
  auto r2 = run("rules " + mir + " --config " + cfg + " --rules " + rules +
                " --facts-dir " + staged + "/facts --out " + staged);
  REQUIRE(r2.code == 0);
  auto r3 = run("slice " + mir + " --config " + cfg + " --findings " + staged +
                "/findings.tsv --out " + staged);
  REQUIRE(r3.code == 0);
  auto r4 = run("harness " + staged + "/vd/001_division_by_zero.vd --mir " +
                mir + " --out " + staged);
  REQUIRE(r4.code == 0);
  auto r5 = run("symexec \"" + staged +
                "/harness/\xce\xb8_001_division_by_zero.mir\" --peh " + staged +
                "/harness/peh_001_division_by_zero --out " + staged);
  REQUIRE(r5.code == 0);
  CHECK(r5.output.find("confirmed") != std::string::npos);

  // the whole pipeline in one process
  auto rp = run("pipeline " + mir + " --config " + cfg + " --rules " + rules +
                " --out " + direct + " --quiet");
  REQUIRE(rp.code == 0);

  for (const char *rel : {
           "findings.tsv",
           "vd/001_division_by_zero.vd",
           "harness/\xce\xb8_001_division_by_zero.mir",
           "harness/peh_001_division_by_zero",
           "sigs/sig_001_division_by_zero.json",
           "sigs/sig_001_division_by_zero.txt",
       }) {
    INFO(rel);
    REQUIRE(fs::exists(staged + "/" + rel));
    REQUIRE(fs::exists(direct + "/" + rel));
    CHECK(slurp(staged + "/" + rel) == slurp(direct + "/" + rel));
  }
  // fact files match as well
  for (auto &entry : fs::directory_iterator(staged + "/facts")) {
    std::string name = entry.path().filename().string();
    INFO(name);
    CHECK(slurp(entry.path()) == slurp(direct + "/facts/" + name));
  }
  fs::remove_all(staged);
  fs::remove_all(direct);
}

TEST_CASE("corpus subcommand runs a single program") {
  auto r = run("corpus --dir " + repo("corpus") + " --rules " + repo("rules") +
               " --only div_guarded");
  CHECK(r.code == 0);
  CHECK(r.output.find("[pass] div_guarded") != std::string::npos);
  CHECK(r.output.find("dismissed 1") != std::string::npos);
}

TEST_CASE("STASE_EXTERNAL_SOLVER env alias is honored") {
  // a broken solver command must not break small queries (they never escalate)
  std::string out = tmpdir("stase_cli_env");
  std::string cmd = "STASE_EXTERNAL_SOLVER=/nonexistent-solver " +
                    std::string(STASE_CLI) + " pipeline " +
                    repo("corpus/tpm_div.mir") + " --config " +
                    repo("corpus/tpm_div.analysis.cfg") + " --rules " +
                    repo("rules") + " --out " + out + " --quiet 2>&1";
  FILE *pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  while (fread(buf.data(), 1, buf.size(), pipe) > 0)
    ;
  int status = pclose(pipe);
  CHECK(WEXITSTATUS(status) == 0);
  fs::remove_all(out);
}
