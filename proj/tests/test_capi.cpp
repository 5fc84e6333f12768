//===-- test_capi.cpp - extern-C surface tests -----------------------------===//

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stase.h"

#include <filesystem>
#include <string>

#ifndef STASE_REPO_DIR
#define STASE_REPO_DIR "."
#endif

namespace {
std::string repo(const std::string &rel) {
  return std::string(STASE_REPO_DIR) + "/" + rel;
}

struct OwnedString {
  char *s = nullptr;
  ~OwnedString() { stase_string_free(s); }
  std::string str() const { return s ? s : ""; }
};
} // namespace

TEST_CASE("version string") {
  std::string v = stase_version();
  CHECK(v.rfind("stase", 0) == 0);
}

TEST_CASE("module parse, validate, print round-trip through the C API") {
  stase_module *m = nullptr;
  OwnedString err;
  auto rc = stase_module_parse_text("fn @f(%a:i32) { e: ret %a }", "t.mir", &m,
                                    &err.s);
  REQUIRE(rc == STASE_OK);
  REQUIRE(m != nullptr);
  OwnedString diags{stase_module_validate(m)};
  CHECK(diags.str().empty());
  OwnedString name{stase_module_name(m)};
  CHECK(name.str() == "t");
  OwnedString printed{stase_module_print(m)};
  CHECK(printed.str().find("fn @f") != std::string::npos);
  // printed text parses back
  stase_module *m2 = nullptr;
  OwnedString err2;
  CHECK(stase_module_parse_text(printed.s, "t.mir", &m2, &err2.s) == STASE_OK);
  stase_module_free(m2);
  stase_module_free(m);
}

TEST_CASE("parse errors surface with positions") {
  stase_module *m = nullptr;
  OwnedString err;
  auto rc = stase_module_parse_text("fn @f() { e: bogus }", "t.mir", &m, &err.s);
  CHECK(rc == STASE_ERR_PARSE);
  CHECK(m == nullptr);
  CHECK(err.str().find("error") != std::string::npos);
}

TEST_CASE("null arguments are usage errors") {
  CHECK(stase_module_parse_file(nullptr, nullptr, nullptr) == STASE_ERR_USAGE);
  CHECK(stase_stage_facts(nullptr, nullptr, nullptr) == STASE_ERR_USAGE);
  CHECK(stase_pipeline_run(nullptr, nullptr, nullptr) == STASE_ERR_USAGE);
}

TEST_CASE("pipeline through the C API") {
  std::string out =
      (std::filesystem::temp_directory_path() / "stase_capi_out").string();
  std::filesystem::remove_all(out);
  stase_pipeline_options opts;
  stase_pipeline_options_init(&opts);
  std::string mir = repo("corpus/tpm_div.mir");
  std::string cfg = repo("corpus/tpm_div.analysis.cfg");
  std::string rules = repo("rules");
  opts.mir_path = mir.c_str();
  opts.analysis_cfg = cfg.c_str();
  opts.rules_dir = rules.c_str();
  opts.out_dir = out.c_str();
  stase_report *report = nullptr;
  OwnedString err;
  REQUIRE(stase_pipeline_run(&opts, &report, &err.s) == STASE_OK);
  REQUIRE(report != nullptr);
  CHECK(stase_report_candidates(report) == 1);
  CHECK(stase_report_confirmed(report) == 1);
  CHECK(stase_report_dismissed(report) == 0);
  CHECK(stase_report_unconfirmed(report) == 0);
  REQUIRE(stase_report_row_count(report) == 1);
  OwnedString row{stase_report_row(report, 0)};
  CHECK(row.str().find("001_division_by_zero") != std::string::npos);
  CHECK(row.str().find("confirmed") != std::string::npos);
  OwnedString text{stase_report_text(report)};
  CHECK(text.str().find("STASE pipeline report") != std::string::npos);
  OwnedString json{stase_report_json(report)};
  CHECK(json.str().find("\"confirmed\": 1") != std::string::npos);
  stase_report_free(report);
  CHECK(std::filesystem::exists(out + "/sigs/sig_001_division_by_zero.json"));
  std::filesystem::remove_all(out);
}

TEST_CASE("corpus listing through the C API") {
  OwnedString listing, err;
  REQUIRE(stase_corpus_list(repo("corpus").c_str(), &listing.s, &err.s) ==
          STASE_OK);
  CHECK(listing.str().find("tpm_div") != std::string::npos);
  CHECK(listing.str().find("division_by_zero@70") != std::string::npos);
}
