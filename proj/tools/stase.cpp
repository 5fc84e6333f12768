//===-- stase.cpp - Command line front end over the C API -----------------===//

#include "CLI11.hpp"
#include "stase.h"

#include <cstdio>
#include <cstdlib>
#include <string>

namespace {

struct Shared {
  std::string out_dir = "out";
  std::string rules_dir = "rules";
  uint64_t seed = 0;
  uint64_t loop_bound = 3;
  unsigned call_depth = 8;
  unsigned solver_bits = 24;
  std::string external_solver;
};

void add_shared(CLI::App *cmd, Shared &s) {
  cmd->add_option("--out", s.out_dir, "output directory");
  cmd->add_option("--rules", s.rules_dir, "vulnerability rule directory");
  cmd->add_option("--seed", s.seed, "seed recorded in reports");
  cmd->add_option("--loop-bound", s.loop_bound,
                  "default bound for loops without a constant trip count");
  cmd->add_option("--call-depth", s.call_depth, "symbolic call depth");
  cmd->add_option("--solver-bits", s.solver_bits,
                  "enumeration budget in effective bits");
  cmd->add_option("--external-solver", s.external_solver,
                  "external SMT solver command for escalated queries");
}

void apply_env(Shared &s) {
  if (s.external_solver.empty()) {
    if (const char *env = std::getenv("STASE_EXTERNAL_SOLVER"))
      s.external_solver = env;
  }
}

int fail(const char *stage, char *error) {
  std::fprintf(stderr, "stase %s: %s\n", stage, error ? error : "error");
  stase_string_free(error);
  return 2;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"STASE: rule-based static vulnerability detection with guided "
               "symbolic execution"};
  app.require_subcommand(1);

  Shared s;

  // facts
  std::string mir_path, cfg_path, findings_path, facts_dir, vd_path, ech_path;
  std::string theta_path, peh_path, only;
  bool fail_on_confirmed = false, list_only = false, quiet = false;

  CLI::App *facts = app.add_subcommand("facts", "extract fact relations");
  facts->add_option("mir", mir_path, "module file")->required();
  add_shared(facts, s);

  CLI::App *rules_cmd =
      app.add_subcommand("rules", "evaluate vulnerability rules");
  rules_cmd->add_option("mir", mir_path, "module file")->required();
  rules_cmd->add_option("--config", cfg_path, "analysis config")->required();
  rules_cmd->add_option("--facts-dir", facts_dir,
                        "use previously dumped facts instead of extracting");
  add_shared(rules_cmd, s);

  CLI::App *slice = app.add_subcommand(
      "slice", "slice findings into vulnerability descriptions");
  slice->add_option("mir", mir_path, "module file")->required();
  slice->add_option("--config", cfg_path, "analysis config")->required();
  slice->add_option("--findings", findings_path, "findings.tsv")->required();
  add_shared(slice, s);

  CLI::App *harness = app.add_subcommand(
      "harness", "instrument a module for one vulnerability description");
  harness->add_option("vd", vd_path, "vulnerability description file")
      ->required();
  harness->add_option("--mir", mir_path, "module file")->required();
  harness->add_option("--ech", ech_path, "environment configuration");
  add_shared(harness, s);

  CLI::App *symexec =
      app.add_subcommand("symexec", "explore an instrumented module");
  symexec->add_option("theta", theta_path, "instrumented module")->required();
  symexec->add_option("--peh", peh_path, "path exploration harness manifest")
      ->required();
  add_shared(symexec, s);

  CLI::App *pipe = app.add_subcommand("pipeline", "run every stage");
  pipe->add_option("mir", mir_path, "module file")->required();
  pipe->add_option("--config", cfg_path, "analysis config")->required();
  pipe->add_option("--ech", ech_path, "environment configuration");
  pipe->add_flag("--fail-on-confirmed", fail_on_confirmed,
                 "exit nonzero when a finding is confirmed");
  pipe->add_flag("--quiet", quiet, "suppress the report on stdout");
  add_shared(pipe, s);

  std::string corpus_dir = "corpus";
  CLI::App *corpus = app.add_subcommand("corpus", "run the bundled corpus");
  corpus->add_option("--dir", corpus_dir, "corpus directory");
  corpus->add_flag("--list", list_only, "list programs and ground truth");
  corpus->add_option("--only", only, "run a single program");
  add_shared(corpus, s);
  // corpus writes artifacts only when asked
  bool corpus_out_given = false;
  corpus->callback([&] { corpus_out_given = corpus->count("--out") > 0; });

  CLI11_PARSE(app, argc, argv);
  apply_env(s);

  char *error = nullptr;
  if (facts->parsed()) {
    if (stase_stage_facts(mir_path.c_str(), s.out_dir.c_str(), &error) !=
        STASE_OK)
      return fail("facts", error);
    std::printf("facts written to %s/facts\n", s.out_dir.c_str());
    return 0;
  }
  if (rules_cmd->parsed()) {
    if (stase_stage_rules(mir_path.c_str(), cfg_path.c_str(),
                          s.rules_dir.c_str(),
                          facts_dir.empty() ? nullptr : facts_dir.c_str(),
                          s.out_dir.c_str(), &error) != STASE_OK)
      return fail("rules", error);
    std::printf("findings written to %s/findings.tsv\n", s.out_dir.c_str());
    return 0;
  }
  if (slice->parsed()) {
    if (stase_stage_slice(mir_path.c_str(), cfg_path.c_str(),
                          findings_path.c_str(), s.out_dir.c_str(),
                          &error) != STASE_OK)
      return fail("slice", error);
    std::printf("vulnerability descriptions written to %s/vd\n",
                s.out_dir.c_str());
    return 0;
  }
  if (harness->parsed()) {
    if (stase_stage_harness(mir_path.c_str(), vd_path.c_str(),
                            ech_path.empty() ? nullptr : ech_path.c_str(),
                            s.out_dir.c_str(), s.loop_bound, s.call_depth,
                            &error) != STASE_OK)
      return fail("harness", error);
    std::printf("instrumented module written to %s/harness\n",
                s.out_dir.c_str());
    return 0;
  }
  if (symexec->parsed()) {
    char *status = nullptr;
    if (stase_stage_symexec(theta_path.c_str(), peh_path.c_str(),
                            s.out_dir.c_str(), s.solver_bits,
                            s.external_solver.empty()
                                ? nullptr
                                : s.external_solver.c_str(),
                            &status, &error) != STASE_OK)
      return fail("symexec", error);
    std::printf("symexec: %s\n", status ? status : "?");
    stase_string_free(status);
    return 0;
  }
  if (pipe->parsed()) {
    stase_pipeline_options opts;
    stase_pipeline_options_init(&opts);
    opts.mir_path = mir_path.c_str();
    opts.analysis_cfg = cfg_path.c_str();
    opts.ech_cfg = ech_path.empty() ? nullptr : ech_path.c_str();
    opts.rules_dir = s.rules_dir.c_str();
    opts.out_dir = s.out_dir.c_str();
    opts.loop_bound = s.loop_bound;
    opts.call_depth = s.call_depth;
    opts.solver_bits = s.solver_bits;
    opts.external_solver =
        s.external_solver.empty() ? nullptr : s.external_solver.c_str();
    opts.seed = s.seed;
    stase_report *report = nullptr;
    if (stase_pipeline_run(&opts, &report, &error) != STASE_OK)
      return fail("pipeline", error);
    if (!quiet) {
      char *text = stase_report_text(report);
      std::fputs(text, stdout);
      stase_string_free(text);
    }
    int rc = 0;
    if (fail_on_confirmed && stase_report_confirmed(report) > 0)
      rc = 3;
    stase_report_free(report);
    return rc;
  }
  if (corpus->parsed()) {
    if (list_only) {
      char *listing = nullptr;
      if (stase_corpus_list(corpus_dir.c_str(), &listing, &error) != STASE_OK)
        return fail("corpus", error);
      std::fputs(listing, stdout);
      stase_string_free(listing);
      return 0;
    }
    char *report = nullptr;
    int all_pass = 0;
    if (stase_corpus_run(corpus_dir.c_str(), s.rules_dir.c_str(),
                         corpus_out_given ? s.out_dir.c_str() : nullptr,
                         only.empty() ? nullptr : only.c_str(), &report,
                         &all_pass, &error) != STASE_OK)
      return fail("corpus", error);
    std::fputs(report, stdout);
    stase_string_free(report);
    return all_pass ? 0 : 4;
  }
  return 1;
}
