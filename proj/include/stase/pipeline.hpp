//===-- pipeline.hpp - Stage orchestration, artifacts, reports ------------===//
//
// The pipeline runs facts -> rules -> slice/describe -> harness -> symexec
// and writes every interchange artifact (TSV fact files, findings table,
// .vd descriptions, instrumented theta modules + peh manifests, signature
// files, report). Each stage is also exposed as a file-to-file function so
// the CLI subcommands compose to exactly the same bytes.
//
//===----------------------------------------------------------------------===//

#ifndef STASE_PIPELINE_HPP
#define STASE_PIPELINE_HPP

#include "stase/symexec.hpp"
#include "stase/vulnrules.hpp"

#include <optional>
#include <string>
#include <vector>

namespace stase::pipeline {

struct Options {
  std::string mir_path;
  std::string analysis_cfg_path;
  std::string ech_cfg_path; // empty = no environment rewrites
  std::string rules_dir = "rules";
  std::string out_dir = "out";
  uint64_t loop_bound = 3;
  unsigned call_depth = 8;
  unsigned solver_bits = 24;
  std::string external_solver;
  uint64_t seed = 0; // accepted for interface stability; recorded in reports
  bool fail_on_confirmed = false;
  bool write_artifacts = true;
};

struct FindingReport {
  std::string id;
  rules::CandidateFinding finding;
  std::string static_status = "candidate"; // or dropped(<reason>)
  bool ran_symexec = false;
  sym::SymexecStatus dyn_status = sym::SymexecStatus::Dismissed;
  size_t violating_paths = 0;
  size_t covered_paths = 0;
  double seconds = 0;
  std::string vd_file, theta_file, peh_file, sig_json_file, sig_txt_file;
  std::string note;
};

struct CategoryCounts {
  size_t candidates = 0; // passed to symexec
  size_t confirmed = 0;
  size_t dismissed = 0;
  size_t unconfirmed = 0;
};

struct PipelineReport {
  std::string module_name;
  std::vector<FindingReport> rows;
  size_t raw_findings = 0;
  size_t candidates = 0;
  size_t confirmed = 0;
  size_t dismissed = 0;
  size_t unconfirmed = 0;
  size_t dropped = 0;
  std::map<config::VulnCategory, CategoryCounts> per_category;
  double total_seconds = 0;
  uint64_t seed = 0;
  std::string error;
  bool ok() const { return error.empty(); }

  std::string text() const;
  std::string json() const;
};

PipelineReport run_pipeline(const Options &opts);

// File-to-file stages; empty return = success, otherwise the error text.
std::string stage_facts(const std::string &mir_path,
                        const std::string &out_dir);
std::string stage_rules(const std::string &mir_path,
                        const std::string &cfg_path,
                        const std::string &rules_dir,
                        const std::string &facts_dir, // "" = compute
                        const std::string &out_dir);
std::string stage_slice(const std::string &mir_path,
                        const std::string &cfg_path,
                        const std::string &findings_tsv,
                        const std::string &out_dir);
std::string stage_harness(const std::string &mir_path,
                          const std::string &vd_path,
                          const std::string &ech_path, // "" = none
                          const std::string &out_dir, uint64_t loop_bound,
                          unsigned call_depth);
std::string stage_symexec(const std::string &theta_path,
                          const std::string &peh_path,
                          const std::string &out_dir, unsigned solver_bits,
                          const std::string &external_solver,
                          std::string *status_out = nullptr);

// findings.tsv (de)serialization shared by rules/slice stages.
std::string findings_to_tsv(const std::vector<rules::CandidateFinding> &fs);
bool findings_from_tsv(const std::string &text,
                       std::vector<rules::CandidateFinding> *out,
                       std::string *error);

// Canonical per-finding id: NNN_category over the deduplicated list.
std::vector<std::pair<std::string, rules::CandidateFinding>>
assign_ids(const std::vector<rules::CandidateFinding> &findings);

} // namespace stase::pipeline

#endif // STASE_PIPELINE_HPP
