//===-- capi.cpp - extern-C surface over the analysis core ----------------===//

#include "stase.h"

#include "stase/corpus.hpp"
#include "stase/pipeline.hpp"

#include <cstring>
#include <string>

namespace {

char *dup_string(const std::string &s) {
  char *out = static_cast<char *>(malloc(s.size() + 1));
  if (out)
    memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_error(char **error, const std::string &msg) {
  if (error)
    *error = dup_string(msg);
}

} // namespace

struct stase_module {
  stase::mir::Module module;
};

struct stase_report {
  stase::pipeline::PipelineReport report;
};

extern "C" {

const char *stase_version(void) { return "stase 1.0.0"; }

void stase_string_free(char *s) { free(s); }

stase_status stase_module_parse_file(const char *path, stase_module **out,
                                     char **error) {
  if (!path || !out)
    return STASE_ERR_USAGE;
  *out = nullptr;
  auto r = stase::mir::parse_module_file(path);
  if (!r.ok()) {
    std::string msg;
    for (const auto &d : r.diags) {
      if (!msg.empty())
        msg += "\n";
      msg += d.render();
    }
    set_error(error, msg);
    return STASE_ERR_PARSE;
  }
  *out = new stase_module{std::move(*r.module)};
  return STASE_OK;
}

stase_status stase_module_parse_text(const char *text, const char *name,
                                     stase_module **out, char **error) {
  if (!text || !out)
    return STASE_ERR_USAGE;
  *out = nullptr;
  auto r = stase::mir::parse_module(text, name ? name : "<memory>");
  if (!r.ok()) {
    std::string msg;
    for (const auto &d : r.diags) {
      if (!msg.empty())
        msg += "\n";
      msg += d.render();
    }
    set_error(error, msg);
    return STASE_ERR_PARSE;
  }
  *out = new stase_module{std::move(*r.module)};
  return STASE_OK;
}

void stase_module_free(stase_module *m) { delete m; }

char *stase_module_validate(const stase_module *m) {
  if (!m)
    return dup_string("");
  auto diags = stase::mir::validate_module(m->module);
  std::string msg;
  for (const auto &d : diags) {
    if (!msg.empty())
      msg += "\n";
    msg += d.render();
  }
  return dup_string(msg);
}

char *stase_module_print(const stase_module *m) {
  return dup_string(m ? stase::mir::pretty_print(m->module) : "");
}

char *stase_module_name(const stase_module *m) {
  return dup_string(m ? m->module.name : "");
}

stase_status stase_stage_facts(const char *mir_path, const char *out_dir,
                               char **error) {
  if (!mir_path || !out_dir)
    return STASE_ERR_USAGE;
  std::string err = stase::pipeline::stage_facts(mir_path, out_dir);
  if (!err.empty()) {
    set_error(error, err);
    return STASE_ERR_ANALYSIS;
  }
  return STASE_OK;
}

stase_status stase_stage_rules(const char *mir_path, const char *cfg_path,
                               const char *rules_dir,
                               const char *facts_dir_or_null,
                               const char *out_dir, char **error) {
  if (!mir_path || !cfg_path || !rules_dir || !out_dir)
    return STASE_ERR_USAGE;
  std::string err = stase::pipeline::stage_rules(
      mir_path, cfg_path, rules_dir,
      facts_dir_or_null ? facts_dir_or_null : "", out_dir);
  if (!err.empty()) {
    set_error(error, err);
    return STASE_ERR_ANALYSIS;
  }
  return STASE_OK;
}

stase_status stase_stage_slice(const char *mir_path, const char *cfg_path,
                               const char *findings_tsv, const char *out_dir,
                               char **error) {
  if (!mir_path || !cfg_path || !findings_tsv || !out_dir)
    return STASE_ERR_USAGE;
  std::string err =
      stase::pipeline::stage_slice(mir_path, cfg_path, findings_tsv, out_dir);
  if (!err.empty()) {
    set_error(error, err);
    return STASE_ERR_ANALYSIS;
  }
  return STASE_OK;
}

stase_status stase_stage_harness(const char *mir_path, const char *vd_path,
                                 const char *ech_path_or_null,
                                 const char *out_dir, uint64_t loop_bound,
                                 unsigned call_depth, char **error) {
  if (!mir_path || !vd_path || !out_dir)
    return STASE_ERR_USAGE;
  std::string err = stase::pipeline::stage_harness(
      mir_path, vd_path, ech_path_or_null ? ech_path_or_null : "", out_dir,
      loop_bound, call_depth);
  if (!err.empty()) {
    set_error(error, err);
    return STASE_ERR_ANALYSIS;
  }
  return STASE_OK;
}

stase_status stase_stage_symexec(const char *theta_path, const char *peh_path,
                                 const char *out_dir, unsigned solver_bits,
                                 const char *external_solver_or_null,
                                 char **status_out, char **error) {
  if (!theta_path || !peh_path || !out_dir)
    return STASE_ERR_USAGE;
  std::string status;
  std::string err = stase::pipeline::stage_symexec(
      theta_path, peh_path, out_dir, solver_bits,
      external_solver_or_null ? external_solver_or_null : "", &status);
  if (!err.empty()) {
    set_error(error, err);
    return STASE_ERR_ANALYSIS;
  }
  if (status_out)
    *status_out = dup_string(status);
  return STASE_OK;
}

void stase_pipeline_options_init(stase_pipeline_options *opts) {
  if (!opts)
    return;
  opts->mir_path = nullptr;
  opts->analysis_cfg = nullptr;
  opts->ech_cfg = nullptr;
  opts->rules_dir = nullptr;
  opts->out_dir = nullptr;
  opts->loop_bound = 3;
  opts->call_depth = 8;
  opts->solver_bits = 24;
  opts->external_solver = nullptr;
  opts->seed = 0;
  opts->write_artifacts = 1;
}

stase_status stase_pipeline_run(const stase_pipeline_options *opts,
                                stase_report **out, char **error) {
  if (!opts || !opts->mir_path || !opts->analysis_cfg || !out)
    return STASE_ERR_USAGE;
  *out = nullptr;
  stase::pipeline::Options popts;
  popts.mir_path = opts->mir_path;
  popts.analysis_cfg_path = opts->analysis_cfg;
  popts.ech_cfg_path = opts->ech_cfg ? opts->ech_cfg : "";
  popts.rules_dir = opts->rules_dir ? opts->rules_dir : "rules";
  popts.out_dir = opts->out_dir ? opts->out_dir : "out";
  popts.loop_bound = opts->loop_bound;
  popts.call_depth = opts->call_depth;
  popts.solver_bits = opts->solver_bits;
  popts.external_solver = opts->external_solver ? opts->external_solver : "";
  popts.seed = opts->seed;
  popts.write_artifacts = opts->write_artifacts != 0;
  auto rep = stase::pipeline::run_pipeline(popts);
  if (!rep.ok()) {
    set_error(error, rep.error);
    return STASE_ERR_ANALYSIS;
  }
  *out = new stase_report{std::move(rep)};
  return STASE_OK;
}

void stase_report_free(stase_report *r) { delete r; }

size_t stase_report_candidates(const stase_report *r) {
  return r ? r->report.candidates : 0;
}
size_t stase_report_confirmed(const stase_report *r) {
  return r ? r->report.confirmed : 0;
}
size_t stase_report_dismissed(const stase_report *r) {
  return r ? r->report.dismissed : 0;
}
size_t stase_report_unconfirmed(const stase_report *r) {
  return r ? r->report.unconfirmed : 0;
}
char *stase_report_text(const stase_report *r) {
  return dup_string(r ? r->report.text() : "");
}
char *stase_report_json(const stase_report *r) {
  return dup_string(r ? r->report.json() : "");
}
size_t stase_report_row_count(const stase_report *r) {
  return r ? r->report.rows.size() : 0;
}

char *stase_report_row(const stase_report *r, size_t index) {
  if (!r || index >= r->report.rows.size())
    return dup_string("");
  const auto &row = r->report.rows[index];
  std::string status =
      row.ran_symexec ? stase::sym::symexec_status_name(row.dyn_status)
                      : row.static_status;
  std::string line = row.id + "\t" +
                     stase::config::category_name(row.finding.category) +
                     "\t" + row.finding.entry + "\t" + row.finding.instr +
                     "\t" + row.finding.file + ":" +
                     std::to_string(row.finding.line) + "\t" + status;
  return dup_string(line);
}

stase_status stase_corpus_list(const char *corpus_dir, char **listing,
                               char **error) {
  if (!corpus_dir || !listing)
    return STASE_ERR_USAGE;
  auto mr = stase::corpus::load_manifest(corpus_dir);
  if (!mr.ok()) {
    set_error(error, mr.error);
    return STASE_ERR_IO;
  }
  *listing = dup_string(stase::corpus::list_programs(*mr.manifest));
  return STASE_OK;
}

stase_status stase_corpus_run(const char *corpus_dir, const char *rules_dir,
                              const char *out_dir_or_null,
                              const char *only_or_null, char **report,
                              int *all_pass, char **error) {
  if (!corpus_dir || !rules_dir)
    return STASE_ERR_USAGE;
  stase::corpus::RunCorpusOptions opts;
  opts.corpus_dir = corpus_dir;
  opts.rules_dir = rules_dir;
  opts.out_dir = out_dir_or_null ? out_dir_or_null : "";
  opts.only = only_or_null ? only_or_null : "";
  auto outcome = stase::corpus::run_corpus(opts);
  if (!outcome.ok()) {
    set_error(error, outcome.error);
    return STASE_ERR_ANALYSIS;
  }
  if (report)
    *report = dup_string(outcome.text());
  if (all_pass)
    *all_pass = outcome.all_pass ? 1 : 0;
  return STASE_OK;
}

} // extern "C"
