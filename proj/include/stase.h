/*===-- stase.h - C API for the STASE analysis library ---------------------===
 *
 * Opaque-handle C bindings over the analysis core: module parsing and
 * printing, the file-to-file pipeline stages, the end-to-end pipeline with a
 * queryable report, and the corpus runner. Every char* returned through an
 * out-parameter or return value is heap-allocated and must be released with
 * stase_string_free. Handles are released with their _free function.
 *
 *===----------------------------------------------------------------------===*/

#ifndef STASE_H
#define STASE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  STASE_OK = 0,
  STASE_ERR_PARSE = 1,
  STASE_ERR_VALIDATE = 2,
  STASE_ERR_CONFIG = 3,
  STASE_ERR_IO = 4,
  STASE_ERR_ANALYSIS = 5,
  STASE_ERR_USAGE = 6
} stase_status;

typedef struct stase_module stase_module;
typedef struct stase_report stase_report;

const char *stase_version(void);
void stase_string_free(char *s);

/* Modules ----------------------------------------------------------------*/

stase_status stase_module_parse_file(const char *path, stase_module **out,
                                     char **error);
stase_status stase_module_parse_text(const char *text, const char *name,
                                     stase_module **out, char **error);
void stase_module_free(stase_module *m);
/* Diagnostics joined by newlines; empty string when the module is clean. */
char *stase_module_validate(const stase_module *m);
char *stase_module_print(const stase_module *m);
char *stase_module_name(const stase_module *m);

/* Pipeline stages (file to file) ------------------------------------------*/

stase_status stase_stage_facts(const char *mir_path, const char *out_dir,
                               char **error);
stase_status stase_stage_rules(const char *mir_path, const char *cfg_path,
                               const char *rules_dir,
                               const char *facts_dir_or_null,
                               const char *out_dir, char **error);
stase_status stase_stage_slice(const char *mir_path, const char *cfg_path,
                               const char *findings_tsv, const char *out_dir,
                               char **error);
stase_status stase_stage_harness(const char *mir_path, const char *vd_path,
                                 const char *ech_path_or_null,
                                 const char *out_dir, uint64_t loop_bound,
                                 unsigned call_depth, char **error);
stase_status stase_stage_symexec(const char *theta_path, const char *peh_path,
                                 const char *out_dir, unsigned solver_bits,
                                 const char *external_solver_or_null,
                                 char **status_out, char **error);

/* Full pipeline -------------------------------------------------------------*/

typedef struct stase_pipeline_options {
  const char *mir_path;
  const char *analysis_cfg;
  const char *ech_cfg;   /* NULL = none */
  const char *rules_dir; /* NULL = "rules" */
  const char *out_dir;   /* NULL = "out" */
  uint64_t loop_bound;
  unsigned call_depth;
  unsigned solver_bits;
  const char *external_solver; /* NULL = builtin only */
  uint64_t seed;
  int write_artifacts;
} stase_pipeline_options;

void stase_pipeline_options_init(stase_pipeline_options *opts);

stase_status stase_pipeline_run(const stase_pipeline_options *opts,
                                stase_report **out, char **error);
void stase_report_free(stase_report *r);

size_t stase_report_candidates(const stase_report *r);
size_t stase_report_confirmed(const stase_report *r);
size_t stase_report_dismissed(const stase_report *r);
size_t stase_report_unconfirmed(const stase_report *r);
char *stase_report_text(const stase_report *r);
char *stase_report_json(const stase_report *r);
size_t stase_report_row_count(const stase_report *r);
/* One row as "id<TAB>category<TAB>entry<TAB>instr<TAB>file:line<TAB>status". */
char *stase_report_row(const stase_report *r, size_t index);

/* Corpus --------------------------------------------------------------------*/

stase_status stase_corpus_list(const char *corpus_dir, char **listing,
                               char **error);
stase_status stase_corpus_run(const char *corpus_dir, const char *rules_dir,
                              const char *out_dir_or_null,
                              const char *only_or_null, char **report,
                              int *all_pass, char **error);

#ifdef __cplusplus
}
#endif

#endif /* STASE_H */
