//===-- corpus.hpp - Bundled program corpus and ground-truth runner -------===//
//
// corpus/manifest.json lists each bundled program with its configs and the
// seeded ground truth: bugs the pipeline must confirm and guarded decoys it
// must dismiss. The runner executes the full pipeline per program and
// compares the confirmed/dismissed sets against the manifest.
//
//===----------------------------------------------------------------------===//

#ifndef STASE_CORPUS_HPP
#define STASE_CORPUS_HPP

#include "stase/pipeline.hpp"

#include <optional>
#include <string>
#include <vector>

namespace stase::corpus {

struct SeededBug {
  config::VulnCategory category = config::VulnCategory::DivisionByZero;
  uint32_t line = 0;
};

struct ProgramSpec {
  std::string name;
  std::string mir;      // relative to the corpus dir
  std::string analysis; // analysis config
  std::string ech;      // optional ech config
  uint64_t sweep_bits = 0; // total symbolic bits; <=16 enables the sweeps
  unsigned solver_bits = 24;
  std::vector<SeededBug> seeded;
  std::vector<SeededBug> decoys;
};

struct Manifest {
  std::vector<ProgramSpec> programs;
};

struct ManifestResult {
  std::optional<Manifest> manifest;
  std::string error;
  bool ok() const { return manifest.has_value(); }
};

ManifestResult load_manifest(const std::string &corpus_dir);

struct ProgramOutcome {
  std::string name;
  bool pass = false;
  pipeline::PipelineReport report;
  std::vector<std::string> mismatches;
};

struct CorpusOutcome {
  std::vector<ProgramOutcome> programs;
  bool all_pass = false;
  size_t seeded_total = 0;
  size_t confirmed_total = 0;
  size_t decoys_total = 0;
  size_t dismissed_decoys = 0;
  std::string error;
  bool ok() const { return error.empty(); }

  std::string text() const; // Table-2 style per-category summary
};

struct RunCorpusOptions {
  std::string corpus_dir = "corpus";
  std::string rules_dir = "rules";
  std::string out_dir; // empty = no artifacts
  std::string only;    // run a single program by name
};

CorpusOutcome run_corpus(const RunCorpusOptions &opts);

std::string list_programs(const Manifest &m); // `corpus --list` rendering

} // namespace stase::corpus

#endif // STASE_CORPUS_HPP
