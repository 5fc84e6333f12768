//===-- corpus.cpp - Corpus manifest and ground-truth evaluation ----------===//

#include "stase/corpus.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

namespace stase::corpus {

using config::VulnCategory;

ManifestResult load_manifest(const std::string &corpus_dir) {
  ManifestResult res;
  std::string path = corpus_dir + "/manifest.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    res.error = "cannot open " + path;
    return res;
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception &e) {
    res.error = std::string("manifest parse error: ") + e.what();
    return res;
  }
  Manifest m;
  for (const auto &pj : j.at("programs")) {
    ProgramSpec p;
    p.name = pj.at("name").get<std::string>();
    p.mir = pj.at("mir").get<std::string>();
    p.analysis = pj.at("analysis").get<std::string>();
    if (pj.contains("ech") && !pj.at("ech").is_null())
      p.ech = pj.at("ech").get<std::string>();
    if (pj.contains("sweep_bits"))
      p.sweep_bits = pj.at("sweep_bits").get<uint64_t>();
    if (pj.contains("solver_bits"))
      p.solver_bits = pj.at("solver_bits").get<unsigned>();
    auto read_bugs = [&](const char *key, std::vector<SeededBug> *out) {
      if (!pj.contains(key))
        return true;
      for (const auto &bj : pj.at(key)) {
        SeededBug b;
        auto cat = config::category_from_name(
            bj.at("category").get<std::string>());
        if (!cat)
          return false;
        b.category = *cat;
        b.line = bj.at("line").get<uint32_t>();
        out->push_back(b);
      }
      return true;
    };
    if (!read_bugs("seeded", &p.seeded) || !read_bugs("decoys", &p.decoys)) {
      res.error = "manifest: unknown category in program " + p.name;
      return res;
    }
    m.programs.push_back(std::move(p));
  }
  res.manifest = std::move(m);
  return res;
}

CorpusOutcome run_corpus(const RunCorpusOptions &opts) {
  CorpusOutcome out;
  auto mr = load_manifest(opts.corpus_dir);
  if (!mr.ok()) {
    out.error = mr.error;
    return out;
  }
  out.all_pass = true;
  for (const auto &p : mr.manifest->programs) {
    if (!opts.only.empty() && p.name != opts.only)
      continue;
    ProgramOutcome po;
    po.name = p.name;
    pipeline::Options popts;
    popts.mir_path = opts.corpus_dir + "/" + p.mir;
    popts.analysis_cfg_path = opts.corpus_dir + "/" + p.analysis;
    if (!p.ech.empty())
      popts.ech_cfg_path = opts.corpus_dir + "/" + p.ech;
    popts.rules_dir = opts.rules_dir;
    popts.solver_bits = p.solver_bits;
    popts.write_artifacts = !opts.out_dir.empty();
    if (popts.write_artifacts)
      popts.out_dir = opts.out_dir + "/" + p.name;
    po.report = pipeline::run_pipeline(popts);
    if (!po.report.ok()) {
      po.pass = false;
      po.mismatches.push_back("pipeline error: " + po.report.error);
      out.all_pass = false;
      out.programs.push_back(std::move(po));
      continue;
    }
    // confirmed set must equal the seeded set; decoys must be dismissed
    std::multiset<std::pair<std::string, uint32_t>> confirmed, expected;
    for (const auto &row : po.report.rows) {
      if (!row.ran_symexec)
        continue;
      if (row.dyn_status == sym::SymexecStatus::Confirmed)
        confirmed.insert({config::category_name(row.finding.category),
                          row.finding.line});
    }
    for (const auto &b : p.seeded)
      expected.insert({config::category_name(b.category), b.line});
    if (confirmed != expected) {
      po.mismatches.push_back("confirmed set differs from seeded ground truth");
      for (const auto &[c, l] : confirmed)
        if (!expected.count({c, l}))
          po.mismatches.push_back("  unexpected confirmation: " + c + " at line " +
                                  std::to_string(l));
      for (const auto &[c, l] : expected)
        if (!confirmed.count({c, l}))
          po.mismatches.push_back("  missed seeded bug: " + c + " at line " +
                                  std::to_string(l));
    }
    for (const auto &d : p.decoys) {
      bool seen = false, dismissed = false;
      for (const auto &row : po.report.rows) {
        if (row.finding.category != d.category || row.finding.line != d.line)
          continue;
        seen = true;
        dismissed = row.ran_symexec &&
                    row.dyn_status == sym::SymexecStatus::Dismissed;
      }
      if (!seen)
        po.mismatches.push_back(
            "decoy not even reported statically: " +
            std::string(config::category_name(d.category)) + " at line " +
            std::to_string(d.line));
      else if (!dismissed)
        po.mismatches.push_back(
            "decoy not dismissed: " +
            std::string(config::category_name(d.category)) + " at line " +
            std::to_string(d.line));
      else
        ++out.dismissed_decoys;
    }
    out.seeded_total += p.seeded.size();
    out.decoys_total += p.decoys.size();
    out.confirmed_total += confirmed.size();
    po.pass = po.mismatches.empty();
    if (!po.pass)
      out.all_pass = false;
    out.programs.push_back(std::move(po));
  }
  if (out.programs.empty()) {
    out.error = opts.only.empty() ? "empty corpus" : ("no program named " + opts.only);
    out.all_pass = false;
  }
  return out;
}

std::string CorpusOutcome::text() const {
  std::ostringstream os;
  os << "== corpus run ==\n";
  // per-category aggregation across programs
  std::map<std::string, std::array<size_t, 4>> cats; // cand, conf, dis, unc
  for (const auto &po : programs) {
    for (const auto &[cat, counts] : po.report.per_category) {
      auto &c = cats[config::category_name(cat)];
      c[0] += counts.candidates;
      c[1] += counts.confirmed;
      c[2] += counts.dismissed;
      c[3] += counts.unconfirmed;
    }
  }
  for (const auto &po : programs) {
    os << (po.pass ? "[pass] " : "[FAIL] ") << po.name;
    os << " (candidates " << po.report.candidates << ", confirmed "
       << po.report.confirmed << ", dismissed " << po.report.dismissed
       << ", unconfirmed " << po.report.unconfirmed << ")\n";
    for (const auto &msg : po.mismatches)
      os << "       " << msg << "\n";
  }
  os << "category table (all programs):\n";
  os << "  category              candidates confirmed dismissed(FP) "
        "unconfirmed FP%\n";
  for (const auto &[name, c] : cats) {
    std::string pad = name;
    pad.resize(22, ' ');
    std::ostringstream fp;
    fp.setf(std::ios::fixed);
    fp.precision(2);
    if (c[0])
      fp << (100.0 * static_cast<double>(c[2]) / static_cast<double>(c[0]))
         << "%";
    else
      fp << "-";
    os << "  " << pad << c[0] << "          " << c[1] << "         " << c[2]
       << "             " << c[3] << "           " << fp.str() << "\n";
  }
  os << "seeded bugs: " << seeded_total << ", confirmed: " << confirmed_total
     << "; decoys: " << decoys_total << ", dismissed: " << dismissed_decoys
     << "\n";
  os << (all_pass ? "RESULT: PASS\n" : "RESULT: FAIL\n");
  return os.str();
}

std::string list_programs(const Manifest &m) {
  std::ostringstream os;
  for (const auto &p : m.programs) {
    os << p.name << " (" << p.mir << ")";
    os << " seeded:";
    for (const auto &b : p.seeded)
      os << " " << config::category_name(b.category) << "@" << b.line;
    if (!p.decoys.empty()) {
      os << " decoys:";
      for (const auto &b : p.decoys)
        os << " " << config::category_name(b.category) << "@" << b.line;
    }
    if (p.sweep_bits)
      os << " sweep_bits=" << p.sweep_bits;
    os << "\n";
  }
  return os.str();
}

} // namespace stase::corpus
