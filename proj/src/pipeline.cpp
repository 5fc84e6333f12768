//===-- pipeline.cpp - End-to-end orchestration ---------------------------===//

#include "stase/pipeline.hpp"

#include "stase/facts.hpp"
#include "stase/harness.hpp"
#include "stase/points_to.hpp"
#include "stase/slicer.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace stase::pipeline {

using config::VulnCategory;
using rules::CandidateFinding;

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string &path, std::string *error) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (error)
      *error = "cannot open " + path;
    return "";
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool write_file(const std::string &path, const std::string &content,
                std::string *error) {
  fs::path p(path);
  std::error_code ec;
  fs::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    if (error)
      *error = "cannot write " + path;
    return false;
  }
  out << content;
  return true;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

std::string join_list(const std::vector<std::string> &v, char sep) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i)
      out += sep;
    out += v[i];
  }
  return out;
}

} // namespace

std::string findings_to_tsv(const std::vector<CandidateFinding> &fs_) {
  std::ostringstream os;
  for (const auto &f : fs_) {
    os << config::category_name(f.category) << '\t' << f.entry << '\t'
       << f.func << '\t' << f.instr << '\t' << f.file << '\t' << f.line
       << '\t' << f.taint_source << '\t' << join_list(f.taint_sinks, '|')
       << '\t' << f.dividend << '\n';
  }
  return os.str();
}

bool findings_from_tsv(const std::string &text,
                       std::vector<CandidateFinding> *out,
                       std::string *error) {
  out->clear();
  std::istringstream is(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::vector<std::string> cols;
    size_t start = 0;
    for (;;) {
      size_t tab = line.find('\t', start);
      cols.push_back(tab == std::string::npos
                         ? line.substr(start)
                         : line.substr(start, tab - start));
      if (tab == std::string::npos)
        break;
      start = tab + 1;
    }
    if (cols.size() != 9) {
      if (error)
        *error = "findings.tsv:" + std::to_string(lineno) +
                 ": expected 9 columns";
      return false;
    }
    CandidateFinding f;
    auto cat = config::category_from_name(cols[0]);
    if (!cat) {
      if (error)
        *error = "findings.tsv:" + std::to_string(lineno) +
                 ": unknown category " + cols[0];
      return false;
    }
    f.category = *cat;
    f.entry = cols[1];
    f.func = cols[2];
    f.instr = cols[3];
    f.file = cols[4];
    try {
      f.line = static_cast<uint32_t>(std::stoul(cols[5]));
    } catch (...) {
      if (error)
        *error = "findings.tsv:" + std::to_string(lineno) + ": bad line column";
      return false;
    }
    f.taint_source = cols[6];
    if (!cols[7].empty()) {
      std::istringstream ss(cols[7]);
      std::string item;
      while (std::getline(ss, item, '|'))
        f.taint_sinks.push_back(item);
    }
    f.dividend = cols[8];
    size_t colon = f.instr.rfind(':');
    if (colon != std::string::npos) {
      try {
        f.ordinal = std::stoull(f.instr.substr(colon + 1));
      } catch (...) {
      }
    }
    out->push_back(std::move(f));
  }
  return true;
}

std::vector<std::pair<std::string, CandidateFinding>>
assign_ids(const std::vector<CandidateFinding> &findings) {
  // dedupe by (category, instr, entry); sinks merge
  std::vector<CandidateFinding> unique;
  for (const auto &f : findings) {
    bool merged = false;
    for (auto &u : unique) {
      if (u.category == f.category && u.instr == f.instr &&
          u.entry == f.entry) {
        for (const auto &s : f.taint_sinks)
          if (std::find(u.taint_sinks.begin(), u.taint_sinks.end(), s) ==
              u.taint_sinks.end())
            u.taint_sinks.push_back(s);
        std::sort(u.taint_sinks.begin(), u.taint_sinks.end());
        merged = true;
        break;
      }
    }
    if (!merged)
      unique.push_back(f);
  }
  std::vector<std::pair<std::string, CandidateFinding>> out;
  for (size_t i = 0; i < unique.size(); ++i) {
    std::ostringstream id;
    id << std::setw(3) << std::setfill('0') << (i + 1) << "_"
       << config::category_name(unique[i].category);
    out.push_back({id.str(), unique[i]});
  }
  return out;
}

//===----------------------------------------------------------------------===//
// Stage functions
//===----------------------------------------------------------------------===//

namespace {

struct LoadedModule {
  mir::Module module;
  std::string error;
  bool ok() const { return error.empty(); }
};

LoadedModule load_module(const std::string &path) {
  LoadedModule lm;
  auto r = mir::parse_module_file(path);
  if (!r.ok()) {
    lm.error = "module " + path + " failed to parse/validate";
    for (const auto &d : r.diags)
      lm.error += "\n  " + d.render();
    return lm;
  }
  lm.module = std::move(*r.module);
  return lm;
}

std::string compute_facts_db(const mir::Module &m, datalog::Database *out) {
  auto fr = facts::extract_facts(m);
  if (!fr.ok())
    return fr.error;
  auto p = pts::run_pointer_analysis(m);
  *out = std::move(fr.db);
  (*out)[pts::kVarPointsToRelation] = p.export_tuples();
  return "";
}

} // namespace

std::string stage_facts(const std::string &mir_path,
                        const std::string &out_dir) {
  auto lm = load_module(mir_path);
  if (!lm.ok())
    return lm.error;
  datalog::Database db;
  std::string err = compute_facts_db(lm.module, &db);
  if (!err.empty())
    return err;
  std::string werr;
  if (!datalog::write_facts_dir(db, out_dir + "/facts", &werr))
    return werr;
  return "";
}

std::string stage_rules(const std::string &mir_path,
                        const std::string &cfg_path,
                        const std::string &rules_dir,
                        const std::string &facts_dir,
                        const std::string &out_dir) {
  auto lm = load_module(mir_path);
  if (!lm.ok())
    return lm.error;
  auto cr = config::load_analysis_config_file(cfg_path, lm.module);
  if (!cr.ok()) {
    std::string err = "analysis config failed";
    for (const auto &d : cr.diags)
      err += "\n  " + d.render();
    return err;
  }
  datalog::Database db;
  pts::PointsToResult p;
  if (facts_dir.empty()) {
    auto fr = facts::extract_facts(lm.module);
    if (!fr.ok())
      return fr.error;
    db = std::move(fr.db);
    p = pts::run_pointer_analysis(lm.module);
  } else {
    // read the dumped fact files; var_points_to rides along
    std::vector<datalog::Program> schema_parts{facts::fact_schema()};
    schema_parts.push_back(
        *datalog::parse_rules(pts::kVarPointsToDecl, "<vp>").program);
    auto merged = datalog::merge_programs(schema_parts);
    std::string rerr;
    if (!datalog::read_facts_dir(*merged.program, facts_dir, &db, &rerr))
      return rerr;
    // reconstruct the points-to export from the file
    for (const auto &t : db[pts::kVarPointsToRelation]) {
      pts::Cell c;
      c.site = std::get<std::string>(t[1]);
      std::string fieldstr = std::get<std::string>(t[2]);
      if (fieldstr.size() >= 2) {
        std::string inner = fieldstr.substr(1, fieldstr.size() - 2);
        std::istringstream ss(inner);
        std::string el;
        while (std::getline(ss, el, ','))
          c.path.push_back(el);
      }
      p.var_cells[std::get<std::string>(t[3])].insert(c);
    }
  }
  auto rr = rules::run_vuln_rules(lm.module, db, p, *cr.config, rules_dir);
  if (!rr.ok())
    return rr.error;
  std::string werr;
  if (!write_file(out_dir + "/findings.tsv", findings_to_tsv(rr.findings),
                  &werr))
    return werr;
  // findings, structured
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto &f : rr.findings) {
    nlohmann::ordered_json row;
    row["category"] = config::category_name(f.category);
    row["entry"] = f.entry;
    row["func"] = f.func;
    row["instr"] = f.instr;
    row["file"] = f.file;
    row["line"] = f.line;
    row["source"] = f.taint_source;
    row["sinks"] = f.taint_sinks;
    j.push_back(row);
  }
  if (!write_file(out_dir + "/findings.json", j.dump(2) + "\n", &werr))
    return werr;
  return "";
}

namespace {

// Core of the slice stage over in-memory findings; shared with run_pipeline.
struct SliceOutcome {
  std::vector<std::pair<std::string, CandidateFinding>> ids;
  std::map<std::string, slicer::VulnerabilityDescription> vds;
  std::map<std::string, std::string> drops; // id -> reason
  std::string error;
  bool ok() const { return error.empty(); }
};

SliceOutcome slice_findings(const mir::Module &m,
                            const config::AnalysisConfig &cfg,
                            const std::vector<CandidateFinding> &findings) {
  SliceOutcome out;
  auto p = pts::run_pointer_analysis(m);
  auto sdg = slicer::build_sdg(m, p);
  if (!sdg.ok()) {
    out.error = sdg.error;
    return out;
  }
  out.ids = assign_ids(findings);
  for (const auto &[id, finding] : out.ids) {
    auto kref = mir::find_instr_by_id(m, finding.instr);
    if (!kref) {
      out.drops[id] = "instruction not found: " + finding.instr;
      continue;
    }
    auto slice = slicer::two_pass_slice(*sdg.sdg, *kref);
    auto vdr = slicer::emit_vuln_description(m, cfg, finding, slice);
    if (!vdr.ok()) {
      if (!vdr.drop_reason.empty()) {
        out.drops[id] = vdr.drop_reason;
        continue;
      }
      out.error = vdr.error;
      return out;
    }
    vdr.vd->id = id;
    out.vds[id] = std::move(*vdr.vd);
  }
  return out;
}

} // namespace

std::string stage_slice(const std::string &mir_path,
                        const std::string &cfg_path,
                        const std::string &findings_tsv,
                        const std::string &out_dir) {
  auto lm = load_module(mir_path);
  if (!lm.ok())
    return lm.error;
  auto cr = config::load_analysis_config_file(cfg_path, lm.module);
  if (!cr.ok())
    return "analysis config failed to load";
  std::string err;
  std::string text = read_file(findings_tsv, &err);
  if (!err.empty())
    return err;
  std::vector<CandidateFinding> findings;
  if (!findings_from_tsv(text, &findings, &err))
    return err;
  auto outcome = slice_findings(lm.module, *cr.config, findings);
  if (!outcome.ok())
    return outcome.error;
  for (const auto &[id, vd] : outcome.vds)
    if (!write_file(out_dir + "/vd/" + id + ".vd", vd.serialize(), &err))
      return err;
  std::ostringstream drops;
  for (const auto &[id, reason] : outcome.drops)
    drops << id << "\t" << reason << "\n";
  if (!write_file(out_dir + "/vd/dropped.tsv", drops.str(), &err))
    return err;
  return "";
}

namespace {

struct HarnessOutcome {
  harness::PathExplorationHarness peh;
  mir::Module theta;
  std::string digest;
  std::string error;
  bool ok() const { return error.empty(); }
};

HarnessOutcome harness_vd(const mir::Module &m,
                          const slicer::VulnerabilityDescription &vd,
                          const config::EchConfig *ech, uint64_t loop_bound,
                          unsigned call_depth) {
  HarnessOutcome out;
  const mir::Module *base = &m;
  harness::EchApplyResult eched;
  if (ech) {
    eched = harness::build_ech(m, *ech);
    if (!eched.ok()) {
      out.error = eched.error;
      return out;
    }
    base = &*eched.module;
  }
  harness::PehOptions popts;
  popts.default_loop_bound = loop_bound;
  popts.call_depth = call_depth;
  auto pr = harness::generate_peh(vd, *base, popts);
  if (!pr.ok()) {
    out.error = pr.error;
    return out;
  }
  out.peh = std::move(*pr.peh);
  auto ir = harness::instrument(*base, vd, out.peh);
  if (!ir.ok()) {
    out.error = ir.error;
    return out;
  }
  out.theta = std::move(ir.segment->module);
  out.digest = ir.segment->digest;
  return out;
}

std::string theta_name(const std::string &id) {
  return "\xce\xb8_" + id + ".mir"; // UTF-8 theta
}

} // namespace

std::string stage_harness(const std::string &mir_path,
                          const std::string &vd_path,
                          const std::string &ech_path,
                          const std::string &out_dir, uint64_t loop_bound,
                          unsigned call_depth) {
  auto lm = load_module(mir_path);
  if (!lm.ok())
    return lm.error;
  auto vdr = slicer::parse_vuln_description_file(vd_path);
  if (!vdr.ok())
    return vdr.error;
  std::optional<config::EchConfig> ech;
  if (!ech_path.empty()) {
    auto er = config::load_ech_config_file(ech_path, lm.module);
    if (!er.ok()) {
      std::string err = "ech config failed";
      for (const auto &d : er.diags)
        err += "\n  " + d.render();
      return err;
    }
    ech = std::move(*er.config);
  }
  auto h = harness_vd(lm.module, *vdr.vd, ech ? &*ech : nullptr, loop_bound,
                      call_depth);
  if (!h.ok())
    return h.error;
  std::string err;
  std::string tfile = out_dir + "/harness/" + theta_name(vdr.vd->id);
  if (!write_file(tfile, mir::pretty_print(h.theta), &err))
    return err;
  if (!write_file(out_dir + "/harness/peh_" + vdr.vd->id,
                  h.peh.serialize() + "theta = " + theta_name(vdr.vd->id) +
                      "\ndigest = " + h.digest + "\n",
                  &err))
    return err;
  return "";
}

std::string stage_symexec(const std::string &theta_path,
                          const std::string &peh_path,
                          const std::string &out_dir, unsigned solver_bits,
                          const std::string &external_solver,
                          std::string *status_out) {
  auto lm = load_module(theta_path);
  if (!lm.ok())
    return lm.error;
  auto pr = harness::parse_peh_file(peh_path);
  if (!pr.ok())
    return pr.error;
  sym::Bounds bounds;
  bounds.call_depth = pr.peh->call_depth;
  bounds.default_loop_bound = pr.peh->default_loop_bound;
  sym::SolverOptions sopts;
  sopts.budget_bits = solver_bits;
  sopts.external_cmd = external_solver;
  sopts.smt_dir = out_dir + "/smt";
  auto ex = sym::explore(lm.module, pr.peh->driver, bounds, sopts);
  if (!ex.ok())
    return ex.error;
  auto status = sym::classify(ex);
  if (status_out)
    *status_out = sym::symexec_status_name(status);
  // reconstruct enough of the vd for signature rendering
  slicer::VulnerabilityDescription vd;
  vd.id = pr.peh->vd_id;
  vd.entry = pr.peh->entry;
  vd.file = pr.peh->assertion_file;
  vd.line = pr.peh->assertion_line;
  vd.assertion_text = pr.peh->assertion_text;
  vd.instr = "<" + lm.module.name + ".bc>:?:0";
  // locate K's function from the target assertion
  for (const auto &f : lm.module.functions)
    for (const auto &r : mir::all_instrs(f))
      if (r.instr->op == mir::Opcode::Assert && r.instr->target_assert)
        vd.instr = mir::instr_id(lm.module, f, r.ordinal);
  std::string err;
  auto sig = sym::build_signature(ex, lm.module, *pr.peh, vd,
                                  fs::path(theta_path).filename().string(),
                                  pr.peh->digest);
  if (sig) {
    if (!write_file(out_dir + "/sigs/sig_" + vd.id + ".json",
                    sym::signature_json(*sig), &err))
      return err;
    if (!write_file(out_dir + "/sigs/sig_" + vd.id + ".txt",
                    sym::signature_text(*sig), &err))
      return err;
  }
  if (!write_file(out_dir + "/sigs/status_" + vd.id + ".txt",
                  std::string(sym::symexec_status_name(status)) + "\n", &err))
    return err;
  return "";
}

//===----------------------------------------------------------------------===//
// Full pipeline
//===----------------------------------------------------------------------===//

PipelineReport run_pipeline(const Options &opts) {
  PipelineReport rep;
  rep.seed = opts.seed;
  auto t0 = std::chrono::steady_clock::now();
  auto lm = load_module(opts.mir_path);
  if (!lm.ok()) {
    rep.error = "[parse] " + lm.error;
    return rep;
  }
  rep.module_name = lm.module.name;
  auto cr = config::load_analysis_config_file(opts.analysis_cfg_path,
                                              lm.module);
  if (!cr.ok()) {
    rep.error = "[config] analysis config failed to load";
    for (const auto &d : cr.diags)
      rep.error += "\n  " + d.render();
    return rep;
  }
  std::optional<config::EchConfig> ech;
  if (!opts.ech_cfg_path.empty()) {
    auto er = config::load_ech_config_file(opts.ech_cfg_path, lm.module);
    if (!er.ok()) {
      rep.error = "[config] ech config failed to load";
      for (const auto &d : er.diags)
        rep.error += "\n  " + d.render();
      return rep;
    }
    ech = std::move(*er.config);
  }

  // facts + points-to
  auto fr = facts::extract_facts(lm.module);
  if (!fr.ok()) {
    rep.error = "[facts] " + fr.error;
    return rep;
  }
  auto p = pts::run_pointer_analysis(lm.module);
  std::string err;
  if (opts.write_artifacts) {
    datalog::Database dump = fr.db;
    dump[pts::kVarPointsToRelation] = p.export_tuples();
    if (!datalog::write_facts_dir(dump, opts.out_dir + "/facts", &err)) {
      rep.error = "[facts] " + err;
      return rep;
    }
  }

  // rules
  auto rr = rules::run_vuln_rules(lm.module, fr.db, p, *cr.config,
                                  opts.rules_dir);
  if (!rr.ok()) {
    rep.error = "[rules] " + rr.error;
    return rep;
  }
  rep.raw_findings = rr.findings.size();
  if (opts.write_artifacts) {
    if (!write_file(opts.out_dir + "/findings.tsv",
                    findings_to_tsv(rr.findings), &err)) {
      rep.error = "[rules] " + err;
      return rep;
    }
  }

  // slice + describe
  auto sliced = slice_findings(lm.module, *cr.config, rr.findings);
  if (!sliced.ok()) {
    rep.error = "[slice] " + sliced.error;
    return rep;
  }

  for (const auto &[id, finding] : sliced.ids) {
    FindingReport row;
    row.id = id;
    row.finding = finding;
    auto t_row = std::chrono::steady_clock::now();
    auto dropped = sliced.drops.find(id);
    if (dropped != sliced.drops.end()) {
      row.static_status = "dropped(" + dropped->second + ")";
      ++rep.dropped;
      rep.rows.push_back(std::move(row));
      continue;
    }
    const auto &vd = sliced.vds.at(id);
    if (opts.write_artifacts) {
      row.vd_file = opts.out_dir + "/vd/" + id + ".vd";
      if (!write_file(row.vd_file, vd.serialize(), &err)) {
        rep.error = "[slice] " + err;
        return rep;
      }
    }

    auto h = harness_vd(lm.module, vd, ech ? &*ech : nullptr, opts.loop_bound,
                        opts.call_depth);
    if (!h.ok()) {
      rep.error = "[harness] " + h.error;
      return rep;
    }
    if (opts.write_artifacts) {
      row.theta_file = opts.out_dir + "/harness/" + theta_name(id);
      if (!write_file(row.theta_file, mir::pretty_print(h.theta), &err)) {
        rep.error = "[harness] " + err;
        return rep;
      }
      row.peh_file = opts.out_dir + "/harness/peh_" + id;
      if (!write_file(row.peh_file,
                      h.peh.serialize() + "theta = " + theta_name(id) +
                          "\ndigest = " + h.digest + "\n",
                      &err)) {
        rep.error = "[harness] " + err;
        return rep;
      }
    }

    sym::Bounds bounds;
    bounds.call_depth = opts.call_depth;
    bounds.default_loop_bound = opts.loop_bound;
    sym::SolverOptions sopts;
    sopts.budget_bits = opts.solver_bits;
    sopts.external_cmd = opts.external_solver;
    if (opts.write_artifacts)
      sopts.smt_dir = opts.out_dir + "/smt";
    auto ex = sym::explore(h.theta, harness::kDriverName, bounds, sopts);
    if (!ex.ok()) {
      rep.error = "[symexec] " + ex.error;
      return rep;
    }
    row.ran_symexec = true;
    row.dyn_status = sym::classify(ex);
    row.violating_paths = ex.violating.size();
    row.covered_paths = ex.covered.size();
    if (!ex.notes.empty())
      row.note = ex.notes[0];

    auto sig = sym::build_signature(ex, h.theta, h.peh, vd, theta_name(id),
                                    h.digest);
    if (sig && opts.write_artifacts) {
      row.sig_json_file = opts.out_dir + "/sigs/sig_" + id + ".json";
      row.sig_txt_file = opts.out_dir + "/sigs/sig_" + id + ".txt";
      if (!write_file(row.sig_json_file, sym::signature_json(*sig), &err) ||
          !write_file(row.sig_txt_file, sym::signature_text(*sig), &err)) {
        rep.error = "[symexec] " + err;
        return rep;
      }
    }
    row.seconds = seconds_since(t_row);
    rep.rows.push_back(std::move(row));
  }

  // aggregate
  for (const auto &row : rep.rows) {
    if (!row.ran_symexec)
      continue;
    ++rep.candidates;
    auto &cc = rep.per_category[row.finding.category];
    ++cc.candidates;
    switch (row.dyn_status) {
    case sym::SymexecStatus::Confirmed:
      ++rep.confirmed;
      ++cc.confirmed;
      break;
    case sym::SymexecStatus::Dismissed:
      ++rep.dismissed;
      ++cc.dismissed;
      break;
    case sym::SymexecStatus::Unconfirmed:
      ++rep.unconfirmed;
      ++cc.unconfirmed;
      break;
    }
  }
  rep.total_seconds = seconds_since(t0);
  if (opts.write_artifacts) {
    write_file(opts.out_dir + "/report.txt", rep.text(), &err);
    write_file(opts.out_dir + "/report.json", rep.json(), &err);
  }
  return rep;
}

//===----------------------------------------------------------------------===//
// Report rendering
//===----------------------------------------------------------------------===//

std::string PipelineReport::text() const {
  std::ostringstream os;
  os << "== STASE pipeline report ==\n";
  os << "module: " << module_name << "\n";
  os << "findings (raw " << raw_findings << ", deduplicated "
     << rows.size() << "):\n";
  for (const auto &row : rows) {
    os << "  [" << row.id << "] " << config::category_name(row.finding.category)
       << " entry=@" << row.finding.entry << " K=" << row.finding.instr
       << " L=" << row.finding.file << ":" << row.finding.line;
    if (row.ran_symexec) {
      os << " static=candidate symexec=" << sym::symexec_status_name(row.dyn_status)
         << " violating=" << row.violating_paths;
      std::ostringstream secs;
      secs.setf(std::ios::fixed);
      secs.precision(2);
      secs << row.seconds;
      os << " time=" << secs.str() << "s";
    } else {
      os << " static=" << row.static_status;
    }
    if (!row.note.empty())
      os << " note=" << row.note;
    os << "\n";
  }
  os << "aggregate:\n";
  os << "  category              candidates confirmed dismissed unconfirmed "
        "FP%\n";
  auto fp_rate = [](const CategoryCounts &c) {
    if (c.candidates == 0)
      return std::string("-");
    std::ostringstream r;
    r.setf(std::ios::fixed);
    r.precision(2);
    r << (100.0 * static_cast<double>(c.dismissed) /
          static_cast<double>(c.candidates));
    return r.str() + "%";
  };
  for (const auto &[cat, counts] : per_category) {
    std::string name = config::category_name(cat);
    name.resize(22, ' ');
    os << "  " << name << counts.candidates << "          "
       << counts.confirmed << "         " << counts.dismissed << "         "
       << counts.unconfirmed << "           " << fp_rate(counts) << "\n";
  }
  CategoryCounts total{candidates, confirmed, dismissed, unconfirmed};
  std::string name = "total";
  name.resize(22, ' ');
  os << "  " << name << total.candidates << "          " << total.confirmed
     << "         " << total.dismissed << "         " << total.unconfirmed
     << "           " << fp_rate(total) << "\n";
  if (dropped)
    os << "dropped before symexec: " << dropped << "\n";
  std::ostringstream secs;
  secs.setf(std::ios::fixed);
  secs.precision(2);
  secs << total_seconds;
  os << "total time: " << secs.str() << "s\n";
  return os.str();
}

std::string PipelineReport::json() const {
  nlohmann::ordered_json j;
  j["module"] = module_name;
  j["raw_findings"] = raw_findings;
  j["candidates"] = candidates;
  j["confirmed"] = confirmed;
  j["dismissed"] = dismissed;
  j["unconfirmed"] = unconfirmed;
  j["dropped"] = dropped;
  j["seed"] = seed;
  nlohmann::ordered_json rows_j = nlohmann::ordered_json::array();
  for (const auto &row : rows) {
    nlohmann::ordered_json r;
    r["id"] = row.id;
    r["category"] = config::category_name(row.finding.category);
    r["entry"] = row.finding.entry;
    r["instr"] = row.finding.instr;
    r["file"] = row.finding.file;
    r["line"] = row.finding.line;
    r["static_status"] = row.static_status;
    if (row.ran_symexec) {
      r["symexec_status"] = sym::symexec_status_name(row.dyn_status);
      r["violating_paths"] = row.violating_paths;
      r["covered_paths"] = row.covered_paths;
      r["seconds"] = row.seconds;
    }
    if (!row.note.empty())
      r["note"] = row.note;
    rows_j.push_back(r);
  }
  j["findings"] = rows_j;
  nlohmann::ordered_json cats;
  for (const auto &[cat, counts] : per_category) {
    nlohmann::ordered_json c;
    c["candidates"] = counts.candidates;
    c["confirmed"] = counts.confirmed;
    c["dismissed"] = counts.dismissed;
    c["unconfirmed"] = counts.unconfirmed;
    cats[config::category_name(cat)] = c;
  }
  j["per_category"] = cats;
  j["total_seconds"] = total_seconds;
  return j.dump(2) + "\n";
}

} // namespace stase::pipeline
