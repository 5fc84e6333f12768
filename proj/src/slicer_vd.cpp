//===-- slicer_vd.cpp - Vulnerability description emission ----------------===//

#include "stase/facts.hpp"
#include "stase/slicer.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace stase::slicer {

using config::InputSpec;
using rules::CandidateFinding;

namespace {

// Call-graph reachability by function name.
bool entry_reaches(const mir::Module &m, const std::string &entry,
                   const std::string &target) {
  std::set<std::string> seen{entry};
  std::vector<std::string> work{entry};
  while (!work.empty()) {
    std::string cur = work.back();
    work.pop_back();
    if (cur == target)
      return true;
    const mir::Function *f = m.find_function(cur);
    if (!f || f->is_external)
      continue;
    for (const auto &r : mir::all_instrs(*f))
      if (r.instr->op == mir::Opcode::Call)
        if (seen.insert(r.instr->callee).second)
          work.push_back(r.instr->callee);
  }
  return false;
}

std::string serialize_input_spec(const InputSpec &in) {
  std::ostringstream os;
  if (in.kind == InputSpec::Kind::Param)
    os << "param " << in.param_index;
  else
    os << "global " << in.global_name;
  if (in.deref)
    os << " deref";
  if (in.object)
    os << " object";
  if (in.symbolic_addr)
    os << " addr";
  if (in.width)
    os << " width=" << in.width;
  if (!in.fields.empty()) {
    os << " fields ";
    for (size_t i = 0; i < in.fields.size(); ++i) {
      if (i)
        os << ",";
      for (size_t j = 0; j < in.fields[i].path.size(); ++j) {
        if (j)
          os << ".";
        os << in.fields[i].path[j];
      }
      if (in.fields[i].width)
        os << ":" << in.fields[i].width;
    }
  }
  return os.str();
}

bool parse_input_spec_line(const std::string &entry, const std::string &text,
                           InputSpec *out) {
  std::istringstream is(text);
  std::string kind;
  is >> kind;
  out->entry = entry;
  if (kind == "param") {
    out->kind = InputSpec::Kind::Param;
    if (!(is >> out->param_index))
      return false;
  } else if (kind == "global") {
    out->kind = InputSpec::Kind::Global;
    if (!(is >> out->global_name))
      return false;
  } else {
    return false;
  }
  std::string tok;
  while (is >> tok) {
    if (tok == "deref")
      out->deref = true;
    else if (tok == "object")
      out->object = true;
    else if (tok == "addr")
      out->symbolic_addr = true;
    else if (tok.rfind("width=", 0) == 0)
      out->width = static_cast<unsigned>(std::stoul(tok.substr(6)));
    else if (tok == "fields") {
      std::string list;
      if (!(is >> list))
        return false;
      std::string item;
      std::istringstream ls(list);
      while (std::getline(ls, item, ',')) {
        InputSpec::FieldSpec fs;
        std::string path = item;
        size_t colon = item.find(':');
        if (colon != std::string::npos) {
          path = item.substr(0, colon);
          fs.width = static_cast<unsigned>(std::stoul(item.substr(colon + 1)));
        }
        std::string part;
        std::istringstream ps(path);
        while (std::getline(ps, part, '.'))
          fs.path.push_back(part);
        out->fields.push_back(std::move(fs));
      }
    } else {
      return false;
    }
  }
  return true;
}

std::string join_braced(const std::vector<std::string> &items) {
  std::string out = "{ ";
  for (size_t i = 0; i < items.size(); ++i) {
    if (i)
      out += ", ";
    out += items[i];
  }
  return out + (items.empty() ? "}" : " }");
}

std::vector<std::string> split_braced(const std::string &text) {
  std::vector<std::string> out;
  std::string inner = text;
  if (!inner.empty() && inner.front() == '{')
    inner = inner.substr(1);
  if (!inner.empty() && inner.back() == '}')
    inner.pop_back();
  std::istringstream is(inner);
  std::string item;
  while (std::getline(is, item, ',')) {
    // trim
    size_t b = item.find_first_not_of(" \t");
    size_t e = item.find_last_not_of(" \t");
    if (b == std::string::npos)
      continue;
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

} // namespace

std::string VulnerabilityDescription::serialize() const {
  std::ostringstream os;
  os << "# STASE vulnerability description\n";
  os << "id = " << id << "\n";
  os << "category = " << config::category_name(category) << "\n";
  os << "P = " << program << "\n";
  os << "E = " << entry << "\n";
  os << "I = ";
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (i)
      os << ", ";
    os << inputs[i];
  }
  os << "\n";
  os << "A = " << assertion_text << "\n";
  os << "K = " << instr << "\n";
  os << "L = " << file << ":" << line << "\n";
  os << "U = " << join_braced(discarded_locations) << "\n";
  os << "U.stubs = " << join_braced(stub_functions) << "\n";
  os << "source = " << taint_source << "\n";
  os << "sinks = " << join_braced(taint_sinks) << "\n";
  os << "retained_funcs = " << join_braced(retained_funcs) << "\n";
  for (size_t i = 0; i < input_specs.size(); ++i)
    os << "input." << i << " = " << serialize_input_spec(input_specs[i])
       << "\n";
  return os.str();
}

VdResult emit_vuln_description(const mir::Module &m,
                               const config::AnalysisConfig &cfg,
                               const CandidateFinding &finding,
                               const Slice &slice) {
  VdResult res;
  auto ref = mir::find_instr_by_id(m, finding.instr);
  if (!ref) {
    res.error = "finding instruction not found: " + finding.instr;
    return res;
  }
  if (!entry_reaches(m, finding.entry, ref->fn->name)) {
    res.drop_reason = "non-exploitable candidate: entry point '@" +
                      finding.entry + "' cannot reach '" + finding.instr + "'";
    return res;
  }
  std::string aerr;
  auto assertion = rules::instantiate_assertion(m, cfg, finding, &aerr);
  if (!assertion) {
    res.error = aerr;
    return res;
  }
  VulnerabilityDescription vd;
  vd.category = finding.category;
  vd.program = m.name;
  vd.entry = finding.entry;
  vd.assertion = assertion->expr;
  vd.assertion_text = assertion->text;
  vd.instr = finding.instr;
  vd.file = finding.file;
  vd.line = finding.line;
  vd.taint_source = finding.taint_source;
  vd.taint_sinks = finding.taint_sinks;
  vd.stub_functions = slice.stub_safe_functions;
  std::sort(vd.stub_functions.begin(), vd.stub_functions.end());
  for (const auto &[file, lines] : slice.discarded_lines)
    for (uint32_t l : lines)
      vd.discarded_locations.push_back(file + ":" + std::to_string(l));
  std::sort(vd.discarded_locations.begin(), vd.discarded_locations.end());
  vd.retained_funcs.assign(slice.retained_funcs.begin(),
                           slice.retained_funcs.end());

  // I: every configured attacker input of the entry point, in config order.
  const mir::Function *entry_fn = m.find_function(finding.entry);
  for (const InputSpec *in : cfg.inputs_of(finding.entry)) {
    vd.inputs.push_back(in->display_name(*entry_fn));
    vd.input_specs.push_back(*in);
  }
  res.vd = std::move(vd);
  return res;
}

VdParseResult parse_vuln_description(std::string_view text) {
  VdParseResult res;
  VulnerabilityDescription vd;
  std::istringstream is{std::string(text)};
  std::string line;
  std::map<std::string, std::string> kv;
  std::vector<std::pair<std::string, std::string>> input_lines;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      continue;
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string &s) {
      size_t b = s.find_first_not_of(" \t");
      size_t e = s.find_last_not_of(" \t\r");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(val);
    if (key.rfind("input.", 0) == 0)
      input_lines.push_back({key, val});
    else
      kv[key] = val;
  }
  auto need = [&](const char *k) -> std::string {
    auto it = kv.find(k);
    if (it == kv.end()) {
      res.error = std::string("missing field '") + k + "'";
      return "";
    }
    return it->second;
  };
  vd.id = need("id");
  auto cat = config::category_from_name(need("category"));
  if (!res.error.empty())
    return res;
  if (!cat) {
    res.error = "unknown category";
    return res;
  }
  vd.category = *cat;
  vd.program = need("P");
  vd.entry = need("E");
  vd.assertion_text = need("A");
  vd.instr = need("K");
  std::string L = need("L");
  if (!res.error.empty())
    return res;
  size_t colon = L.rfind(':');
  if (colon == std::string::npos) {
    res.error = "malformed L field";
    return res;
  }
  vd.file = L.substr(0, colon);
  try {
    vd.line = static_cast<uint32_t>(std::stoul(L.substr(colon + 1)));
  } catch (...) {
    res.error = "malformed L line number";
    return res;
  }
  for (const auto &i : split_braced(kv.count("I") ? kv["I"] : ""))
    vd.inputs.push_back(i);
  if (kv.count("I") && kv["I"].find('{') == std::string::npos) {
    vd.inputs.clear();
    std::istringstream ls(kv["I"]);
    std::string item;
    while (std::getline(ls, item, ',')) {
      size_t b = item.find_first_not_of(" \t");
      size_t e = item.find_last_not_of(" \t");
      if (b != std::string::npos)
        vd.inputs.push_back(item.substr(b, e - b + 1));
    }
  }
  vd.discarded_locations = split_braced(kv.count("U") ? kv["U"] : "{}");
  vd.stub_functions = split_braced(kv.count("U.stubs") ? kv["U.stubs"] : "{}");
  vd.taint_source = kv.count("source") ? kv["source"] : "";
  vd.taint_sinks = split_braced(kv.count("sinks") ? kv["sinks"] : "{}");
  vd.retained_funcs =
      split_braced(kv.count("retained_funcs") ? kv["retained_funcs"] : "{}");
  for (const auto &[key, val] : input_lines) {
    (void)key;
    InputSpec spec;
    if (!parse_input_spec_line(vd.entry, val, &spec)) {
      res.error = "malformed input spec: " + val;
      return res;
    }
    vd.input_specs.push_back(std::move(spec));
  }
  // A: strip "assert(" ... ")" and reparse
  std::string atext = vd.assertion_text;
  if (atext.rfind("assert(", 0) == 0 && atext.back() == ')') {
    std::string inner = atext.substr(7, atext.size() - 8);
    std::string err;
    vd.assertion = mir::parse_aexpr(inner, &err);
    if (!vd.assertion) {
      res.error = "malformed assertion: " + err;
      return res;
    }
  } else {
    res.error = "A field must have the form assert(...)";
    return res;
  }
  res.vd = std::move(vd);
  return res;
}

VdParseResult parse_vuln_description_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    VdParseResult r;
    r.error = "cannot open " + path;
    return r;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_vuln_description(ss.str());
}

} // namespace stase::slicer
