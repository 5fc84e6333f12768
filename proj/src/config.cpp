//===-- config.cpp - Config parsing and validation ------------------------===//

#include "stase/config.hpp"

#include "stase/facts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace stase::config {

const char *category_name(VulnCategory c) {
  switch (c) {
  case VulnCategory::SmramRead:
    return "smram_read";
  case VulnCategory::SmramWrite:
    return "smram_write";
  case VulnCategory::SmmCallout:
    return "smm_callout";
  case VulnCategory::IntegerUnderflow:
    return "integer_underflow";
  case VulnCategory::IntegerOverflow:
    return "integer_overflow";
  case VulnCategory::DivisionByZero:
    return "division_by_zero";
  case VulnCategory::BufferOverflow:
    return "buffer_overflow";
  case VulnCategory::OutOfBoundsAccess:
    return "out_of_bounds_access";
  case VulnCategory::UseAfterFree:
    return "use_after_free";
  }
  return "?";
}

std::optional<VulnCategory> category_from_name(const std::string &name) {
  for (VulnCategory c : kAllCategories)
    if (name == category_name(c))
      return c;
  return std::nullopt;
}

std::string InputSpec::display_name(const mir::Function &f) const {
  if (kind == Kind::Global)
    return global_name;
  if (param_index >= 0 && param_index < static_cast<int>(f.params.size()))
    return f.params[static_cast<size_t>(param_index)].first;
  return "?";
}

std::vector<const InputSpec *>
AnalysisConfig::inputs_of(const std::string &entry) const {
  std::vector<const InputSpec *> out;
  for (const auto &in : inputs)
    if (in.entry == entry)
      out.push_back(&in);
  return out;
}

bool glob_match(const std::string &pattern, const std::string &name) {
  // '*' matches any run of characters; everything else is literal.
  size_t p = 0, n = 0, star = std::string::npos, mark = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*')
    ++p;
  return p == pattern.size();
}

namespace {

struct IniLine {
  std::string section;
  std::vector<std::string> tokens; // whitespace-split, '=' split off
  uint32_t line = 0;
};

// Shared INI-ish reader: sections, '#'/';' comments, whitespace tokens,
// "key = value" lines tokenized as {key, =, value}.
std::vector<IniLine> read_ini(std::string_view text) {
  std::vector<IniLine> out;
  std::string section;
  uint32_t lineno = 0;
  std::istringstream ss{std::string(text)};
  std::string line;
  while (std::getline(ss, line)) {
    ++lineno;
    size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos)
      line = line.substr(0, hash);
    // trim
    auto notspace = [](unsigned char c) { return !std::isspace(c); };
    line.erase(line.begin(), std::find_if(line.begin(), line.end(), notspace));
    line.erase(std::find_if(line.rbegin(), line.rend(), notspace).base(),
               line.end());
    if (line.empty())
      continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    IniLine il;
    il.section = section;
    il.line = lineno;
    std::string token;
    for (char c : line) {
      if (std::isspace(static_cast<unsigned char>(c)) || c == '=' || c == ',') {
        if (!token.empty()) {
          il.tokens.push_back(token);
          token.clear();
        }
        if (c == '=')
          il.tokens.push_back("=");
        if (c == ',')
          il.tokens.push_back(",");
      } else {
        token += c;
      }
    }
    if (!token.empty())
      il.tokens.push_back(token);
    out.push_back(std::move(il));
  }
  return out;
}

void diag(std::vector<mir::Diagnostic> &diags, const std::string &file,
          uint32_t line, const std::string &msg) {
  mir::Diagnostic d;
  d.file = file;
  d.line = line;
  d.message = msg;
  diags.push_back(std::move(d));
}

// Parses "A.B.C:w" field specs.
bool parse_field_spec(const std::string &text, InputSpec::FieldSpec *out) {
  std::string path = text;
  out->width = 0;
  size_t colon = text.find(':');
  if (colon != std::string::npos) {
    path = text.substr(0, colon);
    try {
      out->width = static_cast<unsigned>(std::stoul(text.substr(colon + 1)));
    } catch (...) {
      return false;
    }
  }
  out->path.clear();
  std::string part;
  for (char c : path) {
    if (c == '.') {
      if (part.empty())
        return false;
      out->path.push_back(part);
      part.clear();
    } else {
      part += c;
    }
  }
  if (part.empty())
    return false;
  out->path.push_back(part);
  return true;
}

mir::TypeRef walk_fields(const mir::Module &m, mir::TypeRef t,
                         const std::vector<std::string> &path) {
  for (const auto &fname : path) {
    if (!t || !t->is_struct())
      return nullptr;
    const mir::StructDef *sd = m.find_struct(t->struct_name);
    if (!sd)
      return nullptr;
    int idx = sd->field_index(fname);
    if (idx < 0)
      return nullptr;
    t = sd->fields[static_cast<size_t>(idx)].second;
  }
  return t;
}

} // namespace

ConfigResult load_analysis_config(std::string_view text,
                                  const std::string &source_name,
                                  const mir::Module &m) {
  ConfigResult res;
  AnalysisConfig cfg;
  auto lines = read_ini(text);
  for (const auto &il : lines) {
    if (il.section == "entrypoints") {
      const auto &tk = il.tokens;
      const std::string &entry = tk[0];
      const mir::Function *f = m.find_function(entry);
      if (!f) {
        diag(res.diags, source_name, il.line,
             "unknown entrypoint '@" + entry + "'");
        continue;
      }
      if (std::find(cfg.entrypoints.begin(), cfg.entrypoints.end(), entry) ==
          cfg.entrypoints.end())
        cfg.entrypoints.push_back(entry);
      if (tk.size() == 1)
        continue;
      InputSpec spec;
      spec.entry = entry;
      size_t i = 1;
      if (tk[i] == "param") {
        spec.kind = InputSpec::Kind::Param;
        if (i + 1 >= tk.size()) {
          diag(res.diags, source_name, il.line, "missing parameter index");
          continue;
        }
        try {
          spec.param_index = std::stoi(tk[i + 1]);
        } catch (...) {
          spec.param_index = -1;
        }
        if (spec.param_index < 0 ||
            spec.param_index >= static_cast<int>(f->params.size())) {
          diag(res.diags, source_name, il.line,
               "parameter index " + tk[i + 1] + " out of range for '@" +
                   entry + "' (" + std::to_string(f->params.size()) +
                   " parameters)");
          continue;
        }
        i += 2;
      } else if (tk[i] == "global") {
        spec.kind = InputSpec::Kind::Global;
        if (i + 1 >= tk.size()) {
          diag(res.diags, source_name, il.line, "missing global name");
          continue;
        }
        spec.global_name = tk[i + 1];
        if (!m.find_global(spec.global_name)) {
          diag(res.diags, source_name, il.line,
               "unknown global '@" + spec.global_name + "'");
          continue;
        }
        i += 2;
      } else {
        diag(res.diags, source_name, il.line,
             "expected 'param <index>' or 'global <name>' after entrypoint");
        continue;
      }
      bool bad = false;
      while (i < tk.size() && !bad) {
        if (tk[i] == "deref") {
          spec.deref = true;
          ++i;
        } else if (tk[i] == "object") {
          spec.object = true;
          ++i;
        } else if (tk[i] == "addr") {
          spec.symbolic_addr = true;
          ++i;
        } else if (tk[i] == "width" && i + 2 < tk.size() + 1 &&
                   i + 2 <= tk.size() && tk[i + 1] == "=") {
          try {
            spec.width = static_cast<unsigned>(std::stoul(tk[i + 2]));
          } catch (...) {
            bad = true;
          }
          i += 3;
        } else if (tk[i] == "fields") {
          ++i;
          while (i < tk.size()) {
            if (tk[i] == ",") {
              ++i;
              continue;
            }
            InputSpec::FieldSpec fs;
            if (!parse_field_spec(tk[i], &fs)) {
              diag(res.diags, source_name, il.line,
                   "malformed field spec '" + tk[i] + "'");
              bad = true;
              break;
            }
            spec.fields.push_back(std::move(fs));
            ++i;
          }
        } else {
          diag(res.diags, source_name, il.line,
               "unknown input attribute '" + tk[i] + "'");
          bad = true;
        }
      }
      if (bad)
        continue;
      // Validate against types.
      if (spec.kind == InputSpec::Kind::Param) {
        mir::TypeRef pt = f->params[static_cast<size_t>(spec.param_index)].second;
        if ((spec.deref || spec.object) && !pt->is_pointer()) {
          diag(res.diags, source_name, il.line,
               "deref/object input requires a pointer parameter");
          continue;
        }
        for (const auto &fs : spec.fields) {
          if (!pt->is_pointer() || !walk_fields(m, pt->elem, fs.path)) {
            diag(res.diags, source_name, il.line,
                 "field path does not exist in pointee type");
            break;
          }
        }
      }
      cfg.inputs.push_back(std::move(spec));
    } else if (il.section == "regions") {
      const std::string &name = il.tokens[0];
      if (!m.find_region(name)) {
        diag(res.diags, source_name, il.line, "unknown region '" + name + "'");
        continue;
      }
      cfg.regions.push_back(name);
    } else if (il.section == "forbidden") {
      cfg.forbidden_patterns.push_back(il.tokens[0]);
    } else if (il.section == "categories") {
      auto c = category_from_name(il.tokens[0]);
      if (!c) {
        diag(res.diags, source_name, il.line,
             "unknown category '" + il.tokens[0] + "'");
        continue;
      }
      cfg.categories.insert(*c);
    } else if (il.section.empty()) {
      diag(res.diags, source_name, il.line, "content before any [section]");
    } else {
      diag(res.diags, source_name, il.line,
           "unknown section [" + il.section + "]");
    }
  }
  if (!res.diags.empty())
    return res;
  res.config = std::move(cfg);
  return res;
}

ConfigResult load_analysis_config_file(const std::string &path,
                                       const mir::Module &m) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    ConfigResult r;
    diag(r.diags, path, 0, "cannot open config file");
    return r;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_analysis_config(ss.str(), path, m);
}

std::string generated_entry_rules(const AnalysisConfig &cfg) {
  std::ostringstream os;
  os << "// generated from the analysis config\n";
  for (const auto &e : cfg.entrypoints)
    os << "entrypoint(?f) :- func_name(?f, \"@" << e << "\").\n";
  for (const auto &in : cfg.inputs) {
    if (in.kind == InputSpec::Kind::Param) {
      os << "entryinput(?v) :- func_name(?f, \"@" << in.entry
         << "\"), func_param(?f, ?v, " << in.param_index << ").\n";
    } else {
      os << "entryinput(?v) :- global_var(?v, \"@" << in.global_name
         << "\").\n";
    }
  }
  return os.str();
}

EchResult load_ech_config(std::string_view text, const std::string &source_name,
                          const mir::Module &m) {
  EchResult res;
  EchConfig cfg;
  auto lines = read_ini(text);
  for (const auto &il : lines) {
    const auto &tk = il.tokens;
    if (il.section == "symbolic_params") {
      if (!m.find_region(tk[0]) && !m.find_global(tk[0])) {
        diag(res.diags, source_name, il.line,
             "'" + tk[0] + "' names neither a region nor a global");
        continue;
      }
      cfg.symbolic_params.push_back(tk[0]);
    } else if (il.section == "pcd") {
      if (!m.find_global(tk[0])) {
        diag(res.diags, source_name, il.line, "unknown global '@" + tk[0] + "'");
        continue;
      }
      cfg.pcd_globals.push_back(tk[0]);
    } else if (il.section == "guids") {
      if (tk.size() != 3 || tk[1] != "=") {
        diag(res.diags, source_name, il.line, "expected '<name> = 0x<128-bit>'");
        continue;
      }
      std::string hex = tk[2];
      if (hex.rfind("0x", 0) == 0 || hex.rfind("0X", 0) == 0)
        hex = hex.substr(2);
      if (hex.size() > 32 || hex.empty()) {
        diag(res.diags, source_name, il.line, "GUID constant must be 128-bit");
        continue;
      }
      hex = std::string(32 - hex.size(), '0') + hex;
      uint64_t hi = 0, lo = 0;
      try {
        hi = std::stoull(hex.substr(0, 16), nullptr, 16);
        lo = std::stoull(hex.substr(16), nullptr, 16);
      } catch (...) {
        diag(res.diags, source_name, il.line, "malformed GUID constant");
        continue;
      }
      if (!m.find_global(tk[0] + "_hi") || !m.find_global(tk[0] + "_lo")) {
        diag(res.diags, source_name, il.line,
             "GUID globals '@" + tk[0] + "_hi'/'@" + tk[0] + "_lo' not found");
        continue;
      }
      cfg.guids[tk[0]] = {hi, lo};
    } else if (il.section == "table_stubs") {
      if (tk.size() != 3 || tk[1] != "=") {
        diag(res.diags, source_name, il.line, "expected '<accessor> = <global>'");
        continue;
      }
      if (!m.find_function(tk[0])) {
        diag(res.diags, source_name, il.line, "unknown accessor '@" + tk[0] + "'");
        continue;
      }
      if (!m.find_global(tk[2])) {
        diag(res.diags, source_name, il.line, "unknown global '@" + tk[2] + "'");
        continue;
      }
      cfg.table_stubs[tk[0]] = tk[2];
    } else if (il.section.empty()) {
      diag(res.diags, source_name, il.line, "content before any [section]");
    } else {
      diag(res.diags, source_name, il.line,
           "unknown section [" + il.section + "]");
    }
  }
  if (!res.diags.empty())
    return res;
  res.config = std::move(cfg);
  return res;
}

EchResult load_ech_config_file(const std::string &path, const mir::Module &m) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    EchResult r;
    diag(r.diags, path, 0, "cannot open ech config file");
    return r;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_ech_config(ss.str(), path, m);
}

} // namespace stase::config
