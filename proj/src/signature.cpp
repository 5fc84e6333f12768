//===-- signature.cpp - {Pi} Theta {Omega} assembly and serialization -----===//

#include "stase/symexec.hpp"

#include "json.hpp"

#include <sstream>

namespace stase::sym {

namespace {

std::string loc_display(const mir::Module &m, const std::string &func) {
  const mir::Function *f = m.find_function(func);
  if (!f || f->blocks.empty() || f->blocks[0].instrs.empty())
    return func;
  const auto &loc = f->blocks[0].instrs[0].loc;
  return func + "@" + loc.file + ":" + std::to_string(loc.line);
}

std::string func_of_instr_id(const std::string &id) {
  size_t close = id.find(">:");
  if (close == std::string::npos)
    return id;
  std::string rest = id.substr(close + 2);
  size_t colon = rest.rfind(':');
  return colon == std::string::npos ? rest : rest.substr(0, colon);
}

// &&/|| -> and/or for the report-style postcondition rendering.
std::string wordy(const std::string &text) {
  std::string out;
  for (size_t i = 0; i < text.size(); ++i) {
    if (text.compare(i, 2, "&&") == 0) {
      out += "and";
      ++i;
    } else if (text.compare(i, 2, "||") == 0) {
      out += "or";
      ++i;
    } else {
      out += text[i];
    }
  }
  return out;
}

} // namespace

std::optional<VulnerabilitySignature>
build_signature(const ExplorationResult &result, const mir::Module &theta,
                const harness::PathExplorationHarness &peh,
                const slicer::VulnerabilityDescription &vd,
                const std::string &theta_file, const std::string &digest) {
  if (result.violating.empty())
    return std::nullopt;
  VulnerabilitySignature sig;
  sig.id = vd.id;
  sig.disjuncts = result.violating;
  sig.entry_display = loc_display(theta, vd.entry);
  for (const auto &sv : peh.symbolic_vars)
    sig.symbolic_args.push_back(sv.display);
  std::string kfunc = func_of_instr_id(vd.instr);
  sig.assertion_location =
      kfunc + "@" + vd.file + ":" + std::to_string(vd.line);
  // Omega: the negated assertion at L
  std::string inner = vd.assertion_text;
  if (inner.rfind("assert(", 0) == 0 && inner.back() == ')')
    inner = inner.substr(7, inner.size() - 8);
  sig.postcondition = "!(" + wordy(inner) + ")";
  sig.theta_file = theta_file;
  sig.digest = digest;
  return sig;
}

std::string signature_text(const VulnerabilitySignature &sig) {
  std::ostringstream os;
  os << "1)Precondition:-\n";
  for (size_t i = 0; i < sig.disjuncts.size(); ++i) {
    if (i)
      os << "or ";
    const auto &d = sig.disjuncts[i];
    os << "(";
    if (d.constraints.empty()) {
      os << "true";
    } else {
      for (size_t j = 0; j < d.constraints.size(); ++j) {
        if (j)
          os << " and ";
        os << expr_to_string(d.constraints[j]);
      }
    }
    os << ")\n";
  }
  os << "2)Code Segment:-\n";
  os << "  Entry point: " << sig.entry_display << "\n";
  os << "  Symbolic Argument: ";
  for (size_t i = 0; i < sig.symbolic_args.size(); ++i) {
    if (i)
      os << ", ";
    os << sig.symbolic_args[i];
  }
  os << "\n";
  os << "  Assertion Location: " << sig.assertion_location << "\n";
  os << "3)Postcondition:-\n";
  os << sig.postcondition << " at the program location "
     << sig.assertion_location << "\n";
  return os.str();
}

std::string signature_json(const VulnerabilitySignature &sig) {
  nlohmann::ordered_json j;
  j["id"] = sig.id;
  nlohmann::ordered_json pre;
  pre["disjunct_count"] = sig.disjuncts.size();
  nlohmann::ordered_json disjuncts = nlohmann::ordered_json::array();
  for (const auto &d : sig.disjuncts) {
    nlohmann::ordered_json dj;
    dj["fork_id"] = d.fork_id;
    nlohmann::ordered_json cons = nlohmann::ordered_json::array();
    for (const auto &c : d.constraints)
      cons.push_back(expr_to_string(c));
    dj["constraints"] = cons;
    nlohmann::ordered_json model;
    for (const auto &[name, value] : d.model)
      model[name] = value;
    dj["model"] = model;
    disjuncts.push_back(dj);
  }
  pre["disjuncts"] = disjuncts;
  j["precondition"] = pre;
  nlohmann::ordered_json seg;
  seg["entry_point"] = sig.entry_display;
  seg["symbolic_arguments"] = sig.symbolic_args;
  seg["assertion_location"] = sig.assertion_location;
  seg["theta_file"] = sig.theta_file;
  seg["digest"] = sig.digest;
  j["segment"] = seg;
  nlohmann::ordered_json post;
  post["expression"] = sig.postcondition;
  post["location"] = sig.assertion_location;
  j["postcondition"] = post;
  return j.dump(2) + "\n";
}

} // namespace stase::sym
