//===-- config.hpp - Analysis and environment configuration ---------------===//
//
// Two INI-style documents drive an analysis run (see docs/configs.md):
//
//   analysis config: [entrypoints] attacker entry functions and their
//   controlled inputs, [regions] protected regions, [forbidden] callee
//   patterns, [categories] enabled rule sets.
//
//   ech config: [symbolic_params] regions/globals made symbolic,
//   [pcd] configuration globals made symbolic, [guids] 128-bit constants
//   written into <name>_hi/<name>_lo global pairs, [table_stubs]
//   accessor-call to direct-global rewrites.
//
//===----------------------------------------------------------------------===//

#ifndef STASE_CONFIG_HPP
#define STASE_CONFIG_HPP

#include "stase/mir.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace stase::config {

enum class VulnCategory {
  SmramRead,
  SmramWrite,
  SmmCallout,
  IntegerUnderflow,
  IntegerOverflow,
  DivisionByZero,
  BufferOverflow,
  OutOfBoundsAccess,
  UseAfterFree
};

inline constexpr VulnCategory kAllCategories[] = {
    VulnCategory::SmramRead,        VulnCategory::SmramWrite,
    VulnCategory::SmmCallout,       VulnCategory::IntegerUnderflow,
    VulnCategory::IntegerOverflow,  VulnCategory::DivisionByZero,
    VulnCategory::BufferOverflow,   VulnCategory::OutOfBoundsAccess,
    VulnCategory::UseAfterFree};

const char *category_name(VulnCategory c); // snake_case
std::optional<VulnCategory> category_from_name(const std::string &name);

// One attacker-controlled input of an entrypoint.
struct InputSpec {
  enum class Kind { Param, Global };
  Kind kind = Kind::Param;
  std::string entry;       // owning entrypoint
  int param_index = -1;    // Param
  std::string global_name; // Global

  // Pointer-parameter handling:
  //   deref  - pointee is a scalar made symbolic
  //   object - pointee is a struct/array; `fields` lists the symbolic fields
  //   addr   - the pointer's numeric address is itself symbolic
  bool deref = false;
  bool object = false;
  bool symbolic_addr = false;
  unsigned width = 0; // symbol width override (0 = natural width)

  struct FieldSpec {
    std::vector<std::string> path; // field names from the pointee type
    unsigned width = 0;
  };
  std::vector<FieldSpec> fields;

  std::string display_name(const mir::Function &f) const;
};

struct AnalysisConfig {
  std::vector<std::string> entrypoints;
  std::vector<InputSpec> inputs;
  std::vector<std::string> regions;
  std::vector<std::string> forbidden_patterns; // '*' wildcard globs
  std::set<VulnCategory> categories;           // empty = all enabled

  bool category_enabled(VulnCategory c) const {
    return categories.empty() || categories.count(c) > 0;
  }
  std::vector<const InputSpec *> inputs_of(const std::string &entry) const;
};

struct ConfigResult {
  std::optional<AnalysisConfig> config;
  std::vector<mir::Diagnostic> diags;
  bool ok() const { return config.has_value(); }
};

// Parses and validates against the module (entrypoints exist, parameter
// indices in range, regions declared, field paths well typed).
ConfigResult load_analysis_config(std::string_view text,
                                  const std::string &source_name,
                                  const mir::Module &m);
ConfigResult load_analysis_config_file(const std::string &path,
                                       const mir::Module &m);

// entrypoint/entryinput clause text generated from the config as direct
// per-domain func_name/func_param joins.
std::string generated_entry_rules(const AnalysisConfig &cfg);

bool glob_match(const std::string &pattern, const std::string &name);

//===----------------------------------------------------------------------===//
// Environment configuration harness config
//===----------------------------------------------------------------------===//

struct EchConfig {
  std::vector<std::string> symbolic_params; // region names or global names
  std::vector<std::string> pcd_globals;
  // 128-bit constants as (hi, lo); applied to @<name>_hi / @<name>_lo.
  std::map<std::string, std::pair<uint64_t, uint64_t>> guids;
  std::map<std::string, std::string> table_stubs; // accessor fn -> global
};

struct EchResult {
  std::optional<EchConfig> config;
  std::vector<mir::Diagnostic> diags;
  bool ok() const { return config.has_value(); }
};

EchResult load_ech_config(std::string_view text, const std::string &source_name,
                          const mir::Module &m);
EchResult load_ech_config_file(const std::string &path, const mir::Module &m);

} // namespace stase::config

#endif // STASE_CONFIG_HPP
