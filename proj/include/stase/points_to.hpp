//===-- points_to.hpp - Field-sensitive Andersen-style pointer analysis ---===//
//
// Flow-insensitive, context-insensitive subset analysis over (site, field
// path) cells. Named struct fields are distinguished; array elements collapse
// to a single "*" cell. The exported 4-ary relation subset.var_points_to
// (context, site, field-path, var) combines may-point-to with loaded-from
// provenance: a value loaded from a cell carries that cell, which is what the
// taint-tracking join keys on.
//
//===----------------------------------------------------------------------===//

#ifndef STASE_POINTS_TO_HPP
#define STASE_POINTS_TO_HPP

#include "stase/datalog.hpp"
#include "stase/mir.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace stase::pts {

struct Cell {
  std::string site;
  std::vector<std::string> path; // field names; "*" for array element

  auto operator<=>(const Cell &) const = default;
  std::string path_string() const; // "[]", "[Header,Command]", "[Payload,*]"
};

struct AllocSite {
  enum class Origin { Alloca, Global, Symbolic, EntryInput, StubReturn };
  std::string id;
  Origin origin = Origin::Alloca;
  mir::TypeRef type; // object type (pointee for pointer-producing origins)
};

struct PointsToResult {
  std::map<std::string, AllocSite> sites;
  std::map<std::string, std::set<Cell>> var_cells; // var id -> cells
  std::map<Cell, std::set<Cell>> heap;             // cell -> pointed-to cells

  // Tuples for the extensional relation subset.var_points_to, context column
  // fixed to "_".
  datalog::TupleSet export_tuples() const;
  bool var_has_site(const std::string &var, const std::string &site) const;
};

inline const char *kVarPointsToRelation = "subset.var_points_to";
inline const char *kVarPointsToDecl =
    ".decl subset.var_points_to(ctx: symbol, site: symbol, field: symbol, "
    "var: symbol)";

// Seed site id for a function parameter (entry-input modelling).
std::string input_site_id(const mir::Function &f, const std::string &param);

PointsToResult run_pointer_analysis(const mir::Module &m);

} // namespace stase::pts

#endif // STASE_POINTS_TO_HPP
