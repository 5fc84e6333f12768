//===-- cfg.hpp - Per-function CFG, dominators, natural loops -------------===//

#ifndef STASE_CFG_HPP
#define STASE_CFG_HPP

#include "stase/mir.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace stase::cfg {

// Control flow graph over a function's blocks, with dominator and
// postdominator trees (iterative Cooper-Harvey-Kennedy on RPO).
struct Cfg {
  const mir::Function *fn = nullptr;
  std::vector<std::vector<size_t>> succs;   // by block index
  std::vector<std::vector<size_t>> preds;
  std::vector<int> idom;                    // -1 for entry / unreachable
  std::vector<int> ipostdom;                // -1 for virtual exit children
  std::vector<bool> reachable;              // from entry
  std::vector<bool> reaches_exit;
  std::vector<size_t> rpo;                  // reverse postorder, reachable only

  size_t block_count() const { return succs.size(); }
  bool dominates(size_t a, size_t b) const;
  bool postdominates(size_t a, size_t b) const;
};

Cfg build_cfg(const mir::Function &f);

struct NaturalLoop {
  size_t header = 0;
  std::set<size_t> body;        // block indices, includes header
  std::vector<size_t> latches;  // blocks with back edge to header
  // Constant trip count when the loop matches the counted-loop pattern
  // (icmp of an induction variable with constant step against a constant).
  bool has_const_bound = false;
  uint64_t const_bound = 0;
};

// Natural loops from dominator-based back edges; loops sharing a header are
// merged. Throws nothing; irreducible edges (back edge whose target does not
// dominate its source) are reported through `irreducible`.
std::vector<NaturalLoop> find_natural_loops(const mir::Module &m,
                                            const mir::Function &f,
                                            const Cfg &cfg,
                                            bool *irreducible);

// Block-level control dependence: for each block, the set of (branch block)
// indices it is control dependent on, derived from postdominance frontiers.
std::vector<std::set<size_t>> control_dependence(const Cfg &cfg);

} // namespace stase::cfg

#endif // STASE_CFG_HPP
