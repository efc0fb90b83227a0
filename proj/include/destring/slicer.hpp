#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "destring/cfg.hpp"
#include "destring/scanner.hpp"
#include "destring/smali.hpp"

namespace destring {

struct PathLimits {
  // BFS frontier size that triggers the switch to depth-first search.
  size_t bfs_queue_cap = 4096;
  // Hard cap on enumerated paths.
  size_t max_paths = 64;
};

struct SliceError : std::runtime_error {
  enum class Code { NoPath, OpaqueOpcode, UnresolvableRegister };
  SliceError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
  Code code;
};

// One CFG walk from the literal statement to the criterion statement,
// inclusive. Back edges are taken at most once per path, bounding each loop
// to a single extra iteration.
struct ExecutionPath {
  std::vector<int> statements;
};

// A register-version node of the dependency graph.
struct RdgNode {
  int reg = 0;
  int version = 0;
  auto operator<=>(const RdgNode&) const = default;
};

// Register dependency graph for one execution path. Versions start at 0 for
// values that exist before the path (reads without a prior write) and are
// incremented on every overwrite.
struct Rdg {
  std::map<RdgNode, std::vector<RdgNode>> edges;   // new value -> values it was computed from
  std::map<RdgNode, int> def_stmt;                 // version-0 nodes are absent here
  std::map<RdgNode, std::vector<int>> aux_stmts;   // producer statements (e.g. the invoke
                                                   // feeding a move-result definition)
  std::map<RdgNode, std::set<int>> use_stmts;
  std::map<RdgNode, int> created_pos;              // path position that introduced the node
  std::map<int, int> final_version;                // register -> version at path end
  std::set<int> undefined;                         // registers read before any write
  std::map<int, std::vector<RdgNode>> created_at;  // statement index -> nodes created there
  // reads per path position: (statement index, nodes read)
  std::vector<std::pair<int, std::vector<RdgNode>>> stmt_reads;

  RdgNode final_node(int reg) const {
    auto it = final_version.find(reg);
    return {reg, it == final_version.end() ? 0 : it->second};
  }
};

// Executable backward slice plus bookkeeping for the prefix-extension pass.
struct SliceProgram {
  MethodRef origin;
  int register_count = 0;
  std::vector<Statement> statements;  // original indices kept, sorted ascending
  std::map<std::string, int> labels;  // copied from the method for branch resolution
  SlicingCriterion criterion;
  int literal_index = 0;  // statement index of the literal the slice recovers
  int output_register = 0;
  std::set<int> undefined;  // registers needing prefix definitions
  bool has_emit = false;

  // statement count excluding the synthesized emit
  int size() const {
    return static_cast<int>(statements.size()) - (has_emit ? 1 : 0);
  }
  std::set<int> indices() const {
    std::set<int> out;
    for (const Statement& s : statements)
      if (s.kind() != Kind::Emit) out.insert(s.index);
    return out;
  }
};

// Enumerates execution paths from statement `s` to statement `i`. Breadth
// first until the frontier exceeds limits.bfs_queue_cap, then depth first;
// stops after limits.max_paths paths. Throws SliceError::NoPath when no path
// exists within the limits.
std::vector<ExecutionPath> enumerate_paths(const Cfg& cfg, int s, int i,
                                           const PathLimits& limits);

// Walks the path once, versioning registers per def/use semantics. Throws
// SliceError::OpaqueOpcode when the path contains an opaque statement.
Rdg build_rdg(const MethodDef& method, const ExecutionPath& path);

// True iff the criterion's register version at the end of the path reaches
// the node created by the literal's const-string statement.
bool criterion_reaches_literal(const Rdg& rdg, const SlicingCriterion& criterion,
                               const LiteralSite& literal);

// Backward slice over all enumerated paths: definitions and uses of every
// node reachable from the criterion node, every conditional and goto seen on
// any path, plus transitive definitions for registers those statements read.
SliceProgram compute_slice(const std::string& class_desc, const MethodDef& method,
                           const LiteralSite& literal, const DeobCandidate& candidate,
                           const std::vector<ExecutionPath>& paths,
                           const std::vector<Rdg>& rdgs);

// Extends the slice with defining statements (from method entry to the
// literal) for every register in slice.undefined. Throws
// SliceError::UnresolvableRegister when a register stays undefined.
SliceProgram resolve_undefined(const MethodDef& method, const Cfg& cfg, SliceProgram slice,
                               const PathLimits& limits);

// Appends the emit pseudo-statement reading the output register.
SliceProgram emit_slice(SliceProgram slice);

// Pseudo-smali dump of a slice for --dump-slices.
std::string print_slice(const SliceProgram& slice);

}  // namespace destring
