#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "destring/smali.hpp"

namespace destring {

struct CfgError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-method control-flow graph over statement indices.
struct Cfg {
  int node_count = 0;
  std::vector<std::vector<int>> successors;
  std::vector<std::vector<int>> predecessors;
  // elementary operations performed during construction (nodes visited plus
  // edges created); lets tests assert linear-time behaviour without clocks
  size_t build_ops = 0;

  const std::vector<int>& succ(int i) const { return successors[i]; }
  const std::vector<int>& pred(int i) const { return predecessors[i]; }
};

// Builds the CFG in one linear pass. Branch targets must resolve to real
// statements (DanglingLabel -> CfgError). Exception handlers are not modeled.
Cfg build_cfg(const MethodDef& method);

// Graphviz dump for diagnostics.
std::string cfg_to_dot(const MethodDef& method, const Cfg& cfg);

}  // namespace destring
