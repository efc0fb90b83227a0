#include "destring/slicer.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "destring/printer.hpp"
#include "destring/util.hpp"

namespace destring {

namespace {

struct SearchState {
  int node;
  std::vector<int> path;
  std::map<std::pair<int, int>, int> edge_uses;
};

}  // namespace

static std::set<std::pair<int, int>> find_back_edges(const Cfg& cfg, int start) {
  std::set<std::pair<int, int>> back;
  std::vector<uint8_t> colour(cfg.node_count, 0);  // 0 white, 1 grey, 2 black
  std::vector<std::pair<int, size_t>> stack;
  if (start < 0 || start >= cfg.node_count) return back;
  stack.push_back({start, 0});
  colour[start] = 1;
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    const std::vector<int>& succ = cfg.succ(node);
    if (next_child >= succ.size()) {
      colour[node] = 2;
      stack.pop_back();
      continue;
    }
    int child = succ[next_child++];
    if (colour[child] == 0) {
      colour[child] = 1;
      stack.push_back({child, 0});
    } else if (colour[child] == 1) {
      back.insert({node, child});
    }
  }
  return back;
}

std::vector<ExecutionPath> enumerate_paths(const Cfg& cfg, int s, int i,
                                           const PathLimits& limits) {
  std::vector<ExecutionPath> paths;
  if (s < 0 || s >= cfg.node_count || i < 0 || i >= cfg.node_count)
    throw SliceError(SliceError::Code::NoPath, "endpoint outside method");

  // Loops are bounded to one extra iteration per path: a back edge may be
  // taken once, every other edge twice (which changes nothing on acyclic
  // regions, where no path can repeat an edge at all).
  const std::set<std::pair<int, int>> back_edges = find_back_edges(cfg, s);

  std::deque<SearchState> queue;
  queue.push_back({s, {s}, {}});
  bool depth_first = false;

  while (!queue.empty() && paths.size() < limits.max_paths) {
    if (!depth_first && queue.size() > limits.bfs_queue_cap) depth_first = true;
    SearchState st;
    if (depth_first) {
      st = std::move(queue.back());
      queue.pop_back();
    } else {
      st = std::move(queue.front());
      queue.pop_front();
    }
    if (st.node == i) {
      paths.push_back({st.path});
      if (paths.size() >= limits.max_paths) break;
    }
    // duplicate successor entries (an if whose target equals its fallthrough,
    // switch cases sharing a target) contribute one distinct step
    std::vector<int> succ;
    for (int nxt : cfg.succ(st.node))
      if (std::find(succ.begin(), succ.end(), nxt) == succ.end()) succ.push_back(nxt);
    auto expand = [&](int nxt) {
      std::pair<int, int> edge{st.node, nxt};
      int used = 0;
      if (auto it = st.edge_uses.find(edge); it != st.edge_uses.end()) used = it->second;
      int cap = back_edges.count(edge) ? 1 : 2;
      if (used >= cap) return;
      SearchState next = st;
      next.node = nxt;
      next.path.push_back(nxt);
      ++next.edge_uses[edge];
      queue.push_back(std::move(next));
    };
    // reverse push order under DFS keeps the exploration order aligned with
    // the BFS successor order
    if (depth_first) {
      for (auto it = succ.rbegin(); it != succ.rend(); ++it) expand(*it);
    } else {
      for (int nxt : succ) expand(nxt);
    }
  }
  if (paths.empty())
    throw SliceError(SliceError::Code::NoPath,
                     "no execution path from " + std::to_string(s) + " to " +
                         std::to_string(i));
  return paths;
}

Rdg build_rdg(const MethodDef& method, const ExecutionPath& path) {
  Rdg rdg;
  std::map<int, int> version;  // current version per register

  // producer of a pending result (invoke / filled-new-array): statement index
  // and the dependency nodes captured at the call
  int pending_producer = -1;
  std::vector<RdgNode> pending_deps;

  for (size_t pos = 0; pos < path.statements.size(); ++pos) {
    int idx = path.statements[pos];
    const Statement& st = method.statements[idx];
    DefUse du = def_use(st);
    if (du.opaque)
      throw SliceError(SliceError::Code::OpaqueOpcode,
                       "opaque statement on path: " + st.raw_text);

    std::vector<RdgNode> read_nodes;
    for (int r : du.uses) {
      auto it = version.find(r);
      if (it == version.end()) {
        version[r] = 0;
        rdg.undefined.insert(r);
        rdg.created_pos.insert({{r, 0}, static_cast<int>(pos)});
        it = version.find(r);
      }
      RdgNode node{r, it->second};
      read_nodes.push_back(node);
      rdg.use_stmts[node].insert(idx);
    }
    rdg.stmt_reads.push_back({idx, read_nodes});

    std::vector<RdgNode> dep_nodes = read_nodes;
    std::vector<int> aux;
    if (st.kind() == Kind::MoveResult) {
      if (pending_producer >= 0) {
        dep_nodes = pending_deps;
        aux.push_back(pending_producer);
      }
      // a move-result with no producer on this path only happens on malformed
      // input; it then defines its register with no dependencies
    }

    for (int d : du.defs) {
      int v = version.count(d) ? version[d] + 1 : 1;
      version[d] = v;
      RdgNode node{d, v};
      rdg.edges[node] = dep_nodes;
      rdg.def_stmt[node] = idx;
      if (!aux.empty()) rdg.aux_stmts[node] = aux;
      rdg.created_pos[node] = static_cast<int>(pos);
      rdg.created_at[idx].push_back(node);
    }

    if (st.kind() == Kind::Invoke || st.kind() == Kind::FilledNewArray) {
      pending_producer = idx;
      pending_deps = read_nodes;
    } else {
      pending_producer = -1;
      pending_deps.clear();
    }
  }
  rdg.final_version = std::move(version);
  return rdg;
}

namespace {

// Nodes reachable from `start` along dependency edges, including `start`.
std::set<RdgNode> reachable_nodes(const Rdg& rdg, RdgNode start) {
  std::set<RdgNode> seen{start};
  std::deque<RdgNode> queue{start};
  while (!queue.empty()) {
    RdgNode n = queue.front();
    queue.pop_front();
    auto it = rdg.edges.find(n);
    if (it == rdg.edges.end()) continue;
    for (const RdgNode& dep : it->second)
      if (seen.insert(dep).second) queue.push_back(dep);
  }
  return seen;
}

}  // namespace

bool criterion_reaches_literal(const Rdg& rdg, const SlicingCriterion& criterion,
                               const LiteralSite& literal) {
  auto created = rdg.created_at.find(literal.stmt_index);
  if (created == rdg.created_at.end()) return false;
  RdgNode literal_node{-1, -1};
  for (const RdgNode& n : created->second)
    if (n.reg == literal.reg) literal_node = n;
  if (literal_node.reg < 0) return false;

  RdgNode start = rdg.final_node(criterion.reg);
  std::set<RdgNode> seen = reachable_nodes(rdg, start);
  return seen.count(literal_node) != 0;
}

namespace {

// Includes the defining statement of `node` plus, transitively, the
// definitions of everything it was computed from. Version-0 nodes have no
// definition; their registers are reported through `undefined`.
void include_def_closure(const Rdg& rdg, RdgNode node, std::set<int>& included,
                         std::set<int>& undefined) {
  std::deque<RdgNode> queue{node};
  std::set<RdgNode> seen{node};
  while (!queue.empty()) {
    RdgNode n = queue.front();
    queue.pop_front();
    if (n.version == 0) {
      undefined.insert(n.reg);
      continue;
    }
    auto def = rdg.def_stmt.find(n);
    if (def != rdg.def_stmt.end()) included.insert(def->second);
    auto aux = rdg.aux_stmts.find(n);
    if (aux != rdg.aux_stmts.end())
      for (int a : aux->second) included.insert(a);
    auto deps = rdg.edges.find(n);
    if (deps != rdg.edges.end())
      for (const RdgNode& d : deps->second)
        if (seen.insert(d).second) queue.push_back(d);
  }
}

// Ensures every included statement has the definitions of its read registers
// included too (or the register recorded as undefined). Returns true when the
// included set grew.
bool close_over_reads(const Rdg& rdg, std::set<int>& included, std::set<int>& undefined) {
  bool grew = false;
  size_t before = included.size();
  for (const auto& [stmt_idx, reads] : rdg.stmt_reads) {
    if (!included.count(stmt_idx)) continue;
    for (const RdgNode& n : reads) {
      if (n.version == 0) {
        undefined.insert(n.reg);
        continue;
      }
      auto def = rdg.def_stmt.find(n);
      if (def != rdg.def_stmt.end() && !included.count(def->second)) {
        include_def_closure(rdg, n, included, undefined);
        grew = true;
      }
      auto aux = rdg.aux_stmts.find(n);
      if (aux != rdg.aux_stmts.end())
        for (int a : aux->second)
          if (included.insert(a).second) grew = true;
    }
  }
  return grew || included.size() != before;
}

}  // namespace

SliceProgram compute_slice(const std::string& class_desc, const MethodDef& method,
                           const LiteralSite& literal, const DeobCandidate& candidate,
                           const std::vector<ExecutionPath>& paths,
                           const std::vector<Rdg>& rdgs) {
  SliceProgram slice;
  slice.origin = {class_desc, method.name, method.signature};
  slice.register_count = method.register_count;
  slice.labels = method.labels;
  slice.criterion = candidate.criterion;
  slice.literal_index = literal.stmt_index;
  slice.output_register = candidate.criterion.reg;

  std::set<int> included;
  std::set<int> undefined;

  for (const Rdg& rdg : rdgs) {
    RdgNode crit = rdg.final_node(candidate.criterion.reg);
    for (const RdgNode& n : reachable_nodes(rdg, crit)) {
      if (n.version == 0) {
        undefined.insert(n.reg);
        continue;
      }
      auto def = rdg.def_stmt.find(n);
      if (def != rdg.def_stmt.end()) included.insert(def->second);
      auto aux = rdg.aux_stmts.find(n);
      if (aux != rdg.aux_stmts.end())
        for (int a : aux->second) included.insert(a);
      auto uses = rdg.use_stmts.find(n);
      if (uses == rdg.use_stmts.end()) continue;
      for (int u : uses->second) {
        // A call enters the slice only when its result or mutated receiver
        // is marked (then its def/aux already pulled it in). Including every
        // call that merely reads a marked value would drag along unrelated
        // calls, such as a failing earlier deobfuscation candidate.
        Kind k = method.statements[u].kind();
        if (k == Kind::Invoke || k == Kind::FilledNewArray) continue;
        included.insert(u);
      }
    }
  }

  // all conditional opcodes (and gotos) encountered on any execution path
  for (const ExecutionPath& p : paths)
    for (int idx : p.statements)
      if (method.statements[idx].is_branchy()) included.insert(idx);

  // close over the reads of everything included, across all paths, until the
  // set stabilizes
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Rdg& rdg : rdgs)
      if (close_over_reads(rdg, included, undefined)) changed = true;
  }

  for (int idx : included) slice.statements.push_back(method.statements[idx]);
  std::sort(slice.statements.begin(), slice.statements.end(),
            [](const Statement& a, const Statement& b) { return a.index < b.index; });
  slice.undefined = std::move(undefined);
  return slice;
}

SliceProgram resolve_undefined(const MethodDef& method, const Cfg& cfg, SliceProgram slice,
                               const PathLimits& limits) {
  if (slice.undefined.empty()) return slice;

  int literal_index = slice.literal_index;
  std::vector<ExecutionPath> prefix_paths;
  try {
    prefix_paths = enumerate_paths(cfg, 0, literal_index, limits);
  } catch (const SliceError&) {
    throw SliceError(SliceError::Code::UnresolvableRegister,
                     "literal statement unreachable from method entry");
  }

  std::set<int> included;
  std::set<int> still_undefined;
  for (const ExecutionPath& p : prefix_paths) {
    Rdg rdg = build_rdg(method, p);
    for (int reg : slice.undefined) {
      // version of the register just before the literal executes; the literal
      // statement only writes its own register, which is never undefined
      RdgNode node = rdg.final_node(reg);
      if (node.version == 0) {
        still_undefined.insert(reg);
        continue;
      }
      include_def_closure(rdg, node, included, still_undefined);
    }
  }
  if (!still_undefined.empty()) {
    std::string regs;
    for (int r : still_undefined) regs += " " + register_name(r);
    throw SliceError(SliceError::Code::UnresolvableRegister,
                     "no in-method definition for" + regs);
  }

  std::set<int> have = slice.indices();
  for (int idx : included) {
    if (have.insert(idx).second) slice.statements.push_back(method.statements[idx]);
  }
  std::sort(slice.statements.begin(), slice.statements.end(),
            [](const Statement& a, const Statement& b) { return a.index < b.index; });
  slice.undefined.clear();
  return slice;
}

SliceProgram emit_slice(SliceProgram slice) {
  Statement emit;
  emit.index = slice.statements.empty() ? 0 : slice.statements.back().index + 1;
  emit.mnemonic = "emit-string";
  emit.info = lookup_op("emit-string");
  emit.regs = {slice.output_register};
  emit.raw_text = print_statement(emit);
  slice.statements.push_back(std::move(emit));
  slice.has_emit = true;
  return slice;
}

std::string print_slice(const SliceProgram& slice) {
  std::ostringstream out;
  out << "# slice of " << slice.origin.display() << " criterion=("
      << slice.criterion.stmt_index << ", " << register_name(slice.criterion.reg) << ")\n";
  for (const Statement& s : slice.statements)
    out << "    " << s.index << ": " << print_statement(s) << "\n";
  return out.str();
}

}  // namespace destring
