#include "destring/cfg.hpp"

#include <sstream>

#include "destring/printer.hpp"

namespace destring {

namespace {

int resolve_label(const MethodDef& m, const std::string& label) {
  auto it = m.labels.find(label);
  if (it == m.labels.end())
    throw CfgError("dangling label :" + label + " in " + m.name + m.signature);
  if (it->second >= static_cast<int>(m.statements.size()))
    throw CfgError("label :" + label + " points past the last statement of " + m.name +
                   m.signature);
  return it->second;
}

}  // namespace

Cfg build_cfg(const MethodDef& method) {
  Cfg cfg;
  int n = static_cast<int>(method.statements.size());
  cfg.node_count = n;
  cfg.successors.resize(n);
  cfg.predecessors.resize(n);

  for (int i = 0; i < n; ++i) {
    ++cfg.build_ops;
    const Statement& s = method.statements[i];
    std::vector<int>& succ = cfg.successors[i];
    switch (s.kind()) {
      case Kind::Return:
      case Kind::Throw:
        break;
      case Kind::Goto:
        succ.push_back(resolve_label(method, s.branch_targets[0]));
        break;
      case Kind::IfTest:
      case Kind::IfTestZ:
        if (i + 1 < n) succ.push_back(i + 1);
        succ.push_back(resolve_label(method, s.branch_targets[0]));
        break;
      case Kind::PackedSwitch:
      case Kind::SparseSwitch: {
        if (i + 1 < n) succ.push_back(i + 1);
        for (const std::string& t : s.branch_targets)
          succ.push_back(resolve_label(method, t));
        break;
      }
      default:
        if (i + 1 < n) succ.push_back(i + 1);
        break;
    }
    cfg.build_ops += succ.size();
  }
  for (int i = 0; i < n; ++i)
    for (int t : cfg.successors[i]) cfg.predecessors[t].push_back(i);
  return cfg;
}

std::string cfg_to_dot(const MethodDef& method, const Cfg& cfg) {
  std::ostringstream out;
  out << "digraph \"" << method.name << "\" {\n";
  for (int i = 0; i < cfg.node_count; ++i) {
    std::string label = print_statement(method.statements[i]);
    std::string escaped;
    for (char c : label) {
      if (c == '"' || c == '\\') escaped.push_back('\\');
      escaped.push_back(c);
    }
    out << "  n" << i << " [label=\"" << i << ": " << escaped << "\"];\n";
    for (int t : cfg.successors[i]) out << "  n" << i << " -> n" << t << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace destring
