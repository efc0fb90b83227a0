#include "destring/scanner.hpp"

#include <deque>
#include <set>

namespace destring {

const char* condition_name(CandidateCondition c) {
  switch (c) {
    case CandidateCondition::ConstructorInit: return "constructor-init";
    case CandidateCondition::StaticStringCall: return "static-string-call";
    case CandidateCondition::CheckCastToString: return "check-cast";
  }
  return "?";
}

std::vector<LiteralSite> find_string_literals(const std::string& class_desc,
                                              const MethodDef& method) {
  std::vector<LiteralSite> out;
  for (const Statement& s : method.statements) {
    if (s.kind() != Kind::ConstString) continue;
    if (s.str_lit->empty()) continue;  // zero-length literals are never obfuscated
    LiteralSite site;
    site.method = {class_desc, method.name, method.signature};
    site.stmt_index = s.index;
    site.reg = s.regs[0];
    site.value = *s.str_lit;
    out.push_back(std::move(site));
  }
  return out;
}

bool is_excluded_class(std::string_view descriptor,
                       const std::vector<std::string>& exclusions) {
  std::string_view name = descriptor;
  if (!name.empty() && name.front() == 'L') name.remove_prefix(1);
  for (const std::string& prefix : exclusions)
    if (name.starts_with(prefix)) return true;
  return false;
}

const std::vector<std::string>& default_exclusions() {
  static const std::vector<std::string> defaults = {
      "okhttp3/",          "com/squareup/okhttp", "com/android/volley",
      "androidx/",         "android/support/",    "kotlin/",
      "com/google/",
  };
  return defaults;
}

std::optional<CandidateCondition> classify_candidate(const Statement& s) {
  if (s.kind() == Kind::Invoke) {
    InvokeKind ik = InvokeKind(s.info->sub);
    const MethodRef& m = *s.method_ref;
    if (ik == InvokeKind::Direct && m.class_desc == "Ljava/lang/String;" &&
        m.name == "<init>")
      return CandidateCondition::ConstructorInit;
    if (ik == InvokeKind::Static && return_type(m.signature) == "Ljava/lang/String;")
      return CandidateCondition::StaticStringCall;
  } else if (s.kind() == Kind::CheckCast && *s.type_ref == "Ljava/lang/String;") {
    return CandidateCondition::CheckCastToString;
  }
  return std::nullopt;
}

SlicingCriterion derive_criterion(const Statement& t, const MethodDef& method) {
  auto cond = classify_candidate(t);
  if (!cond) throw CriterionError("statement is not a deobfuscation candidate");
  int n = static_cast<int>(method.statements.size());
  switch (*cond) {
    case CandidateCondition::ConstructorInit: {
      if (t.index + 1 >= n)
        throw CriterionError("constructor call has no following statement");
      // the receiver register holds the constructed String
      return {t.index + 1, t.regs[0]};
    }
    case CandidateCondition::StaticStringCall: {
      if (t.index + 1 >= n) throw CriterionError("missing move-result-object after call");
      const Statement& next = method.statements[t.index + 1];
      if (next.kind() != Kind::MoveResult || MoveKind(next.info->sub) != MoveKind::Object)
        throw CriterionError("missing move-result-object after call");
      return {next.index, next.regs[0]};
    }
    case CandidateCondition::CheckCastToString:
      return {t.index, t.regs[0]};
  }
  throw CriterionError("unreachable");
}

std::vector<DeobCandidate> find_deob_candidates(const MethodDef& method, const Cfg& cfg,
                                                const LiteralSite& literal,
                                                int max_conditionals) {
  std::vector<DeobCandidate> out;
  if (literal.stmt_index < 0 || literal.stmt_index >= cfg.node_count) return out;

  std::set<int> admitted;
  // visited set keyed on (statement, conditionals consumed) so that a cheap
  // revisit of a statement is not blocked by an earlier expensive one
  std::set<std::pair<int, int>> visited;
  std::deque<std::pair<int, int>> queue;
  for (int succ : cfg.succ(literal.stmt_index)) {
    if (visited.insert({succ, 0}).second) queue.push_back({succ, 0});
  }

  while (!queue.empty()) {
    auto [idx, conds] = queue.front();
    queue.pop_front();
    const Statement& s = method.statements[idx];

    if (auto cond = classify_candidate(s); cond && admitted.insert(idx).second) {
      try {
        out.push_back({idx, *cond, derive_criterion(s, method)});
      } catch (const CriterionError&) {
        // result discarded by the program; cannot hold the deobfuscated
        // string, so the candidate is dropped
      }
    }

    int next_conds = conds;
    if (s.is_conditional()) {
      ++next_conds;
      if (next_conds > max_conditionals) continue;  // path abandoned
    }
    for (int succ : cfg.succ(idx)) {
      if (visited.insert({succ, next_conds}).second) queue.push_back({succ, next_conds});
    }
  }
  return out;
}

}  // namespace destring
