#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "destring/cfg.hpp"
#include "destring/smali.hpp"

namespace destring {

// Slicing criterion: statement index plus the register of interest.
struct SlicingCriterion {
  int stmt_index = 0;
  int reg = 0;
  bool operator==(const SlicingCriterion&) const = default;
};

struct LiteralSite {
  MethodRef method;  // class descriptor + method name/signature
  int stmt_index = 0;
  int reg = 0;
  std::u16string value;
};

enum class CandidateCondition { ConstructorInit, StaticStringCall, CheckCastToString };

const char* condition_name(CandidateCondition c);

struct DeobCandidate {
  int stmt_index = 0;
  CandidateCondition condition;
  SlicingCriterion criterion;
};

struct CriterionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All non-empty string literal definitions in statement order.
std::vector<LiteralSite> find_string_literals(const std::string& class_desc,
                                              const MethodDef& method);

// True when the class descriptor starts with any of the configured package
// prefixes (compared without the leading 'L').
bool is_excluded_class(std::string_view descriptor, const std::vector<std::string>& exclusions);
const std::vector<std::string>& default_exclusions();

// Bounded forward breadth-first search from the statement after the literal.
// A path is abandoned once it has traversed more than `max_conditionals`
// branch statements (goto is free). Candidates are returned in discovery
// order, deduplicated by statement index; candidates whose criterion cannot
// be derived (missing move-result-object) are dropped.
std::vector<DeobCandidate> find_deob_candidates(const MethodDef& method, const Cfg& cfg,
                                                const LiteralSite& literal,
                                                int max_conditionals);

// Derives the slicing criterion for a candidate statement; throws
// CriterionError when a condition-2 candidate has no adjacent
// move-result-object.
SlicingCriterion derive_criterion(const Statement& t, const MethodDef& method);

// Structural candidate test used by the search; exposed for tests.
std::optional<CandidateCondition> classify_candidate(const Statement& s);

}  // namespace destring
