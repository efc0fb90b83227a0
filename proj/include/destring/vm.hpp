#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "destring/slicer.hpp"
#include "destring/smali.hpp"

namespace destring {

// ---------------------------------------------------------------------------
// Runtime values. Registers are untyped 32/64-bit slots: boolean, byte,
// short and char all live as Int; wide values occupy the named register,
// with a WideHigh marker in its pair.
// ---------------------------------------------------------------------------

struct ArrayVal;
struct ObjectVal;

class Value {
 public:
  enum class Tag : uint8_t {
    Uninit, Null, Int, Long, Float, Double, Str, Array, Object, Class, WideHigh
  };

  Value() = default;
  static Value null() { return of(Tag::Null); }
  static Value wide_high() { return of(Tag::WideHigh); }
  static Value int32(int32_t v) { Value x = of(Tag::Int); x.i = v; return x; }
  static Value int64v(int64_t v) { Value x = of(Tag::Long); x.l = v; return x; }
  static Value float32(float v) { Value x = of(Tag::Float); x.f = v; return x; }
  static Value float64(double v) { Value x = of(Tag::Double); x.d = v; return x; }
  static Value string(std::u16string s) {
    Value x = of(Tag::Str);
    x.str = std::make_shared<const std::u16string>(std::move(s));
    return x;
  }
  static Value array(std::shared_ptr<ArrayVal> a) { Value x = of(Tag::Array); x.arr = std::move(a); return x; }
  static Value object(std::shared_ptr<ObjectVal> o) { Value x = of(Tag::Object); x.obj = std::move(o); return x; }
  static Value class_ref(std::string desc) { Value x = of(Tag::Class); x.cls = std::move(desc); return x; }

  Tag tag = Tag::Uninit;
  int32_t i = 0;
  int64_t l = 0;
  float f = 0;
  double d = 0;
  std::shared_ptr<const std::u16string> str;
  std::shared_ptr<ArrayVal> arr;
  std::shared_ptr<ObjectVal> obj;
  std::string cls;

  bool is_ref() const {
    return tag == Tag::Null || tag == Tag::Str || tag == Tag::Array || tag == Tag::Object ||
           tag == Tag::Class;
  }

 private:
  static Value of(Tag t) { Value v; v.tag = t; return v; }
};

struct ArrayVal {
  char elem = 'I';  // B C S I J Z F D L(reference)
  std::vector<Value> cells;
};

struct ObjectVal {
  std::string desc;
  std::map<std::string, Value> fields;
  std::u16string builder;  // buffer for StringBuilder / StringBuffer
};

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

struct ExecBudget {
  std::chrono::milliseconds wall_clock{5000};
  uint64_t max_steps = 10'000'000;
};

enum class ExecStatus : uint8_t { Ok, Timeout, UnsupportedOpcode, RuntimeError };

const char* status_name(ExecStatus s);

struct ExecResult {
  ExecStatus status = ExecStatus::RuntimeError;
  std::optional<std::u16string> output;  // present iff status == Ok
  uint64_t steps = 0;
  std::optional<std::string> error_detail;
};

struct Frame {
  MethodRef method;
  std::vector<Value> registers;
  int pc = 0;
};

// A Dalvik-subset interpreter. Static state (field values, initialized
// classes) lives inside the interpreter instance, never in the SmaliProgram;
// one instance per execution gives deterministic, isolated runs.
class Interpreter {
 public:
  Interpreter(const SmaliProgram& program, ExecBudget budget);
  ~Interpreter();

  // Runs a closed slice; the trailing emit statement produces the output.
  ExecResult execute(const SliceProgram& slice);

  // Runs a whole method from index 0 and captures the value of the criterion
  // register each time the criterion statement executes (last capture wins).
  // Used by slice-vs-full-method oracles.
  struct Captured {
    ExecStatus status = ExecStatus::RuntimeError;
    Value value;
    uint64_t steps = 0;
    std::string error;
  };
  Captured execute_method_capture(const std::string& class_desc, const MethodDef& method,
                                  const SlicingCriterion& criterion,
                                  std::vector<Value> args = {});

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Convenience wrapper: fresh interpreter, one slice.
ExecResult execute(const SliceProgram& slice, const SmaliProgram& program,
                   const ExecBudget& budget);

// ---------------------------------------------------------------------------
// Candidate driver: slice and execute candidates in order, first Ok with
// non-empty output wins.
// ---------------------------------------------------------------------------

struct CandidateAttempt {
  DeobCandidate candidate;
  std::string stage;  // "rejected", "executed"
  std::string detail;
  std::optional<ExecResult> exec;
  int slice_size = 0;
};

struct LiteralOutcome {
  LiteralSite literal;
  int candidate_count = 0;
  bool resolved = false;
  std::optional<DeobCandidate> chosen;
  std::optional<ExecResult> exec;  // result of the winning (or last) execution
  int slice_size = 0;
  uint64_t steps = 0;  // total interpreter steps spent on this literal
  std::vector<CandidateAttempt> attempts;
  std::optional<SliceProgram> slice;  // winning slice, for --dump-slices

  // "ok", "rejected", "timeout", "unsupported-opcode", "runtime-error",
  // "no-candidates", "empty-output"
  std::string status_string() const;
};

LiteralOutcome run_candidates(const SmaliProgram& program, const std::string& class_desc,
                              const MethodDef& method, const Cfg& cfg,
                              const LiteralSite& literal,
                              const std::vector<DeobCandidate>& candidates,
                              const PathLimits& limits, const ExecBudget& budget);

}  // namespace destring
