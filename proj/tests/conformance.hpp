// Randomized opcode conformance: every supported arithmetic/logic opcode is
// executed through the interpreter and compared against an independent
// reimplementation of its Dalvik semantics (wider intermediates, explicit
// Java narrowing rules). Shared by the unit suite and the acceptance binary.
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "destring/parser.hpp"
#include "destring/vm.hpp"
#include "support.hpp"

namespace conformance {

using namespace destring;
using testsupport::RefArith;

struct Report {
  uint64_t checks = 0;
  uint64_t mismatches = 0;
  std::vector<std::string> details;

  void fail(const std::string& what) {
    ++mismatches;
    if (details.size() < 20) details.push_back(what);
  }
};

// ---------------------------------------------------------------------------
// Reference semantics for the non-integer opcodes.
// ---------------------------------------------------------------------------

inline int32_t ref_jfp_to_int(double d) {
  if (std::isnan(d)) return 0;
  if (d >= 2147483648.0) return INT32_MAX;
  if (d <= -2147483648.0) return INT32_MIN;
  return static_cast<int32_t>(d);
}

inline int64_t ref_jfp_to_long(double d) {
  if (std::isnan(d)) return 0;
  if (d >= 9223372036854775808.0) return INT64_MAX;
  if (d <= -9223372036854775808.0) return INT64_MIN;
  return static_cast<int64_t>(d);
}

template <typename F>
int32_t ref_fp_cmp(F a, F b, bool gt_bias) {
  if (std::isnan(a) || std::isnan(b)) return gt_bias ? 1 : -1;
  return a < b ? -1 : (a > b ? 1 : 0);
}

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

class Runner {
 public:
  explicit Runner(uint64_t seed, int pairs) : rng_(seed), pairs_(pairs) {}

  Report run() {
    int_binops();
    long_binops();
    fp_binops();
    lit_binops();
    unops();
    cmps();
    return report_;
  }

 private:
  std::mt19937_64 rng_;
  int pairs_;
  Report report_;
  std::map<std::string, SmaliProgram> cache_;

  int32_t rand_int() {
    switch (rng_() % 8) {
      case 0: return 0;
      case 1: return 1;
      case 2: return -1;
      case 3: return INT32_MIN;
      case 4: return INT32_MAX;
      case 5: return static_cast<int32_t>(rng_() % 64);  // shift-sized
      default: return static_cast<int32_t>(rng_());
    }
  }

  int64_t rand_long() {
    switch (rng_() % 8) {
      case 0: return 0;
      case 1: return 1;
      case 2: return -1;
      case 3: return INT64_MIN;
      case 4: return INT64_MAX;
      case 5: return static_cast<int64_t>(rng_() % 64);
      default: return static_cast<int64_t>(rng_());
    }
  }

  float rand_float() {
    switch (rng_() % 8) {
      case 0: return 0.0f;
      case 1: return -0.0f;
      case 2: return std::numeric_limits<float>::quiet_NaN();
      case 3: return std::numeric_limits<float>::infinity();
      case 4: return -std::numeric_limits<float>::infinity();
      default: return std::bit_cast<float>(static_cast<int32_t>(rng_()));
    }
  }

  double rand_double() {
    switch (rng_() % 8) {
      case 0: return 0.0;
      case 1: return -0.0;
      case 2: return std::numeric_limits<double>::quiet_NaN();
      case 3: return std::numeric_limits<double>::infinity();
      case 4: return -std::numeric_limits<double>::infinity();
      default: return std::bit_cast<double>(static_cast<int64_t>(rng_()));
    }
  }

  // Builds (and caches) a one-method class whose run() wraps the opcode.
  const SmaliProgram& harness(const std::string& body, const std::string& sig,
                              int registers) {
    std::string key = sig + "|" + body;
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::ostringstream text;
    text << ".class Lconf/T;\n.super Ljava/lang/Object;\n"
         << ".method public static run" << sig << "\n    .registers " << registers << "\n"
         << body << ".end method\n";
    SmaliProgram prog;
    SmaliClass cls = parse_smali(text.str());
    prog.classes.emplace(cls.descriptor, std::move(cls));
    return cache_.emplace(key, std::move(prog)).first->second;
  }

  Interpreter::Captured execute(const SmaliProgram& prog, int op_index,
                                std::vector<Value> args) {
    const MethodDef& m = prog.classes.begin()->second.methods[0];
    Interpreter interp(prog, ExecBudget{});
    return interp.execute_method_capture("Lconf/T;", m, SlicingCriterion{op_index, 0},
                                         std::move(args));
  }

  void check_int_result(const std::string& what, const Interpreter::Captured& got,
                        int32_t want, bool want_error) {
    ++report_.checks;
    if (want_error) {
      if (got.status != ExecStatus::RuntimeError)
        report_.fail(what + ": expected arithmetic error");
      return;
    }
    if (got.status != ExecStatus::Ok) {
      report_.fail(what + ": unexpected status " + std::string(status_name(got.status)) +
                   " (" + got.error + ")");
      return;
    }
    if (got.value.tag != Value::Tag::Int || got.value.i != want)
      report_.fail(what + ": got " + std::to_string(got.value.i) + " want " +
                   std::to_string(want));
  }

  void check_long_result(const std::string& what, const Interpreter::Captured& got,
                         int64_t want, bool want_error) {
    ++report_.checks;
    if (want_error) {
      if (got.status != ExecStatus::RuntimeError)
        report_.fail(what + ": expected arithmetic error");
      return;
    }
    if (got.status != ExecStatus::Ok) {
      report_.fail(what + ": unexpected status " + std::string(status_name(got.status)));
      return;
    }
    if (got.value.tag != Value::Tag::Long || got.value.l != want)
      report_.fail(what + ": got " + std::to_string(got.value.l) + " want " +
                   std::to_string(want));
  }

  template <typename F>
  void check_fp_result(const std::string& what, const Interpreter::Captured& got, F want) {
    ++report_.checks;
    if (got.status != ExecStatus::Ok) {
      report_.fail(what + ": unexpected status");
      return;
    }
    F have;
    if constexpr (sizeof(F) == 4) {
      if (got.value.tag != Value::Tag::Float) {
        report_.fail(what + ": wrong result tag");
        return;
      }
      have = got.value.f;
    } else {
      if (got.value.tag != Value::Tag::Double) {
        report_.fail(what + ": wrong result tag");
        return;
      }
      have = got.value.d;
    }
    bool equal = (std::isnan(have) && std::isnan(want)) ||
                 std::memcmp(&have, &want, sizeof(F)) == 0;
    if (!equal) report_.fail(what + ": float mismatch");
  }

  void int_binops() {
    const char* ops[] = {"add", "sub", "mul", "div", "rem", "and",
                         "or",  "xor", "shl", "shr", "ushr"};
    for (const char* op : ops) {
      const SmaliProgram& normal = harness(
          "    " + std::string(op) + "-int v0, p0, p1\n    return v0\n", "(II)I", 4);
      const SmaliProgram& two_addr = harness(
          "    move v0, p0\n    " + std::string(op) + "-int/2addr v0, p1\n    return v0\n",
          "(II)I", 4);
      for (int k = 0; k < pairs_; ++k) {
        int32_t a = rand_int(), b = rand_int();
        bool err = false;
        int32_t want = RefArith::binop_int(op, a, b, &err);
        check_int_result(std::string(op) + "-int",
                         execute(normal, 0, {Value::int32(a), Value::int32(b)}), want, err);
        check_int_result(std::string(op) + "-int/2addr",
                         execute(two_addr, 1, {Value::int32(a), Value::int32(b)}), want,
                         err);
      }
    }
  }

  void long_binops() {
    const char* ops[] = {"add", "sub", "mul", "div", "rem", "and",
                         "or",  "xor", "shl", "shr", "ushr"};
    for (const char* op : ops) {
      bool shift = std::string(op) == "shl" || std::string(op) == "shr" ||
                   std::string(op) == "ushr";
      std::string sig = shift ? "(JI)J" : "(JJ)J";
      std::string second = shift ? "p2" : "p2";
      int regs = shift ? 6 : 7;
      const SmaliProgram& normal =
          harness("    " + std::string(op) + "-long v0, p0, " + second +
                      "\n    return-wide v0\n",
                  sig, regs);
      const SmaliProgram& two_addr =
          harness("    move-wide v0, p0\n    " + std::string(op) + "-long/2addr v0, " +
                      second + "\n    return-wide v0\n",
                  sig, regs);
      for (int k = 0; k < pairs_; ++k) {
        int64_t a = rand_long();
        int64_t b = rand_long();
        bool err = false;
        int64_t want = RefArith::binop_long(op, a, b, &err);
        std::vector<Value> args = {Value::int64v(a)};
        if (shift) args.push_back(Value::int32(static_cast<int32_t>(b)));
        else args.push_back(Value::int64v(b));
        if (shift) want = RefArith::binop_long(op, a, static_cast<int32_t>(b), &err);
        check_long_result(std::string(op) + "-long", execute(normal, 0, args), want, err);
        check_long_result(std::string(op) + "-long/2addr", execute(two_addr, 1, args),
                          want, err);
      }
    }
  }

  void fp_binops() {
    const char* ops[] = {"add", "sub", "mul", "div", "rem"};
    for (const char* op : ops) {
      const SmaliProgram& f_normal = harness(
          "    " + std::string(op) + "-float v0, p0, p1\n    return v0\n", "(FF)F", 4);
      const SmaliProgram& f_2addr = harness(
          "    move v0, p0\n    " + std::string(op) + "-float/2addr v0, p1\n    return v0\n",
          "(FF)F", 4);
      const SmaliProgram& d_normal =
          harness("    " + std::string(op) + "-double v0, p0, p2\n    return-wide v0\n",
                  "(DD)D", 7);
      const SmaliProgram& d_2addr = harness(
          "    move-wide v0, p0\n    " + std::string(op) +
              "-double/2addr v0, p2\n    return-wide v0\n",
          "(DD)D", 7);
      for (int k = 0; k < pairs_; ++k) {
        float fa = rand_float(), fb = rand_float();
        double da = rand_double(), db = rand_double();
        std::string o = op;
        float fwant = o == "add"   ? fa + fb
                      : o == "sub" ? fa - fb
                      : o == "mul" ? fa * fb
                      : o == "div" ? fa / fb
                                   : std::fmod(fa, fb);
        double dwant = o == "add"   ? da + db
                       : o == "sub" ? da - db
                       : o == "mul" ? da * db
                       : o == "div" ? da / db
                                    : std::fmod(da, db);
        check_fp_result(o + "-float",
                        execute(f_normal, 0, {Value::float32(fa), Value::float32(fb)}),
                        fwant);
        check_fp_result(o + "-float/2addr",
                        execute(f_2addr, 1, {Value::float32(fa), Value::float32(fb)}),
                        fwant);
        check_fp_result(o + "-double",
                        execute(d_normal, 0, {Value::float64(da), Value::float64(db)}),
                        dwant);
        check_fp_result(o + "-double/2addr",
                        execute(d_2addr, 1, {Value::float64(da), Value::float64(db)}),
                        dwant);
      }
    }
  }

  void lit_binops() {
    struct L { const char* mnemonic; const char* ref; int lit_lo, lit_hi; };
    const L lit16[] = {
        {"add-int/lit16", "add", -32768, 32767}, {"rsub-int", "rsub", -32768, 32767},
        {"mul-int/lit16", "mul", -32768, 32767}, {"div-int/lit16", "div", -32768, 32767},
        {"rem-int/lit16", "rem", -32768, 32767}, {"and-int/lit16", "and", -32768, 32767},
        {"or-int/lit16", "or", -32768, 32767},   {"xor-int/lit16", "xor", -32768, 32767},
    };
    const L lit8[] = {
        {"add-int/lit8", "add", -128, 127},   {"rsub-int/lit8", "rsub", -128, 127},
        {"mul-int/lit8", "mul", -128, 127},   {"div-int/lit8", "div", -128, 127},
        {"rem-int/lit8", "rem", -128, 127},   {"and-int/lit8", "and", -128, 127},
        {"or-int/lit8", "or", -128, 127},     {"xor-int/lit8", "xor", -128, 127},
        {"shl-int/lit8", "shl", 0, 63},       {"shr-int/lit8", "shr", 0, 63},
        {"ushr-int/lit8", "ushr", 0, 63},
    };
    auto run_family = [&](const L* fam, size_t n) {
      for (size_t i = 0; i < n; ++i) {
        const L& e = fam[i];
        int lits = 50;
        int per_lit = std::max(1, pairs_ / lits);
        for (int li = 0; li < lits; ++li) {
          int64_t span = static_cast<int64_t>(e.lit_hi) - e.lit_lo + 1;
          int32_t lit = e.lit_lo + static_cast<int32_t>(rng_() % span);
          const SmaliProgram& prog = harness("    " + std::string(e.mnemonic) +
                                                 " v0, p0, " + to_hex_literal(lit) +
                                                 "\n    return v0\n",
                                             "(I)I", 3);
          for (int k = 0; k < per_lit; ++k) {
            int32_t a = rand_int();
            bool err = false;
            int32_t want = RefArith::binop_int(e.ref, a, lit, &err);
            check_int_result(e.mnemonic, execute(prog, 0, {Value::int32(a)}), want, err);
          }
        }
      }
    };
    run_family(lit16, sizeof(lit16) / sizeof(L));
    run_family(lit8, sizeof(lit8) / sizeof(L));
  }

  void unops() {
    for (int k = 0; k < pairs_; ++k) {
      int32_t a = rand_int();
      int64_t l = rand_long();
      float f = rand_float();
      double d = rand_double();

      auto one_int = [&](const std::string& op, const std::string& sig, Value arg,
                         int32_t want, int regs) {
        const SmaliProgram& prog =
            harness("    " + op + " v0, p0\n    return v0\n", sig, regs);
        check_int_result(op, execute(prog, 0, {arg}), want, false);
      };
      auto one_long = [&](const std::string& op, const std::string& sig, Value arg,
                          int64_t want, int regs) {
        const SmaliProgram& prog =
            harness("    " + op + " v0, p0\n    return-wide v0\n", sig, regs);
        check_long_result(op, execute(prog, 0, {arg}), want, false);
      };

      one_int("neg-int", "(I)I", Value::int32(a),
              static_cast<int32_t>(0u - static_cast<uint32_t>(a)), 3);
      one_int("not-int", "(I)I", Value::int32(a), ~a, 3);
      one_int("int-to-byte", "(I)I", Value::int32(a), static_cast<int8_t>(a), 3);
      one_int("int-to-char", "(I)I", Value::int32(a), a & 0xFFFF, 3);
      one_int("int-to-short", "(I)I", Value::int32(a), static_cast<int16_t>(a), 3);
      one_int("long-to-int", "(J)I", Value::int64v(l), static_cast<int32_t>(l), 3);
      one_int("float-to-int", "(F)I", Value::float32(f), ref_jfp_to_int(f), 3);
      one_int("double-to-int", "(D)I", Value::float64(d), ref_jfp_to_int(d), 4);

      one_long("neg-long", "(J)J", Value::int64v(l),
               static_cast<int64_t>(0ull - static_cast<uint64_t>(l)), 5);
      one_long("not-long", "(J)J", Value::int64v(l), ~l, 5);
      one_long("int-to-long", "(I)J", Value::int32(a), static_cast<int64_t>(a), 4);
      one_long("float-to-long", "(F)J", Value::float32(f), ref_jfp_to_long(f), 4);
      one_long("double-to-long", "(D)J", Value::float64(d), ref_jfp_to_long(d), 5);

      // conversions into floating registers, compared bitwise
      {
        SlicingCriterion crit{0, 0};
        const SmaliProgram& p1 = harness("    int-to-float v0, p0\n    return v0\n",
                                         "(I)F", 3);
        check_fp_result("int-to-float", execute(p1, crit.stmt_index, {Value::int32(a)}),
                        static_cast<float>(a));
        const SmaliProgram& p2 = harness("    long-to-float v0, p0\n    return v0\n",
                                         "(J)F", 3);
        check_fp_result("long-to-float", execute(p2, 0, {Value::int64v(l)}),
                        static_cast<float>(l));
        const SmaliProgram& p3 = harness("    int-to-double v0, p0\n    return-wide v0\n",
                                         "(I)D", 4);
        check_fp_result("int-to-double", execute(p3, 0, {Value::int32(a)}),
                        static_cast<double>(a));
        const SmaliProgram& p4 = harness("    long-to-double v0, p0\n    return-wide v0\n",
                                         "(J)D", 5);
        check_fp_result("long-to-double", execute(p4, 0, {Value::int64v(l)}),
                        static_cast<double>(l));
        const SmaliProgram& p5 = harness("    float-to-double v0, p0\n    return-wide v0\n",
                                         "(F)D", 4);
        check_fp_result("float-to-double", execute(p5, 0, {Value::float32(f)}),
                        static_cast<double>(f));
        const SmaliProgram& p6 = harness("    double-to-float v0, p0\n    return v0\n",
                                         "(D)F", 3);
        check_fp_result("double-to-float", execute(p6, 0, {Value::float64(d)}),
                        static_cast<float>(d));
        const SmaliProgram& p7 = harness("    neg-float v0, p0\n    return v0\n", "(F)F",
                                         3);
        check_fp_result("neg-float", execute(p7, 0, {Value::float32(f)}), -f);
        const SmaliProgram& p8 = harness("    neg-double v0, p0\n    return-wide v0\n",
                                         "(D)D", 5);
        check_fp_result("neg-double", execute(p8, 0, {Value::float64(d)}), -d);
      }
    }
  }

  void cmps() {
    const SmaliProgram& cf = harness("    cmpl-float v0, p0, p1\n    return v0\n", "(FF)I", 4);
    const SmaliProgram& cg = harness("    cmpg-float v0, p0, p1\n    return v0\n", "(FF)I", 4);
    const SmaliProgram& dl = harness("    cmpl-double v0, p0, p2\n    return v0\n", "(DD)I", 7);
    const SmaliProgram& dg = harness("    cmpg-double v0, p0, p2\n    return v0\n", "(DD)I", 7);
    const SmaliProgram& ll = harness("    cmp-long v0, p0, p2\n    return v0\n", "(JJ)I", 7);
    for (int k = 0; k < pairs_; ++k) {
      float fa = rand_float(), fb = rand_float();
      double da = rand_double(), db = rand_double();
      int64_t la = rand_long(), lb = rand_long();
      check_int_result("cmpl-float",
                       execute(cf, 0, {Value::float32(fa), Value::float32(fb)}),
                       ref_fp_cmp(fa, fb, false), false);
      check_int_result("cmpg-float",
                       execute(cg, 0, {Value::float32(fa), Value::float32(fb)}),
                       ref_fp_cmp(fa, fb, true), false);
      check_int_result("cmpl-double",
                       execute(dl, 0, {Value::float64(da), Value::float64(db)}),
                       ref_fp_cmp(da, db, false), false);
      check_int_result("cmpg-double",
                       execute(dg, 0, {Value::float64(da), Value::float64(db)}),
                       ref_fp_cmp(da, db, true), false);
      check_int_result("cmp-long", execute(ll, 0, {Value::int64v(la), Value::int64v(lb)}),
                       la < lb ? -1 : (la > lb ? 1 : 0), false);
    }
  }
};

inline Report run_conformance(uint64_t seed, int pairs) {
  return Runner(seed, pairs).run();
}

}  // namespace conformance
