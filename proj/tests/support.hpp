// Test-only oracles and corpus generators. Everything here is an independent
// route to the values the implementation must produce: brute-force searches,
// reference arithmetic built on wider intermediates, and seeded generators
// that know their own ground truth.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "destring/cfg.hpp"
#include "destring/parser.hpp"
#include "destring/smali.hpp"
#include "destring/util.hpp"

namespace testsupport {

using namespace destring;

inline std::string fixture_path(const std::string& rel) {
  return std::string(FIXTURES_DIR) + "/" + rel;
}

inline SmaliProgram parse_and_wrap(const std::string& text) {
  SmaliProgram prog;
  SmaliClass cls = parse_smali(text);
  prog.classes.emplace(cls.descriptor, std::move(cls));
  return prog;
}

inline SmaliProgram load_fixture(const std::string& rel) {
  LoadResult r = load_program({fixture_path(rel)});
  if (!r.failures.empty())
    throw std::runtime_error("fixture load failed: " + r.failures.front().path + ": " +
                             r.failures.front().error);
  return std::move(r.program);
}

// ---------------------------------------------------------------------------
// Brute-force path enumeration: exhaustive recursion with the same loop
// bound (back edges once, other edges twice), no queue caps, no path caps.
// ---------------------------------------------------------------------------

inline std::set<std::pair<int, int>> brute_back_edges(const Cfg& cfg, int start) {
  std::set<std::pair<int, int>> back;
  std::vector<int> colour(cfg.node_count, 0);
  // recursive colouring
  std::function<void(int)> visit = [&](int node) {
    colour[node] = 1;
    for (int succ : cfg.succ(node)) {
      if (colour[succ] == 0) visit(succ);
      else if (colour[succ] == 1) back.insert({node, succ});
    }
    colour[node] = 2;
  };
  visit(start);
  return back;
}

inline void brute_paths_rec(const Cfg& cfg, const std::set<std::pair<int, int>>& back,
                            int node, int target, std::map<std::pair<int, int>, int>& used,
                            std::vector<int>& path, std::vector<std::vector<int>>& out,
                            size_t hard_cap) {
  if (out.size() >= hard_cap) return;
  if (node == target) out.push_back(path);
  std::set<int> seen;
  for (int succ : cfg.succ(node)) {
    if (!seen.insert(succ).second) continue;
    std::pair<int, int> e{node, succ};
    int cap = back.count(e) ? 1 : 2;
    if (used[e] >= cap) continue;
    ++used[e];
    path.push_back(succ);
    brute_paths_rec(cfg, back, succ, target, used, path, out, hard_cap);
    path.pop_back();
    --used[e];
  }
}

inline std::vector<std::vector<int>> brute_force_paths(const Cfg& cfg, int s, int t,
                                                       size_t hard_cap = 100000) {
  std::vector<std::vector<int>> out;
  std::map<std::pair<int, int>, int> used;
  std::vector<int> path{s};
  std::set<std::pair<int, int>> back = brute_back_edges(cfg, s);
  brute_paths_rec(cfg, back, s, t, used, path, out, hard_cap);
  return out;
}

// Independent recount of expected CFG edges from per-opcode successor arity.
inline size_t expected_edge_count(const MethodDef& m) {
  size_t edges = 0;
  int n = static_cast<int>(m.statements.size());
  for (const Statement& s : m.statements) {
    bool has_next = s.index + 1 < n;
    switch (s.kind()) {
      case Kind::Return:
      case Kind::Throw: break;
      case Kind::Goto: edges += 1; break;
      case Kind::IfTest:
      case Kind::IfTestZ: edges += (has_next ? 1 : 0) + 1; break;
      case Kind::PackedSwitch:
      case Kind::SparseSwitch:
        edges += (has_next ? 1 : 0) + s.branch_targets.size();
        break;
      default: edges += has_next ? 1 : 0; break;
    }
  }
  return edges;
}

// Bounded candidate-reachability check, independent of the scanner's BFS:
// recursive DFS that abandons a branch after more than `budget` conditionals.
inline bool reachable_within_budget(const MethodDef& m, const Cfg& cfg, int from, int target,
                                    int budget) {
  std::set<std::pair<int, int>> seen;
  std::vector<std::pair<int, int>> stack;
  for (int s : cfg.succ(from)) stack.push_back({s, 0});
  while (!stack.empty()) {
    auto [idx, conds] = stack.back();
    stack.pop_back();
    if (!seen.insert({idx, conds}).second) continue;
    if (idx == target) return true;
    int next_conds = conds;
    if (m.statements[idx].is_conditional()) {
      ++next_conds;
      if (next_conds > budget) continue;
    }
    for (int s : cfg.succ(idx)) stack.push_back({s, next_conds});
  }
  return false;
}

// ---------------------------------------------------------------------------
// Reference Dalvik arithmetic, computed over wider intermediates than the
// interpreter uses.
// ---------------------------------------------------------------------------

struct RefArith {
  static int32_t binop_int(const std::string& op, int32_t a, int32_t b, bool* error) {
    *error = false;
    int64_t wa = a, wb = b;
    if (op == "add") return static_cast<int32_t>((wa + wb) & 0xFFFFFFFFLL);
    if (op == "sub") return static_cast<int32_t>((wa - wb) & 0xFFFFFFFFLL);
    if (op == "mul") return static_cast<int32_t>((wa * wb) & 0xFFFFFFFFLL);
    if (op == "div" || op == "rem") {
      if (b == 0) { *error = true; return 0; }
      if (a == INT32_MIN && b == -1) return op == "div" ? INT32_MIN : 0;
      int64_t q = wa / wb;
      return static_cast<int32_t>(op == "div" ? q : wa - q * wb);
    }
    if (op == "and") return a & b;
    if (op == "or") return a | b;
    if (op == "xor") return a ^ b;
    if (op == "shl") return static_cast<int32_t>((wa << (b & 31)) & 0xFFFFFFFFLL);
    if (op == "shr") return static_cast<int32_t>(wa >> (b & 31));
    if (op == "ushr")
      return static_cast<int32_t>(static_cast<uint64_t>(static_cast<uint32_t>(a)) >> (b & 31));
    if (op == "rsub") return static_cast<int32_t>((wb - wa) & 0xFFFFFFFFLL);
    throw std::logic_error("unknown ref op " + op);
  }

  static int64_t binop_long(const std::string& op, int64_t a, int64_t b, bool* error) {
    *error = false;
    __int128 wa = a, wb = b;
    auto wrap = [](__int128 v) {
      return static_cast<int64_t>(static_cast<uint64_t>(v & static_cast<__int128>(~0ULL)));
    };
    if (op == "add") return wrap(wa + wb);
    if (op == "sub") return wrap(wa - wb);
    if (op == "mul") return wrap(wa * wb);
    if (op == "div" || op == "rem") {
      if (b == 0) { *error = true; return 0; }
      if (a == INT64_MIN && b == -1) return op == "div" ? INT64_MIN : 0;
      __int128 q = wa / wb;
      return wrap(op == "div" ? q : wa - q * wb);
    }
    if (op == "and") return a & b;
    if (op == "or") return a | b;
    if (op == "xor") return a ^ b;
    if (op == "shl") return wrap(wa << (b & 63));
    if (op == "shr") return a >> (b & 63);
    if (op == "ushr") return static_cast<int64_t>(static_cast<uint64_t>(a) >> (b & 63));
    throw std::logic_error("unknown ref op " + op);
  }
};

// ---------------------------------------------------------------------------
// Synthetic method generation (smali text, then parsed)
// ---------------------------------------------------------------------------

// A generated method with one literal, int chains derived from it via
// length/charAt, optional forward conditionals, ending in a
// String.valueOf(I) anchor whose move-result-object is the natural
// condition-2 candidate.
struct SyntheticMethod {
  std::string class_text;
  std::string class_desc;
  std::u16string literal;
  int literal_reg = 0;
  // registers known to be (transitively) derived from the literal
  std::set<int> tainted;
  int criterion_source_reg = 0;  // the int register fed to valueOf
  bool criterion_tainted = false;
};

inline SyntheticMethod make_synthetic(uint64_t seed, int max_conditionals,
                                      bool force_tainted_criterion) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % (hi - lo + 1)); };

  SyntheticMethod out;
  std::ostringstream body;
  int next_reg = 0;
  std::vector<int> int_regs;  // defined int registers
  std::set<int>& tainted = out.tainted;
  int stmts = 0;

  const char* words[] = {"alpha", "bravo", "charlie", "delta", "echo", "foxtrot"};
  std::string lit = words[pick(0, 5)];
  lit += std::to_string(pick(10, 99));
  out.literal = std::u16string(lit.begin(), lit.end());

  int lit_reg = next_reg++;
  out.literal_reg = lit_reg;
  body << "    const-string v" << lit_reg << ", \"" << lit << "\"\n";
  ++stmts;

  // a few plain constants
  int n_consts = pick(1, 3);
  for (int i = 0; i < n_consts; ++i) {
    int r = next_reg++;
    body << "    const/16 v" << r << ", " << pick(1, 1000) << "\n";
    int_regs.push_back(r);
    ++stmts;
  }

  // literal-derived values
  int n_derived = pick(1, 2);
  for (int i = 0; i < n_derived; ++i) {
    int r = next_reg++;
    if (pick(0, 1) == 0) {
      body << "    invoke-virtual {v" << lit_reg << "}, Ljava/lang/String;->length()I\n";
    } else {
      int tmp = next_reg++;
      body << "    const/4 v" << tmp << ", " << pick(0, 3) << "\n";
      ++stmts;
      body << "    invoke-virtual {v" << lit_reg << ", v" << tmp
           << "}, Ljava/lang/String;->charAt(I)C\n";
    }
    body << "    move-result v" << r << "\n";
    stmts += 2;
    int_regs.push_back(r);
    tainted.insert(r);
  }

  const char* binops[] = {"add-int", "sub-int", "xor-int", "mul-int", "or-int", "and-int"};
  auto emit_binop = [&](int dst) {
    int a = int_regs[pick(0, static_cast<int>(int_regs.size()) - 1)];
    int b = a;
    while (b == a) b = int_regs[pick(0, static_cast<int>(int_regs.size()) - 1)];
    const char* op = binops[pick(0, 5)];
    body << "    " << op << " v" << dst << ", v" << a << ", v" << b << "\n";
    ++stmts;
    if (tainted.count(a) || tainted.count(b)) tainted.insert(dst);
    else tainted.erase(dst);
  };

  int n_mix = pick(2, 5);
  for (int i = 0; i < n_mix; ++i) {
    int dst = next_reg++;
    emit_binop(dst);
    int_regs.push_back(dst);
  }

  // forward conditionals guarding extra mixing
  int n_cond = max_conditionals > 0 ? pick(0, max_conditionals) : 0;
  for (int c = 0; c < n_cond; ++c) {
    int test = int_regs[pick(0, static_cast<int>(int_regs.size()) - 1)];
    const char* cond = pick(0, 1) ? "if-gez" : "if-nez";
    body << "    " << cond << " v" << test << ", :c" << c << "\n";
    ++stmts;
    int inner = pick(1, 2);
    for (int k = 0; k < inner; ++k) {
      // overwrite an existing register inside the branch
      int dst = int_regs[pick(0, static_cast<int>(int_regs.size()) - 1)];
      emit_binop(dst);
    }
    body << "  :c" << c << "\n";
  }

  // final mixing statement decides the criterion source
  int final_reg = next_reg++;
  if (force_tainted_criterion) {
    if (tainted.empty()) {
      // conditional-guarded overwrites can clobber every derived register;
      // tap the literal again
      int fresh = next_reg++;
      body << "    invoke-virtual {v" << lit_reg << "}, Ljava/lang/String;->length()I\n"
           << "    move-result v" << fresh << "\n";
      stmts += 2;
      int_regs.push_back(fresh);
      tainted.insert(fresh);
    }
    std::vector<int> tainted_list(tainted.begin(), tainted.end());
    int a = tainted_list[pick(0, static_cast<int>(tainted_list.size()) - 1)];
    int b = a;
    while (b == a) b = int_regs[pick(0, static_cast<int>(int_regs.size()) - 1)];
    body << "    add-int v" << final_reg << ", v" << a << ", v" << b << "\n";
    ++stmts;
    tainted.insert(final_reg);
  } else {
    emit_binop(final_reg);
  }
  int_regs.push_back(final_reg);
  out.criterion_source_reg = final_reg;
  out.criterion_tainted = tainted.count(final_reg) != 0;

  int result_reg = next_reg++;
  body << "    invoke-static {v" << final_reg
       << "}, Ljava/lang/String;->valueOf(I)Ljava/lang/String;\n";
  body << "    move-result-object v" << result_reg << "\n";
  body << "    return-void\n";
  stmts += 3;

  out.class_desc = "Lgen/S" + std::to_string(seed % 100000) + ";";
  std::ostringstream text;
  text << ".class public final " << out.class_desc << "\n.super Ljava/lang/Object;\n\n"
       << ".method public static run()V\n    .registers " << (next_reg + 1) << "\n"
       << body.str() << ".end method\n";
  out.class_text = text.str();
  return out;
}

// ---------------------------------------------------------------------------
// Clean English corpus for oracle round-trips and the reporting statistics.
// ---------------------------------------------------------------------------

inline std::string english_sentence(std::mt19937_64& rng) {
  static const char* words[] = {
      "the",    "quick",  "brown",  "fox",     "jumps",   "over",   "lazy",
      "dog",    "secret", "key",    "token",   "server",  "client", "network",
      "check",  "root",   "pinning", "session", "account", "balance", "transfer",
      "login",  "device", "update", "config",  "cache",   "error",  "value",
      "string", "handle", "request", "response"};
  int n = 2 + static_cast<int>(rng() % 4);
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += " ";
    s += words[rng() % (sizeof(words) / sizeof(words[0]))];
  }
  return s;
}

inline SmaliProgram make_clean_corpus(int classes, int methods_per_class,
                                      int literals_per_method, uint64_t seed,
                                      int excluded_classes = 0) {
  std::mt19937_64 rng(seed);
  SmaliProgram program;
  auto add_class = [&](const std::string& desc) {
    std::ostringstream text;
    text << ".class public " << desc << "\n.super Ljava/lang/Object;\n";
    for (int mi = 0; mi < methods_per_class; ++mi) {
      text << "\n.method public static m" << mi << "()V\n    .registers 4\n";
      for (int li = 0; li < literals_per_method; ++li) {
        int reg = li % 3;
        text << "    const-string v" << reg << ", \"" << english_sentence(rng) << "\"\n";
        if (rng() % 2) {
          text << "    const/16 v3, " << (1 + static_cast<int>(rng() % 500)) << "\n";
        }
      }
      text << "    return-void\n.end method\n";
    }
    SmaliClass cls = parse_smali(text.str(), desc);
    program.classes.emplace(cls.descriptor, std::move(cls));
  };
  for (int ci = 0; ci < classes; ++ci) add_class("Lapp/C" + std::to_string(ci) + ";");
  for (int ci = 0; ci < excluded_classes; ++ci)
    add_class("Lokhttp3/Lib" + std::to_string(ci) + ";");
  return program;
}

inline std::string u8(const std::u16string& s) { return utf16_to_utf8(s); }

}  // namespace testsupport
