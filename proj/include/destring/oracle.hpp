#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "destring/smali.hpp"

namespace destring {

// Synthetic string-obfuscation transforms used to build ground-truth corpora.
enum class SchemeKind {
  XorTwoKeys,         // per-char XOR with two alternating short keys
  CaesarShift,        // per-char additive shift over UTF-16 code units
  ByteArrayDecode,    // string -> byte[] -> XOR -> new String(byte[])
  StaticTableLookup,  // per-char XOR against a <clinit>-built key table
};

const char* scheme_name(SchemeKind k);
std::optional<SchemeKind> scheme_from_name(std::string_view name);

struct ObfuscationScheme {
  SchemeKind kind = SchemeKind::XorTwoKeys;
  int junk_conditionals = 0;  // opaque-predicate blocks inserted per literal
  // Overrides the seeded key material (meaning depends on kind: XorTwoKeys
  // {k1,k2}; CaesarShift {shift}; ByteArrayDecode {key}; StaticTableLookup
  // the 16 table entries).
  std::optional<std::vector<int>> fixed_keys;
};

struct GroundTruthKey {
  std::string class_desc;
  std::string method_name;
  std::string method_sig;
  int literal_index = 0;
  auto operator<=>(const GroundTruthKey&) const = default;
};

struct GroundTruth {
  std::map<GroundTruthKey, std::u16string> entries;

  std::string serialize() const;
  static GroundTruth deserialize(std::string_view text);
};

// Replaces every non-empty string literal in non-excluded classes with its
// ciphertext plus decode logic, adds the generated decoder classes, and
// records the original plaintexts. Deterministic in (scheme, seed). The
// generated decoders are verified against the scheme definition at
// generation time.
std::pair<SmaliProgram, GroundTruth> obfuscate_program(const SmaliProgram& clean,
                                                       const ObfuscationScheme& scheme,
                                                       uint64_t seed);

// Reference (non-VM) decode of one ciphertext; used for the generation-time
// self check and by tests.
std::u16string scheme_decode(SchemeKind kind, const std::u16string& cipher,
                             const std::vector<int>& keys, int table_index);

// Writes one .smali file per class under `dir` (descriptor Lfoo/Bar; becomes
// foo/Bar.smali).
void write_program_tree(const SmaliProgram& program, const std::string& dir);

}  // namespace destring
