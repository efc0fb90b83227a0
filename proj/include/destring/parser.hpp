#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "destring/smali.hpp"

namespace destring {

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_no(line) {}
  int line_no;
};

// Parses one class from Smali source text. Annotations, debug directives and
// try/catch ranges are skipped; parameter registers are normalized to their
// vK aliases; string literals are unescaped to UTF-16 code units.
SmaliClass parse_smali(std::string_view text, std::string source_file = "");

struct LoadFailure {
  std::string path;
  std::string error;
};

struct LoadResult {
  SmaliProgram program;
  std::vector<LoadFailure> failures;
};

// Loads every .smali file under the given files/directories. Per-file parse
// failures (including duplicate class descriptors) are collected, not fatal.
LoadResult load_program(const std::vector<std::string>& paths);

}  // namespace destring
