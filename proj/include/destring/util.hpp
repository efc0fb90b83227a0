#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace destring {

// UTF-8 <-> UTF-16 conversion. Invalid UTF-8 bytes are passed through as
// single code units so that round-trips never lose data.
std::u16string utf8_to_utf16(std::string_view s);
std::string utf16_to_utf8(std::u16string_view s);

// Smali string escaping. `unescape_smali` takes the quoted body (without the
// surrounding quotes) and resolves \uXXXX, \n, \t, \r, \b, \f, \', \", \\.
// `escape_smali` is the canonical inverse used by the printer: printable
// ASCII stays literal, everything else becomes \uXXXX.
std::u16string unescape_smali(std::string_view body);
std::string escape_smali(std::u16string_view units);

std::string trim(std::string_view s);

// Splits a statement operand list on `sep`, ignoring separators inside
// quoted strings and {...} register lists.
std::vector<std::string> split_top_level(std::string_view s, char sep);

// Parses a Smali integer literal: optional sign, decimal or 0x hex, an
// optional type suffix (t/s/l, upper or lower). Throws std::invalid_argument.
int64_t parse_int_literal(std::string_view tok);

std::string to_hex_literal(int64_t v);

inline std::string register_name(int reg) { return "v" + std::to_string(reg); }

}  // namespace destring
