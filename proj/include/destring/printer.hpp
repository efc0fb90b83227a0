#pragma once

#include <string>

#include "destring/smali.hpp"

namespace destring {

// Canonical Smali emission; parse(print(parse(x))) == parse(x).
std::string print_statement(const Statement& s);
std::string print_method(const MethodDef& m);
std::string print_class(const SmaliClass& c);

}  // namespace destring
