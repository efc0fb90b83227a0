#pragma once

#include <bit>
#include <optional>
#include <string>

#include "destring/vm.hpp"

namespace destring::vmdetail {

// Internal control-flow exception; caught at the public entry points and
// turned into an ExecResult / Captured status.
struct VmError {
  ExecStatus status;
  std::string detail;
};

[[noreturn]] inline void fail(ExecStatus s, std::string d) { throw VmError{s, std::move(d)}; }

// Registers are untyped: int/float (and long/double) reinterpret freely,
// matching the Dalvik register model.
int32_t as_int(const Value& v);
int64_t as_long(const Value& v);
float as_float(const Value& v);
double as_double(const Value& v);
const std::u16string& as_string(const Value& v);
ArrayVal& as_array(const Value& v);

Value default_for_type(std::string_view type);
char array_elem_kind(std::string_view array_type);
Value normalize_array_cell(char elem, const Value& v);

std::u16string int_to_units(int64_t v);

using BuiltinFn = std::optional<Value> (*)(std::vector<Value>& args);
// key: "Lclass;->name(sig)ret"
const BuiltinFn* find_builtin(const std::string& key);

}  // namespace destring::vmdetail
