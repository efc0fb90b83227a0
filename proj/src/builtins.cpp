#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "destring/util.hpp"
#include "vm_internal.hpp"

namespace destring::vmdetail {

int32_t as_int(const Value& v) {
  switch (v.tag) {
    case Value::Tag::Int: return v.i;
    case Value::Tag::Float: return std::bit_cast<int32_t>(v.f);
    case Value::Tag::Uninit: fail(ExecStatus::RuntimeError, "read of uninitialized register");
    case Value::Tag::WideHigh:
      fail(ExecStatus::RuntimeError, "misaligned read of a wide register pair");
    default: fail(ExecStatus::RuntimeError, "expected a 32-bit value");
  }
}

int64_t as_long(const Value& v) {
  switch (v.tag) {
    case Value::Tag::Long: return v.l;
    case Value::Tag::Double: return std::bit_cast<int64_t>(v.d);
    case Value::Tag::Uninit: fail(ExecStatus::RuntimeError, "read of uninitialized register");
    default: fail(ExecStatus::RuntimeError, "expected a 64-bit value");
  }
}

float as_float(const Value& v) {
  switch (v.tag) {
    case Value::Tag::Float: return v.f;
    case Value::Tag::Int: return std::bit_cast<float>(v.i);
    case Value::Tag::Uninit: fail(ExecStatus::RuntimeError, "read of uninitialized register");
    default: fail(ExecStatus::RuntimeError, "expected a 32-bit value");
  }
}

double as_double(const Value& v) {
  switch (v.tag) {
    case Value::Tag::Double: return v.d;
    case Value::Tag::Long: return std::bit_cast<double>(v.l);
    case Value::Tag::Uninit: fail(ExecStatus::RuntimeError, "read of uninitialized register");
    default: fail(ExecStatus::RuntimeError, "expected a 64-bit value");
  }
}

const std::u16string& as_string(const Value& v) {
  if (v.tag == Value::Tag::Null)
    fail(ExecStatus::RuntimeError, "null dereference (string expected)");
  if (v.tag != Value::Tag::Str) fail(ExecStatus::RuntimeError, "expected a String value");
  return *v.str;
}

ArrayVal& as_array(const Value& v) {
  if (v.tag == Value::Tag::Null)
    fail(ExecStatus::RuntimeError, "null dereference (array expected)");
  if (v.tag != Value::Tag::Array) fail(ExecStatus::RuntimeError, "expected an array value");
  return *v.arr;
}

Value default_for_type(std::string_view type) {
  if (type.empty()) return Value::null();
  switch (type.front()) {
    case 'J': return Value::int64v(0);
    case 'D': return Value::float64(0);
    case 'F': return Value::float32(0);
    case 'L': case '[': return Value::null();
    default: return Value::int32(0);
  }
}

char array_elem_kind(std::string_view array_type) {
  if (array_type.size() < 2 || array_type.front() != '[')
    fail(ExecStatus::RuntimeError, "bad array type " + std::string(array_type));
  char e = array_type[1];
  if (e == 'L' || e == '[') return 'L';
  return e;
}

Value normalize_array_cell(char elem, const Value& v) {
  switch (elem) {
    case 'B': return Value::int32(static_cast<int8_t>(as_int(v)));
    case 'C': return Value::int32(as_int(v) & 0xFFFF);
    case 'S': return Value::int32(static_cast<int16_t>(as_int(v)));
    case 'Z': return Value::int32(as_int(v) & 1);
    case 'I': return Value::int32(as_int(v));
    case 'J': return Value::int64v(as_long(v));
    case 'F': return Value::float32(as_float(v));
    case 'D': return Value::float64(as_double(v));
    default:
      if (!v.is_ref()) fail(ExecStatus::RuntimeError, "reference array cell expects a reference");
      return v;
  }
}

std::u16string int_to_units(int64_t v) {
  std::string dec = std::to_string(v);
  return std::u16string(dec.begin(), dec.end());
}

namespace {

std::u16string& builder_of(Value& v) {
  if (v.tag != Value::Tag::Object || !v.obj)
    fail(ExecStatus::RuntimeError, "expected a StringBuilder receiver");
  return v.obj->builder;
}

void check_index(size_t len, int32_t idx, const char* what) {
  if (idx < 0 || static_cast<size_t>(idx) >= len)
    fail(ExecStatus::RuntimeError,
         std::string(what) + " index out of bounds: " + std::to_string(idx));
}

std::u16string stringify(const Value& v) {
  switch (v.tag) {
    case Value::Tag::Str: return *v.str;
    case Value::Tag::Null: return u"null";
    case Value::Tag::Int: return int_to_units(v.i);
    case Value::Tag::Long: return int_to_units(v.l);
    case Value::Tag::Object:
      if (v.obj && (v.obj->desc == "Ljava/lang/StringBuilder;" ||
                    v.obj->desc == "Ljava/lang/StringBuffer;"))
        return v.obj->builder;
      fail(ExecStatus::UnsupportedOpcode, "toString on unmodeled object " + v.obj->desc);
    default:
      fail(ExecStatus::UnsupportedOpcode, "string conversion of unsupported value");
  }
}

// ---- String ----------------------------------------------------------------

std::optional<Value> string_init_empty(std::vector<Value>&) {
  return Value::string(u"");
}

std::optional<Value> string_init_copy(std::vector<Value>& a) {
  return Value::string(as_string(a[1]));
}

std::optional<Value> string_init_chars(std::vector<Value>& a) {
  ArrayVal& arr = as_array(a[1]);
  std::u16string s;
  for (const Value& c : arr.cells) s.push_back(static_cast<char16_t>(as_int(c)));
  return Value::string(std::move(s));
}

std::optional<Value> string_init_chars_range(std::vector<Value>& a) {
  ArrayVal& arr = as_array(a[1]);
  int32_t off = as_int(a[2]), len = as_int(a[3]);
  if (off < 0 || len < 0 || static_cast<size_t>(off) + len > arr.cells.size())
    fail(ExecStatus::RuntimeError, "String(char[],int,int) range out of bounds");
  std::u16string s;
  for (int32_t i = 0; i < len; ++i)
    s.push_back(static_cast<char16_t>(as_int(arr.cells[off + i])));
  return Value::string(std::move(s));
}

std::string bytes_of(ArrayVal& arr, int32_t off, int32_t len) {
  if (off < 0 || len < 0 || static_cast<size_t>(off) + len > arr.cells.size())
    fail(ExecStatus::RuntimeError, "String(byte[],int,int) range out of bounds");
  std::string raw;
  for (int32_t i = 0; i < len; ++i)
    raw.push_back(static_cast<char>(static_cast<uint8_t>(as_int(arr.cells[off + i]))));
  return raw;
}

std::optional<Value> string_init_bytes(std::vector<Value>& a) {
  ArrayVal& arr = as_array(a[1]);
  return Value::string(utf8_to_utf16(bytes_of(arr, 0, static_cast<int32_t>(arr.cells.size()))));
}

std::optional<Value> string_init_bytes_range(std::vector<Value>& a) {
  return Value::string(utf8_to_utf16(bytes_of(as_array(a[1]), as_int(a[2]), as_int(a[3]))));
}

std::optional<Value> string_length(std::vector<Value>& a) {
  return Value::int32(static_cast<int32_t>(as_string(a[0]).size()));
}

std::optional<Value> string_is_empty(std::vector<Value>& a) {
  return Value::int32(as_string(a[0]).empty() ? 1 : 0);
}

std::optional<Value> string_char_at(std::vector<Value>& a) {
  const std::u16string& s = as_string(a[0]);
  int32_t idx = as_int(a[1]);
  check_index(s.size(), idx, "string");
  return Value::int32(s[idx]);
}

std::optional<Value> string_to_char_array(std::vector<Value>& a) {
  const std::u16string& s = as_string(a[0]);
  auto arr = std::make_shared<ArrayVal>();
  arr->elem = 'C';
  for (char16_t c : s) arr->cells.push_back(Value::int32(c));
  return Value::array(std::move(arr));
}

std::optional<Value> string_get_bytes(std::vector<Value>& a) {
  std::string raw = utf16_to_utf8(as_string(a[0]));
  auto arr = std::make_shared<ArrayVal>();
  arr->elem = 'B';
  for (char c : raw) arr->cells.push_back(Value::int32(static_cast<int8_t>(c)));
  return Value::array(std::move(arr));
}

std::optional<Value> string_intern(std::vector<Value>& a) {
  as_string(a[0]);
  return a[0];
}

std::optional<Value> string_equals(std::vector<Value>& a) {
  const std::u16string& s = as_string(a[0]);
  if (a[1].tag != Value::Tag::Str) return Value::int32(0);
  return Value::int32(s == *a[1].str ? 1 : 0);
}

std::optional<Value> string_hash_code(std::vector<Value>& a) {
  uint32_t h = 0;
  for (char16_t c : as_string(a[0])) h = h * 31 + c;
  return Value::int32(static_cast<int32_t>(h));
}

std::optional<Value> string_concat(std::vector<Value>& a) {
  return Value::string(as_string(a[0]) + as_string(a[1]));
}

std::optional<Value> string_substring_from(std::vector<Value>& a) {
  const std::u16string& s = as_string(a[0]);
  int32_t from = as_int(a[1]);
  if (from < 0 || static_cast<size_t>(from) > s.size())
    fail(ExecStatus::RuntimeError, "substring index out of bounds");
  return Value::string(s.substr(from));
}

std::optional<Value> string_substring_range(std::vector<Value>& a) {
  const std::u16string& s = as_string(a[0]);
  int32_t from = as_int(a[1]), to = as_int(a[2]);
  if (from < 0 || to < from || static_cast<size_t>(to) > s.size())
    fail(ExecStatus::RuntimeError, "substring range out of bounds");
  return Value::string(s.substr(from, to - from));
}

std::optional<Value> string_index_of_char(std::vector<Value>& a) {
  const std::u16string& s = as_string(a[0]);
  size_t p = s.find(static_cast<char16_t>(as_int(a[1])));
  return Value::int32(p == std::u16string::npos ? -1 : static_cast<int32_t>(p));
}

std::optional<Value> string_replace_char(std::vector<Value>& a) {
  std::u16string s = as_string(a[0]);
  char16_t from = static_cast<char16_t>(as_int(a[1]));
  char16_t to = static_cast<char16_t>(as_int(a[2]));
  for (char16_t& c : s)
    if (c == from) c = to;
  return Value::string(std::move(s));
}

std::optional<Value> string_to_string(std::vector<Value>& a) {
  as_string(a[0]);
  return a[0];
}

std::optional<Value> string_value_of_int(std::vector<Value>& a) {
  return Value::string(int_to_units(as_int(a[0])));
}

std::optional<Value> string_value_of_long(std::vector<Value>& a) {
  return Value::string(int_to_units(as_long(a[0])));
}

std::optional<Value> string_value_of_char(std::vector<Value>& a) {
  return Value::string(std::u16string(1, static_cast<char16_t>(as_int(a[0]))));
}

std::optional<Value> string_value_of_bool(std::vector<Value>& a) {
  return Value::string(as_int(a[0]) ? u"true" : u"false");
}

std::optional<Value> string_value_of_chars(std::vector<Value>& a) {
  ArrayVal& arr = as_array(a[0]);
  std::u16string s;
  for (const Value& c : arr.cells) s.push_back(static_cast<char16_t>(as_int(c)));
  return Value::string(std::move(s));
}

std::optional<Value> string_value_of_object(std::vector<Value>& a) {
  return Value::string(stringify(a[0]));
}

// ---- StringBuilder ---------------------------------------------------------

std::optional<Value> sb_init(std::vector<Value>& a) {
  builder_of(a[0]).clear();
  return std::nullopt;
}

std::optional<Value> sb_init_capacity(std::vector<Value>& a) {
  as_int(a[1]);
  builder_of(a[0]).clear();
  return std::nullopt;
}

std::optional<Value> sb_init_string(std::vector<Value>& a) {
  builder_of(a[0]) = as_string(a[1]);
  return std::nullopt;
}

std::optional<Value> sb_append_string(std::vector<Value>& a) {
  builder_of(a[0]) += a[1].tag == Value::Tag::Null ? u"null" : as_string(a[1]);
  return a[0];
}

std::optional<Value> sb_append_char(std::vector<Value>& a) {
  builder_of(a[0]).push_back(static_cast<char16_t>(as_int(a[1])));
  return a[0];
}

std::optional<Value> sb_append_int(std::vector<Value>& a) {
  builder_of(a[0]) += int_to_units(as_int(a[1]));
  return a[0];
}

std::optional<Value> sb_append_long(std::vector<Value>& a) {
  builder_of(a[0]) += int_to_units(as_long(a[1]));
  return a[0];
}

std::optional<Value> sb_append_bool(std::vector<Value>& a) {
  builder_of(a[0]) += as_int(a[1]) ? u"true" : u"false";
  return a[0];
}

std::optional<Value> sb_append_object(std::vector<Value>& a) {
  builder_of(a[0]) += stringify(a[1]);
  return a[0];
}

std::optional<Value> sb_to_string(std::vector<Value>& a) {
  return Value::string(builder_of(a[0]));
}

std::optional<Value> sb_reverse(std::vector<Value>& a) {
  std::u16string& b = builder_of(a[0]);
  std::u16string r(b.rbegin(), b.rend());
  b = std::move(r);
  return a[0];
}

std::optional<Value> sb_length(std::vector<Value>& a) {
  return Value::int32(static_cast<int32_t>(builder_of(a[0]).size()));
}

std::optional<Value> sb_char_at(std::vector<Value>& a) {
  std::u16string& b = builder_of(a[0]);
  int32_t idx = as_int(a[1]);
  check_index(b.size(), idx, "builder");
  return Value::int32(b[idx]);
}

// ---- Character / Integer / Long / Math / System ----------------------------

std::optional<Value> character_to_string(std::vector<Value>& a) {
  return Value::string(std::u16string(1, static_cast<char16_t>(as_int(a[0]))));
}

std::optional<Value> integer_to_string(std::vector<Value>& a) {
  return Value::string(int_to_units(as_int(a[0])));
}

std::optional<Value> integer_to_hex_string(std::vector<Value>& a) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%x", static_cast<uint32_t>(as_int(a[0])));
  std::string s = buf;
  return Value::string(std::u16string(s.begin(), s.end()));
}

std::optional<Value> integer_parse_int(std::vector<Value>& a) {
  const std::u16string& s = as_string(a[0]);
  if (s.empty()) fail(ExecStatus::RuntimeError, "NumberFormatException: empty string");
  int64_t v = 0;
  bool neg = false;
  size_t i = 0;
  if (s[0] == u'-' || s[0] == u'+') {
    neg = s[0] == u'-';
    i = 1;
    if (s.size() == 1) fail(ExecStatus::RuntimeError, "NumberFormatException");
  }
  for (; i < s.size(); ++i) {
    if (s[i] < u'0' || s[i] > u'9') fail(ExecStatus::RuntimeError, "NumberFormatException");
    v = v * 10 + (s[i] - u'0');
    if (v > 4294967296LL) fail(ExecStatus::RuntimeError, "NumberFormatException: overflow");
  }
  if (neg) v = -v;
  if (v > 2147483647LL || v < -2147483648LL)
    fail(ExecStatus::RuntimeError, "NumberFormatException: overflow");
  return Value::int32(static_cast<int32_t>(v));
}

std::optional<Value> long_to_string(std::vector<Value>& a) {
  return Value::string(int_to_units(as_long(a[0])));
}

std::optional<Value> math_abs_int(std::vector<Value>& a) {
  int32_t v = as_int(a[0]);
  return Value::int32(v < 0 ? static_cast<int32_t>(0u - static_cast<uint32_t>(v)) : v);
}

std::optional<Value> math_max_int(std::vector<Value>& a) {
  return Value::int32(std::max(as_int(a[0]), as_int(a[1])));
}

std::optional<Value> math_min_int(std::vector<Value>& a) {
  return Value::int32(std::min(as_int(a[0]), as_int(a[1])));
}

// Deterministic stub; real time would break reproducibility.
std::optional<Value> system_current_millis(std::vector<Value>&) {
  return Value::int64v(1700000000000LL);
}

std::optional<Value> system_nano_time(std::vector<Value>&) {
  return Value::int64v(1700000000000000000LL);
}

std::optional<Value> system_arraycopy(std::vector<Value>& a) {
  ArrayVal& src = as_array(a[0]);
  int32_t src_pos = as_int(a[1]);
  ArrayVal& dst = as_array(a[2]);
  int32_t dst_pos = as_int(a[3]);
  int32_t len = as_int(a[4]);
  if (src_pos < 0 || dst_pos < 0 || len < 0 ||
      static_cast<size_t>(src_pos) + len > src.cells.size() ||
      static_cast<size_t>(dst_pos) + len > dst.cells.size())
    fail(ExecStatus::RuntimeError, "arraycopy out of bounds");
  for (int32_t k = 0; k < len; ++k)
    dst.cells[dst_pos + k] = normalize_array_cell(dst.elem, src.cells[src_pos + k]);
  return std::nullopt;
}

std::optional<Value> object_init(std::vector<Value>&) { return std::nullopt; }

std::optional<Value> object_to_string(std::vector<Value>& a) {
  return Value::string(stringify(a[0]));
}

const std::map<std::string, BuiltinFn>& table() {
  static const std::map<std::string, BuiltinFn> t = [] {
    std::map<std::string, BuiltinFn> m;
    const std::string S = "Ljava/lang/String;";
    m[S + "-><init>()V"] = string_init_empty;
    m[S + "-><init>(Ljava/lang/String;)V"] = string_init_copy;
    m[S + "-><init>([C)V"] = string_init_chars;
    m[S + "-><init>([CII)V"] = string_init_chars_range;
    m[S + "-><init>([B)V"] = string_init_bytes;
    m[S + "-><init>([BII)V"] = string_init_bytes_range;
    m[S + "->length()I"] = string_length;
    m[S + "->isEmpty()Z"] = string_is_empty;
    m[S + "->charAt(I)C"] = string_char_at;
    m[S + "->toCharArray()[C"] = string_to_char_array;
    m[S + "->getBytes()[B"] = string_get_bytes;
    m[S + "->intern()Ljava/lang/String;"] = string_intern;
    m[S + "->equals(Ljava/lang/Object;)Z"] = string_equals;
    m[S + "->hashCode()I"] = string_hash_code;
    m[S + "->concat(Ljava/lang/String;)Ljava/lang/String;"] = string_concat;
    m[S + "->substring(I)Ljava/lang/String;"] = string_substring_from;
    m[S + "->substring(II)Ljava/lang/String;"] = string_substring_range;
    m[S + "->indexOf(I)I"] = string_index_of_char;
    m[S + "->replace(CC)Ljava/lang/String;"] = string_replace_char;
    m[S + "->toString()Ljava/lang/String;"] = string_to_string;
    m[S + "->valueOf(I)Ljava/lang/String;"] = string_value_of_int;
    m[S + "->valueOf(J)Ljava/lang/String;"] = string_value_of_long;
    m[S + "->valueOf(C)Ljava/lang/String;"] = string_value_of_char;
    m[S + "->valueOf(Z)Ljava/lang/String;"] = string_value_of_bool;
    m[S + "->valueOf([C)Ljava/lang/String;"] = string_value_of_chars;
    m[S + "->valueOf(Ljava/lang/Object;)Ljava/lang/String;"] = string_value_of_object;
    m[S + "->copyValueOf([C)Ljava/lang/String;"] = string_value_of_chars;

    for (const char* builder_cls : {"Ljava/lang/StringBuilder;", "Ljava/lang/StringBuffer;"}) {
      const std::string B = builder_cls;
      m[B + "-><init>()V"] = sb_init;
      m[B + "-><init>(I)V"] = sb_init_capacity;
      m[B + "-><init>(Ljava/lang/String;)V"] = sb_init_string;
      m[B + "->append(Ljava/lang/String;)" + B] = sb_append_string;
      m[B + "->append(C)" + B] = sb_append_char;
      m[B + "->append(I)" + B] = sb_append_int;
      m[B + "->append(J)" + B] = sb_append_long;
      m[B + "->append(Z)" + B] = sb_append_bool;
      m[B + "->append(Ljava/lang/Object;)" + B] = sb_append_object;
      m[B + "->toString()Ljava/lang/String;"] = sb_to_string;
      m[B + "->reverse()" + B] = sb_reverse;
      m[B + "->length()I"] = sb_length;
      m[B + "->charAt(I)C"] = sb_char_at;
    }

    m["Ljava/lang/Character;->toString(C)Ljava/lang/String;"] = character_to_string;
    m["Ljava/lang/Integer;->toString(I)Ljava/lang/String;"] = integer_to_string;
    m["Ljava/lang/Integer;->toHexString(I)Ljava/lang/String;"] = integer_to_hex_string;
    m["Ljava/lang/Integer;->parseInt(Ljava/lang/String;)I"] = integer_parse_int;
    m["Ljava/lang/Long;->toString(J)Ljava/lang/String;"] = long_to_string;
    m["Ljava/lang/Math;->abs(I)I"] = math_abs_int;
    m["Ljava/lang/Math;->max(II)I"] = math_max_int;
    m["Ljava/lang/Math;->min(II)I"] = math_min_int;
    m["Ljava/lang/System;->currentTimeMillis()J"] = system_current_millis;
    m["Ljava/lang/System;->nanoTime()J"] = system_nano_time;
    m["Ljava/lang/System;->arraycopy(Ljava/lang/Object;ILjava/lang/Object;II)V"] =
        system_arraycopy;
    m["Ljava/lang/Object;-><init>()V"] = object_init;
    m["Ljava/lang/Object;->toString()Ljava/lang/String;"] = object_to_string;
    return m;
  }();
  return t;
}

}  // namespace

const BuiltinFn* find_builtin(const std::string& key) {
  const auto& t = table();
  auto it = t.find(key);
  return it == t.end() ? nullptr : &it->second;
}

}  // namespace destring::vmdetail
