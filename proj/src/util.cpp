#include "destring/util.hpp"

#include <cctype>
#include <cstdio>

namespace destring {

std::u16string utf8_to_utf16(std::string_view s) {
  std::u16string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    uint32_t cp = 0;
    size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0 && i + 1 < s.size()) {
      cp = (c & 0x1F) << 6 | (s[i + 1] & 0x3F);
      len = 2;
    } else if ((c & 0xF0) == 0xE0 && i + 2 < s.size()) {
      cp = (c & 0x0F) << 12 | (s[i + 1] & 0x3F) << 6 | (s[i + 2] & 0x3F);
      len = 3;
    } else if ((c & 0xF8) == 0xF0 && i + 3 < s.size()) {
      cp = (c & 0x07) << 18 | (s[i + 1] & 0x3F) << 12 | (s[i + 2] & 0x3F) << 6 |
           (s[i + 3] & 0x3F);
      len = 4;
    } else {
      cp = c;  // invalid byte, pass through
    }
    if (cp >= 0x10000) {
      cp -= 0x10000;
      out.push_back(static_cast<char16_t>(0xD800 + (cp >> 10)));
      out.push_back(static_cast<char16_t>(0xDC00 + (cp & 0x3FF)));
    } else {
      out.push_back(static_cast<char16_t>(cp));
    }
    i += len;
  }
  return out;
}

std::string utf16_to_utf8(std::u16string_view s) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    uint32_t cp = s[i];
    if (cp >= 0xD800 && cp <= 0xDBFF && i + 1 < s.size() && s[i + 1] >= 0xDC00 &&
        s[i + 1] <= 0xDFFF) {
      cp = 0x10000 + ((cp - 0xD800) << 10) + (s[i + 1] - 0xDC00);
      i += 2;
    } else {
      i += 1;
    }
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

static int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::u16string unescape_smali(std::string_view body) {
  std::u16string out;
  std::string pending_utf8;
  auto flush = [&] {
    if (!pending_utf8.empty()) {
      out += utf8_to_utf16(pending_utf8);
      pending_utf8.clear();
    }
  };
  for (size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c != '\\') {
      pending_utf8.push_back(c);
      continue;
    }
    if (i + 1 >= body.size()) throw std::invalid_argument("trailing backslash in string");
    flush();
    char e = body[++i];
    switch (e) {
      case 'n': out.push_back(u'\n'); break;
      case 't': out.push_back(u'\t'); break;
      case 'r': out.push_back(u'\r'); break;
      case 'b': out.push_back(u'\b'); break;
      case 'f': out.push_back(u'\f'); break;
      case '0': out.push_back(u'\0'); break;
      case '\'': out.push_back(u'\''); break;
      case '"': out.push_back(u'"'); break;
      case '\\': out.push_back(u'\\'); break;
      case 'u': {
        if (i + 4 >= body.size()) throw std::invalid_argument("truncated \\u escape");
        int v = 0;
        for (int k = 1; k <= 4; ++k) {
          int d = hex_digit(body[i + k]);
          if (d < 0) throw std::invalid_argument("bad hex digit in \\u escape");
          v = v * 16 + d;
        }
        i += 4;
        out.push_back(static_cast<char16_t>(v));
        break;
      }
      default:
        throw std::invalid_argument(std::string("unknown escape \\") + e);
    }
  }
  flush();
  return out;
}

std::string escape_smali(std::u16string_view units) {
  std::string out;
  char buf[8];
  for (char16_t u : units) {
    switch (u) {
      case u'\n': out += "\\n"; continue;
      case u'\t': out += "\\t"; continue;
      case u'\r': out += "\\r"; continue;
      case u'"': out += "\\\""; continue;
      case u'\\': out += "\\\\"; continue;
      default: break;
    }
    if (u >= 0x20 && u <= 0x7E) {
      out.push_back(static_cast<char>(u));
    } else {
      std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(u));
      out += buf;
    }
  }
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_top_level(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  bool in_str = false;
  int brace = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_str) {
      cur.push_back(c);
      if (c == '\\' && i + 1 < s.size()) {
        cur.push_back(s[++i]);
      } else if (c == '"') {
        in_str = false;
      }
      continue;
    }
    if (c == '"') {
      in_str = true;
      cur.push_back(c);
    } else if (c == '{') {
      ++brace;
      cur.push_back(c);
    } else if (c == '}') {
      --brace;
      cur.push_back(c);
    } else if (c == sep && brace == 0) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  std::string last = trim(cur);
  if (!last.empty() || !parts.empty()) parts.push_back(last);
  return parts;
}

int64_t parse_int_literal(std::string_view tok) {
  std::string t = trim(tok);
  if (t.empty()) throw std::invalid_argument("empty integer literal");
  // strip width suffix (t = byte, s = short, l = long)
  char last = t.back();
  if (last == 't' || last == 'T' || last == 's' || last == 'S' || last == 'l' || last == 'L') {
    // careful: a bare hex literal never ends in these after the 0x prefix is
    // accounted for, but "0x5s" does; decimal "5" does not.
    if (t.size() > 1 && (std::isdigit(static_cast<unsigned char>(t[t.size() - 2])) ||
                         hex_digit(t[t.size() - 2]) >= 0)) {
      t.pop_back();
    }
  }
  bool neg = false;
  size_t i = 0;
  if (t[i] == '+' || t[i] == '-') {
    neg = t[i] == '-';
    ++i;
  }
  uint64_t v = 0;
  if (i + 1 < t.size() && t[i] == '0' && (t[i + 1] == 'x' || t[i + 1] == 'X')) {
    i += 2;
    if (i >= t.size()) throw std::invalid_argument("bad hex literal");
    for (; i < t.size(); ++i) {
      int d = hex_digit(t[i]);
      if (d < 0) throw std::invalid_argument("bad hex literal: " + t);
      v = v * 16 + static_cast<uint64_t>(d);
    }
  } else {
    if (i >= t.size()) throw std::invalid_argument("bad integer literal");
    for (; i < t.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(t[i])))
        throw std::invalid_argument("bad integer literal: " + t);
      v = v * 10 + static_cast<uint64_t>(t[i] - '0');
    }
  }
  if (neg) v = ~v + 1;  // two's-complement negate in the unsigned domain
  return static_cast<int64_t>(v);
}

std::string to_hex_literal(int64_t v) {
  char buf[32];
  if (v < 0) {
    std::snprintf(buf, sizeof buf, "-0x%llx",
                  static_cast<unsigned long long>(-static_cast<uint64_t>(v)));
  } else {
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  }
  return buf;
}

}  // namespace destring
