#include "destring/parser.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "destring/util.hpp"

namespace destring {

namespace {

// Strips a trailing '#' comment, respecting quoted strings.
std::string strip_comment(std::string_view line) {
  bool in_str = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == '"') in_str = false;
    } else if (c == '"') {
      in_str = true;
    } else if (c == '#') {
      return std::string(line.substr(0, i));
    }
  }
  return std::string(line);
}

struct PendingPayload {
  enum Type { Packed, Sparse, Array } type;
  int64_t first_key = 0;
  std::vector<int64_t> keys;
  std::vector<std::string> targets;
  int width = 0;
  std::vector<int64_t> values;
};

struct MethodBuilder {
  MethodDef def;
  int param_regs = 0;
  bool registers_seen = false;
  std::vector<std::string> pending_labels;
  std::map<std::string, PendingPayload> payloads;
};

class ClassParser {
 public:
  explicit ClassParser(std::string_view text, std::string source)
      : source_(std::move(source)) {
    std::string t(text);
    std::istringstream in(t);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      std::string s = trim(strip_comment(line));
      if (!s.empty()) lines_.push_back({no, std::move(s)});
    }
  }

  SmaliClass run() {
    cls_.source_file = source_;
    while (pos_ < lines_.size()) {
      const auto& [no, line] = lines_[pos_];
      if (line.starts_with(".class")) {
        parse_class_line(line, no);
        ++pos_;
      } else if (line.starts_with(".super")) {
        cls_.super_descriptor = last_token(line);
        ++pos_;
      } else if (line.starts_with(".source") || line.starts_with(".implements")) {
        ++pos_;
      } else if (line.starts_with(".annotation")) {
        skip_annotation();
      } else if (line.starts_with(".field")) {
        parse_field(line, no);
      } else if (line.starts_with(".method")) {
        parse_method();
      } else if (line.starts_with(".end field")) {
        ++pos_;
      } else {
        throw ParseError("unexpected top-level line: " + line, no);
      }
    }
    if (cls_.descriptor.empty()) throw ParseError("missing .class directive", 1);
    return std::move(cls_);
  }

 private:
  static std::string last_token(const std::string& line) {
    size_t sp = line.find_last_of(" \t");
    return sp == std::string::npos ? line : line.substr(sp + 1);
  }

  static std::vector<std::string> tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
  }

  void parse_class_line(const std::string& line, int no) {
    auto tk = tokens(line);
    if (tk.size() < 2) throw ParseError("malformed .class", no);
    cls_.descriptor = tk.back();
    for (size_t i = 1; i + 1 < tk.size(); ++i) cls_.flags.insert(tk[i]);
  }

  void skip_annotation() {
    int depth = 0;
    while (pos_ < lines_.size()) {
      const std::string& line = lines_[pos_].second;
      if (line.starts_with(".annotation") || line.starts_with(".subannotation")) ++depth;
      if (line.starts_with(".end annotation") || line.starts_with(".end subannotation"))
        --depth;
      ++pos_;
      if (depth == 0) return;
    }
  }

  void parse_field(const std::string& line, int no) {
    FieldDef f;
    std::string decl = line, init;
    size_t eq = line.find(" = ");
    if (eq != std::string::npos) {
      decl = trim(line.substr(0, eq));
      init = trim(line.substr(eq + 3));
    }
    auto tk = tokens(decl);
    if (tk.size() < 2) throw ParseError("malformed .field", no);
    const std::string& nt = tk.back();
    size_t colon = nt.find(':');
    if (colon == std::string::npos) throw ParseError("malformed field name:type", no);
    f.name = nt.substr(0, colon);
    f.type = nt.substr(colon + 1);
    for (size_t i = 1; i + 1 < tk.size(); ++i) f.flags.insert(tk[i]);
    if (!init.empty()) {
      if (init.front() == '"') {
        if (init.size() < 2 || init.back() != '"')
          throw ParseError("malformed field string initializer", no);
        f.init_str = unescape_smali(std::string_view(init).substr(1, init.size() - 2));
      } else {
        try {
          f.init_int = parse_int_literal(init);
        } catch (const std::exception&) {
          // non-integer initializer (boolean/float/...): keep the field, drop
          // the value; the VM falls back to the zero default
        }
      }
    }
    cls_.fields.push_back(std::move(f));
    ++pos_;
    // optional annotation block terminated by .end field
    while (pos_ < lines_.size()) {
      const std::string& l = lines_[pos_].second;
      if (l.starts_with(".annotation")) {
        skip_annotation();
      } else if (l.starts_with(".end field")) {
        ++pos_;
        break;
      } else {
        break;
      }
    }
  }

  void parse_method() {
    auto [no, header] = lines_[pos_];
    ++pos_;
    MethodBuilder b;
    auto tk = tokens(header);
    if (tk.size() < 2) throw ParseError("malformed .method", no);
    const std::string& proto = tk.back();
    size_t paren = proto.find('(');
    if (paren == std::string::npos || paren == 0)
      throw ParseError("malformed method prototype: " + proto, no);
    b.def.name = proto.substr(0, paren);
    b.def.signature = proto.substr(paren);
    for (size_t i = 1; i + 1 < tk.size(); ++i) b.def.flags.insert(tk[i]);
    b.param_regs = b.def.param_reg_count();
    b.def.register_count = b.param_regs;  // default when no .registers directive

    while (pos_ < lines_.size()) {
      auto [lno, line] = lines_[pos_];
      if (line.starts_with(".end method")) {
        ++pos_;
        finish_method(b, lno);
        return;
      }
      if (line.starts_with(".registers")) {
        b.def.register_count = static_cast<int>(parse_int_literal(last_token(line)));
        b.registers_seen = true;
        ++pos_;
      } else if (line.starts_with(".locals")) {
        b.def.register_count =
            static_cast<int>(parse_int_literal(last_token(line))) + b.param_regs;
        b.registers_seen = true;
        ++pos_;
      } else if (line.starts_with(".annotation")) {
        skip_annotation();
      } else if (line.starts_with(".param") || line.starts_with(".end param") ||
                 line.starts_with(".line") || line.starts_with(".prologue") ||
                 line.starts_with(".epilogue") || line.starts_with(".local ") ||
                 line.starts_with(".end local") || line.starts_with(".restart local") ||
                 line.starts_with(".catch ") || line.starts_with(".catchall") ||
                 line.starts_with(".source")) {
        ++pos_;
      } else if (line.starts_with(".packed-switch")) {
        parse_packed_switch(b, lno);
      } else if (line.starts_with(".sparse-switch")) {
        parse_sparse_switch(b, lno);
      } else if (line.starts_with(".array-data")) {
        parse_array_data(b, lno);
      } else if (line.front() == ':') {
        b.pending_labels.push_back(line.substr(1));
        ++pos_;
      } else if (line.front() == '.') {
        throw ParseError("unsupported directive in method body: " + line, lno);
      } else {
        parse_statement(b, line, lno);
        ++pos_;
      }
    }
    throw ParseError("unterminated .method", no);
  }

  std::vector<std::string> take_payload_labels(MethodBuilder& b, int no) {
    if (b.pending_labels.empty())
      throw ParseError("payload table without preceding label", no);
    std::vector<std::string> labels = std::move(b.pending_labels);
    b.pending_labels.clear();
    return labels;
  }

  void bind_payload(MethodBuilder& b, const std::vector<std::string>& labels,
                    PendingPayload p) {
    for (const std::string& l : labels) b.payloads[l] = p;
  }

  void parse_packed_switch(MethodBuilder& b, int no) {
    auto labels = take_payload_labels(b, no);
    PendingPayload p;
    p.type = PendingPayload::Packed;
    p.first_key = parse_int_literal(last_token(lines_[pos_].second));
    ++pos_;
    while (pos_ < lines_.size() && !lines_[pos_].second.starts_with(".end packed-switch")) {
      const std::string& l = lines_[pos_].second;
      if (l.front() != ':') throw ParseError("expected :label in packed-switch", lines_[pos_].first);
      p.targets.push_back(l.substr(1));
      ++pos_;
    }
    if (pos_ >= lines_.size()) throw ParseError("unterminated .packed-switch", no);
    ++pos_;
    for (size_t i = 0; i < p.targets.size(); ++i)
      p.keys.push_back(p.first_key + static_cast<int64_t>(i));
    bind_payload(b, labels, std::move(p));
  }

  void parse_sparse_switch(MethodBuilder& b, int no) {
    auto labels = take_payload_labels(b, no);
    PendingPayload p;
    p.type = PendingPayload::Sparse;
    ++pos_;
    while (pos_ < lines_.size() && !lines_[pos_].second.starts_with(".end sparse-switch")) {
      auto [lno, l] = lines_[pos_];
      size_t arrow = l.find("->");
      if (arrow == std::string::npos) throw ParseError("expected `key -> :label`", lno);
      std::string target = trim(l.substr(arrow + 2));
      if (target.empty() || target.front() != ':')
        throw ParseError("expected :label in sparse-switch", lno);
      p.keys.push_back(parse_int_literal(trim(l.substr(0, arrow))));
      p.targets.push_back(target.substr(1));
      ++pos_;
    }
    if (pos_ >= lines_.size()) throw ParseError("unterminated .sparse-switch", no);
    ++pos_;
    bind_payload(b, labels, std::move(p));
  }

  void parse_array_data(MethodBuilder& b, int no) {
    auto labels = take_payload_labels(b, no);
    PendingPayload p;
    p.type = PendingPayload::Array;
    p.width = static_cast<int>(parse_int_literal(last_token(lines_[pos_].second)));
    ++pos_;
    while (pos_ < lines_.size() && !lines_[pos_].second.starts_with(".end array-data")) {
      for (const std::string& tok : tokens(lines_[pos_].second))
        p.values.push_back(parse_int_literal(tok));
      ++pos_;
    }
    if (pos_ >= lines_.size()) throw ParseError("unterminated .array-data", no);
    ++pos_;
    bind_payload(b, labels, std::move(p));
  }

  int parse_register(const std::string& tok, const MethodBuilder& b, int no) const {
    if (tok.size() < 2 || (tok[0] != 'v' && tok[0] != 'p'))
      throw ParseError("bad register token: " + tok, no);
    int n = 0;
    for (size_t i = 1; i < tok.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(tok[i])))
        throw ParseError("bad register token: " + tok, no);
      n = n * 10 + (tok[i] - '0');
    }
    if (tok[0] == 'p') n = b.def.register_count - b.param_regs + n;
    if (n < 0 || n >= b.def.register_count)
      throw ParseError("register " + tok + " out of range (method has " +
                           std::to_string(b.def.register_count) + " registers)",
                       no);
    return n;
  }

  std::vector<int> parse_reg_list(const std::string& tok, const MethodBuilder& b,
                                  int no) const {
    if (tok.size() < 2 || tok.front() != '{' || tok.back() != '}')
      throw ParseError("bad register list: " + tok, no);
    std::string inner = trim(tok.substr(1, tok.size() - 2));
    std::vector<int> regs;
    if (inner.empty()) return regs;
    size_t range = inner.find("..");
    if (range != std::string::npos) {
      int from = parse_register(trim(inner.substr(0, range)), b, no);
      int to = parse_register(trim(inner.substr(range + 2)), b, no);
      if (to < from) throw ParseError("bad register range: " + tok, no);
      for (int r = from; r <= to; ++r) regs.push_back(r);
      return regs;
    }
    for (const std::string& part : split_top_level(inner, ','))
      regs.push_back(parse_register(part, b, no));
    return regs;
  }

  static MethodRef parse_method_ref(const std::string& tok, int no) {
    size_t arrow = tok.find("->");
    size_t paren = tok.find('(', arrow == std::string::npos ? 0 : arrow);
    if (arrow == std::string::npos || paren == std::string::npos || paren <= arrow + 2)
      throw ParseError("bad method reference: " + tok, no);
    MethodRef m;
    m.class_desc = tok.substr(0, arrow);
    m.name = tok.substr(arrow + 2, paren - arrow - 2);
    m.signature = tok.substr(paren);
    return m;
  }

  static FieldRef parse_field_ref(const std::string& tok, int no) {
    size_t arrow = tok.find("->");
    if (arrow == std::string::npos) throw ParseError("bad field reference: " + tok, no);
    size_t colon = tok.find(':', arrow);
    if (colon == std::string::npos) throw ParseError("bad field reference: " + tok, no);
    FieldRef f;
    f.class_desc = tok.substr(0, arrow);
    f.name = tok.substr(arrow + 2, colon - arrow - 2);
    f.type = tok.substr(colon + 1);
    return f;
  }

  static std::string parse_label_operand(const std::string& tok, int no) {
    if (tok.empty() || tok.front() != ':') throw ParseError("expected :label, got " + tok, no);
    return tok.substr(1);
  }

  void parse_statement(MethodBuilder& b, const std::string& line, int no) {
    size_t sp = line.find_first_of(" \t");
    std::string mnemonic = sp == std::string::npos ? line : line.substr(0, sp);
    std::string rest = sp == std::string::npos ? "" : trim(line.substr(sp));

    Statement st;
    st.index = static_cast<int>(b.def.statements.size());
    st.mnemonic = mnemonic;
    st.raw_text = line;
    st.line_no = no;

    const OpInfo* info = lookup_op(mnemonic);
    if (info == nullptr) {
      st.info = unknown_op_info();
      attach(b, std::move(st));
      return;
    }
    st.info = info;

    // split operands on commas; also split on bare whitespace for the
    // comma-less `if-eqz v0 :L1` style
    std::vector<std::string> ops;
    for (const std::string& part : split_top_level(rest, ',')) {
      if (part.empty()) continue;
      if (part.front() == '"' || part.front() == '{') {
        ops.push_back(part);
        continue;
      }
      std::istringstream in(part);
      std::string w;
      while (in >> w) ops.push_back(w);
    }

    auto need = [&](size_t n) {
      if (ops.size() != n)
        throw ParseError("opcode " + mnemonic + " expects " + std::to_string(n) +
                             " operands, got " + std::to_string(ops.size()),
                         no);
    };
    auto reg = [&](size_t i) { return parse_register(ops[i], b, no); };

    switch (info->fmt) {
      case ArgFormat::None:
        need(0);
        break;
      case ArgFormat::RegA:
        need(1);
        st.regs = {reg(0)};
        break;
      case ArgFormat::RegAB:
        need(2);
        st.regs = {reg(0), reg(1)};
        break;
      case ArgFormat::RegABC:
        need(3);
        st.regs = {reg(0), reg(1), reg(2)};
        break;
      case ArgFormat::RegLit:
        need(2);
        st.regs = {reg(0)};
        st.int_lit = parse_int_literal(ops[1]);
        break;
      case ArgFormat::RegString: {
        need(2);
        st.regs = {reg(0)};
        const std::string& q = ops[1];
        if (q.size() < 2 || q.front() != '"' || q.back() != '"')
          throw ParseError("expected quoted string literal", no);
        try {
          st.str_lit = unescape_smali(std::string_view(q).substr(1, q.size() - 2));
        } catch (const std::exception& e) {
          throw ParseError(e.what(), no);
        }
        break;
      }
      case ArgFormat::RegType:
        need(2);
        st.regs = {reg(0)};
        st.type_ref = ops[1];
        break;
      case ArgFormat::RegRegType:
        need(3);
        st.regs = {reg(0), reg(1)};
        st.type_ref = ops[2];
        break;
      case ArgFormat::RegField:
        need(2);
        st.regs = {reg(0)};
        st.field_ref = parse_field_ref(ops[1], no);
        break;
      case ArgFormat::RegRegField:
        need(3);
        st.regs = {reg(0), reg(1)};
        st.field_ref = parse_field_ref(ops[2], no);
        break;
      case ArgFormat::RegList:
        need(2);
        st.regs = parse_reg_list(ops[0], b, no);
        if (info->kind == Kind::Invoke)
          st.method_ref = parse_method_ref(ops[1], no);
        else
          st.type_ref = ops[1];
        break;
      case ArgFormat::Label:
        need(1);
        st.branch_targets = {parse_label_operand(ops[0], no)};
        break;
      case ArgFormat::RegLabel: {
        need(2);
        st.regs = {reg(0)};
        std::string label = parse_label_operand(ops[1], no);
        if (info->kind == Kind::IfTestZ)
          st.branch_targets = {std::move(label)};
        else
          st.payload_label = std::move(label);  // switch / fill-array-data
        break;
      }
      case ArgFormat::RegRegLabel:
        need(3);
        st.regs = {reg(0), reg(1)};
        st.branch_targets = {parse_label_operand(ops[2], no)};
        break;
      case ArgFormat::RegRegLit:
        need(3);
        st.regs = {reg(0), reg(1)};
        st.int_lit = parse_int_literal(ops[2]);
        break;
    }
    attach(b, std::move(st));
  }

  void attach(MethodBuilder& b, Statement st) {
    for (const std::string& l : b.pending_labels) b.def.labels[l] = st.index;
    b.pending_labels.clear();
    b.def.statements.push_back(std::move(st));
  }

  void finish_method(MethodBuilder& b, int no) {
    for (const std::string& l : b.pending_labels)
      b.def.labels[l] = static_cast<int>(b.def.statements.size());
    b.pending_labels.clear();
    // attach switch / array payloads
    for (Statement& st : b.def.statements) {
      if (!st.payload_label) continue;
      auto it = b.payloads.find(*st.payload_label);
      if (it == b.payloads.end())
        throw ParseError("statement references missing payload :" + *st.payload_label +
                             " (" + st.mnemonic + ")",
                         st.line_no ? st.line_no : no);
      const PendingPayload& p = it->second;
      if (st.kind() == Kind::FillArrayData) {
        if (p.type != PendingPayload::Array)
          throw ParseError("fill-array-data payload mismatch", st.line_no);
        st.array_data = ArrayData{p.width, p.values};
      } else {
        if (p.type == PendingPayload::Array)
          throw ParseError("switch payload mismatch", st.line_no);
        st.branch_targets = p.targets;
        st.switch_keys = p.keys;
      }
    }
    cls_.methods.push_back(std::move(b.def));
  }

  std::string source_;
  std::vector<std::pair<int, std::string>> lines_;
  size_t pos_ = 0;
  SmaliClass cls_;
};

}  // namespace

SmaliClass parse_smali(std::string_view text, std::string source_file) {
  return ClassParser(text, std::move(source_file)).run();
}

LoadResult load_program(const std::vector<std::string>& paths) {
  namespace fs = std::filesystem;
  LoadResult result;
  std::vector<std::string> files;
  for (const std::string& p : paths) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      for (const auto& entry : fs::recursive_directory_iterator(p, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".smali")
          files.push_back(entry.path().string());
      }
    } else if (fs::is_regular_file(p, ec)) {
      files.push_back(p);
    } else {
      result.failures.push_back({p, "not a file or directory"});
    }
  }
  std::sort(files.begin(), files.end());

  for (const std::string& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      result.failures.push_back({file, "unreadable file"});
      continue;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      SmaliClass cls = parse_smali(buf.str(), file);
      auto [it, inserted] = result.program.classes.emplace(cls.descriptor, std::move(cls));
      if (!inserted)
        result.failures.push_back(
            {file, "duplicate class " + it->first + " (first seen in " +
                       it->second.source_file + ")"});
    } catch (const std::exception& e) {
      result.failures.push_back({file, e.what()});
    }
  }
  return result;
}

}  // namespace destring
