#include "destring/printer.hpp"

#include <map>
#include <set>
#include <sstream>

#include "destring/util.hpp"

namespace destring {

namespace {

std::string reg_list(const std::vector<int>& regs) {
  std::string out = "{";
  for (size_t i = 0; i < regs.size(); ++i) {
    if (i) out += ", ";
    out += register_name(regs[i]);
  }
  out += "}";
  return out;
}

}  // namespace

std::string print_statement(const Statement& s) {
  if (s.is_opaque()) return s.raw_text;
  const OpInfo& op = *s.info;
  std::string out = s.mnemonic;
  auto r = [&](size_t i) { return register_name(s.regs[i]); };
  switch (op.fmt) {
    case ArgFormat::None:
      break;
    case ArgFormat::RegA:
      out += " " + r(0);
      break;
    case ArgFormat::RegAB:
      out += " " + r(0) + ", " + r(1);
      break;
    case ArgFormat::RegABC:
      out += " " + r(0) + ", " + r(1) + ", " + r(2);
      break;
    case ArgFormat::RegLit:
      out += " " + r(0) + ", " + to_hex_literal(*s.int_lit);
      break;
    case ArgFormat::RegString:
      out += " " + r(0) + ", \"" + escape_smali(*s.str_lit) + "\"";
      break;
    case ArgFormat::RegType:
      out += " " + r(0) + ", " + *s.type_ref;
      break;
    case ArgFormat::RegRegType:
      out += " " + r(0) + ", " + r(1) + ", " + *s.type_ref;
      break;
    case ArgFormat::RegField:
      out += " " + r(0) + ", " + s.field_ref->display();
      break;
    case ArgFormat::RegRegField:
      out += " " + r(0) + ", " + r(1) + ", " + s.field_ref->display();
      break;
    case ArgFormat::RegList:
      out += " " + reg_list(s.regs) + ", ";
      out += s.method_ref ? s.method_ref->display() : *s.type_ref;
      break;
    case ArgFormat::Label:
      out += " :" + s.branch_targets[0];
      break;
    case ArgFormat::RegLabel:
      out += " " + r(0) + ", :";
      out += s.payload_label ? *s.payload_label : s.branch_targets[0];
      break;
    case ArgFormat::RegRegLabel:
      out += " " + r(0) + ", " + r(1) + ", :" + s.branch_targets[0];
      break;
    case ArgFormat::RegRegLit:
      out += " " + r(0) + ", " + r(1) + ", " + to_hex_literal(*s.int_lit);
      break;
  }
  return out;
}

std::string print_method(const MethodDef& m) {
  std::ostringstream out;
  out << ".method";
  for (const std::string& f : m.flags) out << " " << f;
  out << " " << m.name << m.signature << "\n";
  out << "    .registers " << m.register_count << "\n";

  std::multimap<int, std::string> labels_at;
  for (const auto& [name, idx] : m.labels) labels_at.emplace(idx, name);

  auto emit_labels = [&](int idx) {
    auto [lo, hi] = labels_at.equal_range(idx);
    for (auto it = lo; it != hi; ++it) out << "  :" << it->second << "\n";
  };

  out << "\n";
  for (const Statement& s : m.statements) {
    emit_labels(s.index);
    out << "    " << print_statement(s) << "\n";
  }
  emit_labels(static_cast<int>(m.statements.size()));

  // payload tables, deduplicated by label
  std::set<std::string> emitted;
  for (const Statement& s : m.statements) {
    if (!s.payload_label || !emitted.insert(*s.payload_label).second) continue;
    out << "\n  :" << *s.payload_label << "\n";
    if (s.kind() == Kind::FillArrayData) {
      out << "    .array-data " << s.array_data->width << "\n";
      for (int64_t v : s.array_data->values) out << "        " << to_hex_literal(v) << "\n";
      out << "    .end array-data\n";
    } else if (s.kind() == Kind::PackedSwitch) {
      out << "    .packed-switch "
          << to_hex_literal(s.switch_keys.empty() ? 0 : s.switch_keys[0]) << "\n";
      for (const std::string& t : s.branch_targets) out << "        :" << t << "\n";
      out << "    .end packed-switch\n";
    } else {
      out << "    .sparse-switch\n";
      for (size_t i = 0; i < s.branch_targets.size(); ++i)
        out << "        " << to_hex_literal(s.switch_keys[i]) << " -> :" << s.branch_targets[i]
            << "\n";
      out << "    .end sparse-switch\n";
    }
  }
  out << ".end method\n";
  return out.str();
}

std::string print_class(const SmaliClass& c) {
  std::ostringstream out;
  out << ".class";
  for (const std::string& f : c.flags) out << " " << f;
  out << " " << c.descriptor << "\n";
  if (!c.super_descriptor.empty()) out << ".super " << c.super_descriptor << "\n";
  if (!c.fields.empty()) out << "\n";
  for (const FieldDef& f : c.fields) {
    out << ".field";
    for (const std::string& fl : f.flags) out << " " << fl;
    out << " " << f.name << ":" << f.type;
    if (f.init_str)
      out << " = \"" << escape_smali(*f.init_str) << "\"";
    else if (f.init_int)
      out << " = " << to_hex_literal(*f.init_int);
    out << "\n";
  }
  for (const MethodDef& m : c.methods) {
    out << "\n" << print_method(m);
  }
  return out.str();
}

}  // namespace destring
