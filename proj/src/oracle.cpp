#include "destring/oracle.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "destring/parser.hpp"
#include "destring/printer.hpp"
#include "destring/scanner.hpp"
#include "destring/util.hpp"

namespace destring {

const char* scheme_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::XorTwoKeys: return "xor-two-keys";
    case SchemeKind::CaesarShift: return "caesar-shift";
    case SchemeKind::ByteArrayDecode: return "byte-array-decode";
    case SchemeKind::StaticTableLookup: return "static-table-lookup";
  }
  return "?";
}

std::optional<SchemeKind> scheme_from_name(std::string_view name) {
  for (SchemeKind k : {SchemeKind::XorTwoKeys, SchemeKind::CaesarShift,
                       SchemeKind::ByteArrayDecode, SchemeKind::StaticTableLookup})
    if (name == scheme_name(k)) return k;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scheme math (reference side, independent of the generated decoders)
// ---------------------------------------------------------------------------

namespace {

std::u16string xor_two_keys_apply(const std::u16string& s, int k1, int k2) {
  std::u16string out = s;
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<char16_t>(out[i] ^ ((i % 2 == 0 ? k1 : k2) & 0x7F));
  return out;
}

std::u16string caesar_apply(const std::u16string& s, int shift) {
  std::u16string out = s;
  for (char16_t& u : out) u = static_cast<char16_t>((u + shift) & 0xFFFF);
  return out;
}

std::u16string caesar_invert(const std::u16string& s, int shift) {
  std::u16string out = s;
  for (char16_t& u : out) u = static_cast<char16_t>((u - shift) & 0xFFFF);
  return out;
}

std::u16string bytes_apply(const std::u16string& s, int key) {
  // only valid for strings whose code units are all <= 0x7F
  std::u16string out = s;
  for (char16_t& u : out) u = static_cast<char16_t>(u ^ (key & 0x7F));
  return out;
}

std::u16string table_apply(const std::u16string& s, const std::vector<int>& table, int idx) {
  std::u16string out = s;
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<char16_t>(out[i] ^ (table[(idx + i) & 15] & 0xFFFF));
  return out;
}

}  // namespace

std::u16string scheme_decode(SchemeKind kind, const std::u16string& cipher,
                             const std::vector<int>& keys, int table_index) {
  switch (kind) {
    case SchemeKind::XorTwoKeys: return xor_two_keys_apply(cipher, keys.at(0), keys.at(1));
    case SchemeKind::CaesarShift: return caesar_invert(cipher, keys.at(0));
    case SchemeKind::ByteArrayDecode: return bytes_apply(cipher, keys.at(0));
    case SchemeKind::StaticTableLookup: return table_apply(cipher, keys, table_index);
  }
  return cipher;
}

// ---------------------------------------------------------------------------
// GroundTruth persistence
// ---------------------------------------------------------------------------

std::string GroundTruth::serialize() const {
  std::ostringstream out;
  for (const auto& [key, plain] : entries) {
    out << key.class_desc << '\t' << key.method_name << '\t' << key.method_sig << '\t'
        << key.literal_index << '\t' << escape_smali(plain) << '\n';
  }
  return out.str();
}

GroundTruth GroundTruth::deserialize(std::string_view text) {
  GroundTruth gt;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> parts;
    size_t start = 0;
    for (int i = 0; i < 4; ++i) {
      size_t tab = line.find('\t', start);
      if (tab == std::string::npos) throw std::runtime_error("malformed ground-truth line");
      parts.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    GroundTruthKey key{parts[0], parts[1], parts[2], std::stoi(parts[3])};
    gt.entries[key] = unescape_smali(line.substr(start));
  }
  return gt;
}

// ---------------------------------------------------------------------------
// Decoder class generation (emitted as Smali text, then parsed)
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kHelperClass = "Lobf/H;";
constexpr const char* kXorClass = "Lobf/XK;";
constexpr const char* kCaesarClass = "Lobf/CS;";
constexpr const char* kBytesClass = "Lobf/BA;";
constexpr const char* kTableClass = "Lobf/TL;";

std::string helper_class_text(int tc) {
  std::ostringstream out;
  out << ".class public final " << kHelperClass << "\n.super Ljava/lang/Object;\n\n"
      << ".method public static T()I\n    .registers 1\n    const v0, "
      << to_hex_literal(tc) << "\n    return v0\n.end method\n";
  return out.str();
}

std::string xor_decoder_text() {
  std::ostringstream out;
  out << ".class public final " << kXorClass << "\n.super Ljava/lang/Object;\n\n";
  out << R"(.method public static b(Ljava/lang/String;SS)Ljava/lang/String;
    .registers 10
    invoke-virtual {p0}, Ljava/lang/String;->length()I
    move-result v0
    new-array v1, v0, [C
    const/4 v2, 0x0
  :loop
    if-ge v2, v0, :done
    invoke-virtual {p0, v2}, Ljava/lang/String;->charAt(I)C
    move-result v3
    and-int/lit8 v4, v2, 0x1
    if-nez v4, :odd
    and-int/lit8 v5, p1, 0x7f
    goto :mix
  :odd
    and-int/lit8 v5, p2, 0x7f
  :mix
    xor-int/2addr v3, v5
    int-to-char v3, v3
    aput-char v3, v1, v2
    add-int/lit8 v2, v2, 0x1
    goto :loop
  :done
    new-instance v6, Ljava/lang/String;
    invoke-direct {v6, v1}, Ljava/lang/String;-><init>([C)V
    return-object v6
.end method
)";
  return out.str();
}

std::string caesar_decoder_text() {
  std::ostringstream out;
  out << ".class public final " << kCaesarClass << "\n.super Ljava/lang/Object;\n\n";
  out << R"(.method public static d(Ljava/lang/String;I)Ljava/lang/String;
    .registers 8
    invoke-virtual {p0}, Ljava/lang/String;->length()I
    move-result v0
    new-array v1, v0, [C
    const/4 v2, 0x0
  :loop
    if-ge v2, v0, :done
    invoke-virtual {p0, v2}, Ljava/lang/String;->charAt(I)C
    move-result v3
    sub-int/2addr v3, p1
    int-to-char v3, v3
    aput-char v3, v1, v2
    add-int/lit8 v2, v2, 0x1
    goto :loop
  :done
    invoke-static {v1}, Ljava/lang/String;->valueOf([C)Ljava/lang/String;
    move-result-object v4
    return-object v4
.end method
)";
  return out.str();
}

std::string bytes_decoder_text() {
  std::ostringstream out;
  out << ".class public final " << kBytesClass << "\n.super Ljava/lang/Object;\n\n";
  out << R"(.method public static d(Ljava/lang/String;I)[B
    .registers 8
    invoke-virtual {p0}, Ljava/lang/String;->getBytes()[B
    move-result-object v0
    array-length v1, v0
    const/4 v2, 0x0
  :loop
    if-ge v2, v1, :done
    aget-byte v3, v0, v2
    xor-int/2addr v3, p1
    int-to-byte v3, v3
    aput-byte v3, v0, v2
    add-int/lit8 v2, v2, 0x1
    goto :loop
  :done
    return-object v0
.end method
)";
  return out.str();
}

std::string table_decoder_text(const std::vector<int>& table) {
  std::ostringstream out;
  out << ".class public final " << kTableClass << "\n.super Ljava/lang/Object;\n\n"
      << ".field static t:[C\n\n"
      << ".method static constructor <clinit>()V\n"
         "    .registers 2\n"
         "    const/16 v0, 0x10\n"
         "    new-array v0, v0, [C\n"
         "    fill-array-data v0, :tbl\n"
         "    sput-object v0, "
      << kTableClass
      << "->t:[C\n"
         "    return-void\n\n"
         "  :tbl\n"
         "    .array-data 2\n";
  for (int v : table) out << "        " << to_hex_literal(v) << "\n";
  out << "    .end array-data\n.end method\n\n";
  out << ".method public static d(Ljava/lang/String;I)Ljava/lang/Object;\n"
         "    .registers 10\n"
         "    sget-object v0, "
      << kTableClass << "->t:[C\n";
  out << R"(    invoke-virtual {p0}, Ljava/lang/String;->length()I
    move-result v1
    new-array v2, v1, [C
    const/4 v3, 0x0
  :loop
    if-ge v3, v1, :done
    invoke-virtual {p0, v3}, Ljava/lang/String;->charAt(I)C
    move-result v4
    add-int v5, p1, v3
    and-int/lit8 v5, v5, 0xf
    aget-char v6, v0, v5
    xor-int/2addr v4, v6
    int-to-char v4, v4
    aput-char v4, v2, v3
    add-int/lit8 v3, v3, 0x1
    goto :loop
  :done
    invoke-static {v2}, Ljava/lang/String;->valueOf([C)Ljava/lang/String;
    move-result-object v7
    return-object v7
.end method
)";
  return out.str();
}

// ---------------------------------------------------------------------------
// Statement factories for call-site rewriting
// ---------------------------------------------------------------------------

Statement stmt(const std::string& mnemonic) {
  Statement s;
  s.mnemonic = mnemonic;
  s.info = lookup_op(mnemonic);
  if (s.info == nullptr) throw std::logic_error("oracle uses unknown opcode " + mnemonic);
  return s;
}

Statement s_const16(int reg, int64_t lit) {
  Statement s = stmt("const/16");
  s.regs = {reg};
  s.int_lit = lit;
  return s;
}

Statement s_const_string(int reg, std::u16string v) {
  Statement s = stmt("const-string");
  s.regs = {reg};
  s.str_lit = std::move(v);
  return s;
}

Statement s_invoke_static(std::vector<int> regs, MethodRef m) {
  Statement s = stmt("invoke-static");
  s.regs = std::move(regs);
  s.method_ref = std::move(m);
  return s;
}

Statement s_invoke_direct(std::vector<int> regs, MethodRef m) {
  Statement s = stmt("invoke-direct");
  s.regs = std::move(regs);
  s.method_ref = std::move(m);
  return s;
}

Statement s_move_result(int reg) {
  Statement s = stmt("move-result");
  s.regs = {reg};
  return s;
}

Statement s_move_result_object(int reg) {
  Statement s = stmt("move-result-object");
  s.regs = {reg};
  return s;
}

Statement s_move_object(int dst, int src) {
  Statement s = stmt("move-object");
  s.regs = {dst, src};
  return s;
}

Statement s_xor2addr(int a, int b) {
  Statement s = stmt("xor-int/2addr");
  s.regs = {a, b};
  return s;
}

Statement s_add2addr(int a, int b) {
  Statement s = stmt("add-int/2addr");
  s.regs = {a, b};
  return s;
}

Statement s_int_to_short(int a, int b) {
  Statement s = stmt("int-to-short");
  s.regs = {a, b};
  return s;
}

Statement s_if_eqz(int reg, std::string label) {
  Statement s = stmt("if-eqz");
  s.regs = {reg};
  s.branch_targets = {std::move(label)};
  return s;
}

Statement s_new_instance(int reg, std::string type) {
  Statement s = stmt("new-instance");
  s.regs = {reg};
  s.type_ref = std::move(type);
  return s;
}

// ---------------------------------------------------------------------------
// Method rewriting
// ---------------------------------------------------------------------------

constexpr int kScratchRegs = 4;

struct RewriteContext {
  SchemeKind kind;
  int junk;
  int tc = 0;
  std::mt19937_64* rng = nullptr;
  const std::optional<std::vector<int>>* fixed_keys = nullptr;
  std::vector<int> table;  // StaticTableLookup key table
  int junk_counter = 0;
  bool used_helper = false;
};

int rand_range(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<uint64_t>(hi - lo + 1));
}

bool all_ascii(const std::u16string& s) {
  for (char16_t u : s)
    if (u > 0x7F) return false;
  return true;
}

// Emits one opaque-predicate block; always falls through to the label.
void emit_junk(std::vector<Statement>& out, std::map<std::string, int>* new_labels,
               RewriteContext& ctx, int scratch, int defined_reg) {
  std::string label = "j" + std::to_string(ctx.junk_counter++);
  ctx.used_helper = true;
  out.push_back(s_invoke_static({}, {kHelperClass, "T", "()I"}));
  out.push_back(s_move_result(scratch));
  out.push_back(s_xor2addr(scratch, defined_reg));
  out.push_back(s_if_eqz(scratch, label));
  out.push_back(s_add2addr(scratch, defined_reg));
  (*new_labels)[label] = -1;  // resolved to the next emitted statement
  // the marker is fixed up by the caller after appending the block
}

// Rewrites one literal definition into ciphertext plus decode logic. Returns
// the offset of the const-string within the emitted block.
int emit_call_site(std::vector<Statement>& out, std::map<std::string, int>* pending_labels,
                   RewriteContext& ctx, int target_reg, int scratch_base,
                   const std::u16string& plain, std::u16string* cipher_out) {
  std::mt19937_64& rng = *ctx.rng;
  const int sA = scratch_base, sB = scratch_base + 1, sC = scratch_base + 2,
            sD = scratch_base + 3;
  const auto& fixed = *ctx.fixed_keys;
  int literal_offset = -1;

  auto junk_blocks = [&](int scratch, int defined_reg) {
    for (int k = 0; k < ctx.junk; ++k) {
      emit_junk(out, pending_labels, ctx, scratch, defined_reg);
      // bind the junk label to the position right after the dead add
      for (auto& [name, idx] : *pending_labels)
        if (idx == -1) idx = static_cast<int>(out.size());
    }
  };

  switch (ctx.kind) {
    case SchemeKind::XorTwoKeys: {
      int k1 = fixed ? fixed->at(0) : rand_range(rng, 1, 127);
      int k2 = fixed ? fixed->at(1) : rand_range(rng, 1, 127);
      std::u16string cipher = xor_two_keys_apply(plain, k1, k2);
      *cipher_out = cipher;
      out.push_back(s_const16(sA, ctx.tc ^ (k1 & 0xFFFF)));
      out.push_back(s_const16(sB, ctx.tc ^ (k2 & 0xFFFF)));
      literal_offset = static_cast<int>(out.size());
      out.push_back(s_const_string(target_reg, cipher));
      ctx.used_helper = true;
      out.push_back(s_invoke_static({}, {kHelperClass, "T", "()I"}));
      out.push_back(s_move_result(sC));
      out.push_back(s_xor2addr(sC, sA));
      junk_blocks(sD, sC);
      out.push_back(s_int_to_short(sC, sC));
      out.push_back(s_invoke_static({}, {kHelperClass, "T", "()I"}));
      out.push_back(s_move_result(sD));
      out.push_back(s_xor2addr(sD, sB));
      out.push_back(s_int_to_short(sD, sD));
      out.push_back(s_invoke_static({target_reg, sC, sD},
                                    {kXorClass, "b", "(Ljava/lang/String;SS)Ljava/lang/String;"}));
      out.push_back(s_move_result_object(target_reg));
      break;
    }
    case SchemeKind::CaesarShift: {
      int shift = fixed ? fixed->at(0) : rand_range(rng, 1, 96);
      *cipher_out = caesar_apply(plain, shift);
      out.push_back(s_const16(sA, shift));
      literal_offset = static_cast<int>(out.size());
      out.push_back(s_const_string(target_reg, *cipher_out));
      junk_blocks(sB, sA);
      out.push_back(s_invoke_static({target_reg, sA},
                                    {kCaesarClass, "d", "(Ljava/lang/String;I)Ljava/lang/String;"}));
      out.push_back(s_move_result_object(target_reg));
      break;
    }
    case SchemeKind::ByteArrayDecode: {
      int key = fixed ? fixed->at(0) : rand_range(rng, 1, 127);
      *cipher_out = bytes_apply(plain, key);
      out.push_back(s_const16(sA, key));
      literal_offset = static_cast<int>(out.size());
      out.push_back(s_const_string(target_reg, *cipher_out));
      junk_blocks(sB, sA);
      out.push_back(
          s_invoke_static({target_reg, sA}, {kBytesClass, "d", "(Ljava/lang/String;I)[B"}));
      out.push_back(s_move_result_object(sC));
      out.push_back(s_new_instance(sD, "Ljava/lang/String;"));
      out.push_back(s_invoke_direct({sD, sC}, {"Ljava/lang/String;", "<init>", "([B)V"}));
      out.push_back(s_move_object(target_reg, sD));
      break;
    }
    case SchemeKind::StaticTableLookup: {
      int idx = rand_range(rng, 0, 15);
      *cipher_out = table_apply(plain, ctx.table, idx);
      out.push_back(s_const16(sA, idx));
      literal_offset = static_cast<int>(out.size());
      out.push_back(s_const_string(target_reg, *cipher_out));
      junk_blocks(sB, sA);
      out.push_back(s_invoke_static({target_reg, sA},
                                    {kTableClass, "d", "(Ljava/lang/String;I)Ljava/lang/Object;"}));
      out.push_back(s_move_result_object(sB));
      Statement cast = stmt("check-cast");
      cast.regs = {sB};
      cast.type_ref = "Ljava/lang/String;";
      out.push_back(std::move(cast));
      out.push_back(s_move_object(target_reg, sB));
      break;
    }
  }
  return literal_offset;
}

}  // namespace

std::pair<SmaliProgram, GroundTruth> obfuscate_program(const SmaliProgram& clean,
                                                       const ObfuscationScheme& scheme,
                                                       uint64_t seed) {
  std::mt19937_64 rng(seed ^ (static_cast<uint64_t>(scheme.kind) << 56));
  SmaliProgram out;
  GroundTruth gt;

  RewriteContext ctx;
  ctx.kind = scheme.kind;
  ctx.junk = scheme.junk_conditionals;
  ctx.rng = &rng;
  ctx.fixed_keys = &scheme.fixed_keys;
  ctx.tc = rand_range(rng, 0x1000, 0x7EFF);
  if (scheme.kind == SchemeKind::StaticTableLookup) {
    if (scheme.fixed_keys) {
      ctx.table = *scheme.fixed_keys;
      ctx.table.resize(16, 1);
    } else {
      for (int i = 0; i < 16; ++i) ctx.table.push_back(rand_range(rng, 1, 31));
    }
  }

  for (const auto& [desc, cls] : clean.classes) {
    SmaliClass copy = cls;
    if (!is_excluded_class(desc, default_exclusions())) {
      for (MethodDef& m : copy.methods) {
        bool has_literal = false;
        for (const Statement& s : m.statements)
          if (s.kind() == Kind::ConstString && !s.str_lit->empty() &&
              (ctx.kind != SchemeKind::ByteArrayDecode || all_ascii(*s.str_lit)))
            has_literal = true;
        if (!has_literal) continue;

        int locals = m.register_count - m.param_reg_count();
        int scratch_base = locals;
        auto remap = [&](int r) { return r < locals ? r : r + kScratchRegs; };

        std::vector<Statement> rewritten;
        std::map<std::string, int> junk_labels;
        std::map<int, int> index_map;  // old index -> new index of first emitted stmt
        ctx.junk_counter = 0;

        for (const Statement& s : m.statements) {
          index_map[s.index] = static_cast<int>(rewritten.size());
          bool transform = s.kind() == Kind::ConstString && !s.str_lit->empty() &&
                           (ctx.kind != SchemeKind::ByteArrayDecode || all_ascii(*s.str_lit));
          if (transform) {
            std::u16string cipher;
            int offset =
                emit_call_site(rewritten, &junk_labels, ctx, remap(s.regs[0]), scratch_base,
                               *s.str_lit, &cipher);
            // verify the scheme against its reference decode before trusting it
            std::vector<int> keys;
            int table_index = 0;
            {
              // recover the key material from the emitted statements
              const Statement& key_stmt = rewritten[index_map[s.index]];
              switch (ctx.kind) {
                case SchemeKind::XorTwoKeys:
                  keys = {static_cast<int>(*key_stmt.int_lit) ^ ctx.tc,
                          static_cast<int>(*rewritten[index_map[s.index] + 1].int_lit) ^
                              ctx.tc};
                  break;
                case SchemeKind::CaesarShift:
                case SchemeKind::ByteArrayDecode:
                  keys = {static_cast<int>(*key_stmt.int_lit)};
                  break;
                case SchemeKind::StaticTableLookup:
                  keys = ctx.table;
                  table_index = static_cast<int>(*key_stmt.int_lit);
                  break;
              }
            }
            if (scheme_decode(ctx.kind, cipher, keys, table_index) != *s.str_lit)
              throw std::logic_error("obfuscation scheme failed its self-inverse check");
            gt.entries[GroundTruthKey{desc, m.name, m.signature, offset}] = *s.str_lit;
          } else {
            Statement copy_stmt = s;
            for (int& r : copy_stmt.regs) r = remap(r);
            rewritten.push_back(std::move(copy_stmt));
          }
        }

        // fix statement indices and labels
        for (size_t i = 0; i < rewritten.size(); ++i)
          rewritten[i].index = static_cast<int>(i);
        std::map<std::string, int> new_labels;
        for (const auto& [name, idx] : m.labels) {
          if (idx >= static_cast<int>(m.statements.size()))
            new_labels[name] = static_cast<int>(rewritten.size());
          else
            new_labels[name] = index_map.at(idx);
        }
        for (const auto& [name, idx] : junk_labels) new_labels[name] = idx;

        m.statements = std::move(rewritten);
        m.labels = std::move(new_labels);
        m.register_count += kScratchRegs;
      }
    }
    out.classes.emplace(desc, std::move(copy));
  }

  // append the decoder classes
  auto add_class = [&](const std::string& text) {
    SmaliClass cls = parse_smali(text, "<generated>");
    out.classes.emplace(cls.descriptor, std::move(cls));
  };
  switch (scheme.kind) {
    case SchemeKind::XorTwoKeys: add_class(xor_decoder_text()); break;
    case SchemeKind::CaesarShift: add_class(caesar_decoder_text()); break;
    case SchemeKind::ByteArrayDecode: add_class(bytes_decoder_text()); break;
    case SchemeKind::StaticTableLookup: add_class(table_decoder_text(ctx.table)); break;
  }
  if (ctx.used_helper) add_class(helper_class_text(ctx.tc));

  return {std::move(out), std::move(gt)};
}

void write_program_tree(const SmaliProgram& program, const std::string& dir) {
  namespace fs = std::filesystem;
  for (const auto& [desc, cls] : program.classes) {
    std::string rel = desc;
    if (!rel.empty() && rel.front() == 'L') rel.erase(0, 1);
    if (!rel.empty() && rel.back() == ';') rel.pop_back();
    fs::path path = fs::path(dir) / (rel + ".smali");
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << print_class(cls);
  }
}

}  // namespace destring
