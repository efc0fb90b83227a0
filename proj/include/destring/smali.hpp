#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace destring {

// ---------------------------------------------------------------------------
// Opcode classification
// ---------------------------------------------------------------------------

enum class Kind : uint8_t {
  Nop,
  Move,
  MoveResult,
  MoveException,
  Return,
  Const,
  ConstString,
  ConstClass,
  Monitor,
  CheckCast,
  InstanceOf,
  ArrayLength,
  NewInstance,
  NewArray,
  FilledNewArray,
  FillArrayData,
  Throw,
  Goto,
  PackedSwitch,
  SparseSwitch,
  Cmp,
  IfTest,
  IfTestZ,
  ArrayGet,
  ArrayPut,
  InstanceGet,
  InstancePut,
  StaticGet,
  StaticPut,
  Invoke,
  Unop,
  Binop,
  Binop2Addr,
  BinopLit,
  Emit,     // synthesized slice output pseudo-statement, never parsed from apps
  Unknown,  // preserved opaque statement
};

enum class ArithOp : uint8_t { Add, Sub, RSub, Mul, Div, Rem, And, Or, Xor, Shl, Shr, Ushr };
enum class PrimType : uint8_t { Int, Long, Float, Double };
enum class IfCond : uint8_t { Eq, Ne, Lt, Ge, Gt, Le };
enum class CmpKind : uint8_t { FloatLtBias, FloatGtBias, DoubleLtBias, DoubleGtBias, Long };
enum class InvokeKind : uint8_t { Virtual, Super, Direct, Static, Interface };
enum class MoveKind : uint8_t { Narrow, Wide, Object };

enum class UnopKind : uint8_t {
  NegInt, NotInt, NegLong, NotLong, NegFloat, NegDouble,
  IntToLong, IntToFloat, IntToDouble,
  LongToInt, LongToFloat, LongToDouble,
  FloatToInt, FloatToLong, FloatToDouble,
  DoubleToInt, DoubleToLong, DoubleToFloat,
  IntToByte, IntToChar, IntToShort,
};

enum class ArgFormat : uint8_t {
  None,         // nop, return-void
  RegA,         // return vA, throw vA, move-result vA, ...
  RegAB,        // move vA, vB
  RegABC,       // add-int vA, vB, vC
  RegLit,       // const/16 vA, #lit
  RegString,    // const-string vA, "..."
  RegType,      // new-instance vA, Ltype;
  RegRegType,   // instance-of vA, vB, Ltype;
  RegField,     // sget vA, Lc;->f:T
  RegRegField,  // iget vA, vB, Lc;->f:T
  RegList,      // invoke-* {..}, meth | filled-new-array {..}, type
  Label,        // goto :l
  RegLabel,     // if-eqz vA, :l | fill-array-data | packed-switch
  RegRegLabel,  // if-eq vA, vB, :l
  RegRegLit,    // add-int/lit8 vA, vB, #lit
};

struct OpInfo {
  Kind kind = Kind::Unknown;
  uint8_t sub = 0;  // ArithOp / IfCond / CmpKind / InvokeKind / MoveKind / UnopKind / elem char
  PrimType type = PrimType::Int;
  ArgFormat fmt = ArgFormat::None;
  bool wide_a = false, wide_b = false, wide_c = false;
};

// Returns nullptr for unrecognized mnemonics.
const OpInfo* lookup_op(std::string_view mnemonic);

// Shared table entry for opaque (unrecognized) statements.
const OpInfo* unknown_op_info();

// ---------------------------------------------------------------------------
// Statement / method / class / program
// ---------------------------------------------------------------------------

struct MethodRef {
  std::string class_desc;
  std::string name;
  std::string signature;  // "(params)ret"
  auto operator<=>(const MethodRef&) const = default;
  std::string display() const { return class_desc + "->" + name + signature; }
};

struct FieldRef {
  std::string class_desc;
  std::string name;
  std::string type;
  auto operator<=>(const FieldRef&) const = default;
  std::string display() const { return class_desc + "->" + name + ":" + type; }
};

struct ArrayData {
  int width = 0;  // element byte width as declared
  std::vector<int64_t> values;
  auto operator<=>(const ArrayData&) const = default;
};

struct Statement {
  int index = 0;
  std::string mnemonic;
  const OpInfo* info = nullptr;  // table entry; a static Unknown entry for opaque statements
  std::vector<int> regs;         // normalized register numbers
  std::optional<int64_t> int_lit;
  std::optional<std::u16string> str_lit;  // unescaped UTF-16 code units
  std::optional<MethodRef> method_ref;
  std::optional<FieldRef> field_ref;
  std::optional<std::string> type_ref;
  std::vector<std::string> branch_targets;  // goto/if target, or switch case targets
  std::vector<int64_t> switch_keys;         // parallel to branch_targets for switches
  std::optional<std::string> payload_label;  // switch/fill-array-data payload label
  std::optional<ArrayData> array_data;
  std::string raw_text;  // original trimmed source line
  int line_no = 0;

  Kind kind() const { return info->kind; }
  bool is_opaque() const { return info->kind == Kind::Unknown; }
  bool is_conditional() const {
    Kind k = info->kind;
    return k == Kind::IfTest || k == Kind::IfTestZ || k == Kind::PackedSwitch ||
           k == Kind::SparseSwitch;
  }
  bool is_branchy() const { return is_conditional() || info->kind == Kind::Goto; }

  bool operator==(const Statement& o) const;
};

struct FieldDef {
  std::string name;
  std::string type;
  std::set<std::string> flags;
  std::optional<int64_t> init_int;
  std::optional<std::u16string> init_str;
  bool operator==(const FieldDef&) const = default;
  bool is_static() const { return flags.count("static") != 0; }
};

struct MethodDef {
  std::string name;
  std::string signature;
  std::set<std::string> flags;
  int register_count = 0;
  std::vector<Statement> statements;
  std::map<std::string, int> labels;  // label -> index of next real statement

  bool is_static() const { return flags.count("static") != 0; }
  // Number of registers occupied by parameters, including `this` for
  // instance methods; wide types take two.
  int param_reg_count() const;

  bool operator==(const MethodDef& o) const {
    return name == o.name && signature == o.signature && flags == o.flags &&
           register_count == o.register_count && statements == o.statements &&
           labels == o.labels;
  }
};

struct SmaliClass {
  std::string descriptor;
  std::string super_descriptor;
  std::set<std::string> flags;
  std::vector<FieldDef> fields;
  std::vector<MethodDef> methods;
  std::string source_file;  // path the class was loaded from; not compared

  const MethodDef* find_method(std::string_view name, std::string_view sig) const;

  bool operator==(const SmaliClass& o) const {
    return descriptor == o.descriptor && super_descriptor == o.super_descriptor &&
           flags == o.flags && fields == o.fields && methods == o.methods;
  }
};

struct SmaliProgram {
  std::map<std::string, SmaliClass> classes;  // keyed by descriptor

  const SmaliClass* find_class(std::string_view desc) const {
    auto it = classes.find(std::string(desc));
    return it == classes.end() ? nullptr : &it->second;
  }
  // Returns nullptr when the reference is external to the program.
  const MethodDef* resolve(const MethodRef& ref) const;

  bool operator==(const SmaliProgram&) const = default;
};

// ---------------------------------------------------------------------------
// Per-statement def/use semantics, shared by the RDG builder and the VM.
// ---------------------------------------------------------------------------

struct DefUse {
  std::vector<int> defs;
  std::vector<int> uses;
  bool opaque = false;  // unknown semantics: poisons slices
};

DefUse def_use(const Statement& s);

// Method descriptor helpers.
std::vector<std::string> parse_param_types(std::string_view signature);
std::string return_type(std::string_view signature);
bool is_wide_type(std::string_view type);

}  // namespace destring
