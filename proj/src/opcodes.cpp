#include "destring/smali.hpp"

#include <unordered_map>

namespace destring {

namespace {

using Table = std::unordered_map<std::string, OpInfo>;

void add(Table& t, const std::string& name, OpInfo info) { t.emplace(name, info); }

OpInfo mk(Kind k, ArgFormat f, uint8_t sub = 0, PrimType ty = PrimType::Int, bool wa = false,
          bool wb = false, bool wc = false) {
  OpInfo o;
  o.kind = k;
  o.fmt = f;
  o.sub = sub;
  o.type = ty;
  o.wide_a = wa;
  o.wide_b = wb;
  o.wide_c = wc;
  return o;
}

Table build_table() {
  Table t;
  using K = Kind;
  using F = ArgFormat;

  add(t, "nop", mk(K::Nop, F::None));

  // moves
  for (const char* suffix : {"", "/from16", "/16"}) {
    add(t, std::string("move") + suffix,
        mk(K::Move, F::RegAB, uint8_t(MoveKind::Narrow)));
    add(t, std::string("move-wide") + suffix,
        mk(K::Move, F::RegAB, uint8_t(MoveKind::Wide), PrimType::Long, true, true));
    add(t, std::string("move-object") + suffix,
        mk(K::Move, F::RegAB, uint8_t(MoveKind::Object)));
  }
  add(t, "move-result", mk(K::MoveResult, F::RegA, uint8_t(MoveKind::Narrow)));
  add(t, "move-result-wide",
      mk(K::MoveResult, F::RegA, uint8_t(MoveKind::Wide), PrimType::Long, true));
  add(t, "move-result-object", mk(K::MoveResult, F::RegA, uint8_t(MoveKind::Object)));
  add(t, "move-exception", mk(K::MoveException, F::RegA));

  // returns
  add(t, "return-void", mk(K::Return, F::None, uint8_t(MoveKind::Narrow)));
  add(t, "return", mk(K::Return, F::RegA, uint8_t(MoveKind::Narrow)));
  add(t, "return-wide", mk(K::Return, F::RegA, uint8_t(MoveKind::Wide), PrimType::Long, true));
  add(t, "return-object", mk(K::Return, F::RegA, uint8_t(MoveKind::Object)));

  // consts
  for (const char* n : {"const/4", "const/16", "const", "const/high16"})
    add(t, n, mk(K::Const, F::RegLit));
  for (const char* n : {"const-wide/16", "const-wide/32", "const-wide", "const-wide/high16"})
    add(t, n, mk(K::Const, F::RegLit, 0, PrimType::Long, true));
  add(t, "const-string", mk(K::ConstString, F::RegString));
  add(t, "const-string/jumbo", mk(K::ConstString, F::RegString));
  add(t, "const-class", mk(K::ConstClass, F::RegType));

  add(t, "monitor-enter", mk(K::Monitor, F::RegA));
  add(t, "monitor-exit", mk(K::Monitor, F::RegA));
  add(t, "check-cast", mk(K::CheckCast, F::RegType));
  add(t, "instance-of", mk(K::InstanceOf, F::RegRegType));
  add(t, "array-length", mk(K::ArrayLength, F::RegAB));
  add(t, "new-instance", mk(K::NewInstance, F::RegType));
  add(t, "new-array", mk(K::NewArray, F::RegRegType));
  add(t, "filled-new-array", mk(K::FilledNewArray, F::RegList));
  add(t, "filled-new-array/range", mk(K::FilledNewArray, F::RegList));
  add(t, "fill-array-data", mk(K::FillArrayData, F::RegLabel));
  add(t, "throw", mk(K::Throw, F::RegA));

  for (const char* n : {"goto", "goto/16", "goto/32"}) add(t, n, mk(K::Goto, F::Label));
  add(t, "packed-switch", mk(K::PackedSwitch, F::RegLabel));
  add(t, "sparse-switch", mk(K::SparseSwitch, F::RegLabel));

  // comparisons
  add(t, "cmpl-float", mk(K::Cmp, F::RegABC, uint8_t(CmpKind::FloatLtBias), PrimType::Float));
  add(t, "cmpg-float", mk(K::Cmp, F::RegABC, uint8_t(CmpKind::FloatGtBias), PrimType::Float));
  add(t, "cmpl-double", mk(K::Cmp, F::RegABC, uint8_t(CmpKind::DoubleLtBias), PrimType::Double,
                           false, true, true));
  add(t, "cmpg-double", mk(K::Cmp, F::RegABC, uint8_t(CmpKind::DoubleGtBias), PrimType::Double,
                           false, true, true));
  add(t, "cmp-long",
      mk(K::Cmp, F::RegABC, uint8_t(CmpKind::Long), PrimType::Long, false, true, true));

  // conditionals
  const std::pair<const char*, IfCond> conds[] = {
      {"eq", IfCond::Eq}, {"ne", IfCond::Ne}, {"lt", IfCond::Lt},
      {"ge", IfCond::Ge}, {"gt", IfCond::Gt}, {"le", IfCond::Le},
  };
  for (auto [n, c] : conds) {
    add(t, std::string("if-") + n, mk(K::IfTest, F::RegRegLabel, uint8_t(c)));
    add(t, std::string("if-") + n + "z", mk(K::IfTestZ, F::RegLabel, uint8_t(c)));
  }

  // array / field accessors; sub carries the access width tag as a char
  const std::pair<const char*, char> acc[] = {
      {"", 'I'},         {"-wide", 'J'}, {"-object", 'L'}, {"-boolean", 'Z'},
      {"-byte", 'B'},    {"-char", 'C'}, {"-short", 'S'},
  };
  for (auto [sfx, tag] : acc) {
    bool w = tag == 'J';
    PrimType ty = w ? PrimType::Long : PrimType::Int;
    add(t, std::string("aget") + sfx, mk(K::ArrayGet, F::RegABC, uint8_t(tag), ty, w));
    add(t, std::string("aput") + sfx, mk(K::ArrayPut, F::RegABC, uint8_t(tag), ty, w));
    add(t, std::string("iget") + sfx, mk(K::InstanceGet, F::RegRegField, uint8_t(tag), ty, w));
    add(t, std::string("iput") + sfx, mk(K::InstancePut, F::RegRegField, uint8_t(tag), ty, w));
    add(t, std::string("sget") + sfx, mk(K::StaticGet, F::RegField, uint8_t(tag), ty, w));
    add(t, std::string("sput") + sfx, mk(K::StaticPut, F::RegField, uint8_t(tag), ty, w));
  }

  // invokes
  const std::pair<const char*, InvokeKind> inv[] = {
      {"virtual", InvokeKind::Virtual}, {"super", InvokeKind::Super},
      {"direct", InvokeKind::Direct},   {"static", InvokeKind::Static},
      {"interface", InvokeKind::Interface},
  };
  for (auto [n, k] : inv) {
    add(t, std::string("invoke-") + n, mk(K::Invoke, F::RegList, uint8_t(k)));
    add(t, std::string("invoke-") + n + "/range", mk(K::Invoke, F::RegList, uint8_t(k)));
  }

  // unary ops
  struct U { const char* n; UnopKind k; bool wa, wb; PrimType ty; };
  const U unops[] = {
      {"neg-int", UnopKind::NegInt, false, false, PrimType::Int},
      {"not-int", UnopKind::NotInt, false, false, PrimType::Int},
      {"neg-long", UnopKind::NegLong, true, true, PrimType::Long},
      {"not-long", UnopKind::NotLong, true, true, PrimType::Long},
      {"neg-float", UnopKind::NegFloat, false, false, PrimType::Float},
      {"neg-double", UnopKind::NegDouble, true, true, PrimType::Double},
      {"int-to-long", UnopKind::IntToLong, true, false, PrimType::Long},
      {"int-to-float", UnopKind::IntToFloat, false, false, PrimType::Float},
      {"int-to-double", UnopKind::IntToDouble, true, false, PrimType::Double},
      {"long-to-int", UnopKind::LongToInt, false, true, PrimType::Int},
      {"long-to-float", UnopKind::LongToFloat, false, true, PrimType::Float},
      {"long-to-double", UnopKind::LongToDouble, true, true, PrimType::Double},
      {"float-to-int", UnopKind::FloatToInt, false, false, PrimType::Int},
      {"float-to-long", UnopKind::FloatToLong, true, false, PrimType::Long},
      {"float-to-double", UnopKind::FloatToDouble, true, false, PrimType::Double},
      {"double-to-int", UnopKind::DoubleToInt, false, true, PrimType::Int},
      {"double-to-long", UnopKind::DoubleToLong, true, true, PrimType::Long},
      {"double-to-float", UnopKind::DoubleToFloat, false, true, PrimType::Float},
      {"int-to-byte", UnopKind::IntToByte, false, false, PrimType::Int},
      {"int-to-char", UnopKind::IntToChar, false, false, PrimType::Int},
      {"int-to-short", UnopKind::IntToShort, false, false, PrimType::Int},
  };
  for (const U& u : unops)
    add(t, u.n, mk(K::Unop, F::RegAB, uint8_t(u.k), u.ty, u.wa, u.wb));

  // binary ops
  const std::pair<const char*, ArithOp> int_ops[] = {
      {"add", ArithOp::Add}, {"sub", ArithOp::Sub}, {"mul", ArithOp::Mul},
      {"div", ArithOp::Div}, {"rem", ArithOp::Rem}, {"and", ArithOp::And},
      {"or", ArithOp::Or},   {"xor", ArithOp::Xor}, {"shl", ArithOp::Shl},
      {"shr", ArithOp::Shr}, {"ushr", ArithOp::Ushr},
  };
  for (auto [n, op] : int_ops) {
    bool shift = op == ArithOp::Shl || op == ArithOp::Shr || op == ArithOp::Ushr;
    add(t, std::string(n) + "-int", mk(K::Binop, F::RegABC, uint8_t(op)));
    add(t, std::string(n) + "-int/2addr", mk(K::Binop2Addr, F::RegAB, uint8_t(op)));
    add(t, std::string(n) + "-long",
        mk(K::Binop, F::RegABC, uint8_t(op), PrimType::Long, true, true, !shift));
    add(t, std::string(n) + "-long/2addr",
        mk(K::Binop2Addr, F::RegAB, uint8_t(op), PrimType::Long, true, true));
    if (shift) t[std::string(n) + "-long/2addr"].wide_b = false;
  }
  const std::pair<const char*, ArithOp> fp_ops[] = {
      {"add", ArithOp::Add}, {"sub", ArithOp::Sub}, {"mul", ArithOp::Mul},
      {"div", ArithOp::Div}, {"rem", ArithOp::Rem},
  };
  for (auto [n, op] : fp_ops) {
    add(t, std::string(n) + "-float", mk(K::Binop, F::RegABC, uint8_t(op), PrimType::Float));
    add(t, std::string(n) + "-float/2addr",
        mk(K::Binop2Addr, F::RegAB, uint8_t(op), PrimType::Float));
    add(t, std::string(n) + "-double",
        mk(K::Binop, F::RegABC, uint8_t(op), PrimType::Double, true, true, true));
    add(t, std::string(n) + "-double/2addr",
        mk(K::Binop2Addr, F::RegAB, uint8_t(op), PrimType::Double, true, true));
  }

  // literal-operand binops
  const std::pair<const char*, ArithOp> lit16_ops[] = {
      {"add-int/lit16", ArithOp::Add}, {"rsub-int", ArithOp::RSub},
      {"mul-int/lit16", ArithOp::Mul}, {"div-int/lit16", ArithOp::Div},
      {"rem-int/lit16", ArithOp::Rem}, {"and-int/lit16", ArithOp::And},
      {"or-int/lit16", ArithOp::Or},   {"xor-int/lit16", ArithOp::Xor},
  };
  for (auto [n, op] : lit16_ops) add(t, n, mk(K::BinopLit, F::RegRegLit, uint8_t(op)));
  const std::pair<const char*, ArithOp> lit8_ops[] = {
      {"add-int/lit8", ArithOp::Add},   {"rsub-int/lit8", ArithOp::RSub},
      {"mul-int/lit8", ArithOp::Mul},   {"div-int/lit8", ArithOp::Div},
      {"rem-int/lit8", ArithOp::Rem},   {"and-int/lit8", ArithOp::And},
      {"or-int/lit8", ArithOp::Or},     {"xor-int/lit8", ArithOp::Xor},
      {"shl-int/lit8", ArithOp::Shl},   {"shr-int/lit8", ArithOp::Shr},
      {"ushr-int/lit8", ArithOp::Ushr},
  };
  for (auto [n, op] : lit8_ops) add(t, n, mk(K::BinopLit, F::RegRegLit, uint8_t(op)));

  add(t, "emit-string", mk(K::Emit, F::RegA));

  return t;
}

const Table& table() {
  static const Table t = build_table();
  return t;
}

void push_reg(std::vector<int>& out, int reg, bool wide) {
  out.push_back(reg);
  if (wide) out.push_back(reg + 1);
}

}  // namespace

const OpInfo* lookup_op(std::string_view mnemonic) {
  const Table& t = table();
  auto it = t.find(std::string(mnemonic));
  return it == t.end() ? nullptr : &it->second;
}

const OpInfo* unknown_op_info() {
  static const OpInfo u = mk(Kind::Unknown, ArgFormat::None);
  return &u;
}

bool Statement::operator==(const Statement& o) const {
  if (index != o.index || mnemonic != o.mnemonic || info != o.info || regs != o.regs ||
      int_lit != o.int_lit || str_lit != o.str_lit || method_ref != o.method_ref ||
      field_ref != o.field_ref || type_ref != o.type_ref ||
      branch_targets != o.branch_targets || switch_keys != o.switch_keys ||
      payload_label != o.payload_label || array_data != o.array_data)
    return false;
  if (info->kind == Kind::Unknown && raw_text != o.raw_text) return false;
  return true;
}

DefUse def_use(const Statement& s) {
  DefUse du;
  const OpInfo& op = *s.info;
  auto def_a = [&] { push_reg(du.defs, s.regs[0], op.wide_a); };
  auto use_a = [&] { push_reg(du.uses, s.regs[0], op.wide_a); };
  auto use_b = [&] { push_reg(du.uses, s.regs[1], op.wide_b); };
  auto use_c = [&] { push_reg(du.uses, s.regs[2], op.wide_c); };

  switch (op.kind) {
    case Kind::Nop:
    case Kind::Goto:
      break;
    case Kind::Const:
    case Kind::ConstString:
    case Kind::ConstClass:
    case Kind::NewInstance:
    case Kind::MoveResult:
    case Kind::MoveException:
    case Kind::StaticGet:
      def_a();
      break;
    case Kind::Move:
    case Kind::Unop:
    case Kind::ArrayLength:
    case Kind::InstanceOf:
    case Kind::NewArray:
    case Kind::InstanceGet:
      def_a();
      use_b();
      break;
    case Kind::Return:
      if (op.fmt == ArgFormat::RegA) use_a();
      break;
    case Kind::Throw:
    case Kind::Monitor:
    case Kind::StaticPut:
    case Kind::PackedSwitch:
    case Kind::SparseSwitch:
    case Kind::IfTestZ:
    case Kind::Emit:
      use_a();
      break;
    case Kind::CheckCast:
    case Kind::FillArrayData:
      use_a();
      def_a();
      break;
    case Kind::IfTest:
      use_a();
      use_b();
      break;
    case Kind::Cmp:
    case Kind::Binop:
      def_a();
      use_b();
      use_c();
      break;
    case Kind::Binop2Addr:
      use_a();
      use_b();
      def_a();
      break;
    case Kind::BinopLit:
      def_a();
      use_b();
      break;
    case Kind::ArrayGet:
      def_a();
      du.uses.push_back(s.regs[1]);
      du.uses.push_back(s.regs[2]);
      break;
    case Kind::ArrayPut:
      use_a();
      du.uses.push_back(s.regs[1]);
      du.uses.push_back(s.regs[2]);
      du.defs.push_back(s.regs[1]);  // array contents change
      break;
    case Kind::InstancePut:
      use_a();
      du.uses.push_back(s.regs[1]);
      du.defs.push_back(s.regs[1]);  // object state changes
      break;
    case Kind::FilledNewArray:
      du.uses = s.regs;
      break;
    case Kind::Invoke:
      du.uses = s.regs;
      // A non-static call can mutate or (for constructors) initialize its
      // receiver; model that as a write so dependency tracking survives
      // builder-style APIs.
      if (InvokeKind(op.sub) != InvokeKind::Static && !s.regs.empty())
        du.defs.push_back(s.regs[0]);
      break;
    case Kind::Unknown:
      du.opaque = true;
      break;
  }
  return du;
}

int MethodDef::param_reg_count() const {
  int n = is_static() ? 0 : 1;
  for (const std::string& ty : parse_param_types(signature)) n += is_wide_type(ty) ? 2 : 1;
  return n;
}

const MethodDef* SmaliClass::find_method(std::string_view name, std::string_view sig) const {
  for (const MethodDef& m : methods)
    if (m.name == name && m.signature == sig) return &m;
  return nullptr;
}

const MethodDef* SmaliProgram::resolve(const MethodRef& ref) const {
  const SmaliClass* cls = find_class(ref.class_desc);
  return cls ? cls->find_method(ref.name, ref.signature) : nullptr;
}

std::vector<std::string> parse_param_types(std::string_view signature) {
  std::vector<std::string> out;
  size_t i = signature.find('(');
  size_t end = signature.find(')');
  if (i == std::string_view::npos || end == std::string_view::npos) return out;
  ++i;
  while (i < end) {
    size_t start = i;
    while (i < end && signature[i] == '[') ++i;
    if (i >= end) break;
    if (signature[i] == 'L') {
      size_t semi = signature.find(';', i);
      if (semi == std::string_view::npos || semi > end) break;
      i = semi + 1;
    } else {
      ++i;
    }
    out.emplace_back(signature.substr(start, i - start));
  }
  return out;
}

std::string return_type(std::string_view signature) {
  size_t end = signature.find(')');
  if (end == std::string_view::npos) return "";
  return std::string(signature.substr(end + 1));
}

bool is_wide_type(std::string_view type) { return type == "J" || type == "D"; }

}  // namespace destring
