#include "destring/vm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "destring/util.hpp"
#include "vm_internal.hpp"

namespace destring {

using namespace vmdetail;

const char* status_name(ExecStatus s) {
  switch (s) {
    case ExecStatus::Ok: return "ok";
    case ExecStatus::Timeout: return "timeout";
    case ExecStatus::UnsupportedOpcode: return "unsupported-opcode";
    case ExecStatus::RuntimeError: return "runtime-error";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------------------
// Dalvik arithmetic. All int/long ops wrap in two's complement.
// ---------------------------------------------------------------------------

int32_t arith_int(ArithOp op, int32_t a, int32_t b) {
  uint32_t ua = static_cast<uint32_t>(a), ub = static_cast<uint32_t>(b);
  switch (op) {
    case ArithOp::Add: return static_cast<int32_t>(ua + ub);
    case ArithOp::Sub: return static_cast<int32_t>(ua - ub);
    case ArithOp::Mul: return static_cast<int32_t>(ua * ub);
    case ArithOp::Div:
      if (b == 0) fail(ExecStatus::RuntimeError, "division by zero");
      if (a == INT32_MIN && b == -1) return INT32_MIN;
      return a / b;
    case ArithOp::Rem:
      if (b == 0) fail(ExecStatus::RuntimeError, "division by zero");
      if (a == INT32_MIN && b == -1) return 0;
      return a % b;
    case ArithOp::And: return a & b;
    case ArithOp::Or: return a | b;
    case ArithOp::Xor: return a ^ b;
    case ArithOp::Shl: return static_cast<int32_t>(ua << (ub & 31));
    case ArithOp::Shr: return a >> (ub & 31);
    case ArithOp::Ushr: return static_cast<int32_t>(ua >> (ub & 31));
    case ArithOp::RSub: return static_cast<int32_t>(ub - ua);
  }
  fail(ExecStatus::RuntimeError, "bad arithmetic op");
}

int64_t arith_long(ArithOp op, int64_t a, int64_t b) {
  uint64_t ua = static_cast<uint64_t>(a), ub = static_cast<uint64_t>(b);
  switch (op) {
    case ArithOp::Add: return static_cast<int64_t>(ua + ub);
    case ArithOp::Sub: return static_cast<int64_t>(ua - ub);
    case ArithOp::Mul: return static_cast<int64_t>(ua * ub);
    case ArithOp::Div:
      if (b == 0) fail(ExecStatus::RuntimeError, "division by zero");
      if (a == INT64_MIN && b == -1) return INT64_MIN;
      return a / b;
    case ArithOp::Rem:
      if (b == 0) fail(ExecStatus::RuntimeError, "division by zero");
      if (a == INT64_MIN && b == -1) return 0;
      return a % b;
    case ArithOp::And: return a & b;
    case ArithOp::Or: return a | b;
    case ArithOp::Xor: return a ^ b;
    case ArithOp::Shl: return static_cast<int64_t>(ua << (ub & 63));
    case ArithOp::Shr: return a >> (ub & 63);
    case ArithOp::Ushr: return static_cast<int64_t>(ua >> (ub & 63));
    case ArithOp::RSub: return static_cast<int64_t>(ub - ua);
  }
  fail(ExecStatus::RuntimeError, "bad arithmetic op");
}

template <typename F>
F arith_fp(ArithOp op, F a, F b) {
  switch (op) {
    case ArithOp::Add: return a + b;
    case ArithOp::Sub: return a - b;
    case ArithOp::Mul: return a * b;
    case ArithOp::Div: return a / b;
    case ArithOp::Rem: return std::fmod(a, b);
    default: fail(ExecStatus::RuntimeError, "bad float arithmetic op");
  }
}

// Java narrowing conversions: NaN -> 0, out of range clamps.
int32_t jfp_to_int(double d) {
  if (std::isnan(d)) return 0;
  if (d >= 2147483648.0) return INT32_MAX;
  if (d <= -2147483648.0) return INT32_MIN;
  return static_cast<int32_t>(d);
}

int64_t jfp_to_long(double d) {
  if (std::isnan(d)) return 0;
  if (d >= 9223372036854775808.0) return INT64_MAX;
  if (d <= -9223372036854775808.0) return INT64_MIN;
  return static_cast<int64_t>(d);
}

template <typename F>
int32_t fp_compare(F a, F b, bool gt_bias) {
  if (std::isnan(a) || std::isnan(b)) return gt_bias ? 1 : -1;
  if (a < b) return -1;
  if (a > b) return 1;
  return 0;
}

bool same_ref(const Value& a, const Value& b) {
  if (a.tag == Value::Tag::Null && b.tag == Value::Tag::Null) return true;
  if (a.tag != b.tag) return false;
  switch (a.tag) {
    case Value::Tag::Str: return a.str == b.str;
    case Value::Tag::Array: return a.arr == b.arr;
    case Value::Tag::Object: return a.obj == b.obj;
    case Value::Tag::Class: return a.cls == b.cls;
    default: return false;
  }
}

// Code to run: either a whole method or a slice. Slices resolve branch
// targets to the nearest retained statement at a greater-or-equal index and
// fall through to the trailing emit.
struct CodeView {
  std::vector<const Statement*> code;
  const std::map<std::string, int>* labels = nullptr;
  bool slice_mode = false;
  std::vector<int> original_indices;  // sorted, slice mode only

  static CodeView method(const MethodDef& m) {
    CodeView v;
    v.labels = &m.labels;
    for (const Statement& s : m.statements) v.code.push_back(&s);
    return v;
  }

  static CodeView slice(const SliceProgram& s) {
    CodeView v;
    v.labels = &s.labels;
    v.slice_mode = true;
    for (const Statement& st : s.statements) {
      v.code.push_back(&st);
      v.original_indices.push_back(st.index);
    }
    return v;
  }

  int target_position(const std::string& label) const {
    auto it = labels->find(label);
    if (it == labels->end())
      fail(ExecStatus::RuntimeError, "unresolved label :" + label);
    int original = it->second;
    if (!slice_mode) {
      if (original >= static_cast<int>(code.size()))
        fail(ExecStatus::RuntimeError, "branch past end of method");
      return original;
    }
    auto lb = std::lower_bound(original_indices.begin(), original_indices.end(), original);
    return static_cast<int>(lb - original_indices.begin());  // end() == emit position
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Interpreter
// ---------------------------------------------------------------------------

struct Interpreter::Impl {
  const SmaliProgram& program;
  ExecBudget budget;
  std::chrono::steady_clock::time_point deadline;
  uint64_t steps = 0;
  int depth = 0;
  std::map<std::string, Value> statics;  // "Lcls;->field" -> value
  std::set<std::string> initialized;

  std::u16string emitted;
  bool did_emit = false;

  const SlicingCriterion* capture_criterion = nullptr;
  Value captured;
  bool did_capture = false;

  Impl(const SmaliProgram& p, ExecBudget b) : program(p), budget(b) {}

  void tick() {
    if (steps >= budget.max_steps)
      fail(ExecStatus::Timeout, "step budget exhausted");
    ++steps;
    if ((steps & 0xFF) == 0 && std::chrono::steady_clock::now() > deadline)
      fail(ExecStatus::Timeout, "wall-clock budget exhausted");
  }

  Value read(Frame& f, int reg) {
    if (reg < 0 || reg >= static_cast<int>(f.registers.size()))
      fail(ExecStatus::RuntimeError, "register " + register_name(reg) + " out of frame");
    Value& v = f.registers[reg];
    if (v.tag == Value::Tag::Uninit)
      fail(ExecStatus::RuntimeError, "read of uninitialized register " + register_name(reg));
    return v;
  }

  void write(Frame& f, int reg, Value v, bool wide = false) {
    if (reg < 0 || reg + (wide ? 1 : 0) >= static_cast<int>(f.registers.size()))
      fail(ExecStatus::RuntimeError, "register " + register_name(reg) + " out of frame");
    f.registers[reg] = std::move(v);
    if (wide) f.registers[reg + 1] = Value::wide_high();
  }

  void ensure_initialized(const std::string& desc) {
    if (initialized.count(desc)) return;
    const SmaliClass* cls = program.find_class(desc);
    initialized.insert(desc);  // before running <clinit>: tolerate self-reference
    if (cls == nullptr) return;
    for (const FieldDef& fd : cls->fields) {
      if (!fd.is_static()) continue;
      std::string key = desc + "->" + fd.name;
      if (fd.init_str)
        statics[key] = Value::string(*fd.init_str);
      else if (fd.init_int)
        statics[key] = fd.type == "J" ? Value::int64v(*fd.init_int)
                                      : Value::int32(static_cast<int32_t>(*fd.init_int));
      else
        statics[key] = default_for_type(fd.type);
    }
    if (const MethodDef* clinit = cls->find_method("<clinit>", "()V"))
      call_method(desc, *clinit, {});
  }

  std::optional<Value> call_method(const std::string& class_desc, const MethodDef& m,
                                   std::vector<Value> args) {
    if (depth >= 64) fail(ExecStatus::RuntimeError, "call depth limit exceeded");
    if (m.statements.empty())
      fail(ExecStatus::UnsupportedOpcode,
           "call to bodyless method " + class_desc + "->" + m.name + m.signature);
    ++depth;
    Frame frame;
    frame.method = {class_desc, m.name, m.signature};
    frame.registers.assign(m.register_count, Value());
    int base = m.register_count - m.param_reg_count();
    if (base < 0) fail(ExecStatus::RuntimeError, "bad register count in " + m.name);
    int at = base;
    std::vector<std::string> params = parse_param_types(m.signature);
    size_t ai = 0;
    if (!m.is_static()) {
      if (ai >= args.size()) fail(ExecStatus::RuntimeError, "missing receiver argument");
      write(frame, at++, args[ai++]);
    }
    for (const std::string& ty : params) {
      if (ai >= args.size()) fail(ExecStatus::RuntimeError, "missing call argument");
      bool wide = is_wide_type(ty);
      write(frame, at, args[ai++], wide);
      at += wide ? 2 : 1;
    }
    CodeView view = CodeView::method(m);
    std::optional<Value> ret = run(view, frame);
    --depth;
    return ret;
  }

  std::vector<Value> collect_args(Frame& f, const Statement& st) {
    const MethodRef& m = *st.method_ref;
    bool is_static = InvokeKind(st.info->sub) == InvokeKind::Static;
    std::vector<Value> args;
    size_t pos = 0;
    if (!is_static) {
      if (st.regs.empty()) fail(ExecStatus::RuntimeError, "missing receiver register");
      args.push_back(read(f, st.regs[pos++]));
    }
    for (const std::string& ty : parse_param_types(m.signature)) {
      if (pos >= st.regs.size())
        fail(ExecStatus::RuntimeError, "too few argument registers for " + m.display());
      args.push_back(read(f, st.regs[pos]));
      pos += is_wide_type(ty) ? 2 : 1;
    }
    if (pos != st.regs.size())
      fail(ExecStatus::RuntimeError, "argument register count mismatch for " + m.display());
    return args;
  }

  // Dispatches an invoke; returns the callee result (nullopt for void).
  std::optional<Value> dispatch_invoke(Frame& f, const Statement& st) {
    const MethodRef& mref = *st.method_ref;
    std::vector<Value> args = collect_args(f, st);

    if (const MethodDef* callee = program.resolve(mref)) {
      if (!callee->statements.empty()) {
        if (callee->is_static()) ensure_initialized(mref.class_desc);
        return call_method(mref.class_desc, *callee, std::move(args));
      }
    }

    std::string key = mref.class_desc + "->" + mref.name + mref.signature;
    if (const BuiltinFn* fn = find_builtin(key)) {
      std::optional<Value> out = (*fn)(args);
      // String constructors produce the value that the (previously
      // uninitialized) receiver register now holds.
      if (mref.class_desc == "Ljava/lang/String;" && mref.name == "<init>") {
        write(f, st.regs[0], *out);
        return std::nullopt;
      }
      return out;
    }
    fail(ExecStatus::UnsupportedOpcode, "unmodeled method " + mref.display());
  }

  void exec_unop(Frame& f, const Statement& st) {
    UnopKind k = UnopKind(st.info->sub);
    int a = st.regs[0], b = st.regs[1];
    switch (k) {
      case UnopKind::NegInt:
        write(f, a, Value::int32(arith_int(ArithOp::Sub, 0, as_int(read(f, b)))));
        break;
      case UnopKind::NotInt: write(f, a, Value::int32(~as_int(read(f, b)))); break;
      case UnopKind::NegLong:
        write(f, a, Value::int64v(arith_long(ArithOp::Sub, 0, as_long(read(f, b)))), true);
        break;
      case UnopKind::NotLong: write(f, a, Value::int64v(~as_long(read(f, b))), true); break;
      case UnopKind::NegFloat: write(f, a, Value::float32(-as_float(read(f, b)))); break;
      case UnopKind::NegDouble: write(f, a, Value::float64(-as_double(read(f, b))), true); break;
      case UnopKind::IntToLong:
        write(f, a, Value::int64v(as_int(read(f, b))), true);
        break;
      case UnopKind::IntToFloat:
        write(f, a, Value::float32(static_cast<float>(as_int(read(f, b)))));
        break;
      case UnopKind::IntToDouble:
        write(f, a, Value::float64(static_cast<double>(as_int(read(f, b)))), true);
        break;
      case UnopKind::LongToInt:
        write(f, a, Value::int32(static_cast<int32_t>(as_long(read(f, b)))));
        break;
      case UnopKind::LongToFloat:
        write(f, a, Value::float32(static_cast<float>(as_long(read(f, b)))));
        break;
      case UnopKind::LongToDouble:
        write(f, a, Value::float64(static_cast<double>(as_long(read(f, b)))), true);
        break;
      case UnopKind::FloatToInt:
        write(f, a, Value::int32(jfp_to_int(as_float(read(f, b)))));
        break;
      case UnopKind::FloatToLong:
        write(f, a, Value::int64v(jfp_to_long(as_float(read(f, b)))), true);
        break;
      case UnopKind::FloatToDouble:
        write(f, a, Value::float64(static_cast<double>(as_float(read(f, b)))), true);
        break;
      case UnopKind::DoubleToInt:
        write(f, a, Value::int32(jfp_to_int(as_double(read(f, b)))));
        break;
      case UnopKind::DoubleToLong:
        write(f, a, Value::int64v(jfp_to_long(as_double(read(f, b)))), true);
        break;
      case UnopKind::DoubleToFloat:
        write(f, a, Value::float32(static_cast<float>(as_double(read(f, b)))));
        break;
      case UnopKind::IntToByte:
        write(f, a, Value::int32(static_cast<int8_t>(as_int(read(f, b)))));
        break;
      case UnopKind::IntToChar:
        write(f, a, Value::int32(as_int(read(f, b)) & 0xFFFF));
        break;
      case UnopKind::IntToShort:
        write(f, a, Value::int32(static_cast<int16_t>(as_int(read(f, b)))));
        break;
    }
  }

  void exec_binop(Frame& f, const Statement& st, int dst, int lhs_reg, int rhs_reg) {
    ArithOp op = ArithOp(st.info->sub);
    switch (st.info->type) {
      case PrimType::Int:
        write(f, dst, Value::int32(arith_int(op, as_int(read(f, lhs_reg)),
                                             as_int(read(f, rhs_reg)))));
        break;
      case PrimType::Long: {
        int64_t lhs = as_long(read(f, lhs_reg));
        // shifts take a 32-bit count
        bool shift = op == ArithOp::Shl || op == ArithOp::Shr || op == ArithOp::Ushr;
        int64_t rhs = shift ? as_int(read(f, rhs_reg)) : as_long(read(f, rhs_reg));
        write(f, dst, Value::int64v(arith_long(op, lhs, rhs)), true);
        break;
      }
      case PrimType::Float:
        write(f, dst, Value::float32(arith_fp(op, as_float(read(f, lhs_reg)),
                                              as_float(read(f, rhs_reg)))));
        break;
      case PrimType::Double:
        write(f, dst,
              Value::float64(arith_fp(op, as_double(read(f, lhs_reg)),
                                      as_double(read(f, rhs_reg)))),
              true);
        break;
    }
  }

  bool if_condition(const Statement& st, const Value& a, const Value& b) {
    IfCond c = IfCond(st.info->sub);
    if (a.is_ref() || b.is_ref()) {
      bool eq;
      if (st.kind() == Kind::IfTestZ) {
        eq = a.tag == Value::Tag::Null;
      } else {
        eq = same_ref(a, b);
      }
      switch (c) {
        case IfCond::Eq: return eq;
        case IfCond::Ne: return !eq;
        default:
          fail(ExecStatus::RuntimeError, "ordered comparison on a reference");
      }
    }
    int32_t x = as_int(a);
    int32_t y = st.kind() == Kind::IfTestZ ? 0 : as_int(b);
    switch (c) {
      case IfCond::Eq: return x == y;
      case IfCond::Ne: return x != y;
      case IfCond::Lt: return x < y;
      case IfCond::Ge: return x >= y;
      case IfCond::Gt: return x > y;
      case IfCond::Le: return x <= y;
    }
    return false;
  }

  // Runs one frame to completion; returns the method return value.
  std::optional<Value> run(CodeView& view, Frame& frame) {
    std::optional<Value> pending;  // result of the immediately preceding call
    int n = static_cast<int>(view.code.size());
    while (frame.pc >= 0 && frame.pc < n) {
      tick();
      const Statement& st = *view.code[frame.pc];
      int next = frame.pc + 1;
      bool keep_pending = false;

      switch (st.kind()) {
        case Kind::Nop:
          break;
        case Kind::Move: {
          bool wide = MoveKind(st.info->sub) == MoveKind::Wide;
          write(frame, st.regs[0], read(frame, st.regs[1]), wide);
          break;
        }
        case Kind::MoveResult: {
          if (!pending)
            fail(ExecStatus::RuntimeError, "move-result without a preceding call result");
          bool wide = MoveKind(st.info->sub) == MoveKind::Wide;
          write(frame, st.regs[0], *pending, wide);
          break;
        }
        case Kind::MoveException:
          fail(ExecStatus::UnsupportedOpcode, "move-exception (exception flow not modeled)");
        case Kind::Return: {
          if (st.info->fmt == ArgFormat::None) return std::nullopt;
          return read(frame, st.regs[0]);
        }
        case Kind::Const: {
          if (st.info->type == PrimType::Long)
            write(frame, st.regs[0], Value::int64v(*st.int_lit), true);
          else
            write(frame, st.regs[0], Value::int32(static_cast<int32_t>(*st.int_lit)));
          break;
        }
        case Kind::ConstString:
          write(frame, st.regs[0], Value::string(*st.str_lit));
          break;
        case Kind::ConstClass:
          write(frame, st.regs[0], Value::class_ref(*st.type_ref));
          break;
        case Kind::Monitor:
          read(frame, st.regs[0]);
          break;
        case Kind::CheckCast: {
          Value v = read(frame, st.regs[0]);
          const std::string& ty = *st.type_ref;
          if (v.tag == Value::Tag::Null) break;
          if (!v.is_ref())
            fail(ExecStatus::RuntimeError, "check-cast on a primitive value");
          if (ty == "Ljava/lang/String;" && v.tag != Value::Tag::Str)
            fail(ExecStatus::RuntimeError, "cannot cast value to java.lang.String");
          if (ty.front() == '[' && v.tag != Value::Tag::Array)
            fail(ExecStatus::RuntimeError, "cannot cast value to array type " + ty);
          write(frame, st.regs[0], v);
          break;
        }
        case Kind::InstanceOf: {
          Value v = read(frame, st.regs[1]);
          const std::string& ty = *st.type_ref;
          int32_t yes = 0;
          if (v.tag == Value::Tag::Str &&
              (ty == "Ljava/lang/String;" || ty == "Ljava/lang/Object;"))
            yes = 1;
          else if (v.tag == Value::Tag::Array && (ty.front() == '[' || ty == "Ljava/lang/Object;"))
            yes = 1;
          else if (v.tag == Value::Tag::Object && (v.obj->desc == ty || ty == "Ljava/lang/Object;"))
            yes = 1;
          write(frame, st.regs[0], Value::int32(yes));
          break;
        }
        case Kind::ArrayLength: {
          ArrayVal& arr = as_array(read(frame, st.regs[1]));
          write(frame, st.regs[0], Value::int32(static_cast<int32_t>(arr.cells.size())));
          break;
        }
        case Kind::NewInstance: {
          ensure_initialized(*st.type_ref);
          auto obj = std::make_shared<ObjectVal>();
          obj->desc = *st.type_ref;
          write(frame, st.regs[0], Value::object(std::move(obj)));
          break;
        }
        case Kind::NewArray: {
          int32_t len = as_int(read(frame, st.regs[1]));
          if (len < 0) fail(ExecStatus::RuntimeError, "negative array size");
          if (len > (1 << 24)) fail(ExecStatus::RuntimeError, "array allocation too large");
          auto arr = std::make_shared<ArrayVal>();
          arr->elem = array_elem_kind(*st.type_ref);
          arr->cells.assign(len, default_for_type(std::string_view(&arr->elem, 1)));
          write(frame, st.regs[0], Value::array(std::move(arr)));
          break;
        }
        case Kind::FilledNewArray: {
          auto arr = std::make_shared<ArrayVal>();
          arr->elem = array_elem_kind(*st.type_ref);
          for (int r : st.regs)
            arr->cells.push_back(normalize_array_cell(arr->elem, read(frame, r)));
          pending = Value::array(std::move(arr));
          keep_pending = true;
          break;
        }
        case Kind::FillArrayData: {
          ArrayVal& arr = as_array(read(frame, st.regs[0]));
          const ArrayData& data = *st.array_data;
          if (data.values.size() != arr.cells.size())
            fail(ExecStatus::RuntimeError, "fill-array-data size mismatch");
          for (size_t k = 0; k < data.values.size(); ++k) {
            int64_t raw = data.values[k];
            Value cell = arr.elem == 'J'   ? Value::int64v(raw)
                         : arr.elem == 'D' ? Value::float64(std::bit_cast<double>(raw))
                         : arr.elem == 'F'
                             ? Value::float32(std::bit_cast<float>(static_cast<int32_t>(raw)))
                             : Value::int32(static_cast<int32_t>(raw));
            arr.cells[k] = normalize_array_cell(arr.elem, cell);
          }
          break;
        }
        case Kind::Throw: {
          Value v = read(frame, st.regs[0]);
          std::string what = v.tag == Value::Tag::Object ? v.obj->desc : "exception";
          fail(ExecStatus::RuntimeError, "throw " + what);
        }
        case Kind::Goto:
          next = view.target_position(st.branch_targets[0]);
          break;
        case Kind::PackedSwitch:
        case Kind::SparseSwitch: {
          int32_t key = as_int(read(frame, st.regs[0]));
          for (size_t k = 0; k < st.switch_keys.size(); ++k) {
            if (st.switch_keys[k] == key) {
              next = view.target_position(st.branch_targets[k]);
              break;
            }
          }
          break;
        }
        case Kind::Cmp: {
          CmpKind ck = CmpKind(st.info->sub);
          int32_t r;
          switch (ck) {
            case CmpKind::Long: {
              int64_t x = as_long(read(frame, st.regs[1]));
              int64_t y = as_long(read(frame, st.regs[2]));
              r = x < y ? -1 : (x > y ? 1 : 0);
              break;
            }
            case CmpKind::FloatLtBias:
            case CmpKind::FloatGtBias:
              r = fp_compare(as_float(read(frame, st.regs[1])),
                             as_float(read(frame, st.regs[2])),
                             ck == CmpKind::FloatGtBias);
              break;
            default:
              r = fp_compare(as_double(read(frame, st.regs[1])),
                             as_double(read(frame, st.regs[2])),
                             ck == CmpKind::DoubleGtBias);
              break;
          }
          write(frame, st.regs[0], Value::int32(r));
          break;
        }
        case Kind::IfTest: {
          if (if_condition(st, read(frame, st.regs[0]), read(frame, st.regs[1])))
            next = view.target_position(st.branch_targets[0]);
          break;
        }
        case Kind::IfTestZ: {
          if (if_condition(st, read(frame, st.regs[0]), Value::int32(0)))
            next = view.target_position(st.branch_targets[0]);
          break;
        }
        case Kind::ArrayGet: {
          ArrayVal& arr = as_array(read(frame, st.regs[1]));
          int32_t idx = as_int(read(frame, st.regs[2]));
          if (idx < 0 || static_cast<size_t>(idx) >= arr.cells.size())
            fail(ExecStatus::RuntimeError, "array index out of bounds: " + std::to_string(idx));
          write(frame, st.regs[0], arr.cells[idx], st.info->wide_a);
          break;
        }
        case Kind::ArrayPut: {
          ArrayVal& arr = as_array(read(frame, st.regs[1]));
          int32_t idx = as_int(read(frame, st.regs[2]));
          if (idx < 0 || static_cast<size_t>(idx) >= arr.cells.size())
            fail(ExecStatus::RuntimeError, "array index out of bounds: " + std::to_string(idx));
          arr.cells[idx] = normalize_array_cell(arr.elem, read(frame, st.regs[0]));
          break;
        }
        case Kind::InstanceGet: {
          Value ov = read(frame, st.regs[1]);
          if (ov.tag == Value::Tag::Null) fail(ExecStatus::RuntimeError, "null dereference");
          if (ov.tag != Value::Tag::Object)
            fail(ExecStatus::RuntimeError, "iget on a non-object value");
          auto it = ov.obj->fields.find(st.field_ref->name);
          Value v = it != ov.obj->fields.end() ? it->second
                                               : default_for_type(st.field_ref->type);
          write(frame, st.regs[0], v, st.info->wide_a);
          break;
        }
        case Kind::InstancePut: {
          Value ov = read(frame, st.regs[1]);
          if (ov.tag == Value::Tag::Null) fail(ExecStatus::RuntimeError, "null dereference");
          if (ov.tag != Value::Tag::Object)
            fail(ExecStatus::RuntimeError, "iput on a non-object value");
          ov.obj->fields[st.field_ref->name] = read(frame, st.regs[0]);
          break;
        }
        case Kind::StaticGet: {
          ensure_initialized(st.field_ref->class_desc);
          std::string key = st.field_ref->class_desc + "->" + st.field_ref->name;
          auto it = statics.find(key);
          Value v = it != statics.end() ? it->second : default_for_type(st.field_ref->type);
          write(frame, st.regs[0], v, st.info->wide_a);
          break;
        }
        case Kind::StaticPut: {
          ensure_initialized(st.field_ref->class_desc);
          std::string key = st.field_ref->class_desc + "->" + st.field_ref->name;
          statics[key] = read(frame, st.regs[0]);
          break;
        }
        case Kind::Invoke: {
          pending = dispatch_invoke(frame, st);
          keep_pending = true;
          break;
        }
        case Kind::Unop:
          exec_unop(frame, st);
          break;
        case Kind::Binop:
          exec_binop(frame, st, st.regs[0], st.regs[1], st.regs[2]);
          break;
        case Kind::Binop2Addr:
          exec_binop(frame, st, st.regs[0], st.regs[0], st.regs[1]);
          break;
        case Kind::BinopLit: {
          ArithOp op = ArithOp(st.info->sub);
          int32_t src = as_int(read(frame, st.regs[1]));
          int32_t lit = static_cast<int32_t>(*st.int_lit);
          int32_t r = op == ArithOp::RSub ? arith_int(ArithOp::Sub, lit, src)
                                          : arith_int(op, src, lit);
          write(frame, st.regs[0], Value::int32(r));
          break;
        }
        case Kind::Emit: {
          Value v = read(frame, st.regs[0]);
          if (v.tag != Value::Tag::Str)
            fail(ExecStatus::RuntimeError,
                 "emit: criterion register does not hold a String");
          emitted = *v.str;
          did_emit = true;
          return std::nullopt;
        }
        case Kind::Unknown:
          fail(ExecStatus::UnsupportedOpcode, "unknown opcode " + st.mnemonic);
      }

      if (!keep_pending) pending.reset();
      // capture only in the root frame of execute_method_capture (depth 1)
      if (capture_criterion && depth == 1 && !view.slice_mode &&
          st.index == capture_criterion->stmt_index) {
        captured = frame.registers[capture_criterion->reg];
        did_capture = true;
      }
      frame.pc = next;
    }
    return std::nullopt;
  }
};

Interpreter::Interpreter(const SmaliProgram& program, ExecBudget budget)
    : impl_(std::make_unique<Impl>(program, budget)) {}

Interpreter::~Interpreter() = default;

ExecResult Interpreter::execute(const SliceProgram& slice) {
  ExecResult result;
  impl_->deadline = std::chrono::steady_clock::now() + impl_->budget.wall_clock;
  CodeView view = CodeView::slice(slice);
  Frame frame;
  frame.method = slice.origin;
  frame.registers.assign(std::max(slice.register_count, slice.output_register + 1), Value());
  try {
    impl_->run(view, frame);
    if (impl_->did_emit) {
      result.status = ExecStatus::Ok;
      result.output = impl_->emitted;
    } else {
      result.status = ExecStatus::RuntimeError;
      result.error_detail = "slice finished without emitting a value";
    }
  } catch (const VmError& e) {
    result.status = e.status;
    result.error_detail = e.detail;
  }
  result.steps = impl_->steps;
  return result;
}

Interpreter::Captured Interpreter::execute_method_capture(const std::string& class_desc,
                                                          const MethodDef& method,
                                                          const SlicingCriterion& criterion,
                                                          std::vector<Value> args) {
  Captured out;
  impl_->deadline = std::chrono::steady_clock::now() + impl_->budget.wall_clock;
  impl_->capture_criterion = &criterion;
  try {
    impl_->call_method(class_desc, method, std::move(args));
    if (impl_->did_capture) {
      out.status = ExecStatus::Ok;
      out.value = impl_->captured;
    } else {
      out.status = ExecStatus::RuntimeError;
      out.error = "criterion statement never executed";
    }
  } catch (const VmError& e) {
    out.status = e.status;
    out.error = e.detail;
  }
  impl_->capture_criterion = nullptr;
  out.steps = impl_->steps;
  return out;
}

ExecResult execute(const SliceProgram& slice, const SmaliProgram& program,
                   const ExecBudget& budget) {
  Interpreter interp(program, budget);
  return interp.execute(slice);
}

// ---------------------------------------------------------------------------
// Candidate driver
// ---------------------------------------------------------------------------

std::string LiteralOutcome::status_string() const {
  if (resolved) return "ok";
  if (candidate_count == 0) return "no-candidates";
  if (exec) {
    if (exec->status == ExecStatus::Ok) return "empty-output";
    return status_name(exec->status);
  }
  return "rejected";
}

LiteralOutcome run_candidates(const SmaliProgram& program, const std::string& class_desc,
                              const MethodDef& method, const Cfg& cfg,
                              const LiteralSite& literal,
                              const std::vector<DeobCandidate>& candidates,
                              const PathLimits& limits, const ExecBudget& budget) {
  LiteralOutcome outcome;
  outcome.literal = literal;
  outcome.candidate_count = static_cast<int>(candidates.size());

  for (const DeobCandidate& cand : candidates) {
    CandidateAttempt attempt;
    attempt.candidate = cand;
    SliceProgram slice;
    try {
      std::vector<ExecutionPath> paths =
          enumerate_paths(cfg, literal.stmt_index, cand.criterion.stmt_index, limits);
      std::vector<Rdg> rdgs;
      rdgs.reserve(paths.size());
      for (const ExecutionPath& p : paths) rdgs.push_back(build_rdg(method, p));

      bool reaches_all = true;
      for (const Rdg& rdg : rdgs) {
        if (!criterion_reaches_literal(rdg, cand.criterion, literal)) {
          reaches_all = false;
          break;
        }
      }
      if (!reaches_all) {
        attempt.stage = "rejected";
        attempt.detail = "candidate does not depend on the literal";
        outcome.attempts.push_back(std::move(attempt));
        continue;
      }
      slice = compute_slice(class_desc, method, literal, cand, paths, rdgs);
      slice = resolve_undefined(method, cfg, std::move(slice), limits);
      slice = emit_slice(std::move(slice));
    } catch (const SliceError& e) {
      attempt.stage = "rejected";
      attempt.detail = e.what();
      outcome.attempts.push_back(std::move(attempt));
      continue;
    }

    ExecResult result = execute(slice, program, budget);
    outcome.steps += result.steps;
    attempt.stage = "executed";
    attempt.slice_size = slice.size();
    attempt.exec = result;
    bool ok = result.status == ExecStatus::Ok && result.output && !result.output->empty();
    outcome.exec = result;
    outcome.slice_size = slice.size();
    outcome.attempts.push_back(std::move(attempt));
    if (ok) {
      outcome.resolved = true;
      outcome.chosen = cand;
      outcome.slice = std::move(slice);
      break;
    }
  }
  return outcome;
}

}  // namespace destring
