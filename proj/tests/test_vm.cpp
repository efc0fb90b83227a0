#include <doctest.h>

#include "conformance.hpp"
#include "destring/parser.hpp"
#include "destring/vm.hpp"
#include "support.hpp"

using namespace destring;
using namespace testsupport;

namespace {

SmaliProgram one_class_program(const std::string& text) {
  SmaliProgram prog;
  SmaliClass cls = parse_smali(text);
  prog.classes.emplace(cls.descriptor, std::move(cls));
  return prog;
}

// Runs the full candidate pipeline for the first literal of the given method.
LiteralOutcome deobfuscate_first(const SmaliProgram& prog, const std::string& cls_desc,
                                 const std::string& name, const std::string& sig,
                                 ExecBudget budget = {}, int max_conditionals = 5) {
  const MethodDef* m = prog.find_class(cls_desc)->find_method(name, sig);
  REQUIRE(m != nullptr);
  Cfg cfg = build_cfg(*m);
  std::vector<LiteralSite> lits = find_string_literals(cls_desc, *m);
  REQUIRE(!lits.empty());
  std::vector<DeobCandidate> cands = find_deob_candidates(*m, cfg, lits[0], max_conditionals);
  return run_candidates(prog, cls_desc, *m, cfg, lits[0], cands, {}, budget);
}

}  // namespace

TEST_CASE("xor-int/2addr of a value with itself is zero") {
  SmaliProgram prog = one_class_program(
      ".class Lvm/X;\n.super Ljava/lang/Object;\n"
      ".method public static run(I)I\n    .registers 3\n"
      "    move v0, p0\n"
      "    xor-int/2addr v0, p0\n"
      "    return v0\n.end method\n");
  const MethodDef& m = prog.classes.begin()->second.methods[0];
  Interpreter interp(prog, {});
  Interpreter::Captured got =
      interp.execute_method_capture("Lvm/X;", m, {1, 0}, {Value::int32(0x7CBA)});
  REQUIRE(got.status == ExecStatus::Ok);
  CHECK(got.value.i == 0);
}

TEST_CASE("listing-2 slice executes to the fixture plaintext") {
  SmaliProgram prog = load_fixture("listing2");
  LiteralOutcome outcome = deobfuscate_first(prog, "Lcom/app/Main;", "Bjg", "()V");
  REQUIRE(outcome.resolved);
  REQUIRE(outcome.exec.has_value());
  CHECK(outcome.exec->status == ExecStatus::Ok);
  // decode of "=ZfZ[a" under the fixture keys (T()=0x7cb3 -> k1=9, k2=0x7124)
  CHECK(u8(*outcome.exec->output) == "4~o~RE");
  CHECK(outcome.chosen->condition == CandidateCondition::StaticStringCall);
  CHECK(outcome.slice_size == 15);
  CHECK(outcome.status_string() == "ok");
}

TEST_CASE("interpreter conformance: randomized opcode agreement") {
  conformance::Report report = conformance::run_conformance(20260809, 1000);
  CHECK(report.checks > 100000);
  CHECK(report.mismatches == 0);
  for (const std::string& d : report.details) MESSAGE(d);
}

TEST_CASE("a looping slice trips the wall-clock budget without hanging") {
  SmaliProgram prog = one_class_program(
      ".class Lvm/Loop;\n.super Ljava/lang/Object;\n"
      ".method public static spin()V\n    .registers 2\n"
      "    const/4 v0, 0x1\n"
      "  :spin\n"
      "    add-int/lit8 v0, v0, 0x1\n"
      "    goto :spin\n"
      "    return-void\n.end method\n");
  const MethodDef& m = prog.classes.begin()->second.methods[0];

  SliceProgram slice;
  slice.origin = {"Lvm/Loop;", "spin", "()V"};
  slice.register_count = m.register_count;
  slice.labels = m.labels;
  slice.statements = {m.statements[0], m.statements[1], m.statements[2]};
  slice.output_register = 0;
  slice = emit_slice(std::move(slice));

  ExecBudget wall;
  wall.wall_clock = std::chrono::milliseconds(500);
  wall.max_steps = UINT64_MAX / 2;
  auto start = std::chrono::steady_clock::now();
  ExecResult r = execute(slice, prog, wall);
  auto took = std::chrono::steady_clock::now() - start;
  CHECK(r.status == ExecStatus::Timeout);
  CHECK(std::chrono::duration_cast<std::chrono::seconds>(took).count() < 5);

  ExecBudget steps;
  steps.max_steps = 10000;
  ExecResult r2 = execute(slice, prog, steps);
  CHECK(r2.status == ExecStatus::Timeout);
  CHECK(r2.steps <= steps.max_steps);
}

TEST_CASE("determinism: identical slice, corpus and budget give identical results") {
  SmaliProgram prog = load_fixture("listing2");
  LiteralOutcome a = deobfuscate_first(prog, "Lcom/app/Main;", "Bjg", "()V");
  LiteralOutcome b = deobfuscate_first(prog, "Lcom/app/Main;", "Bjg", "()V");
  REQUIRE(a.resolved);
  REQUIRE(b.resolved);
  CHECK(*a.exec->output == *b.exec->output);
  CHECK(a.exec->steps == b.exec->steps);
  CHECK(a.steps == b.steps);
}

TEST_CASE("execution never mutates the loaded program") {
  SmaliProgram prog = load_fixture("listing2");
  SmaliProgram snapshot = prog;
  LiteralOutcome outcome = deobfuscate_first(prog, "Lcom/app/Main;", "Bjg", "()V");
  REQUIRE(outcome.resolved);
  CHECK(prog == snapshot);
}

TEST_CASE("static state is isolated between interpreter instances") {
  // st() increments a static counter and returns it as a string
  SmaliProgram prog = one_class_program(
      ".class Lvm/S;\n.super Ljava/lang/Object;\n"
      ".field static n:I\n"
      ".method public static st(Ljava/lang/String;)Ljava/lang/String;\n"
      "    .registers 3\n"
      "    sget v0, Lvm/S;->n:I\n"
      "    add-int/lit8 v0, v0, 0x1\n"
      "    sput v0, Lvm/S;->n:I\n"
      "    invoke-static {v0}, Ljava/lang/String;->valueOf(I)Ljava/lang/String;\n"
      "    move-result-object v1\n"
      "    return-object v1\n.end method\n"
      ".method public static m()V\n    .registers 2\n"
      "    const-string v0, \"x\"\n"
      "    invoke-static {v0}, Lvm/S;->st(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v1\n"
      "    return-void\n.end method\n");
  LiteralOutcome first = deobfuscate_first(prog, "Lvm/S;", "m", "()V");
  LiteralOutcome second = deobfuscate_first(prog, "Lvm/S;", "m", "()V");
  REQUIRE(first.resolved);
  // a fresh interpreter starts from a fresh static heap every time
  CHECK(*first.exec->output == *second.exec->output);
  CHECK(u8(*first.exec->output) == "1");
}

TEST_CASE("class initializers run lazily on first static access") {
  SmaliProgram prog = one_class_program(
      ".class Lvm/C;\n.super Ljava/lang/Object;\n"
      ".field static k:I\n"
      ".field static lbl:Ljava/lang/String; = \"seeded\"\n"
      ".method static constructor <clinit>()V\n    .registers 1\n"
      "    const/16 v0, 0x2a\n"
      "    sput v0, Lvm/C;->k:I\n"
      "    return-void\n.end method\n"
      ".method public static d(Ljava/lang/String;)Ljava/lang/String;\n"
      "    .registers 4\n"
      "    sget v0, Lvm/C;->k:I\n"
      "    sget-object v1, Lvm/C;->lbl:Ljava/lang/String;\n"
      "    invoke-static {v0}, Ljava/lang/String;->valueOf(I)Ljava/lang/String;\n"
      "    move-result-object v2\n"
      "    invoke-virtual {v1, v2}, Ljava/lang/String;->concat(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v2\n"
      "    return-object v2\n.end method\n"
      ".method public static m()V\n    .registers 2\n"
      "    const-string v0, \"x\"\n"
      "    invoke-static {v0}, Lvm/C;->d(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v1\n"
      "    return-void\n.end method\n");
  LiteralOutcome outcome = deobfuscate_first(prog, "Lvm/C;", "m", "()V");
  REQUIRE(outcome.resolved);
  CHECK(u8(*outcome.exec->output) == "seeded42");
}

TEST_CASE("runtime errors: division by zero, bad cast, depth, bounds, uninitialized") {
  auto run_status = [](const std::string& body, const std::string& extra_methods = "") {
    SmaliProgram prog = one_class_program(
        ".class Lvm/E;\n.super Ljava/lang/Object;\n" + extra_methods +
        ".method public static m()V\n    .registers 6\n" + body +
        "    return-void\n.end method\n");
    LiteralOutcome o = deobfuscate_first(prog, "Lvm/E;", "m", "()V");
    REQUIRE(!o.attempts.empty());
    REQUIRE(o.attempts[0].exec.has_value());
    return std::pair(o.attempts[0].exec->status, o.attempts[0].exec->error_detail);
  };

  // division by zero inside the dependency chain
  auto [div_status, div_detail] = run_status(
      "    const-string v0, \"c\"\n"
      "    invoke-virtual {v0}, Ljava/lang/String;->length()I\n"
      "    move-result v1\n"
      "    const/4 v2, 0x0\n"
      "    div-int v3, v1, v2\n"
      "    invoke-static {v0, v3}, Lvm/E;->id(Ljava/lang/String;I)Ljava/lang/String;\n"
      "    move-result-object v0\n",
      ".method public static id(Ljava/lang/String;I)Ljava/lang/String;\n"
      "    .registers 3\n    return-object p0\n.end method\n");
  CHECK(div_status == ExecStatus::RuntimeError);
  CHECK(div_detail->find("division by zero") != std::string::npos);

  // check-cast of a non-string
  auto [cast_status, cast_detail] = run_status(
      "    const-string v0, \"c\"\n"
      "    invoke-virtual {v0}, Ljava/lang/String;->toCharArray()[C\n"
      "    move-result-object v1\n"
      "    check-cast v1, Ljava/lang/String;\n");
  CHECK(cast_status == ExecStatus::RuntimeError);

  // array index out of bounds
  auto [oob_status, oob_detail] = run_status(
      "    const-string v0, \"c\"\n"
      "    invoke-virtual {v0}, Ljava/lang/String;->toCharArray()[C\n"
      "    move-result-object v1\n"
      "    const/16 v2, 0x63\n"
      "    aget-char v3, v1, v2\n"
      "    invoke-static {v0, v3}, Lvm/E;->id(Ljava/lang/String;I)Ljava/lang/String;\n"
      "    move-result-object v0\n",
      ".method public static id(Ljava/lang/String;I)Ljava/lang/String;\n"
      "    .registers 3\n    return-object p0\n.end method\n");
  CHECK(oob_status == ExecStatus::RuntimeError);
  CHECK(oob_detail->find("out of bounds") != std::string::npos);

  // unbounded recursion hits the call-depth cap
  auto [depth_status, depth_detail] = run_status(
      "    const-string v0, \"c\"\n"
      "    invoke-static {v0}, Lvm/E;->r(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v0\n",
      ".method public static r(Ljava/lang/String;)Ljava/lang/String;\n"
      "    .registers 2\n"
      "    invoke-static {p0}, Lvm/E;->r(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v0\n"
      "    return-object v0\n.end method\n");
  CHECK(depth_status == ExecStatus::RuntimeError);
  CHECK(depth_detail->find("depth") != std::string::npos);
}

TEST_CASE("unmodeled framework calls fail loudly as unsupported") {
  SmaliProgram prog = one_class_program(
      ".class Lvm/A;\n.super Ljava/lang/Object;\n"
      ".method public static m()V\n    .registers 3\n"
      "    const-string v0, \"c\"\n"
      "    invoke-static {v0}, Landroid/util/Base64;->encodeToString(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v1\n"
      "    return-void\n.end method\n");
  LiteralOutcome o = deobfuscate_first(prog, "Lvm/A;", "m", "()V");
  CHECK_FALSE(o.resolved);
  REQUIRE(o.attempts[0].exec.has_value());
  CHECK(o.attempts[0].exec->status == ExecStatus::UnsupportedOpcode);
  CHECK(o.attempts[0].exec->error_detail->find("Landroid/util/Base64;") !=
        std::string::npos);
  CHECK(o.status_string() == "unsupported-opcode");
}

TEST_CASE("emit of a non-string value is a runtime type error") {
  SmaliProgram prog;
  SliceProgram slice;
  SmaliClass cls = parse_smali(
      ".class Lvm/T;\n.super Ljava/lang/Object;\n"
      ".method public static m()V\n    .registers 2\n"
      "    const/16 v0, 0x2a\n"
      "    return-void\n.end method\n");
  slice.origin = {"Lvm/T;", "m", "()V"};
  slice.register_count = 2;
  slice.statements = {cls.methods[0].statements[0]};
  slice.output_register = 0;
  slice = emit_slice(std::move(slice));
  ExecResult r = execute(slice, prog, {});
  CHECK(r.status == ExecStatus::RuntimeError);
  CHECK(r.error_detail->find("does not hold a String") != std::string::npos);
  CHECK_FALSE(r.output.has_value());
}

TEST_CASE("run_candidates falls through to the next candidate on failure") {
  SmaliProgram prog = one_class_program(
      ".class Lvm/F;\n.super Ljava/lang/Object;\n"
      ".method public static bad(Ljava/lang/String;)Ljava/lang/String;\n"
      "    .registers 5\n"
      "    const/4 v0, 0x0\n    const/4 v1, 0x5\n"
      "    div-int v2, v1, v0\n"
      "    return-object p0\n.end method\n"
      ".method public static id(Ljava/lang/String;)Ljava/lang/String;\n"
      "    .registers 2\n    return-object p0\n.end method\n"
      ".method public static m()V\n    .registers 4\n"
      "    const-string v0, \"MY_SECRET_KEY\"\n"
      "    invoke-static {v0}, Lvm/F;->bad(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v1\n"
      "    invoke-static {v0}, Lvm/F;->id(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v2\n"
      "    return-void\n.end method\n");
  LiteralOutcome o = deobfuscate_first(prog, "Lvm/F;", "m", "()V");
  REQUIRE(o.resolved);
  CHECK(o.candidate_count == 2);
  CHECK(o.attempts.size() == 2);
  CHECK(o.attempts[0].exec->status == ExecStatus::RuntimeError);
  CHECK(u8(*o.exec->output) == "MY_SECRET_KEY");
  CHECK(o.chosen->stmt_index == 3);
}

TEST_CASE("when every candidate times out the failures are all recorded") {
  SmaliProgram prog = one_class_program(
      ".class Lvm/L2;\n.super Ljava/lang/Object;\n"
      ".method public static s1(Ljava/lang/String;)Ljava/lang/String;\n"
      "    .registers 2\n  :a\n    goto :a\n    return-object p0\n.end method\n"
      ".method public static s2(Ljava/lang/String;)Ljava/lang/String;\n"
      "    .registers 2\n  :a\n    goto :a\n    return-object p0\n.end method\n"
      ".method public static m()V\n    .registers 4\n"
      "    const-string v0, \"cipher\"\n"
      "    invoke-static {v0}, Lvm/L2;->s1(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v1\n"
      "    invoke-static {v0}, Lvm/L2;->s2(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v2\n"
      "    return-void\n.end method\n");
  ExecBudget fast;
  fast.wall_clock = std::chrono::milliseconds(200);
  fast.max_steps = 200000;
  LiteralOutcome o = deobfuscate_first(prog, "Lvm/L2;", "m", "()V", fast);
  CHECK_FALSE(o.resolved);
  REQUIRE(o.attempts.size() == 2);
  CHECK(o.attempts[0].exec->status == ExecStatus::Timeout);
  CHECK(o.attempts[1].exec->status == ExecStatus::Timeout);
  CHECK(o.status_string() == "timeout");
}

TEST_CASE("no candidates yields a no-candidates outcome") {
  SmaliProgram prog = one_class_program(
      ".class Lvm/N;\n.super Ljava/lang/Object;\n"
      ".method public static m()V\n    .registers 2\n"
      "    const-string v0, \"plain\"\n"
      "    return-void\n.end method\n");
  LiteralOutcome o = deobfuscate_first(prog, "Lvm/N;", "m", "()V");
  CHECK_FALSE(o.resolved);
  CHECK(o.candidate_count == 0);
  CHECK(o.status_string() == "no-candidates");
}

TEST_CASE("builder and byte-array builtins round-trip through the interpreter") {
  SmaliProgram prog = one_class_program(
      ".class Lvm/B;\n.super Ljava/lang/Object;\n"
      ".method public static d(Ljava/lang/String;)Ljava/lang/String;\n"
      "    .registers 6\n"
      "    new-instance v0, Ljava/lang/StringBuilder;\n"
      "    invoke-direct {v0}, Ljava/lang/StringBuilder;-><init>()V\n"
      "    invoke-virtual {v0, p0}, Ljava/lang/StringBuilder;->append(Ljava/lang/String;)Ljava/lang/StringBuilder;\n"
      "    move-result-object v1\n"
      "    const/16 v2, 0x21\n"
      "    invoke-virtual {v1, v2}, Ljava/lang/StringBuilder;->append(C)Ljava/lang/StringBuilder;\n"
      "    move-result-object v1\n"
      "    invoke-virtual {v1}, Ljava/lang/StringBuilder;->reverse()Ljava/lang/StringBuilder;\n"
      "    move-result-object v1\n"
      "    invoke-virtual {v1}, Ljava/lang/StringBuilder;->toString()Ljava/lang/String;\n"
      "    move-result-object v3\n"
      "    invoke-virtual {v3}, Ljava/lang/String;->getBytes()[B\n"
      "    move-result-object v4\n"
      "    new-instance v5, Ljava/lang/String;\n"
      "    invoke-direct {v5, v4}, Ljava/lang/String;-><init>([B)V\n"
      "    return-object v5\n.end method\n"
      ".method public static m()V\n    .registers 3\n"
      "    const-string v0, \"abc\"\n"
      "    invoke-static {v0}, Lvm/B;->d(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v1\n"
      "    return-void\n.end method\n");
  LiteralOutcome o = deobfuscate_first(prog, "Lvm/B;", "m", "()V");
  REQUIRE(o.resolved);
  CHECK(u8(*o.exec->output) == "!cba");
}

TEST_CASE("time built-ins are stubbed to constants") {
  SmaliProgram prog = one_class_program(
      ".class Lvm/Tm;\n.super Ljava/lang/Object;\n"
      ".method public static d(Ljava/lang/String;)Ljava/lang/String;\n"
      "    .registers 4\n"
      "    invoke-static {}, Ljava/lang/System;->currentTimeMillis()J\n"
      "    move-result-wide v0\n"
      "    invoke-static {v0, v1}, Ljava/lang/Long;->toString(J)Ljava/lang/String;\n"
      "    move-result-object v2\n"
      "    invoke-virtual {p0, v2}, Ljava/lang/String;->concat(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v2\n"
      "    return-object v2\n.end method\n"
      ".method public static m()V\n    .registers 3\n"
      "    const-string v0, \"t=\"\n"
      "    invoke-static {v0}, Lvm/Tm;->d(Ljava/lang/String;)Ljava/lang/String;\n"
      "    move-result-object v1\n"
      "    return-void\n.end method\n");
  LiteralOutcome a = deobfuscate_first(prog, "Lvm/Tm;", "m", "()V");
  REQUIRE(a.resolved);
  CHECK(u8(*a.exec->output) == "t=1700000000000");
}

TEST_CASE("steps are accounted and bounded in every result") {
  SmaliProgram prog = load_fixture("listing2");
  LiteralOutcome o = deobfuscate_first(prog, "Lcom/app/Main;", "Bjg", "()V");
  REQUIRE(o.resolved);
  CHECK(o.exec->steps > 0);
  CHECK(o.exec->steps <= ExecBudget{}.max_steps);
}

TEST_CASE("synthetic corpus: first-candidate wins at least as often as fallback") {
  int first = 0, fallback = 0;
  for (uint64_t seed = 2000; seed < 2040; ++seed) {
    SyntheticMethod gen = make_synthetic(seed, 2, true);
    SmaliProgram prog = one_class_program(gen.class_text);
    LiteralOutcome o = deobfuscate_first(prog, gen.class_desc, "run", "()V");
    if (!o.resolved) continue;
    if (o.chosen->stmt_index == o.attempts.front().candidate.stmt_index) ++first;
    else ++fallback;
  }
  CHECK(first + fallback > 20);
  CHECK(first >= fallback);
}
