#include <doctest.h>

#include "kit.hpp"
#include "sepinv/invgen.hpp"
#include "sepinv/oracle.hpp"
#include "support.hpp"

using namespace sepinv;
using namespace sepinv::test;

namespace {

const Program& lists() {
  static const Program prog = parse_program(kListDefs);
  return prog;
}

const Prover& prover() {
  static const Prover p(lists().preds);
  return p;
}

const SymExec& exec() {
  static const SymExec e(lists().preds);
  return e;
}

Assertion A(const std::string& s) { return parse_assertion(s, &lists().preds); }
SymbolicHeap H(const std::string& s) { return A(s).disjuncts.at(0); }

std::vector<SymbolicHeap> reverse_states(std::size_t n) {
  std::vector<SymbolicHeap> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(H(kReverseStates[i]));
  return out;
}

std::set<std::string> disjunct_set(const Assertion& a) {
  std::set<std::string> out;
  for (const auto& d : a.disjuncts) out.insert(canonicalize(d).str());
  return out;
}

bool mutual(const Prover& p, const Assertion& a, const Assertion& b) { return p.entails(a, b) && p.entails(b, a); }

FixedBackend scripted(std::initializer_list<const char*> cs) {
  std::vector<Candidate> out;
  double score = 1.0;
  for (const char* c : cs) out.push_back({canonicalize(H(c)), score /= 2});
  return FixedBackend(out);
}

struct Verified {
  Program prog;
  FunctionReport report;
};

Verified run(const std::string& name, InvgenOptions opts = {}) {
  Verified v{load(name), {}};
  Prover p(v.prog.preds);
  SymExec e(v.prog.preds);
  HeuristicBackend h(p);
  v.report = verify_function(v.prog, v.prog.funcs.at(0), p, e, h, opts);
  return v;
}

}  // namespace

TEST_CASE("similar: canonical forms decide") {
  CHECK(similar({}));
  CHECK(similar({H("x == y && lseg(x,z)"), H("y == x && lseg(x,z)")}));
  CHECK(similar({H("exists a, x->tail == a * listrep(a)"), H("exists b, x->tail == b * listrep(b)")}));
  CHECK_FALSE(similar({H("listrep(x)"), H("listrep(y)")}));
  CHECK(similar_extract({H("y == x && emp"), H("x == y && emp")}) == canonicalize(H("x == y && emp")));
  CHECK_THROWS(similar_extract({H("listrep(x)"), H("listrep(y)")}));
}

TEST_CASE("pick: the segment invariant covers four states") {
  SymExec e(lists().preds);
  FixedBackend none({});
  InvGen gen(prover(), e, none);
  Assertion invs = A(std::string(kReverseRewritten) + " || " + kReverseStates[0]);
  Assertion picked = gen.pick_invs(reverse_states(4), invs);
  CAPTURE(picked.str());
  CHECK(disjunct_set(picked) == disjunct_set(invs));
}

TEST_CASE("pick: a redundant disjunct is dropped") {
  FixedBackend none({});
  InvGen gen(prover(), exec(), none);
  Assertion picked = gen.pick_invs({H("x == 0 && emp"), H("x->tail == 0 * emp")},
                                   A("listrep(x) || x == 0 && emp || lseg(x,0)"));
  REQUIRE(picked.disjuncts.size() == 1);
  CHECK(prover().entails(A("x == 0 && emp"), picked));
  CHECK(prover().entails(A("x->tail == 0 * emp"), picked));
}

TEST_CASE("pick: an uncovered state joins the answer verbatim") {
  FixedBackend none({});
  InvGen gen(prover(), exec(), none);
  Assertion picked = gen.pick_invs({H("listrep(x)"), H("y != 0 && emp")}, A("listrep(x)"));
  CHECK(disjunct_set(picked) == disjunct_set(A("listrep(x) || y != 0 && emp")));
}

TEST_CASE("infer_invs: the first round splits the four states 3 to 1") {
  FixedBackend b = scripted({"lseg(w,p)"});
  InvGen gen(prover(), exec(), b);
  std::vector<TraceEntry> trace;
  auto inv = gen.infer_invs(reverse_states(4), trace, {});
  REQUIRE(inv.has_value());
  REQUIRE_FALSE(trace.empty());
  CHECK(trace[0].candidate == canonicalize(H("lseg(w,p)")).str());
  CHECK(trace[0].succ == 3);
  CHECK(trace[0].fail == 1);
  CHECK(trace[0].depth == 0);
  CHECK(mutual(prover(), *inv, A(std::string(kReverseRewritten) + " || " + kReverseStates[0])));
}

TEST_CASE("infer_invs: empty input is false, a single state is itself") {
  FixedBackend none({});
  InvGen gen(prover(), exec(), none);
  std::vector<TraceEntry> trace;
  auto empty = gen.infer_invs({}, trace, {});
  REQUIRE(empty.has_value());
  CHECK(empty->is_false());
  SymbolicHeap s0 = H(kReverseStates[0]);
  auto one = gen.infer_invs({s0}, trace, {});
  REQUIRE(one.has_value());
  CHECK(canonicalize(*one) == canonicalize(Assertion(s0)));
  CHECK(trace.empty());
}

TEST_CASE("infer_invs: no candidate means no answer") {
  FixedBackend none({});
  InvGen gen(prover(), exec(), none);
  std::vector<TraceEntry> trace;
  CHECK_FALSE(gen.infer_invs(reverse_states(4), trace, {}).has_value());
}

TEST_CASE("single_loop: reverse finds the segment invariant") {
  HeuristicBackend h(prover());
  InvGen gen(prover(), exec(), h);
  Program prog = load("reverse.invc");
  SplitProgram s = split_program(flatten(prog.funcs[0].body));
  LoopTask task{A(kReverseStates[0]), s.cond, flatten(s.body)};
  InvariantReport rep = gen.solve(task);
  CAPTURE(rep.failure);
  REQUIRE(rep.success);
  CHECK(rep.pre_entails_inv);
  CHECK(rep.inductive);
  CHECK(rep.states.size() == 6);
  CHECK(mutual(prover(), rep.invariant, *prog.funcs[0].invariant));
}

TEST_CASE("single_loop: a loop that never runs keeps the precondition") {
  Program prog = parse_program(std::string(kListDefs) +
                               "func f(x) requires: listrep(x) ensures: listrep(x) { while (false) { x = x; } }");
  Prover p(prog.preds);
  SymExec e(prog.preds);
  HeuristicBackend h(p);
  FunctionReport r = verify_function(prog, prog.funcs[0], p, e, h);
  CAPTURE(r.failure);
  CHECK(r.verified);
  REQUIRE(r.loops.size() == 1);
  CHECK(mutual(p, r.loops[0].invariant, A("listrep(x)")));
}

TEST_CASE("single_loop: a skip body is its own invariant") {
  Program prog = parse_program(std::string(kListDefs) +
                               "func f(x) requires: x == 0 && emp ensures: x == 0 && emp { while (x != 0) { skip; } }");
  Prover p(prog.preds);
  SymExec e(prog.preds);
  HeuristicBackend h(p);
  FunctionReport r = verify_function(prog, prog.funcs[0], p, e, h);
  CAPTURE(r.failure);
  CHECK(r.verified);
}

TEST_CASE("single_loop: a backend with nothing to say fails") {
  Program prog = load("traverse.invc");
  Prover p(prog.preds);
  SymExec e(prog.preds);
  FixedBackend none({});
  FunctionReport r = verify_function(prog, prog.funcs[0], p, e, none);
  CHECK_FALSE(r.verified);
  REQUIRE(r.loops.size() == 1);
  CHECK_FALSE(r.loops[0].success);
  CHECK(r.loops[0].failure == "LLM Inference Fail");
}

TEST_CASE("multi_loop: nested list walk") {
  Verified v = run("double_iter_1.invc");
  CAPTURE(v.report.failure);
  CHECK(v.report.verified);
  REQUIRE(v.report.loops.size() == 1);
  CHECK(v.report.loops[0].inner.size() == 1);
  CHECK(v.report.loops[0].inner[0].success);
}

TEST_CASE("multi_loop: list of lists") {
  for (const char* name : {"lol_expand.invc", "lol_reverse.invc"}) {
    Verified v = run(name);
    CAPTURE(name);
    CAPTURE(v.report.failure);
    CHECK(v.report.verified);
  }
}

TEST_CASE("property: cover choice is minimal (50 random instances)") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CoverInstance c = random_cover(seed, 2 + seed % 7);
    auto pick = c.solve();
    CAPTURE(seed);
    CHECK(is_cover(c, pick));
    CHECK(pick.size() == brute_force_cover(c));
  }
}

TEST_CASE("property: reported invariants hold on concrete heaps") {
  std::size_t models = 0, loops = 0;
  for (const char* name : {"reverse.invc", "traverse.invc", "append.invc", "listbox_iter.invc"}) {
    Verified v = run(name);
    CAPTURE(name);
    REQUIRE(v.report.verified);
    for (std::size_t i = 0; i < v.report.loops.size(); ++i) {
      const LoopTask& t = v.report.tasks[i];
      InvariantCheck c =
          check_invariant_oracle(v.prog.preds, t.pre, t.cond, t.body, v.report.loops[i].invariant, {3, 4'000'000});
      CAPTURE(c.detail);
      CHECK(c.ok());
      models += c.models;
      ++loops;
    }
  }
  CHECK(loops >= 4);
  CHECK(models > 100);
}

TEST_CASE("property: verification is deterministic") {
  for (const char* name : {"reverse.invc", "append.invc", "double_iter_2.invc"}) {
    Verified a = run(name), b = run(name);
    CAPTURE(name);
    CHECK(a.report.verified == b.report.verified);
    REQUIRE(a.report.loops.size() == b.report.loops.size());
    for (std::size_t i = 0; i < a.report.loops.size(); ++i) {
      CHECK(canonicalize(a.report.loops[i].invariant) == canonicalize(b.report.loops[i].invariant));
      CHECK(a.report.loops[i].trace.size() == b.report.loops[i].trace.size());
    }
  }
}
