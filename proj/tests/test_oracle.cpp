#include <doctest.h>

#include "sepinv/oracle.hpp"
#include "support.hpp"

using namespace sepinv;
using namespace sepinv::test;

namespace {

const PredicateRegistry& preds() {
  static const Program prog = parse_program(kListDefs);
  return prog.preds;
}

Assertion A(const std::string& s) { return parse_assertion(s, &preds()); }

Value I(std::int64_t n) { return Value::integer(n); }

ConcreteHeap model(std::map<std::string, Value> store, std::map<std::int64_t, std::int64_t> tails) {
  ConcreteHeap m;
  m.store = std::move(store);
  for (const auto& [a, v] : tails) m.cells[Value::loc(a, "tail")] = I(v);
  return m;
}

Stmt body_of(const std::string& stmts) {
  Program p = parse_program("func f(p, v, w, t, x, y) requires: emp ensures: emp { " + stmts + " }");
  return p.funcs[0].body;
}

}  // namespace

TEST_CASE("satisfies: listrep on tiny heaps") {
  CHECK(satisfies(preds(), model({{"x", I(0)}}, {}), A("listrep(x)")));
  CHECK(satisfies(preds(), model({{"x", I(1)}}, {{1, 0}}), A("listrep(x)")));
  CHECK_FALSE(satisfies(preds(), model({{"x", I(1)}}, {{1, 1}}), A("listrep(x)")));
}

TEST_CASE("satisfies: separation demands the whole heap") {
  // A leftover cell makes `emp` false; precise semantics.
  CHECK_FALSE(satisfies(preds(), model({{"x", I(0)}}, {{1, 0}}), A("listrep(x)")));
  CHECK(satisfies(preds(), model({{"x", I(0)}}, {{1, 0}}), A("listrep(x) * True")));
  CHECK(satisfies(preds(), model({{"x", I(1)}, {"y", I(2)}}, {{1, 2}, {2, 0}}), A("lseg(x,y) * listrep(y)")));
  CHECK_FALSE(satisfies(preds(), model({{"x", I(1)}, {"y", I(1)}}, {{1, 0}}), A("listrep(x) * listrep(y)")));
}

TEST_CASE("entails_oracle: listed cases") {
  CHECK(entails_oracle(preds(), A("x == 0 && emp"), A("listrep(x)")).holds);
  Assertion a = A("lseg(x,y) * listrep(y)");
  CHECK(entails_oracle(preds(), a, a).holds);
  OracleVerdict v = entails_oracle(preds(), A("listrep(x)"), A("x == 0 && emp"));
  CHECK_FALSE(v.holds);
  REQUIRE(v.counter_model.has_value());
  // The refuting model is a one-cell list.
  CHECK(v.counter_model->cells.size() == 1);
  CHECK(satisfies(preds(), *v.counter_model, A("listrep(x)")));
}

TEST_CASE("entails_oracle: the model cap is an explicit error") {
  OracleOptions tiny;
  tiny.max_addrs = 3;
  tiny.max_models = 10;
  CHECK_THROWS_AS(entails_oracle(preds(), A("lseg(x,y) * listrep(z)"), A("listrep(x)"), tiny), OracleError);
}

TEST_CASE("concrete_exec: null dereference faults") {
  ExecOutcome r = concrete_exec(model({{"p", I(0)}, {"t", I(0)}}, {}), body_of("t = p->tail;"));
  REQUIRE(std::holds_alternative<Fault>(r));
  CHECK(std::get<Fault>(r).kind == Fault::Kind::NullDeref);
}

TEST_CASE("concrete_exec: unallocated address faults") {
  ExecOutcome r = concrete_exec(model({{"p", I(2)}, {"t", I(0)}}, {{1, 0}}), body_of("t = p->tail;"));
  REQUIRE(std::holds_alternative<Fault>(r));
  CHECK(std::get<Fault>(r).kind == Fault::Kind::Unalloc);
}

TEST_CASE("concrete_exec: skip leaves the heap alone") {
  ConcreteHeap m = model({{"x", I(1)}}, {{1, 0}});
  ExecOutcome r = concrete_exec(m, Stmt::skip());
  REQUIRE(std::holds_alternative<ConcreteHeap>(r));
  CHECK(std::get<ConcreteHeap>(r) == m);
}

TEST_CASE("concrete_exec: one reverse step by hand") {
  ConcreteHeap m = model({{"v", I(1)}, {"w", I(0)}, {"t", I(0)}}, {{1, 0}});
  ExecOutcome r = concrete_exec(m, body_of("t = v->tail; v->tail = w; w = v; v = t;"));
  REQUIRE(std::holds_alternative<ConcreteHeap>(r));
  const ConcreteHeap& out = std::get<ConcreteHeap>(r);
  CHECK(out.store.at("v") == I(0));
  CHECK(out.store.at("w") == I(1));
  CHECK(out.cells.at(Value::loc(1, "tail")) == I(0));
}

TEST_CASE("concrete_exec: loops stop at the iteration cap") {
  ConcreteHeap m = model({{"x", I(1)}}, {{1, 1}});
  ExecOutcome r = concrete_exec(m, body_of("while (x != 0) { x = x->tail; }"), 10);
  REQUIRE(std::holds_alternative<Fault>(r));
  CHECK(std::get<Fault>(r).kind == Fault::Kind::IterationCap);
}

TEST_CASE("property: entails_oracle is reflexive and transitive on sampled triples") {
  HeapGen gen(5, {"x", "y"});
  OracleOptions o;
  o.max_addrs = 2;
  int chains = 0;
  for (int i = 0; i < 120; ++i) {
    Assertion a = A(gen.assertion());
    // Build b and c as weakenings now and then so that chains actually occur.
    Assertion b = gen.pick(0, 1) ? disjoin(a, A(gen.conjunct())) : A(gen.assertion());
    Assertion c = gen.pick(0, 1) ? disjoin(b, A(gen.conjunct())) : A(gen.assertion());
    CAPTURE(a.str());
    CAPTURE(b.str());
    CAPTURE(c.str());
    CHECK(entails_oracle(preds(), a, a, o).holds);
    if (entails_oracle(preds(), a, b, o).holds && entails_oracle(preds(), b, c, o).holds) {
      ++chains;
      CHECK(entails_oracle(preds(), a, c, o).holds);
    }
  }
  CHECK(chains > 20);
}

TEST_CASE("property: satisfies is monotone under adding a disjunct") {
  HeapGen gen(9, {"x", "y"});
  std::size_t hits = 0;
  for (int i = 0; i < 40; ++i) {
    Assertion a = A(gen.assertion()), b = A(gen.assertion());
    ModelSpace space(preds(), a.disjuncts, {"x", "y"}, {2, 1'000'000});
    space.for_each([&](const ConcreteHeap& m) {
      if (satisfies(preds(), m, a)) {
        ++hits;
        CHECK(satisfies(preds(), m, disjoin(a, b)));
        CHECK(satisfies(preds(), m, disjoin(b, a)));
      }
      return true;
    });
  }
  CHECK(hits > 0);
}
