#include <doctest.h>

#include "sepinv/program.hpp"
#include "support.hpp"

using namespace sepinv;
using namespace sepinv::test;

TEST_CASE("parse_file: the reverse program") {
  Program prog = load("reverse.invc");
  REQUIRE(prog.funcs.size() == 1);
  const Func& f = prog.funcs[0];
  CHECK(f.name == "reverse");
  CHECK(canonicalize(f.requires_) == canonicalize(parse_assertion("w == 0 && v == p && listrep(p)", &prog.preds)));
  CHECK(prog.preds.find("listrep"));
  CHECK(prog.preds.find("lseg"));
  REQUIRE(f.invariant.has_value());
  std::vector<Stmt> items = flatten(f.body).items();
  REQUIRE(items.size() == 1);
  CHECK(items[0].kind == Stmt::Kind::While);
  CHECK(items[0].body.size() == 4);
}

TEST_CASE("parse_file: empty input") {
  Program prog = parse_program("");
  CHECK(prog.preds.empty());
  CHECK(prog.funcs.empty());
  Program only_comments = parse_program("// nothing\n/* here */\n");
  CHECK(only_comments.funcs.empty());
}

TEST_CASE("parse_file: a predicate without base case is rejected") {
  CHECK_THROWS(parse_program("predicate listrep(x) = listrep(x);"));
}

TEST_CASE("parse_file: duplicate definitions and unknown predicates") {
  CHECK_THROWS_AS(parse_program(std::string(kListDefs) + kListDefs), ParseError);
  CHECK_THROWS_AS(parse_program("func f(x) requires: tree(x) ensures: emp { x = 0; }"), ParseError);
}

TEST_CASE("parse_file: diagnostics carry line and column") {
  try {
    parse_program("predicate p(x) = x == 0 && emp;\nfunc f(x) requires: emp ensures: emp {\n  x = ;\n}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.loc().line == 3);
    CHECK(e.loc().col > 0);
  }
}

TEST_CASE("parse_file: //@ lines are ignored") {
  Program prog = parse_program(std::string(kListDefs) +
                               "func f(x, y) requires: listrep(x) ensures: listrep(x) {\n"
                               "  //@ listrep(x)\n  y = x;\n}\n");
  REQUIRE(prog.funcs.size() == 1);
  CHECK(flatten(prog.funcs[0].body).items().size() == 1);
}

TEST_CASE("parse_file: statement forms") {
  Program prog = parse_program(std::string(kListDefs) +
                               "func f(x, y, z, b) requires: emp ensures: emp {\n"
                               "  x = 0; x->tail = y; *b = x; y = x->tail; z = *b; b = &(x->tail);\n"
                               "  if (x == y) { x = y; } else { y = x; }\n"
                               "  while (x != 0 && y == z) { x = y; }\n"
                               "}\n"
                               "func g(x) requires: emp ensures: emp { f(x, x, x, x); }\n");
  REQUIRE(prog.funcs.size() == 2);
  auto items = flatten(prog.funcs[0].body).items();
  REQUIRE(items.size() == 8);
  CHECK(items[1].lhs.kind == Expr::Kind::Field);
  CHECK(items[2].lhs.kind == Expr::Kind::Deref);
  CHECK(items[5].rhs.kind == Expr::Kind::AddrOf);
  CHECK(items[6].kind == Stmt::Kind::If);
  CHECK(items[7].kind == Stmt::Kind::While);
  CHECK(prog.funcs[1].body.items()[0].kind == Stmt::Kind::Call);
}

TEST_CASE("inline_calls: renames callee locals and rejects recursion") {
  Program prog = parse_program(std::string(kListDefs) +
                               "func g(a, t) requires: emp ensures: emp { t = a; a = t; }\n"
                               "func f(x, t) requires: emp ensures: emp { g(x, x); t = x; }\n"
                               "func r(x) requires: emp ensures: emp { r(x); }\n");
  Stmt body = flatten(inline_calls(prog, prog.find("f")->body));
  auto items = body.items();
  // Two parameter copies, the callee body, then the caller's own statement.
  REQUIRE(items.size() == 5);
  CHECK(items[4] == Stmt::assign(Expr::var("t"), Expr::var("x")));
  // The callee's `t` must not clash with the caller's `t`.
  std::set<std::string> vars = used_vars(Stmt::seq({items.begin(), items.begin() + 4}));
  CHECK(vars.count("x"));
  CHECK_FALSE(vars.count("t"));
  CHECK_THROWS_AS(inline_calls(prog, prog.find("r")->body), ParseError);
}

TEST_CASE("split_program: direct split") {
  Program prog = parse_program("func f(x, y, c) requires: emp ensures: emp { x = 0; while (c != 0) { c = x; } y = 1; }");
  SplitProgram s = split_program(prog.funcs[0].body);
  CHECK(s.before == Stmt::assign(Expr::var("x"), Expr::constant(0)));
  CHECK(s.cond.str() == "c != 0");
  CHECK(flatten(s.body) == Stmt::assign(Expr::var("c"), Expr::var("x")));
  CHECK(s.after == Stmt::assign(Expr::var("y"), Expr::constant(1)));
}

TEST_CASE("split_program: a bare loop has skip on both sides") {
  Program prog = parse_program("func f(c) requires: emp ensures: emp { while (c != 0) { c = 0; } }");
  SplitProgram s = split_program(prog.funcs[0].body);
  CHECK(flatten(s.before) == Stmt::skip());
  CHECK(flatten(s.after) == Stmt::skip());
}

TEST_CASE("split_program: the second loop stays in the tail") {
  Program prog = parse_program(
      "func f(a, b) requires: emp ensures: emp { while (a != 0) { a = 0; } while (b != 0) { b = 0; } }");
  SplitProgram s = split_program(prog.funcs[0].body);
  auto after = flatten(s.after).items();
  REQUIRE(after.size() == 1);
  CHECK(after[0].kind == Stmt::Kind::While);
  CHECK(after[0].cond.str() == "b != 0");
  Stmt rebuilt = flatten(Stmt::seq({s.before, Stmt::loop(s.cond, s.body), s.after}));
  CHECK(rebuilt == flatten(prog.funcs[0].body));
}

TEST_CASE("split_program: no loop is an error") {
  Program prog = parse_program("func f(x) requires: emp ensures: emp { x = 0; }");
  CHECK_THROWS_AS(split_program(prog.funcs[0].body), std::invalid_argument);
}

TEST_CASE("property: every corpus program parses and recomposes around its first loop") {
  auto files = corpus_files();
  CHECK(files.size() >= 10);
  for (const auto& file : files) {
    CAPTURE(file);
    Program prog;
    REQUIRE_NOTHROW(prog = parse_program_file(file));
    for (const auto& f : prog.funcs) {
      Stmt body = flatten(inline_calls(prog, f.body));
      if (!body.contains_loop()) continue;
      SplitProgram s = split_program(body);
      Stmt rebuilt = flatten(Stmt::seq({s.before, Stmt::loop(s.cond, s.body), s.after}));
      CHECK(rebuilt == body);
    }
  }
}
