#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "lexer.hpp"
#include "sepinv/program.hpp"

namespace sepinv {

using detail::Token;
using detail::TokenStream;

namespace {

bool is_logic_style(const std::string& name) {
  return name.size() > 2 && name[0] == '_' && name[1] == '_' &&
         std::all_of(name.begin() + 2, name.end(), [](char c) { return c >= '0' && c <= '9'; });
}

Expr parse_expr(TokenStream& ts);

Expr parse_primary(TokenStream& ts) {
  const Token& t = ts.peek();
  if (t.kind == Token::Kind::Number) {
    ts.next();
    return Expr::constant(std::stoll(t.text));
  }
  if (t.kind == Token::Kind::Ident) {
    std::string name = ts.next().text;
    if (name == "NULL" || name == "null") return Expr::constant(0);
    return Expr::var(std::move(name));
  }
  if (ts.accept("(")) {
    Expr e = parse_expr(ts);
    ts.expect(")");
    return e;
  }
  ts.fail("expected expression");
}

Expr parse_expr(TokenStream& ts) {
  if (ts.accept("*")) return Expr::deref(parse_expr(ts));
  if (ts.at("&")) {
    const Token& amp = ts.next();
    Expr inner = parse_expr(ts);
    if (inner.kind != Expr::Kind::Field) throw ParseError(amp.loc, "address-of needs a field access");
    return Expr::addr_of(std::move(inner));
  }
  Expr e = parse_primary(ts);
  while (ts.accept("->")) e = Expr::field(std::move(e), ts.expect_ident());
  return e;
}

std::optional<PureOp> parse_op(TokenStream& ts) {
  if (ts.accept("==")) return PureOp::Eq;
  if (ts.accept("!=")) return PureOp::Neq;
  if (ts.accept("<")) return PureOp::Lt;
  if (ts.accept(">")) return PureOp::Gt;
  return std::nullopt;
}

class AssertionParser {
 public:
  AssertionParser(TokenStream& ts, const PredicateRegistry* preds) : ts_(ts), preds_(preds) {
    for (const auto& t : ts.tokens())
      if (t.kind == Token::Kind::Ident && is_logic_style(t.text)) fresh_.reserve(t.text);
  }

  void allow_self(std::string name, std::size_t arity) {
    self_name_ = std::move(name);
    self_arity_ = arity;
  }

  Assertion parse() {
    Assertion out;
    do {
      auto h = parse_disjunct();
      if (h) out.disjuncts.push_back(std::move(*h));
    } while (ts_.accept("||"));
    return out;
  }

 private:
  struct Scope {
    SymbolicHeap heap;
    std::set<std::string> bound;
    std::map<std::string, Term> cells;  // address text -> value
    bool is_false = false;
  };

  std::optional<SymbolicHeap> parse_disjunct() {
    Scope s;
    scope_ = &s;
    if (ts_.accept("exists")) {
      do {
        std::string b = ts_.expect_ident();
        s.heap.binders.push_back(b);
        s.bound.insert(b);
      } while (!ts_.at(","));
      ts_.expect(",");
    }
    do {
      parse_atom();
    } while (ts_.accept("&&") || ts_.accept("*"));
    scope_ = nullptr;
    if (s.is_false) return std::nullopt;
    return std::move(s.heap);
  }

  void parse_atom() {
    Scope& s = *scope_;
    const Token& t = ts_.peek();
    if (t.kind == Token::Kind::Ident) {
      if (t.text == "emp") {
        ts_.next();
        s.heap.spatial.push_back(SpatialAtom::emp());
        return;
      }
      if (t.text == "True") {
        ts_.next();
        s.heap.spatial.push_back(SpatialAtom::top());
        return;
      }
      if (t.text == "true") {
        ts_.next();
        return;
      }
      if (t.text == "false") {
        ts_.next();
        s.is_false = true;
        return;
      }
      if (ts_.peek(1).kind == Token::Kind::Punct && ts_.peek(1).text == "(") {
        parse_app();
        return;
      }
    }
    Expr lhs = parse_expr(ts_);
    auto op = parse_op(ts_);
    if (!op) ts_.fail("expected comparison operator");
    Expr rhs = parse_expr(ts_);
    if (*op == PureOp::Eq) {
      add_equality(lhs, rhs);
    } else {
      Term l = eval(lhs);
      Term r = eval(rhs);
      s.heap.pure.push_back({*op, l, r});
    }
  }

  void parse_app() {
    const Token& name_tok = ts_.next();
    std::string name = name_tok.text;
    ts_.expect("(");
    std::vector<Term> args;
    if (!ts_.at(")")) {
      do {
        args.push_back(eval(parse_expr(ts_)));
      } while (ts_.accept(","));
    }
    ts_.expect(")");
    if (name == self_name_) {
      if (args.size() != self_arity_) throw ParseError(name_tok.loc, "arity mismatch for " + name);
    } else if (preds_) {
      const PredicateDef* d = preds_->find(name);
      if (!d) throw ParseError(name_tok.loc, "unknown predicate " + name);
      if (d->arity() != args.size()) throw ParseError(name_tok.loc, "arity mismatch for " + name);
    }
    scope_->heap.spatial.push_back(SpatialAtom::app(std::move(name), std::move(args)));
  }

  bool is_deref(const Expr& e) const { return e.kind == Expr::Kind::Field || e.kind == Expr::Kind::Deref; }

  Term address(const Expr& e) {
    if (e.kind == Expr::Kind::Field) return Term::field_addr(eval(e.sub[0]), e.name);
    return eval(e.sub[0]);
  }

  void bind_cell(const Term& addr, const Term& value) {
    scope_->cells.emplace(addr.str(), value);
    scope_->heap.spatial.push_back(SpatialAtom::points_to(addr, value));
  }

  void add_equality(const Expr& lhs, const Expr& rhs) {
    std::optional<Term> la, ra;
    if (is_deref(lhs)) {
      Term a = address(lhs);
      if (!scope_->cells.count(a.str())) la = a;
    }
    if (is_deref(rhs)) {
      Term a = address(rhs);
      if (!scope_->cells.count(a.str()) && !(la && *la == a)) ra = a;
    }
    if (la && ra) {
      Term v = cell(*la);
      bind_cell(*ra, v);
    } else if (la) {
      bind_cell(*la, eval(rhs));
    } else if (ra) {
      bind_cell(*ra, eval(lhs));
    } else {
      scope_->heap.pure.push_back({PureOp::Eq, eval(lhs), eval(rhs)});
    }
  }

  Term cell(const Term& addr) {
    auto it = scope_->cells.find(addr.str());
    if (it != scope_->cells.end()) return it->second;
    std::string b = fresh_.next();
    scope_->heap.binders.push_back(b);
    scope_->bound.insert(b);
    Term v = Term::logic(b);
    bind_cell(addr, v);
    return v;
  }

  Term eval(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Var:
        return scope_->bound.count(e.name) ? Term::logic(e.name) : Term::var(e.name);
      case Expr::Kind::Const:
        return Term::constant(e.value);
      case Expr::Kind::Field:
      case Expr::Kind::Deref:
        return cell(address(e));
      case Expr::Kind::AddrOf:
        return address(e.sub[0]);
    }
    return Term::null();
  }

  TokenStream& ts_;
  const PredicateRegistry* preds_;
  FreshNames fresh_;
  Scope* scope_ = nullptr;
  std::string self_name_;
  std::size_t self_arity_ = 0;
};

Cond parse_cond_tokens(TokenStream& ts) {
  Cond c;
  do {
    if (ts.accept("true")) continue;
    if (ts.accept("false")) {
      c.literal_false = true;
      continue;
    }
    if (ts.accept("!")) {
      Expr e = parse_expr(ts);
      c.atoms.push_back({PureOp::Eq, std::move(e), Expr::constant(0)});
      continue;
    }
    Expr lhs = parse_expr(ts);
    auto op = parse_op(ts);
    if (!op) {
      c.atoms.push_back({PureOp::Neq, std::move(lhs), Expr::constant(0)});
      continue;
    }
    c.atoms.push_back({*op, std::move(lhs), parse_expr(ts)});
  } while (ts.accept("&&"));
  return c;
}

class ProgramParser {
 public:
  explicit ProgramParser(std::string_view text) : ts_(detail::tokenize(text)) {}

  Program parse() {
    Program prog;
    while (!ts_.done()) {
      if (ts_.at("predicate")) {
        parse_predicate(prog);
      } else if (ts_.at("func")) {
        parse_func(prog);
      } else {
        ts_.fail("expected 'predicate' or 'func'");
      }
    }
    return prog;
  }

 private:
  std::vector<std::string> parse_params() {
    std::vector<std::string> out;
    ts_.expect("(");
    if (!ts_.at(")")) {
      do {
        out.push_back(ts_.expect_ident());
      } while (ts_.accept(","));
    }
    ts_.expect(")");
    return out;
  }

  Assertion parse_assertion_here(const PredicateRegistry& preds) {
    AssertionParser ap(ts_, &preds);
    return ap.parse();
  }

  void parse_predicate(Program& prog) {
    SourceLoc loc = ts_.next().loc;
    PredicateDef def;
    def.name = ts_.expect_ident();
    def.params = parse_params();
    ts_.expect("=");
    AssertionParser ap(ts_, &prog.preds);
    ap.allow_self(def.name, def.params.size());
    def.branches = ap.parse().disjuncts;
    ts_.expect(";");
    try {
      prog.preds.add(std::move(def));
    } catch (const AssertionError& e) {
      throw ParseError(loc, e.what());
    }
  }

  void parse_func(Program& prog) {
    Func f;
    f.loc = ts_.next().loc;
    f.name = ts_.expect_ident();
    if (prog.find(f.name)) throw ParseError(f.loc, "duplicate function " + f.name);
    f.params = parse_params();
    ts_.expect("requires");
    ts_.expect(":");
    f.requires_ = parse_assertion_here(prog.preds);
    ts_.expect("ensures");
    ts_.expect(":");
    f.ensures = parse_assertion_here(prog.preds);
    if (ts_.accept("invariant")) {
      ts_.expect(":");
      f.invariant = parse_assertion_here(prog.preds);
    }
    f.body = parse_block();
    prog.funcs.push_back(std::move(f));
  }

  Stmt parse_block() {
    SourceLoc loc = ts_.expect("{").loc;
    std::vector<Stmt> items;
    while (!ts_.at("}")) {
      if (ts_.done()) ts_.fail("expected '}'");
      items.push_back(parse_stmt());
    }
    ts_.next();
    Stmt s = Stmt::seq(std::move(items));
    s.loc = loc;
    return s;
  }

  Stmt parse_stmt() {
    SourceLoc loc = ts_.peek().loc;
    Stmt s;
    if (ts_.at("{")) {
      s = parse_block();
    } else if (ts_.accept("while")) {
      ts_.expect("(");
      Cond c = parse_cond_tokens(ts_);
      ts_.expect(")");
      s = Stmt::loop(std::move(c), parse_block());
    } else if (ts_.accept("if")) {
      ts_.expect("(");
      Cond c = parse_cond_tokens(ts_);
      ts_.expect(")");
      Stmt then_branch = parse_block();
      Stmt else_branch = Stmt::skip();
      if (ts_.accept("else")) else_branch = ts_.at("if") ? parse_stmt() : parse_block();
      s = Stmt::if_else(std::move(c), std::move(then_branch), std::move(else_branch));
    } else if (ts_.accept("skip")) {
      ts_.expect(";");
      s = Stmt::skip();
    } else if (ts_.peek().kind == Token::Kind::Ident && ts_.peek(1).text == "(") {
      s.kind = Stmt::Kind::Call;
      s.callee = ts_.next().text;
      ts_.expect("(");
      if (!ts_.at(")")) {
        do {
          s.args.push_back(parse_expr(ts_));
        } while (ts_.accept(","));
      }
      ts_.expect(")");
      ts_.expect(";");
    } else {
      Expr lhs = parse_expr(ts_);
      if (!lhs.is_lvalue()) throw ParseError(loc, "left-hand side is not assignable");
      ts_.expect("=");
      Expr rhs = parse_expr(ts_);
      ts_.expect(";");
      s = Stmt::assign(std::move(lhs), std::move(rhs));
    }
    s.loc = loc;
    return s;
  }

  TokenStream ts_;
};

}  // namespace

Assertion parse_assertion(std::string_view text, const PredicateRegistry* preds) {
  TokenStream ts(detail::tokenize(text));
  AssertionParser ap(ts, preds);
  Assertion a = ap.parse();
  if (!ts.done()) ts.fail("unexpected trailing input");
  return a;
}

SymbolicHeap parse_conjunct(std::string_view text, const PredicateRegistry* preds) {
  Assertion a = parse_assertion(text, preds);
  if (a.disjuncts.size() != 1) throw ParseError({1, 1}, "expected a single conjunct");
  return a.disjuncts.front();
}

Cond parse_cond(std::string_view text) {
  TokenStream ts(detail::tokenize(text));
  Cond c = parse_cond_tokens(ts);
  if (!ts.done()) ts.fail("unexpected trailing input");
  return c;
}

Program parse_program(std::string_view text) { return ProgramParser(text).parse(); }

Program parse_program_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_program(buf.str());
}

const Func* Program::find(const std::string& name) const {
  for (const auto& f : funcs)
    if (f.name == name) return &f;
  return nullptr;
}

}  // namespace sepinv
