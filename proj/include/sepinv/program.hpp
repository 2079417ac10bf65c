#pragma once

// Mini-language AST and the `.invc` file parser.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sepinv/assertion.hpp"

namespace sepinv {

struct SourceLoc {
  int line = 0;
  int col = 0;
  std::string str() const { return std::to_string(line) + ":" + std::to_string(col); }
};

class ParseError : public std::runtime_error {
 public:
  ParseError(SourceLoc loc, const std::string& msg)
      : std::runtime_error(loc.str() + ": " + msg), loc_(loc) {}
  SourceLoc loc() const { return loc_; }

 private:
  SourceLoc loc_;
};

struct Expr {
  enum class Kind { Var, Const, Field, Deref, AddrOf };

  Kind kind = Kind::Const;
  std::string name;        // Var name or Field field name
  std::int64_t value = 0;  // Const
  std::vector<Expr> sub;   // Field/Deref/AddrOf operand

  static Expr var(std::string n);
  static Expr constant(std::int64_t v);
  static Expr field(Expr base, std::string f);
  static Expr deref(Expr base);
  static Expr addr_of(Expr field_expr);

  bool is_lvalue() const { return kind == Kind::Var || kind == Kind::Field || kind == Kind::Deref; }
  std::string str() const;
  friend bool operator==(const Expr&, const Expr&) = default;
};

/// A conjunction of comparisons; an empty list is `true`.
struct Cond {
  struct Atom {
    PureOp op = PureOp::Neq;
    Expr lhs;
    Expr rhs;
    friend bool operator==(const Atom&, const Atom&) = default;
  };

  std::vector<Atom> atoms;
  bool literal_false = false;

  static Cond truth() { return {}; }
  static Cond falsity() {
    Cond c;
    c.literal_false = true;
    return c;
  }
  std::string str() const;
  friend bool operator==(const Cond&, const Cond&) = default;
};

struct Stmt {
  enum class Kind { Skip, Assign, Seq, If, While, Call };

  Kind kind = Kind::Skip;
  Expr lhs;                     // Assign
  Expr rhs;                     // Assign
  Cond cond;                    // If/While
  std::vector<Stmt> body;       // Seq items, If then-branch, While body
  std::vector<Stmt> else_body;  // If
  std::string callee;           // Call
  std::vector<Expr> args;       // Call
  SourceLoc loc;

  static Stmt skip() { return {}; }
  static Stmt assign(Expr lhs, Expr rhs);
  static Stmt seq(std::vector<Stmt> items);
  static Stmt if_else(Cond c, Stmt then_branch, Stmt else_branch);
  static Stmt loop(Cond c, Stmt body);

  /// Statement list view: Seq items, or the statement itself.
  std::vector<Stmt> items() const;
  bool contains_loop() const;
  std::string str(int indent = 0) const;
  friend bool operator==(const Stmt& a, const Stmt& b);
};

/// Flattens nested Seq nodes and drops Skip.
Stmt flatten(const Stmt& s);

struct Func {
  std::string name;
  std::vector<std::string> params;
  Assertion requires_;
  Assertion ensures;
  std::optional<Assertion> invariant;  // golden answer for tests
  Stmt body;
  SourceLoc loc;
};

struct Program {
  PredicateRegistry preds;
  std::vector<Func> funcs;

  const Func* find(const std::string& name) const;
};

/// Parses an assertion in the surface grammar. Dereferences are desugared
/// into fresh binders and points-to atoms. Predicate applications are
/// checked against `preds` when given.
Assertion parse_assertion(std::string_view text, const PredicateRegistry* preds = nullptr);

/// A `*`-conjunction of spatial atoms and optional pure atoms, as emitted by
/// inference backends.
SymbolicHeap parse_conjunct(std::string_view text, const PredicateRegistry* preds = nullptr);

Cond parse_cond(std::string_view text);

/// Parses an `.invc` file. Calls are left in place; see inline_calls.
Program parse_program(std::string_view text);
Program parse_program_file(const std::string& path);

/// Replaces every Call by the callee body with fresh local names.
/// Throws ParseError on recursion or unknown callees.
Stmt inline_calls(const Program& prog, const Stmt& body);

struct SplitProgram {
  Stmt before;
  Cond cond;
  Stmt body;
  Stmt after;
};

/// Splits around the first top-level While. Throws std::invalid_argument when
/// there is none.
SplitProgram split_program(const Stmt& body);

/// Variables assigned anywhere in `s` (Var lvalues only).
std::set<std::string> assigned_vars(const Stmt& s);
/// Variables read or written in `s`.
std::set<std::string> used_vars(const Stmt& s);
std::set<std::string> cond_vars(const Cond& c);

}  // namespace sepinv
