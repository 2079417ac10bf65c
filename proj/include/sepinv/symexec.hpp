#pragma once

// Forward symbolic execution of loop-free statements over assertions.

#include <stdexcept>
#include <string>
#include <vector>

#include "sepinv/assertion.hpp"
#include "sepinv/program.hpp"

namespace sepinv {

class ExecError : public std::runtime_error {
 public:
  enum class Kind { NullDeref, MissingCell, UnfoldFailure, Unsupported };

  ExecError(Kind kind, SourceLoc loc, std::string term, const std::string& msg);

  Kind kind() const { return kind_; }
  SourceLoc loc() const { return loc_; }
  const std::string& term() const { return term_; }

 private:
  Kind kind_;
  SourceLoc loc_;
  std::string term_;
};

std::string to_string(ExecError::Kind k);

struct ExecOptions {
  int unfold_depth = 2;
  std::size_t max_disjuncts = 64;
};

class SymExec {
 public:
  explicit SymExec(const PredicateRegistry& preds, ExecOptions opts = {}) : preds_(preds), opts_(opts) {}

  /// Strongest postcondition of `body` from `pre`. Output disjuncts are
  /// canonical, satisfiable and deduplicated.
  Assertion exec(const Assertion& pre, const Stmt& body) const;

  Assertion assume_true(const Assertion& a, const Cond& c) const;
  Assertion assume_false(const Assertion& a, const Cond& c) const;

  /// Unfolds predicates rooted at `addr` until a points-to for it shows up.
  /// Returns the consistent cases; a case may still lack the cell when its
  /// pure part makes `addr` null. Throws NullDeref if `h` itself entails a
  /// null address and MissingCell if no case exposes the cell.
  std::vector<SymbolicHeap> materialize(const SymbolicHeap& h, const Term& addr, SourceLoc loc = {}) const;

  const ExecOptions& options() const { return opts_; }

 private:
  using Heaps = std::vector<SymbolicHeap>;

  Heaps exec_stmt(const SymbolicHeap& h, const Stmt& s) const;
  Heaps exec_assign(const SymbolicHeap& h, const Stmt& s) const;
  Heaps assume_atoms(const SymbolicHeap& h, const std::vector<Cond::Atom>& atoms, SourceLoc loc) const;
  Heaps force_branches(SymbolicHeap h) const;
  std::vector<std::pair<SymbolicHeap, Term>> eval(const SymbolicHeap& h, const Expr& e, SourceLoc loc) const;
  std::vector<std::pair<SymbolicHeap, Term>> address(const SymbolicHeap& h, const Expr& lvalue, SourceLoc loc) const;
  void guard(const Heaps& hs, SourceLoc loc) const;

  const PredicateRegistry& preds_;
  ExecOptions opts_;
};

}  // namespace sepinv
