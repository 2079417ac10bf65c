#pragma once

// Separation-logic assertions: terms, pure/spatial atoms, symbolic heaps,
// disjunctive assertions, and the inductive predicate registry.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace sepinv {

/// A value-level term. Program variables denote their current value; logic
/// variables are existentially bound; `FieldAddr` is the injective address
/// constructor `&(base->field)`.
class Term {
 public:
  enum class Kind { Var, Logic, Const, FieldAddr };

  static Term var(std::string name);
  static Term logic(std::string name);
  static Term constant(std::int64_t value);
  static Term null() { return constant(0); }
  static Term field_addr(Term base, std::string field);

  Kind kind() const { return kind_; }
  bool is_var() const { return kind_ == Kind::Var; }
  bool is_logic() const { return kind_ == Kind::Logic; }
  bool is_const() const { return kind_ == Kind::Const; }
  bool is_field_addr() const { return kind_ == Kind::FieldAddr; }
  bool is_null() const { return kind_ == Kind::Const && value_ == 0; }

  const std::string& name() const { return name_; }  // Var/Logic name, FieldAddr field
  std::int64_t value() const { return value_; }
  const Term& base() const { return *base_; }

  /// True if the logic/program variable `name` occurs anywhere in this term.
  bool mentions(const std::string& var_name) const;
  void collect_vars(std::set<std::string>& prog, std::set<std::string>& logic) const;

  std::string str() const;

  friend int compare(const Term& a, const Term& b);
  friend bool operator==(const Term& a, const Term& b) { return compare(a, b) == 0; }
  friend bool operator!=(const Term& a, const Term& b) { return compare(a, b) != 0; }
  friend bool operator<(const Term& a, const Term& b) { return compare(a, b) < 0; }

 private:
  Kind kind_ = Kind::Const;
  std::string name_;
  std::int64_t value_ = 0;
  std::shared_ptr<const Term> base_;
};

enum class PureOp { Eq, Neq, Lt, Gt };

struct PureAtom {
  PureOp op = PureOp::Eq;
  Term lhs;
  Term rhs;

  std::string str() const;
  friend bool operator==(const PureAtom&, const PureAtom&) = default;
};

struct SpatialAtom {
  enum class Kind { Emp, PointsTo, Pred, True };

  Kind kind = Kind::Emp;
  Term addr;                // PointsTo
  Term value;               // PointsTo
  std::string pred;         // Pred
  std::vector<Term> args;   // Pred

  static SpatialAtom emp() { return {}; }
  static SpatialAtom points_to(Term addr, Term value);
  static SpatialAtom app(std::string pred, std::vector<Term> args);
  static SpatialAtom top();

  bool is_points_to() const { return kind == Kind::PointsTo; }
  bool is_pred() const { return kind == Kind::Pred; }

  std::string str() const;
  friend bool operator==(const SpatialAtom&, const SpatialAtom&) = default;
};

/// exists binders, pure && ... && spatial * ...
struct SymbolicHeap {
  std::vector<std::string> binders;
  std::vector<PureAtom> pure;
  std::vector<SpatialAtom> spatial;

  bool has_binder(const std::string& name) const;
  bool has_true() const;
  std::set<std::string> program_vars() const;
  std::set<std::string> logic_vars() const;

  std::string str() const;
  friend bool operator==(const SymbolicHeap&, const SymbolicHeap&) = default;
};

/// Disjunction of symbolic heaps. An empty disjunct list is `false`.
struct Assertion {
  std::vector<SymbolicHeap> disjuncts;

  Assertion() = default;
  explicit Assertion(std::vector<SymbolicHeap> d) : disjuncts(std::move(d)) {}
  explicit Assertion(SymbolicHeap h) { disjuncts.push_back(std::move(h)); }

  static Assertion falsum() { return Assertion{}; }
  bool is_false() const { return disjuncts.empty(); }

  std::string str() const;
  friend bool operator==(const Assertion&, const Assertion&) = default;
};

Assertion disjoin(const Assertion& a, const Assertion& b);

class AssertionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Predicates

struct PredicateDef {
  std::string name;
  std::vector<std::string> params;
  std::vector<SymbolicHeap> branches;  // params occur as program variables

  std::size_t arity() const { return params.size(); }
  bool is_recursive_branch(std::size_t i) const;
  /// Branches without any predicate application.
  std::vector<std::size_t> base_branches() const;
  /// Parameters that are a points-to base (or deref address) in some branch.
  std::vector<std::size_t> root_params() const;
  /// Field names used by points-to atoms of the definition.
  std::set<std::string> fields() const;

  /// Instantiate branch `i` with `args`; branch binders are renamed with
  /// `fresh` to avoid capture.
  SymbolicHeap instantiate(std::size_t i, const std::vector<Term>& args,
                           const std::function<std::string()>& fresh) const;
};

class PredicateRegistry {
 public:
  /// Registers `def`. Throws AssertionError on duplicate names, missing base
  /// case, recursive branches without a points-to, or unresolved references.
  void add(PredicateDef def);

  const PredicateDef* find(const std::string& name) const;
  const PredicateDef& at(const std::string& name) const;
  bool empty() const { return defs_.empty(); }
  std::vector<std::string> names() const;  // registration order
  const std::vector<PredicateDef>& defs() const { return order_; }

  /// Throws AssertionError if a predicate application is unknown or has the
  /// wrong arity.
  void check(const SymbolicHeap& h) const;
  void check(const Assertion& a) const;

 private:
  std::map<std::string, std::size_t> defs_;
  std::vector<PredicateDef> order_;
};

// ---------------------------------------------------------------------------
// Transformations

using Substitution = std::map<std::string, Term>;  // variable name -> term

Term substitute(const Term& t, const Substitution& map);
PureAtom substitute(const PureAtom& a, const Substitution& map);
SpatialAtom substitute(const SpatialAtom& a, const Substitution& map);

/// Capture-avoiding substitution; binders colliding with the free variables
/// of the substituted terms are renamed first. Bound variables are never
/// substituted.
SymbolicHeap substitute(const SymbolicHeap& h, const Substitution& map);

/// Generates logic-variable names `__k` not used in `h`.
class FreshNames {
 public:
  FreshNames() = default;
  explicit FreshNames(const SymbolicHeap& h) { reserve(h); }
  void reserve(const SymbolicHeap& h);
  void reserve(const std::string& name);
  std::string next();

 private:
  long counter_ = 0;
};

/// Representative-normal form: merges equality classes onto a representative
/// (program variable, then constant, then field address, then logic
/// variable), drops binders equal to another term, removes redundant
/// `a != 0` facts for allocated bases, renames binders to `__1, __2, ...`
/// in first-occurrence order and sorts atoms.
SymbolicHeap canonicalize(const SymbolicHeap& h);
Assertion canonicalize(const Assertion& a);

/// Replaces spatial atom `index` (a predicate application) by branch
/// `branch` of its definition; the branch binders become fresh binders.
SymbolicHeap unfold(const SymbolicHeap& h, std::size_t index, std::size_t branch, const PredicateRegistry& preds);

/// Existentially quantifies the given program variables.
SymbolicHeap hide_vars(const SymbolicHeap& h, const std::set<std::string>& vars);
Assertion hide_vars(const Assertion& a, const std::set<std::string>& vars);

/// The explicit-store rendering: every program variable used in a spatial
/// atom gets a stack cell `&x mapsto xv`, field cells print as
/// `field_addr(xv,f) mapsto v`.
std::string render_with_store_cells(const SymbolicHeap& h);

}  // namespace sepinv
