#pragma once

// Brute-force semantics over tiny concrete heaps. Used as ground truth in
// tests and behind `--oracle`.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sepinv/assertion.hpp"
#include "sepinv/program.hpp"

namespace sepinv {

/// A concrete value: an integer (0 is null, 1..N are addresses) or the
/// address of field `field` of record `addr`. Field "" is the record's
/// plain `*a` cell.
struct Value {
  enum class Kind { Int, Loc, Bad };
  Kind kind = Kind::Int;
  std::int64_t n = 0;
  std::string field;

  static Value integer(std::int64_t v) { return {Kind::Int, v, {}}; }
  static Value loc(std::int64_t addr, std::string f) { return {Kind::Loc, addr, std::move(f)}; }
  static Value bad() { return {Kind::Bad, 0, {}}; }

  std::string str() const;
  auto operator<=>(const Value&) const = default;
};

struct ConcreteHeap {
  std::map<Value, Value> cells;  // keys are Loc values
  std::map<std::string, Value> store;

  std::string str() const;
  friend bool operator==(const ConcreteHeap&, const ConcreteHeap&) = default;
};

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Standard model relation. Binders range over the integers 0..max_value
/// and the addresses stored in the model.
bool satisfies(const PredicateRegistry& preds, const ConcreteHeap& m, const Assertion& a,
               std::int64_t max_value = 3);
bool satisfies(const PredicateRegistry& preds, const ConcreteHeap& m, const SymbolicHeap& h,
               std::int64_t max_value = 3);

struct OracleOptions {
  int max_addrs = 3;
  std::size_t max_models = 4'000'000;
};

/// The finite model vocabulary: heaps with records at 1..n (n ≤ max_addrs),
/// record shapes taken from the predicate definitions and the assertions,
/// values in 0..max(max_addrs,2).
class ModelSpace {
 public:
  ModelSpace(const PredicateRegistry& preds, const std::vector<SymbolicHeap>& sample,
             const std::set<std::string>& vars, OracleOptions opts);

  /// Calls `fn` on every model until it returns false. Returns the number
  /// of models visited. Throws OracleError if the space exceeds the cap.
  std::size_t for_each(const std::function<bool(const ConcreteHeap&)>& fn) const;
  std::size_t size() const { return size_; }
  std::int64_t max_value() const { return max_value_; }

 private:
  std::vector<std::vector<std::string>> shapes_;
  std::vector<std::string> vars_;
  std::int64_t max_value_ = 2;
  int max_addrs_ = 3;
  std::size_t size_ = 0;
};

struct OracleVerdict {
  bool holds = true;
  std::optional<ConcreteHeap> counter_model;
  std::size_t models = 0;
};

OracleVerdict entails_oracle(const PredicateRegistry& preds, const Assertion& a, const Assertion& b,
                             OracleOptions opts = {});

struct Fault {
  enum class Kind { NullDeref, Unalloc, IterationCap, Unsupported };
  Kind kind;
  std::string detail;
};

std::string to_string(Fault::Kind k);

using ExecOutcome = std::variant<ConcreteHeap, Fault>;

ExecOutcome concrete_exec(const ConcreteHeap& m, const Stmt& s, int max_iterations = 64);

/// Small-model check of a loop invariant: every model of `pre` satisfies
/// `inv`, and one guarded iteration of `body` from a model of `inv` ends in
/// a model of `inv` without faulting.
struct InvariantCheck {
  bool pre_ok = true;
  bool step_ok = true;
  std::optional<ConcreteHeap> counter_model;
  std::string detail;
  std::size_t models = 0;

  bool ok() const { return pre_ok && step_ok; }
};

InvariantCheck check_invariant_oracle(const PredicateRegistry& preds, const Assertion& pre, const Cond& cond,
                                      const Stmt& body, const Assertion& inv, OracleOptions opts = {});

}  // namespace sepinv
