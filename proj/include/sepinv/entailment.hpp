#pragma once

// Sound, incomplete entailment and frame inference over symbolic heaps.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sepinv/assertion.hpp"
#include "sepinv/oracle.hpp"

namespace sepinv {

struct Lemma {
  enum class Kind { EmptyCase, OneStepFold, SegmentCompose };
  Kind kind;
  std::string pred;
  SymbolicHeap premise;
  SpatialAtom conclusion;

  std::string str() const;
};

std::string to_string(Lemma::Kind k);

class LemmaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fold lemmas read off a definition. With `validate`, every lemma is
/// checked by the oracle (bound lowered when the model space is too large)
/// and a failing one throws LemmaError carrying the counter-model.
std::vector<Lemma> derive_lemmas(const PredicateRegistry& preds, const PredicateDef& def, bool validate = true,
                                 int max_addrs = 3);

struct SearchOutcome;

struct ProverOptions {
  int unfold_cap = 64;      // RHS unfoldings along one proof branch
  int max_lemma_uses = 3;   // SegmentCompose applications per disjunct pair
  int case_split_depth = 2; // nested LHS case splits
  std::size_t step_budget = 200000;
  bool validate_lemmas = true;
};

struct EntailResult {
  bool proved = false;
  bool exhausted = false;  // search budget ran out
};

struct FrameResult {
  std::vector<SpatialAtom> matched;
  std::vector<PureAtom> matched_pure;
  SymbolicHeap residue;    // source minus the matched spatial atoms
  SymbolicHeap rewritten;  // matched sub-heap replaced by the separating conjunct
};

class Prover {
 public:
  explicit Prover(const PredicateRegistry& preds, ProverOptions opts = {});

  EntailResult check(const Assertion& source, const Assertion& target) const;
  bool entails(const Assertion& source, const Assertion& target) const { return check(source, target).proved; }
  bool entails(const SymbolicHeap& source, const SymbolicHeap& target) const {
    return entails(Assertion(source), Assertion(target));
  }

  /// Proves `heap |- sep * True` and rewrites the consumed part into `sep`.
  std::optional<FrameResult> frame_check(const SymbolicHeap& heap, const SymbolicHeap& sep) const;

  /// False when the pure part of `h` (with allocation facts) is contradictory.
  static bool satisfiable(const SymbolicHeap& h);

  const PredicateRegistry& preds() const { return preds_; }
  const std::vector<Lemma>& lemmas() const { return lemmas_; }
  const ProverOptions& options() const { return opts_; }

 private:
  bool direct(const SymbolicHeap& source, const SymbolicHeap& target, bool frame,
              SearchOutcome* out, bool& exhausted) const;
  bool prove_disjunct(const SymbolicHeap& source, const Assertion& target, int splits, bool& exhausted) const;

  const PredicateRegistry& preds_;
  ProverOptions opts_;
  std::vector<Lemma> lemmas_;
  std::set<std::string> compose_;  // predicates with a SegmentCompose lemma
};

}  // namespace sepinv
