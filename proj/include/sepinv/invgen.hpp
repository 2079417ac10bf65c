#pragma once

// Loop invariant generation: unrolling, recursive conjunct inference with
// frame partitioning, minimum-cover picking and validity checks.

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sepinv/entailment.hpp"
#include "sepinv/inference.hpp"
#include "sepinv/program.hpp"
#include "sepinv/symexec.hpp"

namespace sepinv {

struct LoopTask {
  Assertion pre;
  Cond cond;
  Stmt body;
  int max_num = 5;
  /// Variables read after the loop; they are never hidden.
  std::set<std::string> live_after;
};

struct InvgenOptions {
  int max_num = 5;
  int max_attempts = 8;
  int depth_cap = 8;
  int max_candidates = 16;
  /// Enter the inner loop under its own condition instead of the outer one.
  bool paper_literal = false;
};

struct TraceEntry {
  std::string candidate;
  std::size_t succ = 0;
  std::size_t fail = 0;
  int depth = 0;
};

struct Timing {
  double symbolic = 0;
  double infer = 0;
  double solver = 0;
};

struct InvariantReport {
  bool success = false;
  std::string failure;
  Assertion invariant;
  std::vector<Assertion> states;  // I[0..max_num]
  std::vector<TraceEntry> trace;
  bool pre_entails_inv = false;
  bool inductive = false;
  int attempts = 0;
  std::vector<std::string> banned;
  std::vector<InvariantReport> inner;  // nested loop, solved under the final invariant
  Timing timing;
};

/// `I` is similar when all members have the same canonical form.
bool similar(const std::vector<SymbolicHeap>& I);
SymbolicHeap similar_extract(const std::vector<SymbolicHeap>& I);

/// Assertions to cover, the pool of pickable disjuncts and the entailment
/// sets `S_i = {j : A_i |- pool_j}`.
struct CoverInstance {
  std::vector<SymbolicHeap> assertions;
  std::vector<SymbolicHeap> pool;
  std::vector<std::set<std::size_t>> entail_sets;

  /// Minimum-cardinality set of pool indices hitting every entail set. Ties
  /// go to the lexicographically smallest list of canonical strings.
  std::vector<std::size_t> solve() const;
};

/// Variables assigned in `body` whose old value is never read at the loop
/// head: written before read, absent from `cond` and from `live_after`.
std::set<std::string> loop_locals(const Cond& cond, const Stmt& body, const std::set<std::string>& live_after);

class InvGen {
 public:
  InvGen(const Prover& prover, const SymExec& exec, Backend& backend, InvgenOptions opts = {})
      : prover_(prover), exec_(exec), backend_(backend), opts_(opts) {}

  /// Unroll-and-infer for loop-free bodies, the nested scheme otherwise.
  InvariantReport solve(const LoopTask& task);
  InvariantReport single_loop(const LoopTask& task);
  InvariantReport multi_loop(const LoopTask& task);

  /// Recursive inference over the flattened disjuncts of I. Empty result
  /// means no candidate could be found at some node.
  std::optional<Assertion> infer_invs(const std::vector<SymbolicHeap>& I, std::vector<TraceEntry>& trace,
                                      const std::vector<SymbolicHeap>& banned, int depth = 0);

  Assertion pick_invs(const std::vector<SymbolicHeap>& I, const Assertion& invs);
  CoverInstance cover_instance(const std::vector<SymbolicHeap>& I, const Assertion& invs);

  const InvgenOptions& options() const { return opts_; }
  /// Time spent so far, split by module.
  const Timing& timing() const { return timing_; }

 private:
  InvariantReport tail(const LoopTask& task, std::vector<Assertion> states,
                       const std::function<std::optional<Assertion>(const Assertion&, InvariantReport&)>& step);

  const Prover& prover_;
  const SymExec& exec_;
  Backend& backend_;
  InvgenOptions opts_;
  Timing timing_;
};

/// Outcome of verifying one function: every loop in order plus the
/// postcondition check.
struct FunctionReport {
  std::string name;
  bool verified = false;
  std::string failure;
  std::vector<InvariantReport> loops;
  std::vector<LoopTask> tasks;  // one per entry of `loops`
  bool post_ok = false;
  Timing timing;
  double seconds = 0;
};

FunctionReport verify_function(const Program& prog, const Func& f, const Prover& prover, const SymExec& exec,
                               Backend& backend, InvgenOptions opts = {});

}  // namespace sepinv
