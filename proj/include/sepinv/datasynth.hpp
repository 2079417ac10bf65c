#pragma once

// Synthetic training data: predicate splitting, noise augmentation,
// mix-up composition and JSONL emission.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sepinv/assertion.hpp"

namespace sepinv {

/// Atom templates with `{}` holes, printed without spaces
/// (`{}->tail=={}`, `listrep(y)`).
struct NoiseSpec {
  std::vector<std::string> noise;
  std::vector<std::string> taboo;
};

NoiseSpec derive_noise_taboo(const PredicateRegistry& preds, const PredicateDef& def);

/// Binders equal to another term are substituted away and the rest are
/// renumbered.
SymbolicHeap simplify_temps(const SymbolicHeap& h);

/// Recursion-free leaves of the expansion tree of `c` using at most `depth`
/// recursive unfoldings, ordered by unfold count. At most `cap` results.
std::vector<SymbolicHeap> gen0(const PredicateRegistry& preds, const SpatialAtom& c, int depth,
                               std::size_t cap = 64);

/// True if `atom` (printed without spaces) is an instance of one of the
/// taboo templates of `app`, after instantiating the parameters with the
/// arguments of `app`.
bool is_taboo(const PredicateRegistry& preds, const SpatialAtom& app, const std::string& atom);

struct SynthConfig {
  double p_noise = 0.5;
  int max_noise = 3;
  int k_min = 3;
  int k_max = 6;
  double p_star = 0.35;
  double p_or = 0.35;
  int mix_depth = 2;
  int depth_min = 2;
  int depth_max = 5;
  std::vector<std::string> preds;  // empty: every registered predicate
};

using Rng = std::mt19937_64;

/// A gen1 output: the gen0 heap plus the printed noise atoms added to it.
struct Augmented {
  SymbolicHeap heap;
  std::vector<std::string> noise;
};

/// A mix-up formula: a predicate application, `*` or `||`.
struct Shape {
  enum class Kind { Leaf, Star, Or };
  Kind kind = Kind::Leaf;
  SpatialAtom leaf;
  std::vector<Shape> parts;

  /// The formula as an assertion; `*` distributes over `||`.
  Assertion formula() const;
  std::string str() const;
  void leaves(std::vector<SpatialAtom>& out) const;
};

struct TrainingSample {
  std::vector<Assertion> inputs;
  std::string label;
  std::vector<std::string> preds;
  std::uint64_t seed = 0;
  std::vector<std::string> noise;  // every noise atom added, for taboo scans

  /// One JSONL line with the fields inputs, label, preds and seed.
  std::string json() const;
};

/// splitmix64 of (seed, index): the per-sample seed.
std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index);

class DataSynth {
 public:
  DataSynth(const PredicateRegistry& preds, SynthConfig cfg = {});

  std::vector<Augmented> gen1(const SpatialAtom& c, int depth, Rng& rng) const;
  /// `k` inputs for `shape`, drawn from gen1 of every leaf and zipped.
  std::vector<std::pair<Assertion, std::vector<std::string>>> gen2(const Shape& shape, int k, Rng& rng) const;

  Shape random_shape(Rng& rng) const;
  TrainingSample sample(std::uint64_t seed) const;

  /// Writes `count` lines; samples are built on `threads` workers and
  /// written in index order.
  void emit(std::ostream& out, std::size_t count, std::uint64_t seed, unsigned threads = 0) const;

  const SynthConfig& config() const { return cfg_; }

 private:
  SymbolicHeap augment(const SymbolicHeap& h, const SpatialAtom& c, Rng& rng, const std::set<std::string>& reserved,
                       std::vector<std::string>& noise) const;
  std::vector<std::pair<Assertion, std::vector<std::string>>> gen2(const Shape& shape, int k, Rng& rng,
                                                                   const std::set<std::string>& reserved) const;

  const PredicateRegistry& preds_;
  SynthConfig cfg_;
  std::vector<std::string> names_;  // predicates to sample from
  std::map<std::string, std::vector<std::pair<SymbolicHeap, int>>> expansions_;  // gen0 at depth_max, over params
  std::map<std::string, NoiseSpec> specs_;
};

}  // namespace sepinv
