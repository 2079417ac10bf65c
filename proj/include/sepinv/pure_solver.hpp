#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sepinv/assertion.hpp"

namespace sepinv {

/// Congruence closure over terms with disequalities, a strict order and
/// allocation facts. `field_addr` is injective and never equal to an integer.
/// Incomplete: a missed contradiction only over-approximates.
class PureSolver {
 public:
  PureSolver() = default;
  explicit PureSolver(const SymbolicHeap& h, bool with_allocation = true);

  int add(const Term& t);
  void assume(const PureAtom& a);
  void assume_eq(const Term& a, const Term& b);
  /// `addr` is the address of an allocated cell.
  void allocate(const Term& addr);

  bool consistent() const;
  bool equal(const Term& a, const Term& b);
  bool entails(const PureAtom& a);

  int find(int id) const;
  const Term& term(int id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }
  /// Equivalence classes, each listing node ids.
  std::vector<std::vector<int>> classes() const;

 private:
  void merge(int a, int b);
  void close();
  bool order_cycle() const;
  bool reaches(int from, int to) const;

  std::vector<Term> nodes_;
  std::map<std::string, int> index_;
  std::vector<int> parent_;
  std::vector<int> base_;  // FieldAddr base node, -1 otherwise
  std::vector<std::pair<int, int>> neq_;
  std::vector<std::pair<int, int>> lt_;
  std::vector<int> alloc_;
  bool broken_ = false;
};

}  // namespace sepinv
