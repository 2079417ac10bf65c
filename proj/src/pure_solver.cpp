#include "sepinv/pure_solver.hpp"

#include <algorithm>
#include <set>

namespace sepinv {

PureSolver::PureSolver(const SymbolicHeap& h, bool with_allocation) {
  for (const auto& p : h.pure) assume(p);
  for (const auto& s : h.spatial) {
    if (s.is_points_to()) {
      add(s.value);
      if (with_allocation) allocate(s.addr);
      else add(s.addr);
    } else if (s.is_pred()) {
      for (const auto& a : s.args) add(a);
    }
  }
}

int PureSolver::add(const Term& t) {
  std::string key = t.str();
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  int base = t.is_field_addr() ? add(t.base()) : -1;
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(t);
  parent_.push_back(id);
  base_.push_back(base);
  index_.emplace(std::move(key), id);
  if (base >= 0) close();
  return id;
}

int PureSolver::find(int id) const {
  while (parent_[id] != id) id = parent_[id];
  return id;
}

void PureSolver::merge(int a, int b) {
  a = find(a);
  b = find(b);
  if (a == b) return;
  if (b < a) std::swap(a, b);
  parent_[b] = a;
}

void PureSolver::close() {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (base_[i] < 0) continue;
      for (std::size_t j = i + 1; j < nodes_.size(); ++j) {
        if (base_[j] < 0 || nodes_[i].name() != nodes_[j].name()) continue;
        bool same_base = find(base_[i]) == find(base_[j]);
        bool same_node = find(static_cast<int>(i)) == find(static_cast<int>(j));
        if (same_base && !same_node) {
          merge(static_cast<int>(i), static_cast<int>(j));
          changed = true;
        } else if (same_node && !same_base) {
          merge(base_[i], base_[j]);
          changed = true;
        }
      }
    }
  }
}

void PureSolver::assume_eq(const Term& a, const Term& b) {
  int x = add(a);
  int y = add(b);
  merge(x, y);
  close();
}

void PureSolver::assume(const PureAtom& a) {
  switch (a.op) {
    case PureOp::Eq:
      assume_eq(a.lhs, a.rhs);
      break;
    case PureOp::Neq:
      neq_.emplace_back(add(a.lhs), add(a.rhs));
      break;
    case PureOp::Lt:
      lt_.emplace_back(add(a.lhs), add(a.rhs));
      break;
    case PureOp::Gt:
      lt_.emplace_back(add(a.rhs), add(a.lhs));
      break;
  }
}

void PureSolver::allocate(const Term& addr) { alloc_.push_back(add(addr)); }

bool PureSolver::reaches(int from, int to) const {
  std::set<int> seen;
  std::vector<int> stack{find(from)};
  int target = find(to);
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    for (const auto& [l, r] : lt_) {
      if (find(l) != n) continue;
      int next = find(r);
      if (next == target) return true;
      if (seen.insert(next).second) stack.push_back(next);
    }
  }
  return false;
}

bool PureSolver::order_cycle() const {
  for (const auto& [l, r] : lt_) {
    if (find(l) == find(r) || reaches(r, l)) return true;
  }
  return false;
}

bool PureSolver::consistent() const {
  if (broken_) return false;
  std::map<int, std::vector<int>> members;
  for (std::size_t i = 0; i < nodes_.size(); ++i) members[find(static_cast<int>(i))].push_back(static_cast<int>(i));
  std::map<int, const Term*> const_of;
  for (const auto& [root, ids] : members) {
    const Term* c = nullptr;
    const Term* fa = nullptr;
    for (int id : ids) {
      const Term& t = nodes_[id];
      if (t.is_const()) {
        if (c && c->value() != t.value()) return false;
        c = &t;
      } else if (t.is_field_addr()) {
        if (fa && fa->name() != t.name()) return false;
        fa = &t;
      }
    }
    if (c && fa) return false;
    if (c) const_of.emplace(root, c);
  }
  for (const auto& [a, b] : neq_)
    if (find(a) == find(b)) return false;

  auto is_null = [&](int id) {
    auto it = const_of.find(find(id));
    return it != const_of.end() && it->second->value() == 0;
  };
  std::set<int> alloc_classes;
  for (int id : alloc_) {
    if (is_null(id)) return false;
    if (base_[id] >= 0 && is_null(base_[id])) return false;
    if (!alloc_classes.insert(find(id)).second) return false;
  }

  if (order_cycle()) return false;
  for (const auto& [l, r] : lt_) {
    auto cl = const_of.find(find(l));
    auto cr = const_of.find(find(r));
    if (cl != const_of.end() && cr != const_of.end() && !(cl->second->value() < cr->second->value()))
      return false;
  }
  return true;
}

bool PureSolver::equal(const Term& a, const Term& b) {
  int x = add(a);
  int y = add(b);
  return find(x) == find(y);
}

bool PureSolver::entails(const PureAtom& a) {
  if (!consistent()) return true;
  switch (a.op) {
    case PureOp::Eq:
      return equal(a.lhs, a.rhs);
    case PureOp::Neq: {
      PureSolver copy = *this;
      copy.assume_eq(a.lhs, a.rhs);
      return !copy.consistent();
    }
    case PureOp::Lt:
    case PureOp::Gt: {
      const Term& lo = a.op == PureOp::Lt ? a.lhs : a.rhs;
      const Term& hi = a.op == PureOp::Lt ? a.rhs : a.lhs;
      int x = add(lo);
      int y = add(hi);
      if (reaches(x, y)) return true;
      // lo < hi holds if both hi == lo and hi < lo are contradictory
      PureSolver copy = *this;
      copy.merge(x, y);
      copy.close();
      PureSolver geq = *this;
      geq.lt_.emplace_back(y, x);
      return !copy.consistent() && !geq.consistent();
    }
  }
  return false;
}

std::vector<std::vector<int>> PureSolver::classes() const {
  std::map<int, std::vector<int>> members;
  for (std::size_t i = 0; i < nodes_.size(); ++i) members[find(static_cast<int>(i))].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> out;
  for (auto& [root, ids] : members) out.push_back(std::move(ids));
  return out;
}

}  // namespace sepinv
