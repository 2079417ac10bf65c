#include "sepinv/oracle.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>
#include <tuple>
#include <sstream>
#include <unordered_map>

namespace sepinv {

std::string Value::str() const {
  switch (kind) {
    case Kind::Int: return std::to_string(n);
    case Kind::Loc: return field.empty() ? "loc(" + std::to_string(n) + ")" : "&(" + std::to_string(n) + "->" + field + ")";
    case Kind::Bad: return "undef";
  }
  return {};
}

std::string ConcreteHeap::str() const {
  std::ostringstream os;
  os << "store {";
  bool first = true;
  for (const auto& [k, v] : store) {
    os << (first ? "" : ", ") << k << ":" << v.str();
    first = false;
  }
  os << "} heap {";
  first = true;
  for (const auto& [k, v] : cells) {
    os << (first ? "" : ", ") << k.str() << "=" << v.str();
    first = false;
  }
  os << "}";
  return os.str();
}

namespace {

using Env = std::map<std::string, Value>;
using Mask = std::uint32_t;

class Evaluator {
 public:
  Evaluator(const PredicateRegistry& preds, const ConcreteHeap& m, std::int64_t max_value)
      : preds_(preds) {
    if (m.cells.size() > 30) throw OracleError("model too large for the oracle");
    for (const auto& [k, v] : m.cells) cells_.push_back({k, v});
    for (std::int64_t i = 0; i <= max_value; ++i) domain_.push_back(Value::integer(i));
    for (const auto& [k, v] : m.cells)
      if (k.field != "") domain_.push_back(k);
    full_ = cells_.size() == 32 ? ~Mask{0} : ((Mask{1} << cells_.size()) - 1);
  }

  Mask full() const { return full_; }

  bool holds(const SymbolicHeap& h, const Env& store, Mask mask) {
    Env logic;
    return solve(h, store, logic, mask);
  }

 private:
  Value eval(const Term& t, const Env& store, const Env& logic) const {
    switch (t.kind()) {
      case Term::Kind::Var: {
        auto it = store.find(t.name());
        return it == store.end() ? Value::bad() : it->second;
      }
      case Term::Kind::Logic: {
        auto it = logic.find(t.name());
        return it == logic.end() ? Value::bad() : it->second;
      }
      case Term::Kind::Const:
        return Value::integer(t.value());
      case Term::Kind::FieldAddr: {
        Value b = eval(t.base(), store, logic);
        if (b.kind != Value::Kind::Int) return Value::bad();
        return Value::loc(b.n, t.name());
      }
    }
    return Value::bad();
  }

  static Value cell_of(const Value& v) {
    if (v.kind == Value::Kind::Int) return Value::loc(v.n, "");
    return v;
  }

  static bool bound(const Term& t, const Env& logic) {
    if (t.is_logic()) return logic.count(t.name()) > 0;
    if (t.is_field_addr()) return bound(t.base(), logic);
    return true;
  }

  int cell_index(const Value& addr, Mask mask) const {
    Value c = cell_of(addr);
    for (std::size_t i = 0; i < cells_.size(); ++i)
      if (cells_[i].first == c) return (mask & (Mask{1} << i)) ? static_cast<int>(i) : -1;
    return -1;
  }

  bool solve(const SymbolicHeap& h, const Env& store, Env& logic, Mask mask) {
    // binders fixed by a points-to whose address is known
    std::vector<std::string> added;
    bool progress = true;
    bool ok = true;
    while (progress && ok) {
      progress = false;
      for (const auto& s : h.spatial) {
        if (!s.is_points_to() || !s.value.is_logic() || logic.count(s.value.name())) continue;
        if (!h.has_binder(s.value.name()) || !bound(s.addr, logic)) continue;
        int idx = cell_index(eval(s.addr, store, logic), mask);
        if (idx < 0) {
          ok = false;
          break;
        }
        logic[s.value.name()] = cells_[idx].second;
        added.push_back(s.value.name());
        progress = true;
      }
    }
    bool result = false;
    if (ok) {
      auto open = std::find_if(h.binders.begin(), h.binders.end(),
                               [&](const std::string& b) { return !logic.count(b); });
      if (open == h.binders.end()) {
        result = check(h, store, logic, mask);
      } else {
        for (const auto& v : domain_) {
          logic[*open] = v;
          if (solve(h, store, logic, mask)) {
            result = true;
            break;
          }
        }
        logic.erase(*open);
      }
    }
    for (const auto& b : added) logic.erase(b);
    return result;
  }

  bool check(const SymbolicHeap& h, const Env& store, const Env& logic, Mask mask) {
    for (const auto& p : h.pure) {
      Value l = eval(p.lhs, store, logic);
      Value r = eval(p.rhs, store, logic);
      if (l.kind == Value::Kind::Bad || r.kind == Value::Kind::Bad) return false;
      switch (p.op) {
        case PureOp::Eq:
          if (l != r) return false;
          break;
        case PureOp::Neq:
          if (l == r) return false;
          break;
        case PureOp::Lt:
        case PureOp::Gt: {
          if (l.kind != Value::Kind::Int || r.kind != Value::Kind::Int) return false;
          bool lt = p.op == PureOp::Lt ? l.n < r.n : l.n > r.n;
          if (!lt) return false;
          break;
        }
      }
    }
    Mask used = 0;
    std::vector<std::pair<const SpatialAtom*, std::vector<Value>>> apps;
    bool top = false;
    for (const auto& s : h.spatial) {
      switch (s.kind) {
        case SpatialAtom::Kind::Emp:
          break;
        case SpatialAtom::Kind::True:
          top = true;
          break;
        case SpatialAtom::Kind::PointsTo: {
          int idx = cell_index(eval(s.addr, store, logic), mask);
          if (idx < 0 || (used & (Mask{1} << idx))) return false;
          if (cells_[idx].second != eval(s.value, store, logic)) return false;
          used |= Mask{1} << idx;
          break;
        }
        case SpatialAtom::Kind::Pred: {
          std::vector<Value> args;
          for (const auto& a : s.args) args.push_back(eval(a, store, logic));
          apps.emplace_back(&s, std::move(args));
          break;
        }
      }
    }
    return split(apps, 0, mask & ~used, top);
  }

  bool split(const std::vector<std::pair<const SpatialAtom*, std::vector<Value>>>& apps, std::size_t i,
             Mask rest, bool top) {
    if (i == apps.size()) return top || rest == 0;
    const auto& [atom, args] = apps[i];
    if (i + 1 == apps.size() && !top) return pred_holds(atom->pred, args, rest);
    for (Mask s = rest;; s = (s - 1) & rest) {
      if (pred_holds(atom->pred, args, s) && split(apps, i + 1, rest & ~s, top)) return true;
      if (s == 0) break;
    }
    return false;
  }

  std::int64_t encode(const Value& v) {
    switch (v.kind) {
      case Value::Kind::Int: return v.n;
      case Value::Kind::Bad: return std::numeric_limits<std::int64_t>::min();
      case Value::Kind::Loc: break;
    }
    auto [it, fresh] = field_ids_.emplace(v.field, static_cast<std::int64_t>(field_ids_.size()));
    return -1 - (v.n * 1024 + it->second);
  }

  bool pred_holds(const std::string& name, const std::vector<Value>& args, Mask mask) {
    auto [pid, fresh] = pred_ids_.emplace(name, static_cast<std::int64_t>(pred_ids_.size()));
    std::vector<std::int64_t> key{pid->second, static_cast<std::int64_t>(mask)};
    for (const auto& a : args) key.push_back(encode(a));
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    memo_[key] = false;  // cuts zero-consumption cycles
    const PredicateDef& def = preds_.at(name);
    Env store;
    for (std::size_t i = 0; i < def.params.size(); ++i) store[def.params[i]] = args.at(i);
    bool result = false;
    for (const auto& br : def.branches) {
      if (holds(br, store, mask)) {
        result = true;
        break;
      }
    }
    memo_[key] = result;
    return result;
  }

  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const {
      std::size_t h = 1469598103934665603ULL;
      for (auto x : k) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ULL;
      return h;
    }
  };

  const PredicateRegistry& preds_;
  std::vector<std::pair<Value, Value>> cells_;
  std::vector<Value> domain_;
  Mask full_ = 0;
  std::map<std::string, std::int64_t> pred_ids_, field_ids_;
  std::unordered_map<std::vector<std::int64_t>, bool, KeyHash> memo_;
};

}  // namespace

bool satisfies(const PredicateRegistry& preds, const ConcreteHeap& m, const SymbolicHeap& h,
               std::int64_t max_value) {
  Evaluator ev(preds, m, max_value);
  return ev.holds(h, m.store, ev.full());
}

bool satisfies(const PredicateRegistry& preds, const ConcreteHeap& m, const Assertion& a,
               std::int64_t max_value) {
  Evaluator ev(preds, m, max_value);
  for (const auto& h : a.disjuncts)
    if (ev.holds(h, m.store, ev.full())) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Model enumeration

namespace {

void collect_shapes(const SymbolicHeap& h, std::set<std::vector<std::string>>& shapes,
                    std::set<std::string>& fields) {
  std::map<std::string, std::set<std::string>> by_base;
  for (const auto& s : h.spatial) {
    if (!s.is_points_to()) continue;
    if (s.addr.is_field_addr()) {
      by_base[s.addr.base().str()].insert(s.addr.name());
      fields.insert(s.addr.name());
    } else {
      by_base[s.addr.str()].insert("");
      fields.insert("");
    }
  }
  for (const auto& [b, fs] : by_base) shapes.insert(std::vector<std::string>(fs.begin(), fs.end()));
}

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

ModelSpace::ModelSpace(const PredicateRegistry& preds, const std::vector<SymbolicHeap>& sample,
                       const std::set<std::string>& vars, OracleOptions opts)
    : vars_(vars.begin(), vars.end()), max_addrs_(opts.max_addrs) {
  max_value_ = std::max<std::int64_t>(opts.max_addrs, 2);
  std::set<std::vector<std::string>> shapes;
  std::set<std::string> fields;
  // only predicates reachable from the sample contribute shapes
  std::set<std::string> reach;
  std::vector<std::string> todo;
  for (const auto& h : sample) {
    collect_shapes(h, shapes, fields);
    for (const auto& s : h.spatial)
      if (s.is_pred()) todo.push_back(s.pred);
  }
  while (!todo.empty()) {
    std::string p = todo.back();
    todo.pop_back();
    if (!reach.insert(p).second) continue;
    for (const auto& br : preds.at(p).branches) {
      collect_shapes(br, shapes, fields);
      for (const auto& s : br.spatial)
        if (s.is_pred()) todo.push_back(s.pred);
    }
  }
  for (const auto& f : fields) shapes.insert({f});
  shapes_.assign(shapes.begin(), shapes.end());

  std::size_t v = static_cast<std::size_t>(max_value_) + 1;
  std::size_t per_record = 0;
  for (const auto& s : shapes_) per_record += ipow(v, s.size());
  std::size_t heaps = 0;
  for (int n = 0; n <= max_addrs_; ++n) heaps += ipow(per_record, static_cast<std::size_t>(n));
  size_ = heaps * ipow(v, vars_.size());
  if (size_ > opts.max_models)
    throw OracleError("model space of " + std::to_string(size_) + " exceeds the cap of " +
                      std::to_string(opts.max_models));
}

std::size_t ModelSpace::for_each(const std::function<bool(const ConcreteHeap&)>& fn) const {
  const std::size_t v = static_cast<std::size_t>(max_value_) + 1;
  std::size_t visited = 0;
  ConcreteHeap m;
  // records: choose shape and values per address, then the store
  std::function<bool(int, int)> records;
  std::function<bool(std::size_t)> store = [&](std::size_t i) -> bool {
    if (i == vars_.size()) {
      ++visited;
      return fn(m);
    }
    for (std::size_t k = 0; k < v; ++k) {
      m.store[vars_[i]] = Value::integer(static_cast<std::int64_t>(k));
      if (!store(i + 1)) return false;
    }
    return true;
  };
  records = [&](int addr, int n) -> bool {
    if (addr > n) return store(0);
    for (const auto& shape : shapes_) {
      std::size_t combos = ipow(v, shape.size());
      for (std::size_t c = 0; c < combos; ++c) {
        std::size_t code = c;
        for (const auto& f : shape) {
          m.cells[Value::loc(addr, f)] = Value::integer(static_cast<std::int64_t>(code % v));
          code /= v;
        }
        bool go = records(addr + 1, n);
        for (const auto& f : shape) m.cells.erase(Value::loc(addr, f));
        if (!go) return false;
      }
    }
    return true;
  };
  for (int n = 0; n <= max_addrs_; ++n) {
    m.cells.clear();
    if (!records(1, n)) break;
  }
  return visited;
}

namespace {

// Address renaming is a symmetry of the model space unless some formula
// mentions a nonzero constant or compares values.
bool term_breaks_symmetry(const Term& t) {
  if (t.kind() == Term::Kind::Const) return t.value() != 0;
  if (t.is_field_addr()) return term_breaks_symmetry(t.base());
  return false;
}

bool breaks_symmetry(const SymbolicHeap& h) {
  for (const auto& p : h.pure)
    if (p.op == PureOp::Lt || p.op == PureOp::Gt || term_breaks_symmetry(p.lhs) || term_breaks_symmetry(p.rhs))
      return true;
  for (const auto& s : h.spatial) {
    if (s.is_points_to() && (term_breaks_symmetry(s.addr) || term_breaks_symmetry(s.value))) return true;
    for (const auto& a : s.args)
      if (term_breaks_symmetry(a)) return true;
  }
  return false;
}

bool symmetric(const PredicateRegistry& preds, const std::vector<SymbolicHeap>& sample) {
  std::set<std::string> seen;
  std::vector<const SymbolicHeap*> todo;
  for (const auto& h : sample) todo.push_back(&h);
  while (!todo.empty()) {
    const SymbolicHeap* h = todo.back();
    todo.pop_back();
    if (breaks_symmetry(*h)) return false;
    for (const auto& s : h->spatial)
      if (s.is_pred() && seen.insert(s.pred).second)
        for (const auto& br : preds.at(s.pred).branches) todo.push_back(&br);
  }
  return true;
}

// Encoding of a model after renaming addresses by `perm` (perm[0] = 0).
using ModelCode = std::vector<std::tuple<std::int64_t, std::string, std::int64_t>>;

ModelCode encode_model(const ConcreteHeap& m, const std::vector<std::int64_t>& perm) {
  auto map = [&](std::int64_t n) {
    return n <= 0 || n >= static_cast<std::int64_t>(perm.size()) ? n : perm[static_cast<std::size_t>(n)];
  };
  ModelCode out;
  for (const auto& [k, v] : m.store) out.emplace_back(-1, k, map(v.n));
  std::size_t first_cell = out.size();
  for (const auto& [k, v] : m.cells) out.emplace_back(map(k.n), k.field, map(v.n));
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(first_cell), out.end());
  return out;
}

// True if no address renaming that keeps the records at 1..n yields a
// smaller encoding.
bool canonical_model(const ConcreteHeap& m, std::int64_t max_value) {
  std::int64_t records = 0;
  for (const auto& [k, v] : m.cells) records = std::max(records, k.n);
  std::vector<std::int64_t> perm(static_cast<std::size_t>(max_value) + 1);
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<std::int64_t>(i);
  const ModelCode self = encode_model(m, perm);
  while (std::next_permutation(perm.begin() + 1, perm.end())) {
    bool keeps = true;
    for (std::int64_t i = 1; i <= records && keeps; ++i) keeps = perm[static_cast<std::size_t>(i)] <= records;
    if (keeps && encode_model(m, perm) < self) return false;
  }
  return true;
}

}  // namespace

OracleVerdict entails_oracle(const PredicateRegistry& preds, const Assertion& a, const Assertion& b,
                             OracleOptions opts) {
  std::vector<SymbolicHeap> sample = a.disjuncts;
  sample.insert(sample.end(), b.disjuncts.begin(), b.disjuncts.end());
  std::set<std::string> vars;
  for (const auto& h : sample) {
    auto pv = h.program_vars();
    vars.insert(pv.begin(), pv.end());
  }
  ModelSpace space(preds, sample, vars, opts);
  const bool sym = symmetric(preds, sample);
  OracleVerdict verdict;
  verdict.models = space.for_each([&](const ConcreteHeap& m) {
    if (sym && !canonical_model(m, space.max_value())) return true;
    Evaluator ev(preds, m, space.max_value());
    auto sat = [&](const Assertion& x) {
      return std::any_of(x.disjuncts.begin(), x.disjuncts.end(),
                         [&](const SymbolicHeap& h) { return ev.holds(h, m.store, ev.full()); });
    };
    if (sat(a) && !sat(b)) {
      verdict.holds = false;
      verdict.counter_model = m;
      return false;
    }
    return true;
  });
  return verdict;
}

// ---------------------------------------------------------------------------
// Concrete execution

std::string to_string(Fault::Kind k) {
  switch (k) {
    case Fault::Kind::NullDeref: return "null-deref";
    case Fault::Kind::Unalloc: return "unalloc";
    case Fault::Kind::IterationCap: return "iteration-cap";
    case Fault::Kind::Unsupported: return "unsupported";
  }
  return "?";
}

namespace {

struct FaultSignal {
  Fault fault;
};

class Machine {
 public:
  Machine(ConcreteHeap m, int cap) : m_(std::move(m)), cap_(cap) {}

  void run(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::Skip:
        return;
      case Stmt::Kind::Seq:
        for (const auto& c : s.body) run(c);
        return;
      case Stmt::Kind::Assign: {
        Value v = eval(s.rhs);
        if (s.lhs.kind == Expr::Kind::Var) {
          m_.store[s.lhs.name] = v;
        } else {
          Value addr = address(s.lhs);
          m_.cells.at(addr) = v;
        }
        return;
      }
      case Stmt::Kind::If:
        for (const auto& c : test(s.cond) ? s.body : s.else_body) run(c);
        return;
      case Stmt::Kind::While: {
        int n = 0;
        while (test(s.cond)) {
          if (++n > cap_) throw FaultSignal{{Fault::Kind::IterationCap, s.cond.str()}};
          for (const auto& c : s.body) run(c);
        }
        return;
      }
      case Stmt::Kind::Call:
        throw FaultSignal{{Fault::Kind::Unsupported, "call to " + s.callee + " must be inlined"}};
    }
  }

  ConcreteHeap take() { return std::move(m_); }

 private:
  Value eval(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Var: {
        auto it = m_.store.find(e.name);
        if (it == m_.store.end()) throw FaultSignal{{Fault::Kind::Unsupported, "unbound variable " + e.name}};
        return it->second;
      }
      case Expr::Kind::Const:
        return Value::integer(e.value);
      case Expr::Kind::Field:
      case Expr::Kind::Deref:
        return m_.cells.at(address(e));
      case Expr::Kind::AddrOf: {
        const Expr& f = e.sub[0];
        Value b = eval(f.sub[0]);
        if (b.kind != Value::Kind::Int) throw FaultSignal{{Fault::Kind::Unalloc, e.str()}};
        return Value::loc(b.n, f.name);
      }
    }
    return Value::bad();
  }

  // Address of an existing cell; faults otherwise.
  Value address(const Expr& e) {
    Value base = eval(e.sub[0]);
    Value addr;
    if (e.kind == Expr::Kind::Field) {
      if (base.kind == Value::Kind::Int && base.n == 0) throw FaultSignal{{Fault::Kind::NullDeref, e.str()}};
      if (base.kind != Value::Kind::Int) throw FaultSignal{{Fault::Kind::Unalloc, e.str()}};
      addr = Value::loc(base.n, e.name);
    } else {
      if (base.kind == Value::Kind::Int && base.n == 0) throw FaultSignal{{Fault::Kind::NullDeref, e.str()}};
      addr = base.kind == Value::Kind::Int ? Value::loc(base.n, "") : base;
    }
    if (!m_.cells.count(addr)) throw FaultSignal{{Fault::Kind::Unalloc, e.str()}};
    return addr;
  }

  bool test(const Cond& c) {
    if (c.literal_false) return false;
    for (const auto& a : c.atoms) {
      Value l = eval(a.lhs);
      Value r = eval(a.rhs);
      bool ok = false;
      switch (a.op) {
        case PureOp::Eq: ok = l == r; break;
        case PureOp::Neq: ok = l != r; break;
        case PureOp::Lt: ok = l.kind == Value::Kind::Int && r.kind == Value::Kind::Int && l.n < r.n; break;
        case PureOp::Gt: ok = l.kind == Value::Kind::Int && r.kind == Value::Kind::Int && l.n > r.n; break;
      }
      if (!ok) return false;
    }
    return true;
  }

  ConcreteHeap m_;
  int cap_;
};

}  // namespace

ExecOutcome concrete_exec(const ConcreteHeap& m, const Stmt& s, int max_iterations) {
  Machine machine(m, max_iterations);
  try {
    machine.run(s);
  } catch (const FaultSignal& f) {
    return f.fault;
  }
  return machine.take();
}

InvariantCheck check_invariant_oracle(const PredicateRegistry& preds, const Assertion& pre, const Cond& cond,
                                      const Stmt& body, const Assertion& inv, OracleOptions opts) {
  InvariantCheck out;
  OracleVerdict v = entails_oracle(preds, pre, inv, opts);
  out.models = v.models;
  if (!v.holds) {
    out.pre_ok = false;
    out.counter_model = v.counter_model;
    out.detail = "precondition model outside the invariant";
    return out;
  }

  std::vector<SymbolicHeap> sample = inv.disjuncts;
  std::set<std::string> vars = used_vars(body);
  for (const auto& x : cond_vars(cond)) vars.insert(x);
  for (const auto& h : sample) {
    auto pv = h.program_vars();
    vars.insert(pv.begin(), pv.end());
  }
  ModelSpace space(preds, sample, vars, opts);
  const Stmt step = Stmt::if_else(cond, body, Stmt::skip());
  out.models += space.for_each([&](const ConcreteHeap& m) {
    if (!satisfies(preds, m, inv, space.max_value())) return true;
    ExecOutcome r = concrete_exec(m, step);
    if (const Fault* f = std::get_if<Fault>(&r)) {
      if (f->kind == Fault::Kind::IterationCap) return true;
      out.step_ok = false;
      out.counter_model = m;
      out.detail = "body faults: " + to_string(f->kind) + " " + f->detail;
      return false;
    }
    if (!satisfies(preds, std::get<ConcreteHeap>(r), inv, space.max_value())) {
      out.step_ok = false;
      out.counter_model = m;
      out.detail = "one iteration leaves the invariant";
      return false;
    }
    return true;
  });
  return out;
}

}  // namespace sepinv
