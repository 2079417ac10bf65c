#include "sepinv/assertion.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "sepinv/pure_solver.hpp"

namespace sepinv {

// ---------------------------------------------------------------------------
// Term

Term Term::var(std::string name) {
  Term t;
  t.kind_ = Kind::Var;
  t.name_ = std::move(name);
  return t;
}

Term Term::logic(std::string name) {
  Term t;
  t.kind_ = Kind::Logic;
  t.name_ = std::move(name);
  return t;
}

Term Term::constant(std::int64_t value) {
  Term t;
  t.kind_ = Kind::Const;
  t.value_ = value;
  return t;
}

Term Term::field_addr(Term base, std::string field) {
  Term t;
  t.kind_ = Kind::FieldAddr;
  t.name_ = std::move(field);
  t.base_ = std::make_shared<const Term>(std::move(base));
  return t;
}

bool Term::mentions(const std::string& var_name) const {
  switch (kind_) {
    case Kind::Var:
    case Kind::Logic:
      return name_ == var_name;
    case Kind::Const:
      return false;
    case Kind::FieldAddr:
      return base_->mentions(var_name);
  }
  return false;
}

void Term::collect_vars(std::set<std::string>& prog, std::set<std::string>& logic) const {
  switch (kind_) {
    case Kind::Var:
      prog.insert(name_);
      break;
    case Kind::Logic:
      logic.insert(name_);
      break;
    case Kind::Const:
      break;
    case Kind::FieldAddr:
      base_->collect_vars(prog, logic);
      break;
  }
}

std::string Term::str() const {
  switch (kind_) {
    case Kind::Var:
    case Kind::Logic:
      return name_;
    case Kind::Const:
      return std::to_string(value_);
    case Kind::FieldAddr:
      return "&(" + base_->str() + "->" + name_ + ")";
  }
  return {};
}

namespace {

int kind_rank(Term::Kind k) {
  switch (k) {
    case Term::Kind::Var: return 0;
    case Term::Kind::Const: return 1;
    case Term::Kind::FieldAddr: return 2;
    case Term::Kind::Logic: return 3;
  }
  return 4;
}

}  // namespace

int compare(const Term& a, const Term& b) {
  if (a.kind_ != b.kind_) return kind_rank(a.kind_) < kind_rank(b.kind_) ? -1 : 1;
  switch (a.kind_) {
    case Term::Kind::Var:
    case Term::Kind::Logic:
      return a.name_.compare(b.name_) < 0 ? -1 : (a.name_ == b.name_ ? 0 : 1);
    case Term::Kind::Const:
      return a.value_ < b.value_ ? -1 : (a.value_ == b.value_ ? 0 : 1);
    case Term::Kind::FieldAddr: {
      int c = compare(*a.base_, *b.base_);
      if (c != 0) return c;
      return a.name_ < b.name_ ? -1 : (a.name_ == b.name_ ? 0 : 1);
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Atoms

std::string PureAtom::str() const {
  const char* op_text = "==";
  switch (op) {
    case PureOp::Eq: op_text = "=="; break;
    case PureOp::Neq: op_text = "!="; break;
    case PureOp::Lt: op_text = "<"; break;
    case PureOp::Gt: op_text = ">"; break;
  }
  return lhs.str() + " " + op_text + " " + rhs.str();
}

SpatialAtom SpatialAtom::points_to(Term addr, Term value) {
  SpatialAtom a;
  a.kind = Kind::PointsTo;
  a.addr = std::move(addr);
  a.value = std::move(value);
  return a;
}

SpatialAtom SpatialAtom::app(std::string pred, std::vector<Term> args) {
  SpatialAtom a;
  a.kind = Kind::Pred;
  a.pred = std::move(pred);
  a.args = std::move(args);
  return a;
}

SpatialAtom SpatialAtom::top() {
  SpatialAtom a;
  a.kind = Kind::True;
  return a;
}

std::string SpatialAtom::str() const {
  switch (kind) {
    case Kind::Emp:
      return "emp";
    case Kind::True:
      return "True";
    case Kind::PointsTo:
      if (addr.is_field_addr()) return addr.base().str() + "->" + addr.name() + " == " + value.str();
      return "*" + addr.str() + " == " + value.str();
    case Kind::Pred: {
      std::string s = pred + "(";
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) s += ",";
        s += args[i].str();
      }
      return s + ")";
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Heaps

bool SymbolicHeap::has_binder(const std::string& name) const {
  return std::find(binders.begin(), binders.end(), name) != binders.end();
}

bool SymbolicHeap::has_true() const {
  return std::any_of(spatial.begin(), spatial.end(),
                     [](const SpatialAtom& a) { return a.kind == SpatialAtom::Kind::True; });
}

namespace {

void collect(const SymbolicHeap& h, std::set<std::string>& prog, std::set<std::string>& logic) {
  for (const auto& p : h.pure) {
    p.lhs.collect_vars(prog, logic);
    p.rhs.collect_vars(prog, logic);
  }
  for (const auto& s : h.spatial) {
    if (s.is_points_to()) {
      s.addr.collect_vars(prog, logic);
      s.value.collect_vars(prog, logic);
    } else if (s.is_pred()) {
      for (const auto& a : s.args) a.collect_vars(prog, logic);
    }
  }
}

}  // namespace

std::set<std::string> SymbolicHeap::program_vars() const {
  std::set<std::string> prog, logic;
  collect(*this, prog, logic);
  return prog;
}

std::set<std::string> SymbolicHeap::logic_vars() const {
  std::set<std::string> prog, logic;
  collect(*this, prog, logic);
  return logic;
}

std::string SymbolicHeap::str() const {
  std::vector<std::string> parts;
  for (const auto& p : pure) parts.push_back(p.str());
  std::vector<std::string> seps;
  for (const auto& s : spatial) {
    if (s.is_points_to()) parts.push_back(s.str());
    else if (s.kind != SpatialAtom::Kind::Emp) seps.push_back(s.str());
  }
  std::string sep_part;
  for (std::size_t i = 0; i < seps.size(); ++i) {
    if (i) sep_part += " * ";
    sep_part += seps[i];
  }
  parts.push_back(seps.empty() ? std::string("emp") : sep_part);

  std::string out;
  if (!binders.empty()) {
    out = "exists";
    for (const auto& b : binders) out += " " + b;
    out += ", ";
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += " && ";
    out += parts[i];
  }
  return out;
}

std::string Assertion::str() const {
  if (disjuncts.empty()) return "false";
  std::string out;
  for (std::size_t i = 0; i < disjuncts.size(); ++i) {
    if (i) out += " || ";
    out += disjuncts[i].str();
  }
  return out;
}

Assertion disjoin(const Assertion& a, const Assertion& b) {
  Assertion out = a;
  out.disjuncts.insert(out.disjuncts.end(), b.disjuncts.begin(), b.disjuncts.end());
  return out;
}

// ---------------------------------------------------------------------------
// Substitution

Term substitute(const Term& t, const Substitution& map) {
  switch (t.kind()) {
    case Term::Kind::Var:
    case Term::Kind::Logic: {
      auto it = map.find(t.name());
      return it == map.end() ? t : it->second;
    }
    case Term::Kind::Const:
      return t;
    case Term::Kind::FieldAddr:
      return Term::field_addr(substitute(t.base(), map), t.name());
  }
  return t;
}

PureAtom substitute(const PureAtom& a, const Substitution& map) {
  return {a.op, substitute(a.lhs, map), substitute(a.rhs, map)};
}

SpatialAtom substitute(const SpatialAtom& a, const Substitution& map) {
  SpatialAtom out = a;
  if (a.is_points_to()) {
    out.addr = substitute(a.addr, map);
    out.value = substitute(a.value, map);
  } else if (a.is_pred()) {
    for (auto& arg : out.args) arg = substitute(arg, map);
  }
  return out;
}

void FreshNames::reserve(const std::string& name) {
  if (name.size() > 2 && name[0] == '_' && name[1] == '_' &&
      std::all_of(name.begin() + 2, name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    counter_ = std::max(counter_, std::stol(name.substr(2)));
  }
}

void FreshNames::reserve(const SymbolicHeap& h) {
  for (const auto& b : h.binders) reserve(b);
  for (const auto& v : h.logic_vars()) reserve(v);
  for (const auto& v : h.program_vars()) reserve(v);
}

std::string FreshNames::next() { return "__" + std::to_string(++counter_); }

SymbolicHeap substitute(const SymbolicHeap& h, const Substitution& map) {
  Substitution effective;
  for (const auto& [k, v] : map) {
    if (!h.has_binder(k)) effective.emplace(k, v);
  }
  if (effective.empty()) return h;

  std::set<std::string> free_prog, free_logic;
  for (const auto& [k, v] : effective) v.collect_vars(free_prog, free_logic);

  SymbolicHeap out = h;
  Substitution rename;
  FreshNames fresh(h);
  for (const auto& v : free_logic) fresh.reserve(v);
  for (auto& b : out.binders) {
    if (free_logic.count(b) || free_prog.count(b)) {
      std::string nb = fresh.next();
      rename.emplace(b, Term::logic(nb));
      b = nb;
    }
  }
  Substitution full = effective;
  for (const auto& [k, v] : rename) full[k] = v;
  for (auto& p : out.pure) p = substitute(p, full);
  for (auto& s : out.spatial) s = substitute(s, full);
  return out;
}

// ---------------------------------------------------------------------------
// Predicates

bool PredicateDef::is_recursive_branch(std::size_t i) const {
  const auto& br = branches.at(i);
  return std::any_of(br.spatial.begin(), br.spatial.end(),
                     [&](const SpatialAtom& a) { return a.is_pred() && a.pred == name; });
}

std::vector<std::size_t> PredicateDef::base_branches() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const auto& br = branches[i];
    if (std::none_of(br.spatial.begin(), br.spatial.end(),
                     [](const SpatialAtom& a) { return a.is_pred(); })) {
      out.push_back(i);
    }
  }
  return out;
}

std::vector<std::size_t> PredicateDef::root_params() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Term param = Term::var(params[p]);
    bool root = false;
    for (const auto& br : branches) {
      for (const auto& s : br.spatial) {
        if (!s.is_points_to()) continue;
        if (s.addr == param || (s.addr.is_field_addr() && s.addr.base() == param)) root = true;
      }
    }
    if (root) out.push_back(p);
  }
  return out;
}

std::set<std::string> PredicateDef::fields() const {
  std::set<std::string> out;
  for (const auto& br : branches) {
    for (const auto& s : br.spatial) {
      if (s.is_points_to() && s.addr.is_field_addr()) out.insert(s.addr.name());
    }
  }
  return out;
}

SymbolicHeap PredicateDef::instantiate(std::size_t i, const std::vector<Term>& args,
                                       const std::function<std::string()>& fresh) const {
  const SymbolicHeap& br = branches.at(i);
  Substitution map;
  SymbolicHeap out;
  for (const auto& b : br.binders) {
    std::string nb = fresh();
    map.emplace(b, Term::logic(nb));
    out.binders.push_back(nb);
  }
  for (std::size_t p = 0; p < params.size(); ++p) map[params[p]] = args.at(p);
  for (const auto& a : br.pure) out.pure.push_back(substitute(a, map));
  for (const auto& a : br.spatial) out.spatial.push_back(substitute(a, map));
  return out;
}

void PredicateRegistry::add(PredicateDef def) {
  if (defs_.count(def.name)) throw AssertionError("duplicate predicate definition: " + def.name);
  if (def.branches.empty()) throw AssertionError("predicate " + def.name + " has no branches");
  for (const auto& br : def.branches) {
    for (const auto& s : br.spatial) {
      if (!s.is_pred()) continue;
      if (s.pred == def.name) {
        if (s.args.size() != def.arity())
          throw AssertionError("arity mismatch for " + s.pred + " in definition of " + def.name);
        continue;
      }
      const PredicateDef* other = find(s.pred);
      if (!other) throw AssertionError("unknown predicate " + s.pred + " in definition of " + def.name);
      if (other->arity() != s.args.size())
        throw AssertionError("arity mismatch for " + s.pred + " in definition of " + def.name);
    }
  }
  bool has_base = false;
  for (std::size_t i = 0; i < def.branches.size(); ++i) {
    if (!def.is_recursive_branch(i)) {
      has_base = true;
      continue;
    }
    const auto& sp = def.branches[i].spatial;
    if (std::none_of(sp.begin(), sp.end(), [](const SpatialAtom& a) { return a.is_points_to(); }))
      throw AssertionError("recursive branch of " + def.name + " owns no cell (imprecise definition)");
  }
  if (!has_base) throw AssertionError("predicate " + def.name + " has no base case");
  defs_.emplace(def.name, order_.size());
  order_.push_back(std::move(def));
}

const PredicateDef* PredicateRegistry::find(const std::string& name) const {
  auto it = defs_.find(name);
  return it == defs_.end() ? nullptr : &order_[it->second];
}

const PredicateDef& PredicateRegistry::at(const std::string& name) const {
  const PredicateDef* d = find(name);
  if (!d) throw AssertionError("unknown predicate " + name);
  return *d;
}

std::vector<std::string> PredicateRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& d : order_) out.push_back(d.name);
  return out;
}

void PredicateRegistry::check(const SymbolicHeap& h) const {
  for (const auto& s : h.spatial) {
    if (!s.is_pred()) continue;
    const PredicateDef& d = at(s.pred);
    if (d.arity() != s.args.size()) throw AssertionError("arity mismatch for " + s.pred);
  }
}

void PredicateRegistry::check(const Assertion& a) const {
  for (const auto& h : a.disjuncts) check(h);
}

// ---------------------------------------------------------------------------
// Canonical form

namespace {

struct RepChooser {
  const std::set<std::string>& bound;

  int category(const Term& t) const {
    switch (t.kind()) {
      case Term::Kind::Var: return 0;
      case Term::Kind::Logic: return bound.count(t.name()) ? 4 : 1;
      case Term::Kind::Const: return 2;
      case Term::Kind::FieldAddr: return 3;
    }
    return 5;
  }
  bool better(const Term& a, const Term& b) const {
    int ca = category(a), cb = category(b);
    if (ca != cb) return ca < cb;
    return compare(a, b) < 0;
  }
};

void add_terms(PureSolver& s, const SymbolicHeap& h) {
  for (const auto& p : h.pure) {
    s.add(p.lhs);
    s.add(p.rhs);
  }
  for (const auto& a : h.spatial) {
    if (a.is_points_to()) {
      s.add(a.addr);
      s.add(a.value);
    } else if (a.is_pred()) {
      for (const auto& t : a.args) s.add(t);
    }
  }
}

// Renames binders according to `order` into the names produced by `namer`.
SymbolicHeap rename_binders(const SymbolicHeap& h, const std::vector<std::string>& order,
                            const std::function<std::string(std::size_t)>& namer) {
  Substitution map;
  SymbolicHeap out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::string nn = namer(i);
    map.emplace(order[i], Term::logic(nn));
    out.binders.push_back(nn);
  }
  for (const auto& p : h.pure) out.pure.push_back(substitute(p, map));
  for (const auto& s : h.spatial) out.spatial.push_back(substitute(s, map));
  return out;
}

int spatial_group(const SpatialAtom& a) {
  switch (a.kind) {
    case SpatialAtom::Kind::PointsTo: return 0;
    case SpatialAtom::Kind::Pred: return 1;
    case SpatialAtom::Kind::True: return 2;
    case SpatialAtom::Kind::Emp: return 3;
  }
  return 4;
}

void sort_atoms(SymbolicHeap& h) {
  std::sort(h.pure.begin(), h.pure.end(),
            [](const PureAtom& a, const PureAtom& b) { return a.str() < b.str(); });
  h.pure.erase(std::unique(h.pure.begin(), h.pure.end(),
                           [](const PureAtom& a, const PureAtom& b) { return a.str() == b.str(); }),
               h.pure.end());
  std::stable_sort(h.spatial.begin(), h.spatial.end(), [](const SpatialAtom& a, const SpatialAtom& b) {
    int ga = spatial_group(a), gb = spatial_group(b);
    if (ga != gb) return ga < gb;
    return a.str() < b.str();
  });
  // a single True is enough
  bool seen_true = false;
  std::vector<SpatialAtom> kept;
  for (auto& s : h.spatial) {
    if (s.kind == SpatialAtom::Kind::True) {
      if (seen_true) continue;
      seen_true = true;
    }
    kept.push_back(std::move(s));
  }
  h.spatial = std::move(kept);
}

std::vector<std::string> first_occurrence(const SymbolicHeap& h) {
  std::vector<std::string> order;
  auto visit = [&](const Term& t) {
    std::set<std::string> prog, logic;
    // keep left-to-right order within a term
    std::function<void(const Term&)> walk = [&](const Term& x) {
      if (x.is_logic() && h.has_binder(x.name()) &&
          std::find(order.begin(), order.end(), x.name()) == order.end())
        order.push_back(x.name());
      if (x.is_field_addr()) walk(x.base());
    };
    walk(t);
  };
  for (const auto& p : h.pure) {
    visit(p.lhs);
    visit(p.rhs);
  }
  for (const auto& s : h.spatial) {
    if (s.is_points_to()) {
      visit(s.addr);
      visit(s.value);
    } else if (s.is_pred()) {
      for (const auto& a : s.args) visit(a);
    }
  }
  for (const auto& b : h.binders)
    if (std::find(order.begin(), order.end(), b) == order.end()) order.push_back(b);
  return order;
}

// Weisfeiler-Lehman style colouring of binders so that the initial naming
// does not depend on the input names.
std::vector<std::string> colour_order(const SymbolicHeap& h) {
  std::map<std::string, std::string> colour;
  for (const auto& b : h.binders) colour[b] = "";
  std::vector<std::string> atoms_texts;
  auto render_all = [&](const std::string& self) {
    Substitution map;
    for (const auto& b : h.binders) map.emplace(b, Term::logic(b == self ? "@" : "<" + colour[b] + ">"));
    std::vector<std::string> texts;
    for (const auto& p : h.pure) {
      if (p.lhs.mentions(self) || p.rhs.mentions(self)) texts.push_back("p:" + substitute(p, map).str());
    }
    for (const auto& s : h.spatial) {
      bool hit = false;
      if (s.is_points_to()) hit = s.addr.mentions(self) || s.value.mentions(self);
      if (s.is_pred())
        for (const auto& a : s.args) hit = hit || a.mentions(self);
      if (hit) texts.push_back("s:" + substitute(s, map).str());
    }
    std::sort(texts.begin(), texts.end());
    std::string joined;
    for (const auto& t : texts) joined += t + ";";
    return std::to_string(std::hash<std::string>{}(joined));
  };
  for (std::size_t round = 0; round <= h.binders.size(); ++round) {
    std::map<std::string, std::string> next;
    for (const auto& b : h.binders) next[b] = render_all(b);
    colour = std::move(next);
  }
  std::vector<std::string> order = h.binders;
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) { return colour[a] < colour[b]; });
  return order;
}

}  // namespace

SymbolicHeap canonicalize(const SymbolicHeap& h0) {
  std::set<std::string> bound(h0.binders.begin(), h0.binders.end());
  PureSolver solver;
  add_terms(solver, h0);
  for (const auto& p : h0.pure)
    if (p.op == PureOp::Eq) solver.assume_eq(p.lhs, p.rhs);

  RepChooser chooser{bound};
  std::map<int, Term> rep;  // class root -> representative
  for (const auto& cls : solver.classes()) {
    Term best = solver.term(cls.front());
    for (int id : cls)
      if (chooser.better(solver.term(id), best)) best = solver.term(id);
    rep.emplace(solver.find(cls.front()), best);
  }

  std::function<Term(const Term&, int)> norm = [&](const Term& t, int depth) -> Term {
    Term r = rep.at(solver.find(solver.add(t)));
    if (depth > 8) return r;
    if (r.is_field_addr()) return Term::field_addr(norm(r.base(), depth + 1), r.name());
    return r;
  };
  auto structural = [&](const Term& t) -> Term {
    if (t.is_field_addr()) return Term::field_addr(norm(t.base(), 1), t.name());
    return t;
  };

  SymbolicHeap h;
  for (const auto& cls : solver.classes()) {
    if (cls.size() < 2) continue;
    Term r = norm(solver.term(cls.front()), 0);
    for (int id : cls) {
      const Term& m = solver.term(id);
      if (m.is_logic() && bound.count(m.name())) continue;
      Term nm = structural(m);
      if (nm == r) continue;
      h.pure.push_back({PureOp::Eq, r, nm});
    }
  }

  for (const auto& a : h0.spatial) {
    if (a.kind == SpatialAtom::Kind::Emp) continue;
    SpatialAtom s = a;
    if (s.is_points_to()) {
      s.addr = norm(s.addr, 0);
      if (s.addr.is_field_addr()) s.addr = structural(s.addr);
      s.value = norm(s.value, 0);
    } else if (s.is_pred()) {
      for (auto& t : s.args) t = norm(t, 0);
    }
    h.spatial.push_back(std::move(s));
  }

  std::vector<Term> bases;
  for (const auto& s : h.spatial) {
    if (!s.is_points_to()) continue;
    bases.push_back(s.addr.is_field_addr() ? s.addr.base() : s.addr);
  }
  auto is_base = [&](const Term& t) { return std::find(bases.begin(), bases.end(), t) != bases.end(); };

  for (const auto& p : h0.pure) {
    if (p.op == PureOp::Eq) continue;
    PureAtom q{p.op, norm(p.lhs, 0), norm(p.rhs, 0)};
    if (q.op == PureOp::Gt) q = {PureOp::Lt, q.rhs, q.lhs};
    if (q.op == PureOp::Neq) {
      if (compare(q.rhs, q.lhs) < 0) std::swap(q.lhs, q.rhs);
      if ((q.rhs.is_null() && is_base(q.lhs)) || (q.lhs.is_null() && is_base(q.rhs))) continue;
    }
    h.pure.push_back(std::move(q));
  }

  std::set<std::string> used = h.logic_vars();
  for (const auto& b : h0.binders)
    if (used.count(b)) h.binders.push_back(b);

  // naming: colour order first, then first-occurrence fixpoint
  sort_atoms(h);
  h = rename_binders(h, colour_order(h), [](std::size_t i) { return "#" + std::to_string(i + 1); });
  sort_atoms(h);
  for (int iter = 0; iter < 6; ++iter) {
    std::vector<std::string> order = first_occurrence(h);
    SymbolicHeap next =
        rename_binders(h, order, [](std::size_t i) { return "__" + std::to_string(i + 1); });
    sort_atoms(next);
    if (next == h) break;
    h = std::move(next);
  }
  return h;
}

Assertion canonicalize(const Assertion& a) {
  Assertion out;
  std::set<std::string> seen;
  for (const auto& d : a.disjuncts) {
    SymbolicHeap c = canonicalize(d);
    if (seen.insert(c.str()).second) out.disjuncts.push_back(std::move(c));
  }
  return out;
}

SymbolicHeap hide_vars(const SymbolicHeap& h, const std::set<std::string>& vars) {
  FreshNames fresh(h);
  Substitution map;
  SymbolicHeap out = h;
  auto present = h.program_vars();
  for (const auto& v : vars) {
    if (!present.count(v)) continue;
    std::string nb = fresh.next();
    map.emplace(v, Term::logic(nb));
    out.binders.push_back(nb);
  }
  if (map.empty()) return h;
  for (auto& p : out.pure) p = substitute(p, map);
  for (auto& s : out.spatial) s = substitute(s, map);
  return canonicalize(out);
}

Assertion hide_vars(const Assertion& a, const std::set<std::string>& vars) {
  Assertion out;
  for (const auto& d : a.disjuncts) out.disjuncts.push_back(hide_vars(d, vars));
  return canonicalize(out);
}

std::string render_with_store_cells(const SymbolicHeap& h) {
  std::vector<std::string> stack_vars;
  auto note = [&](const Term& t) {
    std::set<std::string> prog, logic;
    t.collect_vars(prog, logic);
    for (const auto& v : prog)
      if (std::find(stack_vars.begin(), stack_vars.end(), v) == stack_vars.end()) stack_vars.push_back(v);
  };
  for (const auto& s : h.spatial) {
    if (s.is_points_to()) note(s.addr);
    if (s.is_pred())
      for (const auto& a : s.args) note(a);
  }
  Substitution map;
  std::vector<std::string> binders;
  for (const auto& v : stack_vars) {
    map.emplace(v, Term::logic(v + "v"));
    binders.push_back(v + "v");
  }
  for (std::size_t i = 0; i < h.binders.size(); ++i) {
    std::string nn = i == 0 ? "v" : "v" + std::to_string(i + 1);
    map.emplace(h.binders[i], Term::logic(nn));
    binders.push_back(nn);
  }
  std::function<std::string(const Term&)> addr_text = [&](const Term& t) -> std::string {
    if (t.is_field_addr()) return "field_addr(" + addr_text(t.base()) + "," + t.name() + ")";
    return t.str();
  };
  std::vector<std::string> parts;
  for (const auto& p : h.pure) parts.push_back(substitute(p, map).str());
  std::vector<std::string> cells;
  for (const auto& v : stack_vars) cells.push_back("&" + v + " mapsto " + v + "v");
  for (const auto& s : h.spatial) {
    SpatialAtom r = substitute(s, map);
    if (r.is_points_to()) cells.push_back(addr_text(r.addr) + " mapsto " + r.value.str());
    else if (r.kind != SpatialAtom::Kind::Emp) cells.push_back(r.str());
  }
  std::string out;
  if (!binders.empty()) {
    out = "exists";
    for (const auto& b : binders) out += " " + b;
    out += ", ";
  }
  for (std::size_t i = 0; i < parts.size(); ++i) out += parts[i] + " && ";
  if (cells.empty()) return out + "emp";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += " * ";
    out += cells[i];
  }
  return out;
}

}  // namespace sepinv

namespace sepinv {

SymbolicHeap unfold(const SymbolicHeap& h, std::size_t index, std::size_t branch, const PredicateRegistry& preds) {
  const SpatialAtom& app = h.spatial.at(index);
  const PredicateDef& def = preds.at(app.pred);
  FreshNames fresh(h);
  std::vector<std::string> names;
  SymbolicHeap body = def.instantiate(branch, app.args, [&] {
    names.push_back(fresh.next());
    return names.back();
  });
  SymbolicHeap out = h;
  out.spatial.erase(out.spatial.begin() + static_cast<std::ptrdiff_t>(index));
  out.binders.insert(out.binders.end(), body.binders.begin(), body.binders.end());
  out.pure.insert(out.pure.end(), body.pure.begin(), body.pure.end());
  out.spatial.insert(out.spatial.end(), body.spatial.begin(), body.spatial.end());
  return out;
}

}  // namespace sepinv
