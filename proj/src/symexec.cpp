#include "sepinv/symexec.hpp"

#include <algorithm>

#include "sepinv/pure_solver.hpp"

namespace sepinv {

ExecError::ExecError(Kind kind, SourceLoc loc, std::string term, const std::string& msg)
    : std::runtime_error(loc.str() + ": " + to_string(kind) + ": " + msg), kind_(kind), loc_(loc),
      term_(std::move(term)) {}

std::string to_string(ExecError::Kind k) {
  switch (k) {
    case ExecError::Kind::NullDeref: return "NullDeref";
    case ExecError::Kind::MissingCell: return "MissingCell";
    case ExecError::Kind::UnfoldFailure: return "UnfoldFailure";
    case ExecError::Kind::Unsupported: return "Unsupported";
  }
  return "?";
}

namespace {

bool consistent(const SymbolicHeap& h) { return PureSolver(h).consistent(); }

int find_cell(const SymbolicHeap& h, const Term& addr) {
  PureSolver ps(h);
  for (std::size_t i = 0; i < h.spatial.size(); ++i)
    if (h.spatial[i].is_points_to() && ps.equal(h.spatial[i].addr, addr)) return static_cast<int>(i);
  return -1;
}

const Term& root_of(const Term& addr) { return addr.is_field_addr() ? addr.base() : addr; }

bool null_address(const SymbolicHeap& h, const Term& addr) {
  PureSolver ps(h);
  return ps.equal(root_of(addr), Term::null());
}

std::vector<SymbolicHeap> finish(const std::vector<SymbolicHeap>& hs) {
  std::vector<SymbolicHeap> out;
  for (const auto& h : hs) {
    if (!consistent(h)) continue;
    SymbolicHeap c = canonicalize(h);
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::vector<PureAtom>> negate(const PureAtom& a) {
  switch (a.op) {
    case PureOp::Eq: return {{{PureOp::Neq, a.lhs, a.rhs}}};
    case PureOp::Neq: return {{{PureOp::Eq, a.lhs, a.rhs}}};
    case PureOp::Lt: return {{{PureOp::Eq, a.lhs, a.rhs}}, {{PureOp::Gt, a.lhs, a.rhs}}};
    case PureOp::Gt: return {{{PureOp::Eq, a.lhs, a.rhs}}, {{PureOp::Lt, a.lhs, a.rhs}}};
  }
  return {};
}

}  // namespace

std::vector<SymbolicHeap> SymExec::materialize(const SymbolicHeap& h, const Term& addr, SourceLoc loc) const {
  if (find_cell(h, addr) >= 0) return {h};
  if (null_address(h, addr)) throw ExecError(ExecError::Kind::NullDeref, loc, addr.str(), "load from null " + addr.str());

  std::vector<SymbolicHeap> out;
  std::function<void(const SymbolicHeap&, int)> expand = [&](const SymbolicHeap& cur, int depth) {
    if (depth == 0 || find_cell(cur, addr) >= 0 || null_address(cur, addr)) {
      out.push_back(cur);
      return;
    }
    PureSolver ps(cur);
    for (std::size_t i = 0; i < cur.spatial.size(); ++i) {
      const SpatialAtom& s = cur.spatial[i];
      if (!s.is_pred()) continue;
      const PredicateDef& def = preds_.at(s.pred);
      auto roots = def.root_params();
      bool aliases = std::any_of(roots.begin(), roots.end(), [&](std::size_t r) {
        return ps.equal(s.args[r], root_of(addr));
      });
      if (!aliases) continue;
      for (std::size_t b = 0; b < def.branches.size(); ++b) {
        SymbolicHeap next = unfold(cur, i, b, preds_);
        if (consistent(next)) expand(next, depth - 1);
      }
      return;
    }
    out.push_back(cur);
  };
  expand(h, opts_.unfold_depth);

  bool exposed = std::any_of(out.begin(), out.end(), [&](const SymbolicHeap& c) { return find_cell(c, addr) >= 0; });
  if (!exposed) throw ExecError(ExecError::Kind::MissingCell, loc, addr.str(), "no cell for " + addr.str());
  guard(out, loc);
  return out;
}

std::vector<std::pair<SymbolicHeap, Term>> SymExec::address(const SymbolicHeap& h, const Expr& lvalue,
                                                            SourceLoc loc) const {
  std::vector<std::pair<SymbolicHeap, Term>> out;
  if (lvalue.kind != Expr::Kind::Field && lvalue.kind != Expr::Kind::Deref)
    throw ExecError(ExecError::Kind::Unsupported, loc, lvalue.str(), "not a heap location: " + lvalue.str());
  for (auto& [h1, base] : eval(h, lvalue.sub[0], loc)) {
    Term addr = lvalue.kind == Expr::Kind::Field ? Term::field_addr(base, lvalue.name) : base;
    out.emplace_back(std::move(h1), std::move(addr));
  }
  return out;
}

std::vector<std::pair<SymbolicHeap, Term>> SymExec::eval(const SymbolicHeap& h, const Expr& e, SourceLoc loc) const {
  switch (e.kind) {
    case Expr::Kind::Var: return {{h, Term::var(e.name)}};
    case Expr::Kind::Const: return {{h, Term::constant(e.value)}};
    case Expr::Kind::AddrOf: return address(h, e.sub[0], loc);
    case Expr::Kind::Field:
    case Expr::Kind::Deref: break;
  }
  std::vector<std::pair<SymbolicHeap, Term>> out;
  for (auto& [h1, addr] : address(h, e, loc)) {
    for (auto& h2 : materialize(h1, addr, loc)) {
      int i = find_cell(h2, addr);
      if (i < 0) {
        if (null_address(h2, addr))
          throw ExecError(ExecError::Kind::NullDeref, loc, addr.str(), "load from null " + addr.str());
        throw ExecError(ExecError::Kind::MissingCell, loc, addr.str(), "no cell for " + addr.str());
      }
      Term v = h2.spatial[static_cast<std::size_t>(i)].value;
      out.emplace_back(std::move(h2), std::move(v));
    }
  }
  return out;
}

std::vector<SymbolicHeap> SymExec::exec_assign(const SymbolicHeap& h, const Stmt& s) const {
  Heaps out;
  for (auto& [h1, value] : eval(h, s.rhs, s.loc)) {
    if (s.lhs.kind == Expr::Kind::Var) {
      const std::string& x = s.lhs.name;
      SymbolicHeap h2 = h1;
      Term v = value;
      if (h1.program_vars().count(x) || v.mentions(x)) {
        FreshNames fresh(h1);
        std::string old = fresh.next();
        Substitution sub{{x, Term::logic(old)}};
        h2 = substitute(h1, sub);
        h2.binders.push_back(old);
        v = substitute(v, sub);
      }
      h2.pure.push_back({PureOp::Eq, Term::var(x), v});
      out.push_back(std::move(h2));
      continue;
    }
    for (auto& [h2, addr] : address(h1, s.lhs, s.loc)) {
      for (auto& h3 : materialize(h2, addr, s.loc)) {
        int i = find_cell(h3, addr);
        if (i < 0) {
          auto kind = null_address(h3, addr) ? ExecError::Kind::NullDeref : ExecError::Kind::MissingCell;
          throw ExecError(kind, s.loc, addr.str(), "store to " + addr.str());
        }
        h3.spatial[static_cast<std::size_t>(i)].value = value;
        out.push_back(std::move(h3));
      }
    }
  }
  guard(out, s.loc);
  return out;
}

std::vector<SymbolicHeap> SymExec::force_branches(SymbolicHeap h) const {
  for (int round = 0; round < 16; ++round) {
    bool changed = false;
    for (std::size_t i = 0; i < h.spatial.size() && !changed; ++i) {
      const SpatialAtom& s = h.spatial[i];
      if (!s.is_pred()) continue;
      const PredicateDef& def = preds_.at(s.pred);
      if (def.branches.size() < 2) continue;
      std::vector<SymbolicHeap> live;
      for (std::size_t b = 0; b < def.branches.size(); ++b) {
        SymbolicHeap u = unfold(h, i, b, preds_);
        if (consistent(u)) live.push_back(std::move(u));
      }
      if (live.empty()) return {};
      if (live.size() == 1) {
        h = std::move(live.front());
        changed = true;
      }
    }
    if (!changed) break;
  }
  return {h};
}

std::vector<SymbolicHeap> SymExec::assume_atoms(const SymbolicHeap& h, const std::vector<Cond::Atom>& atoms,
                                                SourceLoc loc) const {
  Heaps cur{h};
  for (const auto& a : atoms) {
    Heaps next;
    for (const auto& c : cur) {
      for (auto& [h1, l] : eval(c, a.lhs, loc)) {
        for (auto& [h2, r] : eval(h1, a.rhs, loc)) {
          h2.pure.push_back({a.op, l, r});
          if (consistent(h2)) next.push_back(std::move(h2));
        }
      }
    }
    cur = std::move(next);
  }
  Heaps out;
  for (auto& c : cur)
    for (auto& f : force_branches(std::move(c))) out.push_back(std::move(f));
  guard(out, loc);
  return out;
}

Assertion SymExec::assume_true(const Assertion& a, const Cond& c) const {
  if (c.literal_false) return Assertion::falsum();
  Heaps out;
  for (const auto& d : a.disjuncts)
    for (auto& h : assume_atoms(d, c.atoms, {})) out.push_back(std::move(h));
  return Assertion(finish(out));
}

Assertion SymExec::assume_false(const Assertion& a, const Cond& c) const {
  if (c.literal_false) return a;
  Heaps out;
  for (const auto& d : a.disjuncts) {
    for (const auto& atom : c.atoms) {
      PureAtom shape{atom.op, Term::null(), Term::null()};
      for (const auto& alt : negate(shape)) {
        Cond::Atom neg{alt.front().op, atom.lhs, atom.rhs};
        for (auto& h : assume_atoms(d, {neg}, {})) out.push_back(std::move(h));
      }
    }
  }
  return Assertion(finish(out));
}

std::vector<SymbolicHeap> SymExec::exec_stmt(const SymbolicHeap& h, const Stmt& s) const {
  switch (s.kind) {
    case Stmt::Kind::Skip: return {h};
    case Stmt::Kind::Assign: return exec_assign(h, s);
    case Stmt::Kind::Seq: {
      Heaps cur{h};
      for (const auto& item : s.body) {
        Heaps next;
        for (const auto& c : cur)
          for (auto& r : exec_stmt(c, item)) next.push_back(std::move(r));
        guard(next, item.loc);
        cur = std::move(next);
      }
      return cur;
    }
    case Stmt::Kind::If: {
      Heaps out;
      Stmt then_s = Stmt::seq(s.body), else_s = Stmt::seq(s.else_body);
      if (!s.cond.literal_false)
        for (const auto& c : assume_atoms(h, s.cond.atoms, s.loc))
          for (auto& r : exec_stmt(c, then_s)) out.push_back(std::move(r));
      for (const auto& c : assume_false(Assertion(h), s.cond).disjuncts)
        for (auto& r : exec_stmt(c, else_s)) out.push_back(std::move(r));
      guard(out, s.loc);
      return out;
    }
    case Stmt::Kind::While:
      throw ExecError(ExecError::Kind::Unsupported, s.loc, "", "loop inside a loop-free fragment");
    case Stmt::Kind::Call:
      throw ExecError(ExecError::Kind::Unsupported, s.loc, s.callee, "call to " + s.callee + " was not inlined");
  }
  return {h};
}

Assertion SymExec::exec(const Assertion& pre, const Stmt& body) const {
  if (body.kind == Stmt::Kind::Skip) return pre;
  Heaps out;
  for (const auto& d : pre.disjuncts)
    for (auto& r : exec_stmt(d, body)) out.push_back(std::move(r));
  out = finish(out);
  guard(out, body.loc);
  return Assertion(std::move(out));
}

void SymExec::guard(const Heaps& hs, SourceLoc loc) const {
  if (hs.size() > opts_.max_disjuncts)
    throw ExecError(ExecError::Kind::Unsupported, loc, "",
                    "more than " + std::to_string(opts_.max_disjuncts) + " disjuncts");
}

}  // namespace sepinv
