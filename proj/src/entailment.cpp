#include "sepinv/entailment.hpp"

#include <algorithm>
#include <mutex>

#include "sepinv/pure_solver.hpp"

namespace sepinv {

std::string to_string(Lemma::Kind k) {
  switch (k) {
    case Lemma::Kind::EmptyCase: return "EmptyCase";
    case Lemma::Kind::OneStepFold: return "OneStepFold";
    case Lemma::Kind::SegmentCompose: return "SegmentCompose";
  }
  return "?";
}

std::string Lemma::str() const {
  SymbolicHeap c;
  c.spatial.push_back(conclusion);
  return to_string(kind) + ": " + premise.str() + " |- " + c.str();
}

namespace {

bool is_hole(const Term& t) { return t.is_logic() && !t.name().empty() && t.name()[0] == '?'; }

bool resolved(const Term& t) {
  if (is_hole(t)) return false;
  if (t.is_field_addr()) return resolved(t.base());
  return true;
}

bool resolved(const PureAtom& a) { return resolved(a.lhs) && resolved(a.rhs); }

bool resolved(const SpatialAtom& a) {
  if (a.is_points_to()) return resolved(a.addr) && resolved(a.value);
  for (const auto& t : a.args)
    if (!resolved(t)) return false;
  return true;
}

bool has_points_to(const SymbolicHeap& h) {
  return std::any_of(h.spatial.begin(), h.spatial.end(), [](const SpatialAtom& s) { return s.is_points_to(); });
}

bool is_spatial_resource(const SpatialAtom& s) { return s.is_points_to() || s.is_pred(); }

// A self-call `P(b, y)` or `P(&(b->f), y)` with `b` a branch binder and `y`
// the second parameter.
bool threads_segment(const PredicateDef& def, const SymbolicHeap& br) {
  int calls = 0;
  for (const auto& s : br.spatial) {
    if (!s.is_pred() || s.pred != def.name) continue;
    ++calls;
    const Term& next = s.args[0].is_field_addr() ? s.args[0].base() : s.args[0];
    if (!next.is_logic() || !br.has_binder(next.name())) return false;
    if (!s.args[1].is_var() || s.args[1].name() != def.params[1]) return false;
  }
  return calls == 1;
}

bool empty_segment_base(const PredicateDef& def, const SymbolicHeap& br) {
  if (br.pure.size() != 1 || br.pure[0].op != PureOp::Eq) return false;
  for (const auto& s : br.spatial)
    if (s.kind != SpatialAtom::Kind::Emp) return false;
  Term x = Term::var(def.params[0]), y = Term::var(def.params[1]);
  const PureAtom& p = br.pure[0];
  return (p.lhs == x && p.rhs == y) || (p.lhs == y && p.rhs == x);
}

// Every definition in registration order; lemma validity depends on all of them.
std::string registry_key(const PredicateRegistry& preds) {
  std::string key;
  for (const auto& d : preds.defs()) {
    key += d.name + "(";
    for (const auto& p : d.params) key += p + ",";
    key += ")=";
    for (const auto& b : d.branches) key += b.str() + "|";
    key += ";";
  }
  return key;
}

// Lemmas already validated in this process. Corpus files repeat definitions.
std::mutex validated_mu;
std::set<std::string> validated;

}  // namespace

std::vector<Lemma> derive_lemmas(const PredicateRegistry& preds, const PredicateDef& def, bool validate,
                                 int max_addrs) {
  std::vector<Term> params;
  for (const auto& p : def.params) params.push_back(Term::var(p));
  SpatialAtom self = SpatialAtom::app(def.name, params);

  std::vector<Lemma> out;
  for (std::size_t i = 0; i < def.branches.size(); ++i) {
    Lemma::Kind k = def.is_recursive_branch(i) ? Lemma::Kind::OneStepFold : Lemma::Kind::EmptyCase;
    out.push_back({k, def.name, def.branches[i], self});
  }

  if (def.arity() == 2) {
    bool threads = false, base = false;
    for (std::size_t i = 0; i < def.branches.size(); ++i) {
      if (def.is_recursive_branch(i)) {
        if (!threads_segment(def, def.branches[i])) {
          threads = false;
          break;
        }
        threads = true;
      } else if (empty_segment_base(def, def.branches[i])) {
        base = true;
      }
    }
    if (threads && base) {
      std::string mid = "m";
      while (mid == def.params[0] || mid == def.params[1]) mid += "m";
      SymbolicHeap premise;
      premise.spatial.push_back(SpatialAtom::app(def.name, {params[0], Term::var(mid)}));
      premise.spatial.push_back(SpatialAtom::app(def.name, {Term::var(mid), params[1]}));
      out.push_back({Lemma::Kind::SegmentCompose, def.name, premise, self});
    }
  }

  if (!validate) return out;
  const std::string reg = registry_key(preds) + "#" + std::to_string(max_addrs) + "#";
  for (const auto& l : out) {
    const std::string key = reg + l.str();
    {
      std::lock_guard lock(validated_mu);
      if (validated.count(key)) continue;
    }
    SymbolicHeap concl;
    concl.spatial.push_back(l.conclusion);
    for (int n = max_addrs;; --n) {
      try {
        OracleVerdict v = entails_oracle(preds, Assertion(l.premise), Assertion(concl), {n, OracleOptions{}.max_models});
        if (!v.holds)
          throw LemmaError("lemma " + l.str() + " fails on " + (v.counter_model ? v.counter_model->str() : "?"));
        break;
      } catch (const OracleError&) {
        if (n <= 1) throw;
      }
    }
    std::lock_guard lock(validated_mu);
    validated.insert(key);
  }
  return out;
}

struct SearchOutcome {
  std::vector<std::size_t> consumed;  // source spatial indices
  std::vector<PureAtom> matched_pure;
};

namespace {

class Search {
 public:
  Search(const PredicateRegistry& preds, const ProverOptions& opts, const std::set<std::string>& compose,
         const SymbolicHeap& source, bool frame)
      : preds_(preds), opts_(opts), compose_(compose), src_(source), ps_(source), frame_(frame) {}

  bool run(const SymbolicHeap& target, SearchOutcome* out) {
    State st;
    st.used.assign(src_.spatial.size(), false);
    Substitution holes;
    for (const auto& b : target.binders) holes.emplace(b, Term::logic(fresh_hole()));
    for (const auto& p : target.pure) st.pure.push_back(substitute(p, holes));
    for (const auto& s : target.spatial) {
      if (s.kind == SpatialAtom::Kind::True) st.top = true;
      else if (is_spatial_resource(s)) st.spatial.push_back(substitute(s, holes));
    }
    out_ = out;
    return search(st);
  }

  bool exhausted() const { return exhausted_; }

 private:
  struct State {
    std::vector<PureAtom> pure;
    std::vector<SpatialAtom> spatial;
    Substitution sigma;
    std::vector<bool> used;
    std::vector<PureAtom> matched;
    int unfolds = 0;
    int lemma_uses = 0;
    bool top = false;
  };

  std::string fresh_hole() { return "?" + std::to_string(++holes_); }

  Term apply(const State& st, const Term& t) const {
    Term r = substitute(t, st.sigma);
    // chains of hole bindings
    for (int i = 0; i < 8 && !resolved(r) && r != t; ++i) {
      Term n = substitute(r, st.sigma);
      if (n == r) break;
      r = n;
    }
    return r;
  }

  PureAtom apply(const State& st, const PureAtom& a) const { return {a.op, apply(st, a.lhs), apply(st, a.rhs)}; }

  SpatialAtom apply(const State& st, const SpatialAtom& a) const {
    SpatialAtom out = a;
    if (a.is_points_to()) {
      out.addr = apply(st, a.addr);
      out.value = apply(st, a.value);
    } else {
      for (auto& t : out.args) t = apply(st, t);
    }
    return out;
  }

  bool unify(const Term& pattern, const Term& term, Substitution& sigma) {
    if (is_hole(pattern)) {
      auto it = sigma.find(pattern.name());
      if (it != sigma.end()) return unify(it->second, term, sigma);
      sigma.emplace(pattern.name(), term);
      return true;
    }
    if (resolved(pattern)) return ps_.equal(pattern, term);
    if (pattern.is_field_addr()) {
      if (term.is_field_addr() && term.name() == pattern.name()) return unify(pattern.base(), term.base(), sigma);
      ps_.add(term);
      for (std::size_t i = 0; i < ps_.size(); ++i) {
        const Term& n = ps_.term(static_cast<int>(i));
        if (n.is_field_addr() && n.name() == pattern.name() && ps_.equal(n, term))
          return unify(pattern.base(), n.base(), sigma);
      }
    }
    return false;
  }

  bool tick() {
    if (++steps_ > opts_.step_budget) exhausted_ = true;
    return !exhausted_;
  }

  bool finish(const State& st) {
    if (!frame_ && !st.top) {
      for (std::size_t i = 0; i < src_.spatial.size(); ++i) {
        const SpatialAtom& s = src_.spatial[i];
        if (s.kind == SpatialAtom::Kind::True) return false;
        if (is_spatial_resource(s) && !st.used[i]) return false;
      }
    }
    if (out_) {
      out_->consumed.clear();
      for (std::size_t i = 0; i < st.used.size(); ++i)
        if (st.used[i]) out_->consumed.push_back(i);
      out_->matched_pure = st.matched;
    }
    return true;
  }

  bool search(State st) {
    if (!tick()) return false;
    for (auto& p : st.pure) p = apply(st, p);
    for (auto& s : st.spatial) s = apply(st, s);

    // 0: resolved pure goals
    for (std::size_t i = 0; i < st.pure.size(); ++i) {
      if (!resolved(st.pure[i])) continue;
      PureAtom g = st.pure[i];
      if (!ps_.entails(g)) return false;
      if (g.op == PureOp::Eq) {
        for (const auto& p : src_.pure) {
          if (p.op != PureOp::Eq) continue;
          if ((p.lhs == g.lhs && p.rhs == g.rhs) || (p.lhs == g.rhs && p.rhs == g.lhs)) {
            st.matched.push_back(p);
            break;
          }
        }
      }
      st.pure.erase(st.pure.begin() + static_cast<std::ptrdiff_t>(i));
      return search(std::move(st));
    }
    // 1: points-to with a known address
    for (std::size_t i = 0; i < st.spatial.size(); ++i) {
      const SpatialAtom& g = st.spatial[i];
      if (g.is_points_to() && resolved(g.addr)) return match_cell(std::move(st), i);
    }
    // 2: equalities that fix a hole
    for (std::size_t i = 0; i < st.pure.size(); ++i) {
      const PureAtom& g = st.pure[i];
      if (g.op != PureOp::Eq) continue;
      const Term* hole = nullptr;
      const Term* other = nullptr;
      if (is_hole(g.lhs) && resolved(g.rhs)) hole = &g.lhs, other = &g.rhs;
      else if (is_hole(g.rhs) && resolved(g.lhs)) hole = &g.rhs, other = &g.lhs;
      if (!hole) continue;
      st.sigma.emplace(hole->name(), *other);
      st.pure.erase(st.pure.begin() + static_cast<std::ptrdiff_t>(i));
      return search(std::move(st));
    }
    // 3: predicate applications with known arguments
    for (std::size_t i = 0; i < st.spatial.size(); ++i) {
      const SpatialAtom& g = st.spatial[i];
      if (g.is_pred() && resolved(g)) return match_pred(std::move(st), i);
    }
    // 4: points-to with an open address
    for (std::size_t i = 0; i < st.spatial.size(); ++i)
      if (st.spatial[i].is_points_to()) return match_cell(std::move(st), i);
    // 5: predicate applications with open arguments
    if (!st.spatial.empty()) return cancel(std::move(st), 0);
    // equalities between two holes
    for (std::size_t i = 0; i < st.pure.size(); ++i) {
      const PureAtom& g = st.pure[i];
      if (g.op == PureOp::Eq && is_hole(g.lhs)) {
        if (g.lhs != g.rhs) st.sigma.emplace(g.lhs.name(), g.rhs);
        st.pure.erase(st.pure.begin() + static_cast<std::ptrdiff_t>(i));
        return search(std::move(st));
      }
    }
    if (!st.pure.empty()) return false;
    return finish(st);
  }

  bool match_cell(State st, std::size_t gi) {
    SpatialAtom g = st.spatial[gi];
    st.spatial.erase(st.spatial.begin() + static_cast<std::ptrdiff_t>(gi));
    for (std::size_t j = 0; j < src_.spatial.size(); ++j) {
      const SpatialAtom& s = src_.spatial[j];
      if (!s.is_points_to() || st.used[j]) continue;
      Substitution sigma = st.sigma;
      if (!unify(g.addr, s.addr, sigma) || !unify(apply_sigma(sigma, g.value), s.value, sigma)) continue;
      State next = st;
      next.sigma = std::move(sigma);
      next.used[j] = true;
      if (search(std::move(next))) return true;
      if (exhausted_) return false;
    }
    return false;
  }

  static Term apply_sigma(const Substitution& sigma, const Term& t) { return substitute(t, sigma); }

  bool cancel(State st, std::size_t gi) {
    SpatialAtom g = st.spatial[gi];
    for (std::size_t j = 0; j < src_.spatial.size(); ++j) {
      const SpatialAtom& s = src_.spatial[j];
      if (!s.is_pred() || st.used[j] || s.pred != g.pred) continue;
      Substitution sigma = st.sigma;
      bool ok = true;
      for (std::size_t k = 0; k < g.args.size() && ok; ++k) ok = unify(apply_sigma(sigma, g.args[k]), s.args[k], sigma);
      if (!ok) continue;
      State next = st;
      next.spatial.erase(next.spatial.begin() + static_cast<std::ptrdiff_t>(gi));
      next.sigma = std::move(sigma);
      next.used[j] = true;
      if (search(std::move(next))) return true;
      if (exhausted_) return false;
    }
    return false;
  }

  bool match_pred(State st, std::size_t gi) {
    if (cancel(st, gi) || exhausted_) return !exhausted_;
    SpatialAtom g = st.spatial[gi];

    if (compose_.count(g.pred) && st.lemma_uses < opts_.max_lemma_uses) {
      for (std::size_t j = 0; j < src_.spatial.size(); ++j) {
        const SpatialAtom& s = src_.spatial[j];
        if (!s.is_pred() || st.used[j] || s.pred != g.pred) continue;
        if (!ps_.equal(s.args[0], g.args[0]) || ps_.equal(s.args[1], g.args[1])) continue;
        State next = st;
        next.used[j] = true;
        next.lemma_uses++;
        next.spatial[gi] = SpatialAtom::app(g.pred, {s.args[1], g.args[1]});
        if (search(std::move(next))) return true;
        if (exhausted_) return false;
      }
    }

    if (st.unfolds >= opts_.unfold_cap) return false;
    bool free_cell = false;
    for (std::size_t j = 0; j < src_.spatial.size(); ++j)
      if (src_.spatial[j].is_points_to() && !st.used[j]) free_cell = true;
    const PredicateDef& def = preds_.at(g.pred);
    for (std::size_t b = 0; b < def.branches.size(); ++b) {
      if (has_points_to(def.branches[b]) && !free_cell) continue;
      SymbolicHeap body = def.instantiate(b, g.args, [&] { return fresh_hole(); });
      State next = st;
      next.unfolds++;
      next.spatial.erase(next.spatial.begin() + static_cast<std::ptrdiff_t>(gi));
      for (const auto& p : body.pure) next.pure.push_back(p);
      for (const auto& s : body.spatial) {
        if (s.kind == SpatialAtom::Kind::True) next.top = true;
        else if (is_spatial_resource(s)) next.spatial.push_back(s);
      }
      if (search(std::move(next))) return true;
      if (exhausted_) return false;
    }
    return false;
  }

  const PredicateRegistry& preds_;
  const ProverOptions& opts_;
  const std::set<std::string>& compose_;
  const SymbolicHeap& src_;
  PureSolver ps_;
  bool frame_;
  SearchOutcome* out_ = nullptr;
  std::size_t steps_ = 0;
  bool exhausted_ = false;
  int holes_ = 0;
};

}  // namespace

Prover::Prover(const PredicateRegistry& preds, ProverOptions opts) : preds_(preds), opts_(opts) {
  for (const auto& def : preds_.defs()) {
    for (auto& l : derive_lemmas(preds_, def, opts_.validate_lemmas)) {
      if (l.kind == Lemma::Kind::SegmentCompose) compose_.insert(l.pred);
      lemmas_.push_back(std::move(l));
    }
  }
}

bool Prover::satisfiable(const SymbolicHeap& h) { return PureSolver(h).consistent(); }

bool Prover::direct(const SymbolicHeap& source, const SymbolicHeap& target, bool frame, SearchOutcome* out,
                    bool& exhausted) const {
  if (!satisfiable(source)) return true;
  Search s(preds_, opts_, compose_, source, frame);
  bool ok = s.run(target, out);
  exhausted = exhausted || s.exhausted();
  return ok;
}

bool Prover::prove_disjunct(const SymbolicHeap& source, const Assertion& target, int splits,
                            bool& exhausted) const {
  if (!satisfiable(source)) return true;
  for (const auto& t : target.disjuncts)
    if (direct(source, t, false, nullptr, exhausted)) return true;
  if (splits >= opts_.case_split_depth) return false;
  for (std::size_t i = 0; i < source.spatial.size(); ++i) {
    const SpatialAtom& s = source.spatial[i];
    if (!s.is_pred() || preds_.at(s.pred).branches.size() < 2) continue;
    bool all = true;
    for (std::size_t b = 0; b < preds_.at(s.pred).branches.size() && all; ++b) {
      SymbolicHeap h = canonicalize(unfold(source, i, b, preds_));
      if (!satisfiable(h)) continue;
      all = prove_disjunct(h, target, splits + 1, exhausted);
    }
    if (all) return true;
  }
  return false;
}

namespace {

// Unfolds every application of a predicate with a single non-recursive branch.
SymbolicHeap inline_single_branch(SymbolicHeap h, const PredicateRegistry& preds) {
  for (std::size_t i = 0; i < h.spatial.size();) {
    const SpatialAtom& s = h.spatial[i];
    if (s.is_pred() && preds.at(s.pred).branches.size() == 1 && !preds.at(s.pred).is_recursive_branch(0)) {
      h = unfold(h, i, 0, preds);
      i = 0;
    } else {
      ++i;
    }
  }
  return h;
}

}  // namespace

EntailResult Prover::check(const Assertion& source, const Assertion& target) const {
  Assertion src = canonicalize(source);
  for (auto& d : src.disjuncts) d = canonicalize(inline_single_branch(d, preds_));
  Assertion tgt = canonicalize(target);
  EntailResult r;
  r.proved = true;
  for (const auto& d : src.disjuncts) {
    if (!prove_disjunct(d, tgt, 0, r.exhausted)) {
      r.proved = false;
      break;
    }
  }
  return r;
}

std::optional<FrameResult> Prover::frame_check(const SymbolicHeap& heap, const SymbolicHeap& sep) const {
  bool trivial = sep.pure.empty() && std::none_of(sep.spatial.begin(), sep.spatial.end(), [](const SpatialAtom& s) {
                   return s.kind != SpatialAtom::Kind::Emp;
                 });
  if (trivial) return FrameResult{{}, {}, heap, heap};

  SymbolicHeap source = canonicalize(inline_single_branch(heap, preds_));
  SearchOutcome found;
  if (satisfiable(source)) {
    SymbolicHeap target = sep;
    target.spatial.push_back(SpatialAtom::top());
    bool exhausted = false;
    if (!direct(source, target, true, &found, exhausted)) return std::nullopt;
  }

  FrameResult r;
  r.residue = source;
  r.residue.spatial.clear();
  for (std::size_t i = 0; i < source.spatial.size(); ++i) {
    if (std::find(found.consumed.begin(), found.consumed.end(), i) != found.consumed.end())
      r.matched.push_back(source.spatial[i]);
    else
      r.residue.spatial.push_back(source.spatial[i]);
  }

  // Drop a matched equality when one side is otherwise unused; the separating
  // conjunct now carries it.
  SymbolicHeap rest = r.residue;
  for (const auto& m : found.matched_pure) {
    auto it = std::find(rest.pure.begin(), rest.pure.end(), m);
    if (it == rest.pure.end()) continue;
    SymbolicHeap without = rest;
    without.pure.erase(without.pure.begin() + (it - rest.pure.begin()));
    auto occurs = [&](const Term& t) {
      if (!t.is_var() && !t.is_logic()) return true;
      std::set<std::string> prog, logic;
      for (const auto& p : without.pure) {
        p.lhs.collect_vars(prog, logic);
        p.rhs.collect_vars(prog, logic);
      }
      for (const auto& s : without.spatial) {
        if (s.is_points_to()) {
          s.addr.collect_vars(prog, logic);
          s.value.collect_vars(prog, logic);
        }
        for (const auto& a : s.args) a.collect_vars(prog, logic);
      }
      return (t.is_var() ? prog : logic).count(t.name()) > 0;
    };
    if (!occurs(m.lhs) || !occurs(m.rhs)) {
      rest = std::move(without);
      r.matched_pure.push_back(m);
    }
  }

  FreshNames fresh(rest);
  fresh.reserve(sep);
  Substitution rename;
  SymbolicHeap out = rest;
  for (const auto& b : sep.binders) {
    std::string nb = fresh.next();
    rename.emplace(b, Term::logic(nb));
    out.binders.push_back(nb);
  }
  for (const auto& p : sep.pure) out.pure.push_back(substitute(p, rename));
  for (const auto& s : sep.spatial)
    if (s.kind != SpatialAtom::Kind::Emp) out.spatial.push_back(substitute(s, rename));
  r.rewritten = canonicalize(out);
  return r;
}

}  // namespace sepinv
