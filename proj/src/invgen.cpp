#include "sepinv/invgen.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "sepinv/pure_solver.hpp"

namespace sepinv {

namespace {

template <class F>
auto timed(double& acc, F&& f) {
  auto start = std::chrono::steady_clock::now();
  struct Add {
    double& acc;
    std::chrono::steady_clock::time_point start;
    ~Add() { acc += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); }
  } add{acc, start};
  return f();
}

// Drops disequalities the rest of the heap already implies and pure atoms
// over binders that no longer reach the spatial part.
SymbolicHeap tidy(const SymbolicHeap& heap) {
  SymbolicHeap h = canonicalize(heap);
  std::set<std::string> spatial_vars, unused;
  for (const auto& s : h.spatial) {
    std::set<std::string> prog;
    if (s.is_points_to()) {
      s.addr.collect_vars(prog, spatial_vars);
      s.value.collect_vars(prog, spatial_vars);
    }
    for (const auto& a : s.args) a.collect_vars(prog, spatial_vars);
  }
  std::erase_if(h.pure, [&](const PureAtom& p) {
    std::set<std::string> prog, logic;
    p.lhs.collect_vars(prog, logic);
    p.rhs.collect_vars(prog, logic);
    return std::any_of(logic.begin(), logic.end(),
                       [&](const std::string& l) { return h.has_binder(l) && !spatial_vars.count(l); });
  });
  for (std::size_t i = h.pure.size(); i-- > 0;) {
    if (h.pure[i].op != PureOp::Neq) continue;
    SymbolicHeap without = h;
    without.pure.erase(without.pure.begin() + static_cast<std::ptrdiff_t>(i));
    if (PureSolver(without).entails(h.pure[i])) h = std::move(without);
  }
  return canonicalize(h);
}

std::vector<SymbolicHeap> flatten_states(const std::vector<Assertion>& states, const std::set<std::string>& hidden) {
  std::vector<SymbolicHeap> out;
  for (const auto& a : states)
    for (const auto& d : canonicalize(hide_vars(a, hidden)).disjuncts) out.push_back(tidy(d));
  return out;
}

enum class Access { None, Read, Write, Partial };

bool expr_uses(const Expr& e, const std::string& x) {
  if (e.kind == Expr::Kind::Var && e.name == x) return true;
  return std::any_of(e.sub.begin(), e.sub.end(), [&](const Expr& s) { return expr_uses(s, x); });
}

bool cond_uses(const Cond& c, const std::string& x) { return cond_vars(c).count(x) > 0; }

Access first_access(const std::vector<Stmt>& items, const std::string& x);

Access access(const Stmt& s, const std::string& x) {
  switch (s.kind) {
    case Stmt::Kind::Skip: return Access::None;
    case Stmt::Kind::Seq: return first_access(s.body, x);
    case Stmt::Kind::Assign:
      if (expr_uses(s.rhs, x)) return Access::Read;
      if (s.lhs.kind == Expr::Kind::Var) return s.lhs.name == x ? Access::Write : Access::None;
      return expr_uses(s.lhs, x) ? Access::Read : Access::None;
    case Stmt::Kind::If: {
      if (cond_uses(s.cond, x)) return Access::Read;
      Access a = first_access(s.body, x), b = first_access(s.else_body, x);
      if (a == Access::Read || b == Access::Read) return Access::Read;
      if (a == Access::Write && b == Access::Write) return Access::Write;
      if (a != Access::None || b != Access::None) return Access::Partial;
      return Access::None;
    }
    case Stmt::Kind::While:
      return cond_uses(s.cond, x) || used_vars(s).count(x) ? Access::Read : Access::None;
    case Stmt::Kind::Call:
      return used_vars(s).count(x) ? Access::Read : Access::None;
  }
  return Access::Read;
}

Access first_access(const std::vector<Stmt>& items, const std::string& x) {
  Access state = Access::None;
  for (const auto& s : items) {
    Access a = access(s, x);
    if (a == Access::Read || a == Access::Write) return a;
    if (a == Access::Partial) state = Access::Partial;
  }
  return state;
}

// Loop-invariant non-null facts of the precondition.
std::vector<PureAtom> stable_non_null(const Prover& prover, const LoopTask& task) {
  std::vector<PureAtom> out;
  auto assigned = assigned_vars(task.body);
  std::set<std::string> vars;
  for (const auto& d : task.pre.disjuncts) {
    auto v = d.program_vars();
    vars.insert(v.begin(), v.end());
  }
  for (const auto& v : vars) {
    if (assigned.count(v)) continue;
    SymbolicHeap h;
    h.pure.push_back({PureOp::Neq, Term::var(v), Term::null()});
    h.spatial.push_back(SpatialAtom::top());
    if (prover.entails(task.pre, Assertion(h))) out.push_back(h.pure.front());
  }
  return out;
}

Assertion strengthen(const Assertion& a, const std::vector<PureAtom>& facts) {
  if (facts.empty()) return a;
  Assertion out = a;
  for (auto& d : out.disjuncts) d.pure.insert(d.pure.end(), facts.begin(), facts.end());
  return canonicalize(out);
}

}  // namespace

std::set<std::string> loop_locals(const Cond& cond, const Stmt& body, const std::set<std::string>& live_after) {
  std::set<std::string> out;
  auto cv = cond_vars(cond);
  for (const auto& x : assigned_vars(body)) {
    if (cv.count(x) || live_after.count(x)) continue;
    if (first_access(body.items(), x) == Access::Write) out.insert(x);
  }
  return out;
}

bool similar(const std::vector<SymbolicHeap>& I) {
  if (I.empty()) return true;
  SymbolicHeap first = canonicalize(I.front());
  return std::all_of(I.begin() + 1, I.end(), [&](const SymbolicHeap& h) { return canonicalize(h) == first; });
}

SymbolicHeap similar_extract(const std::vector<SymbolicHeap>& I) {
  if (I.empty() || !similar(I)) throw std::logic_error("similar_extract needs a non-empty similar list");
  return canonicalize(I.front());
}

std::vector<std::size_t> CoverInstance::solve() const {
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::string> names;
  for (const auto& p : pool) names.push_back(canonicalize(p).str());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return names[a] < names[b]; });

  auto covers = [&](const std::vector<std::size_t>& pick) {
    return std::all_of(entail_sets.begin(), entail_sets.end(), [&](const std::set<std::size_t>& s) {
      return std::any_of(pick.begin(), pick.end(), [&](std::size_t j) { return s.count(j) > 0; });
    });
  };
  if (entail_sets.empty()) return {};

  const std::size_t n = order.size();
  for (std::size_t k = 1; k <= n; ++k) {
    // combinations of k positions in lexicographic order
    std::vector<std::size_t> pos(k);
    std::iota(pos.begin(), pos.end(), 0);
    while (true) {
      std::vector<std::size_t> pick;
      for (auto p : pos) pick.push_back(order[p]);
      if (covers(pick)) return pick;
      std::size_t i = k;
      while (i > 0 && pos[i - 1] == n - k + (i - 1)) --i;
      if (i == 0) break;
      ++pos[i - 1];
      for (std::size_t j = i; j < k; ++j) pos[j] = pos[j - 1] + 1;
    }
  }
  return order;
}

CoverInstance InvGen::cover_instance(const std::vector<SymbolicHeap>& I, const Assertion& invs) {
  CoverInstance ci;
  auto add_unique = [](std::vector<SymbolicHeap>& v, const SymbolicHeap& h) {
    SymbolicHeap c = canonicalize(h);
    if (std::find(v.begin(), v.end(), c) == v.end()) v.push_back(std::move(c));
  };
  for (const auto& h : I) add_unique(ci.assertions, h);
  for (const auto& d : invs.disjuncts) add_unique(ci.pool, d);

  auto entail_set = [&](const SymbolicHeap& a) {
    std::set<std::size_t> s;
    for (std::size_t j = 0; j < ci.pool.size(); ++j)
      if (timed(timing_.solver, [&] { return prover_.entails(a, ci.pool[j]); })) s.insert(j);
    return s;
  };
  std::vector<SymbolicHeap> uncovered;
  for (const auto& a : ci.assertions)
    if (entail_set(a).empty()) uncovered.push_back(a);
  for (const auto& a : uncovered) add_unique(ci.pool, a);
  for (const auto& a : ci.assertions) {
    auto s = entail_set(a);
    if (s.empty()) {
      // the prover is not reflexive on this assertion
      auto it = std::find(ci.pool.begin(), ci.pool.end(), a);
      s.insert(static_cast<std::size_t>(it - ci.pool.begin()));
    }
    ci.entail_sets.push_back(std::move(s));
  }
  return ci;
}

Assertion InvGen::pick_invs(const std::vector<SymbolicHeap>& I, const Assertion& invs) {
  CoverInstance ci = cover_instance(I, invs);
  Assertion out;
  for (auto j : ci.solve()) out.disjuncts.push_back(ci.pool[j]);
  return out;
}

std::optional<Assertion> InvGen::infer_invs(const std::vector<SymbolicHeap>& I, std::vector<TraceEntry>& trace,
                                            const std::vector<SymbolicHeap>& banned, int depth) {
  if (I.empty()) return Assertion::falsum();
  if (similar(I)) return Assertion(similar_extract(I));
  if (depth > 0) {
    // a member every other member entails covers the whole group
    std::vector<SymbolicHeap> distinct;
    for (const auto& h : I) {
      SymbolicHeap c = canonicalize(h);
      if (std::find(distinct.begin(), distinct.end(), c) == distinct.end()) distinct.push_back(std::move(c));
    }
    for (const auto& w : distinct) {
      bool weakest = timed(timing_.solver, [&] {
        return std::all_of(distinct.begin(), distinct.end(),
                           [&](const SymbolicHeap& h) { return h == w || prover_.entails(h, w); });
      });
      if (weakest) return Assertion(w);
    }
  }
  if (depth > static_cast<int>(I.size()) + opts_.depth_cap) return std::nullopt;

  InferenceRequest req;
  for (const auto& h : I) req.assertions.emplace_back(h);
  req.banned = banned;
  req.max_candidates = opts_.max_candidates;
  std::vector<Candidate> cands = timed(timing_.infer, [&] { return infer(backend_, req); });

  for (const auto& c : cands) {
    std::vector<SymbolicHeap> succ, fail;
    timed(timing_.solver, [&] {
      for (const auto& h : I) {
        if (auto r = prover_.frame_check(h, c.conjunct)) succ.push_back(tidy(r->rewritten));
        else fail.push_back(h);
      }
    });
    if (succ.empty()) continue;
    trace.push_back({c.str(), succ.size(), fail.size(), depth});
    std::vector<SymbolicHeap> next_banned = banned;
    next_banned.push_back(c.conjunct);
    auto a = infer_invs(succ, trace, next_banned, depth + 1);
    if (!a) return std::nullopt;
    auto b = infer_invs(fail, trace, next_banned, depth + 1);
    if (!b) return std::nullopt;
    return disjoin(*a, *b);
  }
  return std::nullopt;
}

InvariantReport InvGen::tail(const LoopTask& task, std::vector<Assertion> states,
                             const std::function<std::optional<Assertion>(const Assertion&, InvariantReport&)>& step) {
  InvariantReport rep;
  rep.states = std::move(states);
  std::set<std::string> hidden = loop_locals(task.cond, task.body, task.live_after);
  std::vector<SymbolicHeap> I = flatten_states(rep.states, hidden);
  std::vector<SymbolicHeap> banned;
  std::vector<PureAtom> non_null = timed(timing_.solver, [&] { return stable_non_null(prover_, task); });

  for (int attempt = 1; attempt <= opts_.max_attempts; ++attempt) {
    rep.attempts = attempt;
    std::vector<TraceEntry> trace;
    std::optional<Assertion> invs;
    try {
      invs = infer_invs(I, trace, banned);
    } catch (const InferenceError& e) {
      rep.failure = std::string("inference backend: ") + e.what();
    }
    rep.trace.insert(rep.trace.end(), trace.begin(), trace.end());
    if (invs) {
      Assertion inv = canonicalize(hide_vars(*invs, hidden));
      inv = strengthen(pick_invs(I, inv), non_null);
      rep.invariant = inv;
      rep.pre_entails_inv = timed(timing_.solver, [&] { return prover_.entails(task.pre, inv); });
      std::optional<Assertion> post = step(inv, rep);
      rep.inductive = post && timed(timing_.solver, [&] { return prover_.entails(*post, inv); });
      if (rep.pre_entails_inv && rep.inductive) {
        rep.success = true;
        rep.failure.clear();
        return rep;
      }
      if (rep.failure.empty() || post) rep.failure = !rep.pre_entails_inv ? "precondition does not entail invariant"
                                                                           : "invariant is not inductive";
    } else if (rep.failure.empty()) {
      rep.failure = "LLM Inference Fail";
    }
    if (trace.empty()) break;
    banned.push_back(canonicalize(parse_assertion(trace.front().candidate, &prover_.preds()).disjuncts.front()));
    rep.banned.push_back(trace.front().candidate);
  }
  return rep;
}

InvariantReport InvGen::solve(const LoopTask& task) {
  return task.body.contains_loop() ? multi_loop(task) : single_loop(task);
}

InvariantReport InvGen::single_loop(const LoopTask& task) {
  Timing before = timing_;
  std::vector<Assertion> states{canonicalize(task.pre)};
  InvariantReport rep;
  try {
    timed(timing_.symbolic, [&] {
      for (int i = 0; i < task.max_num; ++i)
        states.push_back(exec_.exec(exec_.assume_true(states.back(), task.cond), task.body));
    });
  } catch (const ExecError& e) {
    rep.states = states;
    rep.failure = e.what();
    return rep;
  }
  rep = tail(task, std::move(states), [&](const Assertion& inv, InvariantReport& r) -> std::optional<Assertion> {
    try {
      return timed(timing_.symbolic, [&] { return exec_.exec(exec_.assume_true(inv, task.cond), task.body); });
    } catch (const ExecError& e) {
      r.failure = std::string("executing the loop body under the invariant: ") + e.what();
      return std::nullopt;
    }
  });
  rep.timing = {timing_.symbolic - before.symbolic, timing_.infer - before.infer, timing_.solver - before.solver};
  return rep;
}

InvariantReport InvGen::multi_loop(const LoopTask& task) {
  if (!task.body.contains_loop()) return single_loop(task);
  Timing before = timing_;
  InvariantReport rep;
  SplitProgram split;
  try {
    split = split_program(task.body);
  } catch (const std::invalid_argument&) {
    rep.failure = "inner loop is not at the top level of the loop body";
    return rep;
  }

  std::set<std::string> live = task.live_after;
  for (const auto& v : used_vars(split.before)) live.insert(v);
  for (const auto& v : used_vars(split.after)) live.insert(v);
  for (const auto& v : cond_vars(task.cond)) live.insert(v);
  auto inner_task = [&](Assertion pre) { return LoopTask{std::move(pre), split.cond, split.body, task.max_num, live}; };
  const Cond& enter = opts_.paper_literal ? split.cond : task.cond;

  // one outer iteration; returns the state after c_after
  auto outer_step = [&](const Assertion& from, InvariantReport& inner) -> std::optional<Assertion> {
    Assertion inner_pre =
        timed(timing_.symbolic, [&] { return exec_.exec(exec_.assume_true(from, enter), split.before); });
    inner = solve(inner_task(inner_pre));
    if (!inner.success) return std::nullopt;
    return timed(timing_.symbolic,
                 [&] { return exec_.exec(exec_.assume_false(inner.invariant, split.cond), split.after); });
  };

  std::vector<Assertion> states{canonicalize(task.pre)};
  std::string diag;
  for (int i = 0; i < task.max_num; ++i) {
    InvariantReport inner;
    try {
      auto next = outer_step(states.back(), inner);
      if (!next) {
        diag = "inner loop failed at iteration " + std::to_string(i) + ": " + inner.failure;
        break;
      }
      states.push_back(std::move(*next));
    } catch (const ExecError& e) {
      diag = "iteration " + std::to_string(i) + ": " + e.what();
      break;
    }
  }

  rep = tail(task, std::move(states), [&](const Assertion& inv, InvariantReport& r) -> std::optional<Assertion> {
    InvariantReport inner;
    try {
      auto post = outer_step(inv, inner);
      r.inner = {inner};
      if (!post) r.failure = "inner loop under the invariant: " + inner.failure;
      return post;
    } catch (const ExecError& e) {
      r.inner = {inner};
      r.failure = std::string("outer body under the invariant: ") + e.what();
      return std::nullopt;
    }
  });
  if (!rep.success && !diag.empty()) rep.failure += " (" + diag + ")";
  rep.timing = {timing_.symbolic - before.symbolic, timing_.infer - before.infer, timing_.solver - before.solver};
  return rep;
}

FunctionReport verify_function(const Program& prog, const Func& f, const Prover& prover, const SymExec& exec,
                               Backend& backend, InvgenOptions opts) {
  auto start = std::chrono::steady_clock::now();
  FunctionReport out;
  out.name = f.name;
  InvGen gen(prover, exec, backend, opts);
  std::vector<Stmt> items = flatten(inline_calls(prog, f.body)).items();
  std::set<std::string> ensures_vars;
  for (const auto& d : f.ensures.disjuncts) {
    auto v = d.program_vars();
    ensures_vars.insert(v.begin(), v.end());
  }

  Assertion state = canonicalize(f.requires_);
  std::vector<Stmt> pending;
  try {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].kind != Stmt::Kind::While) {
        pending.push_back(items[i]);
        continue;
      }
      state = exec.exec(state, flatten(Stmt::seq(pending)));
      pending.clear();
      std::set<std::string> live = ensures_vars;
      for (std::size_t j = i + 1; j < items.size(); ++j) {
        auto u = used_vars(items[j]);
        live.insert(u.begin(), u.end());
      }
      LoopTask task{state, items[i].cond, flatten(Stmt::seq(items[i].body)), opts.max_num, live};
      out.tasks.push_back(task);
      out.loops.push_back(gen.solve(task));
      if (!out.loops.back().success) {
        out.failure = "loop " + std::to_string(out.loops.size()) + ": " + out.loops.back().failure;
        break;
      }
      state = exec.assume_false(out.loops.back().invariant, items[i].cond);
    }
    if (out.failure.empty()) {
      state = exec.exec(state, flatten(Stmt::seq(pending)));
      out.post_ok = prover.entails(state, f.ensures);
      if (!out.post_ok) out.failure = "postcondition not entailed: " + canonicalize(state).str();
    }
  } catch (const ExecError& e) {
    out.failure = e.what();
  }
  out.verified = out.failure.empty();
  out.timing = gen.timing();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace sepinv
