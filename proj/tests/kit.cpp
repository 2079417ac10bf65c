#include "kit.hpp"

#include <bit>
#include <random>

#include "support.hpp"

namespace sepinv::test {

namespace {

void walk(const Program& prog, const SymExec& exec, const std::string& where, Assertion pre, const Stmt& code,
          std::vector<Fragment>& out) {
  Stmt flat = flatten(code);
  if (!flat.contains_loop()) {
    if (!(flat == Stmt::skip())) out.push_back({where, pre, flat});
    return;
  }
  SplitProgram s = split_program(flat);
  Stmt before = flatten(s.before);
  if (!(before == Stmt::skip())) out.push_back({where + " before loop", pre, before});
  Assertion head;
  try {
    head = exec.exec(pre, before);
  } catch (const ExecError&) {
    return;
  }
  Stmt body = flatten(s.body);
  if (body.contains_loop()) {
    try {
      walk(prog, exec, where + " outer body", exec.assume_true(head, s.cond), body, out);
    } catch (const ExecError&) {
    }
    return;
  }
  Assertion state = head;
  for (int k = 0; k < 3; ++k) {
    try {
      Assertion in = exec.assume_true(state, s.cond);
      if (in.is_false()) break;
      out.push_back({where + " iteration " + std::to_string(k + 1), in, body});
      state = exec.exec(in, body);
    } catch (const ExecError&) {
      break;
    }
  }
}

}  // namespace

std::vector<Fragment> fragments(const Program& prog, const Func& f, const SymExec& exec) {
  std::vector<Fragment> out;
  walk(prog, exec, f.name, f.requires_, inline_calls(prog, f.body), out);
  return out;
}

void exec_soundness(const PredicateRegistry& preds, const SymExec& exec, const Fragment& frag, int max_addrs,
                    SoundnessStats& stats) {
  ++stats.fragments;
  Assertion post;
  try {
    post = exec.exec(frag.pre, frag.body);
  } catch (const ExecError&) {
    ++stats.skipped;
    return;
  }
  std::set<std::string> vars = used_vars(frag.body);
  for (const auto& h : frag.pre.disjuncts) {
    auto pv = h.program_vars();
    vars.insert(pv.begin(), pv.end());
  }
  for (int n = max_addrs; n >= 1; --n) {
    try {
      ModelSpace space(preds, frag.pre.disjuncts, vars, {n, 4'000'000});
      space.for_each([&](const ConcreteHeap& m) {
        if (!satisfies(preds, m, frag.pre, space.max_value())) return true;
        ++stats.models;
        ExecOutcome r = concrete_exec(m, frag.body);
        bool bad = false;
        std::string why;
        if (const Fault* f = std::get_if<Fault>(&r)) {
          bad = true;
          why = "faults with " + to_string(f->kind);
        } else if (!satisfies(preds, std::get<ConcreteHeap>(r), post, space.max_value())) {
          bad = true;
          why = "lands outside " + post.str();
        }
        if (bad) {
          if (stats.violations++ == 0) stats.first_violation = frag.where + ": " + m.str() + " " + why;
        }
        return true;
      });
      return;
    } catch (const OracleError&) {
      if (n == 1) throw;
    }
  }
}

EntailStats entailment_soundness(std::uint64_t seed, int n, int max_addrs) {
  static const Program prog = parse_program(kListDefs);
  const PredicateRegistry& preds = prog.preds;
  Prover prover(preds);
  HeapGen gen(seed);
  EntailStats st;
  OracleOptions oo;
  oo.max_addrs = max_addrs;
  for (int i = 0; i < n; ++i) {
    std::string src = gen.assertion();
    std::string tgt;
    switch (gen.pick(0, 3)) {
      case 0: tgt = gen.assertion(); break;
      case 1: tgt = src + " || " + gen.conjunct(); break;
      case 2: {
        // Fold a fresh cell into a predicate; sometimes valid.
        std::string x = gen.var(), y = gen.term();
        src = x + "->tail == " + y + " * " + (gen.pick(0, 1) ? "listrep(" + y + ")" : "lseg(" + y + "," + gen.term() + ")");
        tgt = gen.pick(0, 1) ? "listrep(" + x + ")" : "lseg(" + x + "," + gen.term() + ") * True";
        break;
      }
      default: tgt = gen.conjunct() + " * True"; break;
    }
    Assertion a = parse_assertion(src, &preds), b = parse_assertion(tgt, &preds);
    ++st.pairs;
    bool proved = prover.entails(a, b);
    bool holds = entails_oracle(preds, a, b, oo).holds;
    st.proved += proved;
    st.oracle_true += holds;
    if (holds && !proved) ++st.false_negatives;
    if (proved && !holds) {
      if (st.violations++ == 0) st.first_violation = src + " |- " + tgt;
    }
  }
  return st;
}

CoverInstance random_cover(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  CoverInstance c;
  std::size_t extra = std::uniform_int_distribution<std::size_t>(0, 2)(rng);
  std::size_t m = n + extra;
  for (std::size_t j = 0; j < m; ++j) {
    SymbolicHeap h;
    h.pure.push_back({PureOp::Eq, Term::var("a" + std::to_string(j)), Term::null()});
    h.spatial.push_back(SpatialAtom::emp());
    c.pool.push_back(h);
    if (j < n) c.assertions.push_back(h);
  }
  std::bernoulli_distribution edge(0.3);
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::size_t> s{i};  // every assertion covers itself
    for (std::size_t j = 0; j < m; ++j)
      if (edge(rng)) s.insert(j);
    c.entail_sets.push_back(std::move(s));
  }
  return c;
}

bool is_cover(const CoverInstance& c, const std::vector<std::size_t>& pick) {
  for (const auto& s : c.entail_sets) {
    bool hit = false;
    for (auto j : pick) hit = hit || s.count(j);
    if (!hit) return false;
  }
  return true;
}

std::size_t brute_force_cover(const CoverInstance& c) {
  const std::size_t m = c.pool.size();
  std::size_t best = m;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::size_t size = static_cast<std::size_t>(std::popcount(mask));
    if (size >= best) continue;
    std::vector<std::size_t> pick;
    for (std::size_t j = 0; j < m; ++j)
      if (mask & (1u << j)) pick.push_back(j);
    if (is_cover(c, pick)) best = size;
  }
  return best;
}

}  // namespace sepinv::test
