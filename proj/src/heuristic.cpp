#include <algorithm>
#include <map>

#include "sepinv/inference.hpp"
#include "sepinv/pure_solver.hpp"

namespace sepinv {

bool is_banned(const SymbolicHeap& conjunct, const std::vector<SymbolicHeap>& banned) {
  SymbolicHeap c = canonicalize(conjunct);
  return std::any_of(banned.begin(), banned.end(), [&](const SymbolicHeap& b) { return canonicalize(b) == c; });
}

std::vector<Candidate> infer(Backend& backend, const InferenceRequest& req) {
  std::vector<Candidate> out;
  for (auto& c : backend.query(req))
    if (!is_banned(c.conjunct, req.banned)) out.push_back(std::move(c));
  if (req.max_candidates >= 0 && out.size() > static_cast<std::size_t>(req.max_candidates))
    out.resize(static_cast<std::size_t>(req.max_candidates));
  return out;
}

namespace {

bool binder_free(const SymbolicHeap& h, const std::vector<Term>& terms) {
  for (const auto& t : terms) {
    std::set<std::string> prog, logic;
    t.collect_vars(prog, logic);
    for (const auto& l : logic)
      if (h.has_binder(l)) return false;
  }
  return true;
}

bool binder_free(const SymbolicHeap& h, const PureAtom& a) { return binder_free(h, {a.lhs, a.rhs}); }

bool binder_free(const SymbolicHeap& h, const SpatialAtom& a) {
  if (a.is_points_to()) return binder_free(h, {a.addr, a.value});
  return binder_free(h, a.args);
}

// Binder-free atoms of one disjunct, keyed by their printed form.
std::map<std::string, SymbolicHeap> literal_atoms(const SymbolicHeap& h) {
  std::map<std::string, SymbolicHeap> out;
  for (const auto& p : h.pure) {
    if (!binder_free(h, p)) continue;
    SymbolicHeap c;
    c.pure.push_back(p);
    out.emplace(p.str(), std::move(c));
  }
  for (const auto& s : h.spatial) {
    if (!(s.is_points_to() || s.is_pred()) || !binder_free(h, s)) continue;
    SymbolicHeap c;
    c.spatial.push_back(s);
    out.emplace(s.str(), std::move(c));
  }
  return out;
}

// A fold must not consume a cell whose address names a program variable
// other than one of its own arguments.
bool swallows_cut_point(const SymbolicHeap& d, const std::vector<SpatialAtom>& matched, const std::vector<Term>& args,
                        const std::set<std::string>& vars) {
  PureSolver ps(d);
  for (const auto& s : matched) {
    if (!s.is_points_to()) continue;
    Term root = s.addr.is_field_addr() ? s.addr.base() : s.addr;
    bool is_arg = std::any_of(args.begin(), args.end(), [&](const Term& a) { return ps.equal(a, root); });
    if (is_arg) continue;
    for (const auto& v : vars)
      if (ps.equal(Term::var(v), root)) return true;
  }
  return false;
}

void offer(std::map<std::string, Candidate>& pool, const SymbolicHeap& conjunct, double score) {
  SymbolicHeap c = canonicalize(conjunct);
  std::string key = c.str();
  auto it = pool.find(key);
  if (it == pool.end()) pool.emplace(key, Candidate{std::move(c), score});
  else it->second.score = std::max(it->second.score, score);
}

}  // namespace

std::vector<Candidate> HeuristicBackend::query(const InferenceRequest& req) {
  std::vector<SymbolicHeap> ds;
  for (const auto& a : req.assertions)
    for (const auto& d : canonicalize(a).disjuncts) ds.push_back(d);
  if (ds.empty()) return {};
  const double n = static_cast<double>(ds.size());

  std::map<std::string, int> counts;
  std::map<std::string, SymbolicHeap> atoms;
  for (const auto& d : ds) {
    for (auto& [k, c] : literal_atoms(d)) {
      counts[k]++;
      atoms.emplace(k, std::move(c));
    }
  }
  std::set<std::string> common;
  for (const auto& [k, c] : counts)
    if (c / n >= tau_) common.insert(k);

  std::map<std::string, Candidate> pool;
  for (const auto& k : common) offer(pool, atoms.at(k), counts.at(k) / n * 0.5);

  // the block of common spatial atoms, or a whole disjunct when all agree
  if (std::all_of(ds.begin(), ds.end(), [&](const SymbolicHeap& d) { return d == ds.front(); })) {
    SymbolicHeap block = ds.front();
    std::erase_if(block.pure, [&](const PureAtom& p) { return binder_free(block, p); });
    std::erase_if(block.spatial, [](const SpatialAtom& s) { return !(s.is_points_to() || s.is_pred()); });
    if (!block.spatial.empty()) offer(pool, block, 1.0 + static_cast<double>(block.spatial.size()));
  } else {
    SymbolicHeap block;
    double frac = 1.0;
    for (const auto& k : common) {
      const SymbolicHeap& c = atoms.at(k);
      if (c.spatial.empty()) continue;
      block.spatial.push_back(c.spatial.front());
      frac = std::min(frac, counts.at(k) / n);
    }
    if (block.spatial.size() > 1) offer(pool, block, frac * 0.5 * static_cast<double>(block.spatial.size()));
  }

  std::set<std::string> vars;
  for (const auto& d : ds) {
    auto v = d.program_vars();
    vars.insert(v.begin(), v.end());
  }
  std::vector<Term> terms;
  for (const auto& v : vars) terms.push_back(Term::var(v));
  terms.push_back(Term::null());

  for (const auto& def : prover_.preds().defs()) {
    if (def.arity() == 0 || def.arity() > 2) continue;
    std::vector<std::size_t> idx(def.arity(), 0);
    while (true) {
      std::vector<Term> args;
      for (auto i : idx) args.push_back(terms[i]);
      SymbolicHeap sep;
      sep.spatial.push_back(SpatialAtom::app(def.name, args));

      int hits = 0;
      bool consumed_any = false;
      double best = 0;
      for (const auto& d : ds) {
        auto r = prover_.frame_check(d, sep);
        if (!r || swallows_cut_point(d, r->matched, args, vars)) continue;
        ++hits;
        int shared = 0, varying = 0;
        auto classify = [&](const std::string& key, bool free) {
          if (free && common.count(key)) ++shared;
          else ++varying;
        };
        for (const auto& s : r->matched) classify(s.str(), binder_free(d, s));
        for (const auto& p : r->matched_pure) classify(p.str(), binder_free(d, p));
        consumed_any = consumed_any || shared + varying > 0;
        best = std::max(best, (1.0 + varying) / (1.0 + shared));
      }
      if (hits > 0 && consumed_any) offer(pool, sep, hits / n * best);

      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == terms.size()) idx[k++] = 0;
      if (k == idx.size()) break;
    }
  }

  std::vector<Candidate> out;
  for (auto& [k, c] : pool) out.push_back(std::move(c));
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.str() < b.str();
  });
  return out;
}

}  // namespace sepinv
