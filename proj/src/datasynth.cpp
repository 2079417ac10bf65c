#include "sepinv/datasynth.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <json.hpp>
#include <ostream>
#include <thread>

#include "sepinv/program.hpp"
#include "sepinv/pure_solver.hpp"

namespace sepinv {

namespace {

// Arity-1 predicates over the same fields as `def`.
std::vector<std::string> family(const PredicateRegistry& preds, const PredicateDef& def) {
  std::vector<std::string> out;
  auto fields = def.fields();
  if (fields.empty()) return out;
  for (const auto& d : preds.defs())
    if (d.arity() == 1 && d.fields() == fields) out.push_back(d.name);
  return out;
}

std::string cell_template(const std::string& root, const std::string& field) {
  return field.empty() ? "*" + root + "=={}" : root + "->" + field + "=={}";
}

bool consistent(const SymbolicHeap& h) { return PureSolver(h).consistent(); }

std::vector<std::pair<SymbolicHeap, int>> expand(const PredicateRegistry& preds, const SpatialAtom& c, int depth,
                                                 std::size_t cap) {
  struct Node {
    SymbolicHeap heap;
    int rec;
  };
  SymbolicHeap root;
  root.spatial.push_back(c);
  std::deque<Node> queue{{root, 0}};
  std::vector<std::pair<SymbolicHeap, int>> leaves;
  std::size_t processed = 0;
  while (!queue.empty() && leaves.size() < cap && processed++ < 20000) {
    Node n = std::move(queue.front());
    queue.pop_front();
    auto it = std::find_if(n.heap.spatial.begin(), n.heap.spatial.end(),
                           [](const SpatialAtom& s) { return s.is_pred(); });
    if (it == n.heap.spatial.end()) {
      SymbolicHeap s = simplify_temps(n.heap);
      bool seen = std::any_of(leaves.begin(), leaves.end(), [&](const auto& l) { return l.first == s; });
      if (!seen) leaves.emplace_back(std::move(s), n.rec);
      continue;
    }
    auto idx = static_cast<std::size_t>(it - n.heap.spatial.begin());
    const PredicateDef& def = preds.at(it->pred);
    for (std::size_t b = 0; b < def.branches.size(); ++b) {
      int rec = n.rec + (def.is_recursive_branch(b) ? 1 : 0);
      if (rec > depth) continue;
      SymbolicHeap u = unfold(n.heap, idx, b, preds);
      if (consistent(u)) queue.push_back({std::move(u), rec});
    }
  }
  std::stable_sort(leaves.begin(), leaves.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  return leaves;
}

SymbolicHeap star(const SymbolicHeap& a, const SymbolicHeap& b) {
  FreshNames fresh(a);
  fresh.reserve(b);
  Substitution rename;
  SymbolicHeap out = a;
  for (const auto& v : b.binders) {
    std::string n = fresh.next();
    rename.emplace(v, Term::logic(n));
    out.binders.push_back(n);
  }
  for (const auto& p : b.pure) out.pure.push_back(substitute(p, rename));
  for (const auto& s : b.spatial) out.spatial.push_back(substitute(s, rename));
  return out;
}

Assertion star(const Assertion& a, const Assertion& b) {
  Assertion out;
  for (const auto& x : a.disjuncts)
    for (const auto& y : b.disjuncts) out.disjuncts.push_back(canonicalize(star(x, y)));
  return out;
}

void collect_names(const Shape& s, std::set<std::string>& out) {
  if (s.kind == Shape::Kind::Leaf) {
    for (const auto& a : s.leaf.args)
      if (a.is_var()) out.insert(a.name());
  }
  for (const auto& p : s.parts) collect_names(p, out);
}

const std::vector<std::string>& name_pool() {
  static const std::vector<std::string> pool = [] {
    std::vector<std::string> v;
    for (char c = 'a'; c <= 'z'; ++c) v.emplace_back(1, c);
    return v;
  }();
  return pool;
}

std::string pick_fresh(Rng& rng, const std::set<std::string>& taken) {
  std::vector<std::string> free;
  for (const auto& n : name_pool())
    if (!taken.count(n)) free.push_back(n);
  if (free.empty()) {
    for (int i = 0;; ++i) {
      std::string n = "n" + std::to_string(i);
      if (!taken.count(n)) return n;
    }
  }
  return free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
}

}  // namespace

NoiseSpec derive_noise_taboo(const PredicateRegistry& preds, const PredicateDef& def) {
  NoiseSpec spec;
  auto fam = family(preds, def);
  auto fields = def.fields();
  auto roots = def.root_params();

  spec.noise = {"{}=={}", "{}!={}"};
  for (const auto& q : fam) spec.noise.push_back(q + "({})");
  for (const auto& f : fields) spec.noise.push_back(cell_template("{}", f));
  if (def.arity() == 2) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (std::find(roots.begin(), roots.end(), p) != roots.end()) continue;
      for (const auto& q : fam) spec.noise.push_back(q + "(" + def.params[p] + ")");
      for (const auto& f : fields) spec.noise.push_back(cell_template(def.params[p], f));
    }
  }
  for (auto p : roots) {
    for (const auto& f : fields) spec.taboo.push_back(cell_template(def.params[p], f));
    for (const auto& q : fam) spec.taboo.push_back(q + "(" + def.params[p] + ")");
  }
  return spec;
}

SymbolicHeap simplify_temps(const SymbolicHeap& h) { return canonicalize(h); }

std::vector<SymbolicHeap> gen0(const PredicateRegistry& preds, const SpatialAtom& c, int depth, std::size_t cap) {
  std::vector<SymbolicHeap> out;
  for (auto& [h, rec] : expand(preds, c, depth, cap)) out.push_back(std::move(h));
  return out;
}

bool is_taboo(const PredicateRegistry& preds, const SpatialAtom& app, const std::string& atom) {
  const PredicateDef& def = preds.at(app.pred);
  Assertion a;
  try {
    a = parse_assertion(atom, &preds);
  } catch (const ParseError&) {
    return false;
  }
  auto fam = family(preds, def);
  auto fields = def.fields();
  for (auto p : def.root_params()) {
    const Term& owned = app.args[p];
    for (const auto& d : a.disjuncts) {
      for (const auto& s : d.spatial) {
        if (s.is_points_to()) {
          const Term& root = s.addr.is_field_addr() ? s.addr.base() : s.addr;
          std::string f = s.addr.is_field_addr() ? s.addr.name() : "";
          if (root == owned && fields.count(f)) return true;
        } else if (s.is_pred() && s.args.size() == 1 && s.args[0] == owned &&
                   std::find(fam.begin(), fam.end(), s.pred) != fam.end()) {
          return true;
        }
      }
    }
  }
  return false;
}

Assertion Shape::formula() const {
  switch (kind) {
    case Kind::Leaf: {
      SymbolicHeap h;
      h.spatial.push_back(leaf);
      return Assertion(h);
    }
    case Kind::Star: return star(parts[0].formula(), parts[1].formula());
    case Kind::Or: return disjoin(parts[0].formula(), parts[1].formula());
  }
  return {};
}

std::string Shape::str() const { return formula().str(); }

void Shape::leaves(std::vector<SpatialAtom>& out) const {
  if (kind == Kind::Leaf) out.push_back(leaf);
  for (const auto& p : parts) p.leaves(out);
}

std::string TrainingSample::json() const {
  nlohmann::ordered_json j;
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& a : inputs) j["inputs"].push_back(a.str());
  j["label"] = label;
  j["preds"] = preds;
  j["seed"] = seed;
  return j.dump();
}

std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

DataSynth::DataSynth(const PredicateRegistry& preds, SynthConfig cfg) : preds_(preds), cfg_(std::move(cfg)) {
  names_ = cfg_.preds.empty() ? preds_.names() : cfg_.preds;
  if (names_.empty()) throw std::invalid_argument("no predicates to sample from");
  for (const auto& name : names_) {
    const PredicateDef& def = preds_.at(name);
    std::vector<Term> params;
    for (const auto& p : def.params) params.push_back(Term::var(p));
    expansions_[name] = expand(preds_, SpatialAtom::app(name, params), cfg_.depth_max, 64);
  }
  for (const auto& def : preds_.defs()) specs_[def.name] = derive_noise_taboo(preds_, def);
}

SymbolicHeap DataSynth::augment(const SymbolicHeap& h0, const SpatialAtom& c, Rng& rng,
                                const std::set<std::string>& reserved, std::vector<std::string>& noise) const {
  const NoiseSpec& spec = specs_.at(c.pred);
  const PredicateDef& def = preds_.at(c.pred);
  // templates mention the parameters; rename them to the arguments
  std::map<std::string, std::string> rename;
  for (std::size_t i = 0; i < def.arity(); ++i)
    if (c.args[i].is_var()) rename[def.params[i]] = c.args[i].name();

  SymbolicHeap h = h0;
  std::set<std::string> taken = h.program_vars();
  std::vector<std::string> scope(taken.begin(), taken.end());
  taken.insert(reserved.begin(), reserved.end());
  scope.insert(scope.end(), h.binders.begin(), h.binders.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int slot = 0; slot < cfg_.max_noise; ++slot) {
    if (unit(rng) >= cfg_.p_noise) continue;
    std::string tpl = spec.noise[std::uniform_int_distribution<std::size_t>(0, spec.noise.size() - 1)(rng)];
    std::string text;
    std::string fresh;
    for (std::size_t i = 0; i < tpl.size(); ++i) {
      if (tpl.compare(i, 2, "{}") == 0) {
        double r = unit(rng);
        if (r < 0.5 && !scope.empty()) {
          text += scope[std::uniform_int_distribution<std::size_t>(0, scope.size() - 1)(rng)];
        } else if (r < 0.8) {
          if (fresh.empty()) fresh = pick_fresh(rng, taken);
          text += fresh;
        } else {
          text += "0";
        }
        ++i;
      } else if (std::isalpha(static_cast<unsigned char>(tpl[i]))) {
        std::size_t j = i;
        while (j < tpl.size() && (std::isalnum(static_cast<unsigned char>(tpl[j])) || tpl[j] == '_')) ++j;
        std::string word = tpl.substr(i, j - i);
        bool is_call = j < tpl.size() && tpl[j] == '(';
        bool is_field = i >= 2 && tpl.compare(i - 2, 2, "->") == 0;
        auto it = rename.find(word);
        text += !is_call && !is_field && it != rename.end() ? it->second : word;
        i = j - 1;
      } else {
        text += tpl[i];
      }
    }
    if (is_taboo(preds_, c, text)) continue;
    SymbolicHeap atom;
    try {
      atom = parse_assertion(text, &preds_).disjuncts.at(0);
    } catch (const std::exception&) {
      continue;
    }
    Substitution to_logic;
    for (const auto& b : h.binders) to_logic.emplace(b, Term::logic(b));
    SymbolicHeap next = h;
    for (const auto& p : atom.pure) next.pure.push_back(substitute(p, to_logic));
    for (const auto& s : atom.spatial)
      if (s.kind != SpatialAtom::Kind::Emp) next.spatial.push_back(substitute(s, to_logic));
    if (!consistent(next)) continue;
    // no aliasing into memory the label owns
    PureSolver ps(next);
    bool owned = false;
    for (const auto& s : atom.spatial) {
      if (!s.is_points_to() && !s.is_pred()) continue;
      Term root = s.is_points_to() ? substitute(s.addr.is_field_addr() ? s.addr.base() : s.addr, to_logic)
                                   : substitute(s.args.at(0), to_logic);
      for (auto p : def.root_params())
        if (ps.equal(root, c.args[p])) owned = true;
    }
    if (owned) continue;
    h = std::move(next);
    noise.push_back(text);
    if (!fresh.empty()) {
      taken.insert(fresh);
      scope.push_back(fresh);
    }
  }
  return h;
}

std::vector<Augmented> DataSynth::gen1(const SpatialAtom& c, int depth, Rng& rng) const {
  std::vector<Augmented> out;
  std::set<std::string> reserved;
  for (const auto& t : c.args)
    if (t.is_var()) reserved.insert(t.name());
  for (auto& h : gen0(preds_, c, depth)) {
    Augmented a;
    a.heap = canonicalize(augment(h, c, rng, reserved, a.noise));
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<std::pair<Assertion, std::vector<std::string>>> DataSynth::gen2(const Shape& shape, int k,
                                                                            Rng& rng) const {
  std::set<std::string> reserved;
  collect_names(shape, reserved);
  return gen2(shape, k, rng, reserved);
}

std::vector<std::pair<Assertion, std::vector<std::string>>> DataSynth::gen2(
    const Shape& shape, int k, Rng& rng, const std::set<std::string>& reserved) const {
  using Item = std::pair<Assertion, std::vector<std::string>>;
  std::vector<Item> out;
  if (shape.kind == Shape::Kind::Leaf) {
    const SpatialAtom& c = shape.leaf;
    const PredicateDef& def = preds_.at(c.pred);
    int depth = std::uniform_int_distribution<int>(cfg_.depth_min, cfg_.depth_max)(rng);
    Substitution args;
    for (std::size_t i = 0; i < def.arity(); ++i) args.emplace(def.params[i], c.args[i]);
    std::vector<SymbolicHeap> pool;
    for (const auto& [h, rec] : expansions_.at(c.pred))
      if (rec <= depth) pool.push_back(substitute(h, args));
    std::vector<std::size_t> picks;
    if (static_cast<std::size_t>(k) <= pool.size()) {
      std::vector<std::size_t> idx(pool.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::shuffle(idx.begin(), idx.end(), rng);
      picks.assign(idx.begin(), idx.begin() + k);
    } else {
      for (int i = 0; i < k; ++i)
        picks.push_back(std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng));
    }
    std::sort(picks.begin(), picks.end());
    for (auto i : picks) {
      std::vector<std::string> noise;
      SymbolicHeap h = canonicalize(augment(pool[i], c, rng, reserved, noise));
      out.emplace_back(Assertion(h), std::move(noise));
    }
    return out;
  }
  auto a = gen2(shape.parts[0], k, rng, reserved);
  auto b = gen2(shape.parts[1], k, rng, reserved);
  for (int i = 0; i < k; ++i) {
    Item item;
    item.first = shape.kind == Shape::Kind::Star ? star(a[i].first, b[i].first) : disjoin(a[i].first, b[i].first);
    item.second = a[i].second;
    item.second.insert(item.second.end(), b[i].second.begin(), b[i].second.end());
    out.push_back(std::move(item));
  }
  return out;
}

Shape DataSynth::random_shape(Rng& rng) const {
  std::set<std::string> used;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::function<Shape(int)> build = [&](int depth) {
    Shape s;
    double r = depth < cfg_.mix_depth ? unit(rng) : 1.0;
    if (r < cfg_.p_star + cfg_.p_or) {
      s.kind = r < cfg_.p_star ? Shape::Kind::Star : Shape::Kind::Or;
      s.parts.push_back(build(depth + 1));
      s.parts.push_back(build(depth + 1));
      return s;
    }
    const std::string& name = names_[std::uniform_int_distribution<std::size_t>(0, names_.size() - 1)(rng)];
    std::vector<Term> args;
    for (std::size_t i = 0; i < preds_.at(name).arity(); ++i) {
      std::string v = pick_fresh(rng, used);
      used.insert(v);
      args.push_back(Term::var(v));
    }
    s.leaf = SpatialAtom::app(name, std::move(args));
    return s;
  };
  return build(0);
}

TrainingSample DataSynth::sample(std::uint64_t seed) const {
  Rng rng(seed);
  TrainingSample out;
  out.seed = seed;
  Shape shape = random_shape(rng);
  int k = std::uniform_int_distribution<int>(cfg_.k_min, cfg_.k_max)(rng);
  for (auto& [a, noise] : gen2(shape, k, rng)) {
    out.inputs.push_back(std::move(a));
    out.noise.insert(out.noise.end(), noise.begin(), noise.end());
  }
  out.label = canonicalize(shape.formula()).str();
  std::vector<SpatialAtom> leaves;
  shape.leaves(leaves);
  for (const auto& l : leaves)
    if (std::find(out.preds.begin(), out.preds.end(), l.pred) == out.preds.end()) out.preds.push_back(l.pred);
  return out;
}

void DataSynth::emit(std::ostream& out, std::size_t count, std::uint64_t seed, unsigned threads) const {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t block = 4096;
  std::vector<std::string> lines;
  for (std::size_t start = 0; start < count; start += block) {
    std::size_t n = std::min(block, count - start);
    lines.assign(n, {});
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += threads) lines[i] = sample(sample_seed(seed, start + i)).json();
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& l : lines) out << l << '\n';
  }
}

}  // namespace sepinv
