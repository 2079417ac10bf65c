#include <doctest.h>

#include <json.hpp>
#include <regex>
#include <sstream>

#include "sepinv/datasynth.hpp"
#include "sepinv/entailment.hpp"
#include "support.hpp"

using namespace sepinv;
using namespace sepinv::test;

namespace {

const Program& lists() {
  static const Program prog = parse_program(kListDefs);
  return prog;
}

SpatialAtom app(const std::string& p, std::vector<std::string> args) {
  std::vector<Term> ts;
  for (auto& a : args) ts.push_back(Term::var(a));
  return SpatialAtom::app(p, ts);
}

SymbolicHeap H(const std::string& s) { return parse_assertion(s, &lists().preds).disjuncts.at(0); }

std::vector<std::string> canon(const std::vector<SymbolicHeap>& hs) {
  std::vector<std::string> out;
  for (const auto& h : hs) out.push_back(canonicalize(h).str());
  return out;
}

// The segment unfolded n times, written out the long way.
std::string chain(int n) {
  if (n == 0) return "x == y && emp";
  if (n == 1) return "x->tail == y && emp";
  std::string binders, atoms = "x->tail == z0";
  for (int i = 0; i + 1 < n; ++i) {
    binders += (i ? " z" : "z") + std::to_string(i);
    atoms += " && z" + std::to_string(i) + "->tail == " + (i + 2 < n ? "z" + std::to_string(i + 1) : "y");
  }
  return "exists " + binders + ", " + atoms + " && emp";
}

// Independent taboo matcher: instantiate the templates by hand and treat
// `{}` as "any term".
bool matches_taboo(const std::string& atom, const std::string& pred, const std::vector<std::string>& args) {
  std::vector<std::string> templates;
  if (pred == "lseg" || pred == "listrep") {
    templates.push_back(args[0] + "->tail=={}");
    templates.push_back("listrep(" + args[0] + ")");
  }
  for (const auto& t : templates) {
    std::string re;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.compare(i, 2, "{}") == 0) {
        re += "[A-Za-z0-9_]+";
        ++i;
      } else if (std::string("()[]*+?.\\^$|{}-").find(t[i]) != std::string::npos) {
        re += std::string("\\") + t[i];
      } else {
        re += t[i];
      }
    }
    if (std::regex_match(atom, std::regex(re))) return true;
  }
  return false;
}

// Label leaves `p(a,b)` parsed back out of the label string.
std::vector<std::pair<std::string, std::vector<std::string>>> leaves(const std::string& label) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  std::regex leaf(R"(([a-z_]+)\(([^)]*)\))");
  for (std::sregex_iterator it(label.begin(), label.end(), leaf), end; it != end; ++it) {
    std::vector<std::string> args;
    std::stringstream ss((*it)[2].str());
    for (std::string a; std::getline(ss, a, ',');) args.push_back(a);
    out.push_back({(*it)[1].str(), args});
  }
  return out;
}

Assertion with_frame(const Assertion& a) {
  Assertion out = a;
  for (auto& d : out.disjuncts) d.spatial.push_back(SpatialAtom::top());
  return out;
}

}  // namespace

TEST_CASE("gen0: lseg up to three unfoldings") {
  auto got = gen0(lists().preds, app("lseg", {"x", "y"}), 3);
  std::vector<SymbolicHeap> want;
  for (int n = 0; n <= 3; ++n) want.push_back(H(chain(n)));
  CHECK(canon(got) == canon(want));
}

TEST_CASE("gen0: depth zero keeps only the recursion-free branches") {
  CHECK(canon(gen0(lists().preds, app("listrep", {"x"}), 0)) == canon({H("x == 0 && emp")}));
  Program tree = load("tree_leftmost.invc");
  auto base = gen0(tree.preds, app("ptree_rep", {"a", "b"}), 0);
  CHECK(canon(base) == canon({parse_assertion("a == b && emp").disjuncts[0]}));
}

TEST_CASE("simplify_temps: listed cases") {
  CHECK(canonicalize(simplify_temps(H("exists __2, x->tail == __2 && __2 == y && emp"))) ==
        canonicalize(H("x->tail == y && emp")));
  SymbolicHeap plain = H("x->tail == y && listrep(y)");
  CHECK(canonicalize(simplify_temps(plain)) == canonicalize(plain));
  SymbolicHeap shared = H("exists a, x->tail == a && a->tail == y && emp");
  CHECK(canonicalize(simplify_temps(shared)) == canonicalize(shared));
}

TEST_CASE("derive_noise_taboo: the segment lists") {
  NoiseSpec s = derive_noise_taboo(lists().preds, lists().preds.at("lseg"));
  CHECK(s.noise == std::vector<std::string>{"{}=={}", "{}!={}", "listrep({})", "{}->tail=={}", "listrep(y)", "y->tail=={}"});
  CHECK(s.taboo == std::vector<std::string>{"x->tail=={}", "listrep(x)"});
  for (const auto& t : s.taboo)
    CHECK(std::find(s.noise.begin(), s.noise.end(), t) == s.noise.end());
}

TEST_CASE("gen1: no noise gives gen0 back") {
  SynthConfig cfg;
  cfg.p_noise = 0;
  DataSynth ds(lists().preds, cfg);
  Rng rng(3);
  auto g1 = ds.gen1(app("lseg", {"x", "y"}), 4, rng);
  auto g0 = gen0(lists().preds, app("lseg", {"x", "y"}), 4);
  std::vector<SymbolicHeap> heaps;
  for (const auto& a : g1) {
    heaps.push_back(a.heap);
    CHECK(a.noise.empty());
  }
  CHECK(canon(heaps) == canon(g0));
}

TEST_CASE("gen1: noise joins the heap and avoids taboo atoms") {
  DataSynth ds(lists().preds);
  Rng rng(11);
  std::size_t noisy = 0;
  for (int round = 0; round < 50; ++round) {
    for (const auto& a : ds.gen1(app("lseg", {"x", "y"}), 3, rng)) {
      noisy += !a.noise.empty();
      for (const auto& n : a.noise) {
        CAPTURE(n);
        CHECK_FALSE(matches_taboo(n, "lseg", {"x", "y"}));
      }
    }
  }
  CHECK(noisy > 20);
}

TEST_CASE("gen2: leaf, star and or shapes") {
  SynthConfig cfg;
  cfg.p_noise = 0;
  DataSynth ds(lists().preds, cfg);
  Shape a{Shape::Kind::Leaf, app("lseg", {"a", "b"}), {}};
  Shape b{Shape::Kind::Leaf, app("listrep", {"c"}), {}};
  Rng rng(5);

  auto leaf = ds.gen2(a, 4, rng);
  REQUIRE(leaf.size() == 4);
  auto g0 = canon(gen0(lists().preds, app("lseg", {"a", "b"}), cfg.depth_max));
  for (const auto& [input, noise] : leaf) {
    REQUIRE(input.disjuncts.size() == 1);
    CHECK(std::find(g0.begin(), g0.end(), canonicalize(input.disjuncts[0]).str()) != g0.end());
  }

  Shape star{Shape::Kind::Star, {}, {a, b}};
  Prover prover(lists().preds);
  for (const auto& [input, noise] : ds.gen2(star, 4, rng)) {
    REQUIRE(input.disjuncts.size() == 1);
    CHECK(prover.entails(input, parse_assertion("lseg(a,b) * listrep(c)", &lists().preds)));
  }

  Shape either{Shape::Kind::Or, {}, {a, b}};
  for (const auto& [input, noise] : ds.gen2(either, 4, rng)) CHECK(input.disjuncts.size() == 2);
}

TEST_CASE("emit: zero samples is an empty stream") {
  DataSynth ds(lists().preds);
  std::ostringstream out;
  ds.emit(out, 0, 1);
  CHECK(out.str().empty());
}

TEST_CASE("emit: field layout of a line") {
  DataSynth ds(lists().preds);
  std::ostringstream out;
  ds.emit(out, 3, 9);
  std::istringstream in(out.str());
  int lines = 0;
  for (std::string line; std::getline(in, line); ++lines) {
    auto j = nlohmann::ordered_json::parse(line);
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"inputs", "label", "preds", "seed"});
    CHECK(j["inputs"].is_array());
    CHECK(j["label"].is_string());
    CHECK(j["seed"].is_number_unsigned());
    for (const auto& s : j["inputs"]) CHECK_NOTHROW(parse_assertion(s.get<std::string>(), &lists().preds));
  }
  CHECK(lines == 3);
}

TEST_CASE("property: gen0 of a two-branch predicate has depth+1 members") {
  for (int d = 0; d <= 5; ++d) {
    CAPTURE(d);
    CHECK(gen0(lists().preds, app("lseg", {"x", "y"}), d).size() == static_cast<std::size_t>(d + 1));
    CHECK(gen0(lists().preds, app("listrep", {"x"}), d).size() == static_cast<std::size_t>(d + 1));
  }
}

TEST_CASE("property: identical seeds give identical bytes, whatever the thread count") {
  DataSynth ds(lists().preds);
  std::ostringstream a, b, c;
  ds.emit(a, 200, 42, 1);
  ds.emit(b, 200, 42, 4);
  ds.emit(c, 200, 43, 1);
  CHECK(a.str() == b.str());
  CHECK(a.str() != c.str());
}

TEST_CASE("property: every input entails its label with a frame") {
  DataSynth ds(lists().preds);
  Prover prover(lists().preds);
  std::size_t inputs = 0, failures = 0;
  std::string first;
  for (std::uint64_t i = 0; i < 200; ++i) {
    TrainingSample s = ds.sample(sample_seed(7, i));
    Assertion target = with_frame(parse_assertion(s.label, &lists().preds));
    for (const auto& in : s.inputs) {
      ++inputs;
      if (!prover.entails(in, target)) {
        if (failures++ == 0) first = in.str() + " |- " + s.label;
      }
    }
  }
  CAPTURE(first);
  CHECK(failures == 0);
  CHECK(inputs >= 600);
}

TEST_CASE("property: 1000 samples carry no taboo atom") {
  DataSynth ds(lists().preds);
  std::size_t scanned = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    TrainingSample s = ds.sample(sample_seed(1, i));
    auto ls = leaves(s.label);
    for (const auto& n : s.noise) {
      ++scanned;
      for (const auto& [p, args] : ls) {
        CAPTURE(n);
        CAPTURE(s.label);
        CHECK_FALSE(matches_taboo(n, p, args));
      }
    }
  }
  CHECK(scanned > 1000);
}
