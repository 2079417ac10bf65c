#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sepinv/program.hpp"

#ifndef SEPINV_CORPUS_DIR
#define SEPINV_CORPUS_DIR "corpus"
#endif

namespace sepinv::test {

inline std::string corpus(const std::string& name) { return std::string(SEPINV_CORPUS_DIR) + "/" + name; }

inline std::vector<std::string> corpus_files() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(SEPINV_CORPUS_DIR))
    if (e.path().extension() == ".invc") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

inline Program load(const std::string& name) { return parse_program_file(corpus(name)); }

inline const char* const kListDefs =
    "predicate listrep(x) = x == 0 && emp || exists y, x->tail == y * listrep(y);\n"
    "predicate lseg(x, y) = x == y && emp || exists z, x->tail == z * lseg(z, y);\n";

// Reverse loop states after zero to five iterations.
inline const std::vector<std::string> kReverseStates = {
    "w == 0 && v == p && listrep(p)",
    "v == t && w == p && w->tail == 0 && listrep(v)",
    "v == t && w->tail == p && p->tail == 0 && listrep(v)",
    "exists __1, v == t && p->tail == 0 && w->tail == __1 && __1->tail == p && listrep(v)",
    "exists __1 __2, w->tail == __1 && __1->tail == __2 && __2->tail == p && v == t && p->tail == 0 && listrep(v)",
    "exists __1 __2 __3, w->tail == __1 && __1->tail == __2 && __2->tail == __3 && __3->tail == p && v == t && "
    "p->tail == 0 && listrep(v)",
};

inline const char* const kReverseRewritten = "v == t && p->tail == 0 && lseg(w,p) * listrep(v)";

// Random symbolic heaps over a tiny list vocabulary.
class HeapGen {
 public:
  explicit HeapGen(std::uint64_t seed, std::vector<std::string> vars = {"x", "y", "z"})
      : rng_(seed), vars_(std::move(vars)) {}

  std::string term() {
    std::uniform_int_distribution<std::size_t> d(0, vars_.size());
    std::size_t i = d(rng_);
    return i == vars_.size() ? "0" : vars_[i];
  }

  std::string var() { return vars_[std::uniform_int_distribution<std::size_t>(0, vars_.size() - 1)(rng_)]; }

  // A conjunct with up to two pure and two spatial atoms.
  std::string conjunct() {
    std::vector<std::string> pure, spatial;
    int np = pick(0, 2), ns = pick(0, 2);
    for (int i = 0; i < np; ++i) pure.push_back(term() + (pick(0, 1) ? " == " : " != ") + term());
    for (int i = 0; i < ns; ++i) {
      switch (pick(0, 2)) {
        case 0: spatial.push_back(var() + "->tail == " + term()); break;
        case 1: spatial.push_back("listrep(" + term() + ")"); break;
        default: spatial.push_back("lseg(" + term() + "," + term() + ")"); break;
      }
    }
    std::string out;
    for (const auto& p : pure) out += (out.empty() ? "" : " && ") + p;
    std::string sp;
    for (const auto& s : spatial) sp += (sp.empty() ? "" : " * ") + s;
    if (sp.empty()) sp = "emp";
    return out.empty() ? sp : out + " && " + sp;
  }

  std::string assertion() {
    std::string a = conjunct();
    if (pick(0, 3) == 0) a += " || " + conjunct();
    return a;
  }

  // A target that `src` often entails.
  std::string weakening(const std::string& src) {
    switch (pick(0, 2)) {
      case 0: return src;
      case 1: return src + " || " + conjunct();
      default: return conjunct() + " * True";
    }
  }

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::vector<std::string> vars_;
};

}  // namespace sepinv::test
