// Acceptance checks A1 to A10. One line per criterion; exit status 1 if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "kit.hpp"
#include "sepinv/datasynth.hpp"
#include "sepinv/report.hpp"
#include "support.hpp"

using namespace sepinv;
using namespace sepinv::test;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string secs(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fs", s);
  return buf;
}

SymbolicHeap heap(const std::string& s, const PredicateRegistry& preds) {
  return parse_assertion(s, &preds).disjuncts.at(0);
}

Outcome a1() {
  auto start = Clock::now();
  std::ostringstream out;
  if (cli::run_exec({corpus("reverse.invc"), std::nullopt, 5}, Config{}, out) != cli::kExitOk)
    return {false, "exec failed: " + out.str()};
  double t = since(start);
  Program prog = load("reverse.invc");
  std::istringstream in(out.str());
  std::size_t i = 0;
  for (std::string line; std::getline(in, line);) {
    auto colon = line.find(": ");
    if (line.rfind("S", 0) != 0 || colon == std::string::npos) continue;
    if (i >= kReverseStates.size()) return {false, "more states than expected"};
    Assertion got = parse_assertion(line.substr(colon + 2), &prog.preds);
    Assertion want = parse_assertion(kReverseStates[i], &prog.preds);
    if (!(canonicalize(got) == canonicalize(want))) return {false, "S" + std::to_string(i) + " differs: " + line};
    ++i;
  }
  if (i != kReverseStates.size()) return {false, std::to_string(i) + " states printed"};
  return {t < 5, "S0..S5 match canonically in " + secs(t)};
}

Outcome a2() {
  auto start = Clock::now();
  std::ostringstream out;
  int rc = cli::run_verify({corpus("reverse.invc"), std::nullopt, true, false}, Config{}, out);
  double t = since(start);
  Program prog = load("reverse.invc");
  auto recs = records_from_report(nlohmann::json::parse(out.str()), prog.preds);
  if (rc != cli::kExitOk || recs.size() != 1 || recs[0].report.loops.size() != 1)
    return {false, "verify did not succeed"};
  const InvariantReport& l = recs[0].report.loops[0];
  Assertion want = parse_assertion("p->tail==0 && lseg(w,p)*listrep(v) || w==0 && v==p && listrep(p)", &prog.preds);
  Prover prover(prog.preds);
  bool mutual = prover.entails(l.invariant, want) && prover.entails(want, l.invariant);
  bool pass = mutual && l.pre_entails_inv && l.inductive && t < 30;
  return {pass, "inv " + l.invariant.str() + (mutual ? " (mutual)" : " (NOT mutual)") + ", pre|-inv " +
                    (l.pre_entails_inv ? "yes" : "no") + ", inductive " + (l.inductive ? "yes" : "no") + " in " +
                    secs(t)};
}

Outcome a3() {
  Program prog = load("reverse.invc");
  Prover prover(prog.preds);
  SymExec exec(prog.preds);
  SymbolicHeap seg = canonicalize(heap("lseg(w,p)", prog.preds));
  FixedBackend backend({{seg, 1.0}});
  InvGen gen(prover, exec, backend);
  std::vector<SymbolicHeap> I;
  for (std::size_t i = 0; i < 4; ++i) I.push_back(heap(kReverseStates[i], prog.preds));
  std::vector<TraceEntry> trace;
  auto inv = gen.infer_invs(I, trace, {});
  if (!inv || trace.empty()) return {false, "no trace"};
  if (trace[0].succ != 3 || trace[0].fail != 1)
    return {false, "first split " + std::to_string(trace[0].succ) + "/" + std::to_string(trace[0].fail)};
  // The split itself, recomputed member by member.
  SymbolicHeap primed = canonicalize(heap(kReverseRewritten, prog.preds));
  std::vector<std::size_t> succ, fail;
  for (std::size_t i = 0; i < I.size(); ++i) {
    auto r = prover.frame_check(I[i], seg);
    if (!r) {
      fail.push_back(i);
      continue;
    }
    if (!(canonicalize(r->rewritten) == primed)) return {false, "S" + std::to_string(i) + "' = " + r->rewritten.str()};
    succ.push_back(i);
  }
  bool pass = succ == std::vector<std::size_t>{1, 2, 3} && fail == std::vector<std::size_t>{0};
  return {pass, "succ=[S1',S2',S3'] each " + primed.str() + ", fail=[S0]"};
}

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

Outcome a4() {
  Program prog = parse_program(kListDefs);
  SpatialAtom lseg = SpatialAtom::app("lseg", {Term::var("x"), Term::var("y")});
  for (int d = 0; d <= 4; ++d) {
    auto got = gen0(prog.preds, lseg, d);
    if (got.size() != static_cast<std::size_t>(d + 1)) return {false, "d=" + std::to_string(d) + " size mismatch"};
    for (int n = 0; n <= d; ++n) {
      if (!(canonicalize(got[n]) == canonicalize(heap(chain(n), prog.preds))))
        return {false, "d=" + std::to_string(d) + " U" + std::to_string(n) + " = " + got[n].str()};
    }
  }
  return {true, "U0..U4 exact, |gen0(d)| = d+1"};
}

Outcome a5() {
  Program prog = parse_program(kListDefs);
  NoiseSpec s = derive_noise_taboo(prog.preds, prog.preds.at("lseg"));
  std::vector<std::string> noise{"{}=={}", "{}!={}", "listrep({})", "{}->tail=={}", "listrep(y)", "y->tail=={}"};
  std::vector<std::string> taboo{"x->tail=={}", "listrep(x)"};
  if (s.noise != noise || s.taboo != taboo) return {false, "noise/taboo lists differ"};
  // Exhaustive scan: instantiate every taboo template on the label leaves.
  DataSynth ds(prog.preds);
  std::size_t atoms = 0, hits = 0;
  std::string first;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    TrainingSample t = ds.sample(sample_seed(1, i));
    std::string label = t.label;
    std::vector<std::string> firsts;
    for (std::size_t at = 0; (at = label.find('(', at)) != std::string::npos; ++at) {
      auto end = label.find_first_of(",)", at);
      firsts.push_back(label.substr(at + 1, end - at - 1));
    }
    for (const auto& n : t.noise) {
      ++atoms;
      for (const auto& x : firsts) {
        bool bad = n == "listrep(" + x + ")" || n.rfind(x + "->tail==", 0) == 0;
        if (bad && hits++ == 0) first = n + " in " + label;
      }
    }
  }
  return {hits == 0, "lists exact; " + std::to_string(atoms) + " noise atoms in 1000 samples, " +
                         std::to_string(hits) + " taboo" + (first.empty() ? "" : " (" + first + ")")};
}

Outcome a6() {
  auto start = Clock::now();
  EntailStats st = entailment_soundness(2024, 500, 3);
  std::size_t refl = 0, total = 0;
  for (const auto& file : corpus_files()) {
    Program prog = parse_program_file(file);
    Prover p(prog.preds, ProverOptions{.validate_lemmas = false});
    for (const auto& f : prog.funcs) {
      std::vector<const Assertion*> as{&f.requires_, &f.ensures};
      if (f.invariant) as.push_back(&*f.invariant);
      for (const Assertion* a : as) {
        ++total;
        refl += p.entails(*a, *a);
      }
    }
  }
  double t = since(start);
  bool pass = st.violations == 0 && refl == total && t < 300;
  return {pass, std::to_string(st.pairs) + " pairs, " + std::to_string(st.proved) + " proved, " +
                    std::to_string(st.violations) + " violations" +
                    (st.first_violation.empty() ? "" : " (" + st.first_violation + ")") + "; reflexive on " +
                    std::to_string(refl) + "/" + std::to_string(total) + " in " + secs(t)};
}

Outcome a7() {
  auto start = Clock::now();
  SoundnessStats st;
  for (const auto& file : corpus_files()) {
    Program prog = parse_program_file(file);
    SymExec exec(prog.preds);
    for (const auto& f : prog.funcs)
      for (const auto& frag : fragments(prog, f, exec)) exec_soundness(prog.preds, exec, frag, 3, st);
  }
  bool null_deref = false;
  {
    Program prog = parse_program(std::string(kListDefs) + "func f(v, p, t) requires: emp ensures: emp { t = p->tail; }");
    SymExec exec(prog.preds);
    try {
      exec.exec(parse_assertion("v == p && p == 0 && emp", &prog.preds), flatten(prog.funcs[0].body));
    } catch (const ExecError& e) {
      null_deref = e.kind() == ExecError::Kind::NullDeref;
    }
  }
  double t = since(start);
  bool pass = st.violations == 0 && null_deref && t < 300;
  return {pass, std::to_string(st.fragments) + " fragments (" + std::to_string(st.skipped) + " rejected), " +
                    std::to_string(st.models) + " models, " + std::to_string(st.violations) + " violations" +
                    (st.first_violation.empty() ? "" : " (" + st.first_violation + ")") + "; null fixture " +
                    (null_deref ? "NullDeref" : "wrong") + " in " + secs(t)};
}

Outcome a8() {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CoverInstance c = random_cover(1000 + seed, 1 + seed % 8);
    auto pick = c.solve();
    if (!is_cover(c, pick) || pick.size() != brute_force_cover(c))
      return {false, "instance " + std::to_string(seed) + " not minimal"};
  }
  Program prog = load("reverse.invc");
  Prover prover(prog.preds);
  SymExec exec(prog.preds);
  HeuristicBackend h(prover);
  FunctionReport r = verify_function(prog, prog.funcs[0], prover, exec, h);
  if (!r.verified) return {false, "reverse did not verify"};
  std::size_t n = r.loops[0].invariant.disjuncts.size();
  return {n == 2, "50/50 minimal; reverse picks " + std::to_string(n) + " disjuncts"};
}

Outcome a9() {
  std::string detail;
  bool pass = true;
  for (const char* name : {"double_iter_1.invc", "double_iter_2.invc", "double_iter_3.invc", "double_iter_4.invc",
                           "lol_expand.invc", "lol_reverse.invc"}) {
    Program prog = load(name);
    auto start = Clock::now();
    Prover prover(prog.preds);
    SymExec exec(prog.preds);
    HeuristicBackend h(prover);
    bool ok = true;
    for (const auto& f : prog.funcs) ok = ok && verify_function(prog, f, prover, exec, h).verified;
    double t = since(start);
    ok = ok && t < 120;
    pass = pass && ok;
    detail += std::string(detail.empty() ? "" : ", ") + fs::path(name).stem().string() + (ok ? " ✓ " : " ✗ ") + secs(t);
  }
  return {pass, detail};
}

Outcome a10() {
  auto start = Clock::now();
  fs::path dir = fs::temp_directory_path() / ("sepinv_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{dir};

  Config cfg;
  cfg.seed = 1;
  std::ostringstream sink;
  for (const char* name : {"a.jsonl", "b.jsonl"}) {
    cli::GenDataArgs args;
    args.count = 100000;
    args.out = (dir / name).string();
    if (cli::run_gen_data(args, cfg, sink) != cli::kExitOk) return {false, "gen-data failed"};
  }
  double t = since(start);
  bool same = fs::file_size(dir / "a.jsonl") == fs::file_size(dir / "b.jsonl");
  std::vector<std::string> lines;
  {
    std::ifstream a(dir / "a.jsonl"), b(dir / "b.jsonl");
    std::string la, lb;
    while (std::getline(a, la)) {
      if (!std::getline(b, lb) || la != lb) same = false;
      lines.push_back(std::move(la));
    }
  }
  if (lines.size() != 100000) return {false, std::to_string(lines.size()) + " lines"};

  Program prog = parse_program(cli::kDefaultPredicates);
  Prover prover(prog.preds);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> pick(0, lines.size() - 1);
  std::size_t bad = 0;
  std::string first;
  for (int i = 0; i < 200; ++i) {
    auto j = nlohmann::json::parse(lines[pick(rng)]);
    Assertion label = parse_assertion(j["label"].get<std::string>(), &prog.preds);
    for (auto& d : label.disjuncts) d.spatial.push_back(SpatialAtom::top());
    for (const auto& in : j["inputs"]) {
      if (!prover.entails(parse_assertion(in.get<std::string>(), &prog.preds), label)) {
        if (bad++ == 0) first = in.get<std::string>() + " |- " + j["label"].get<std::string>();
      }
    }
  }
  bool pass = same && bad == 0 && t < 600;
  return {pass, std::string("two runs ") + (same ? "byte-identical" : "DIFFER") + " in " + secs(t) + "; " +
                    std::to_string(bad) + " unrecoverable inputs in 200 lines" + (first.empty() ? "" : " (" + first + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::pair<std::string, std::function<Outcome()>>> all = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10},
  };
  // Optional arguments restrict the run to the named criteria.
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, fn] : all) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
