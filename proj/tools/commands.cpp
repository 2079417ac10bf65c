#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "sepinv/datasynth.hpp"
#include "sepinv/entailment.hpp"
#include "sepinv/inference.hpp"
#include "sepinv/invgen.hpp"
#include "sepinv/oracle.hpp"
#include "sepinv/report.hpp"
#include "sepinv/symexec.hpp"

namespace sepinv::cli {

const char* const kDefaultPredicates =
    "predicate listrep(x) = x == 0 && emp || exists y, x->tail == y * listrep(y);\n"
    "predicate lseg(x, y) = x == y && emp || exists z, x->tail == z * lseg(z, y);\n";

namespace {

Program load_program(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw UsageError("file not found: " + path);
  try {
    return parse_program_file(path);
  } catch (const ParseError& e) {
    throw UsageError(path + ":" + e.what());
  }
}

std::unique_ptr<Backend> make_backend(const Config& cfg, const Prover& prover, const PredicateRegistry& preds) {
  const std::string& spec = cfg.backend;
  if (spec == "heuristic") return std::make_unique<HeuristicBackend>(prover);
  if (spec.rfind("remote ", 0) == 0) return std::make_unique<RemoteBackend>(spec.substr(7), preds, cfg.timeout_ms());
  if (spec.rfind("subprocess ", 0) == 0)
    return std::make_unique<SubprocessBackend>(spec.substr(11), preds, cfg.timeout_ms());
  throw UsageError("unknown backend '" + spec + "'");
}

std::vector<const Func*> select_funcs(const Program& prog, const std::optional<std::string>& name) {
  std::vector<const Func*> out;
  if (name) {
    const Func* f = prog.find(*name);
    if (!f) throw UsageError("no function named " + *name);
    out.push_back(f);
  } else {
    for (const auto& f : prog.funcs) out.push_back(&f);
  }
  return out;
}

InvgenOptions invgen_options(const Config& cfg, bool paper_literal) {
  InvgenOptions o;
  o.max_num = cfg.max_num;
  o.max_attempts = cfg.max_attempts;
  o.paper_literal = paper_literal;
  return o;
}

ExecOptions exec_options(const Config& cfg) {
  ExecOptions o;
  o.unfold_depth = cfg.unfold_depth;
  return o;
}

// Small-model checks of every top-level loop invariant.
std::vector<InvariantCheck> oracle_checks(const Program& prog, const FunctionReport& r, int max_addrs) {
  std::vector<InvariantCheck> out;
  for (std::size_t i = 0; i < r.loops.size() && i < r.tasks.size(); ++i) {
    if (!r.loops[i].success) break;
    OracleOptions oo;
    oo.max_addrs = max_addrs;
    try {
      out.push_back(check_invariant_oracle(prog.preds, r.tasks[i].pre, r.tasks[i].cond, r.tasks[i].body,
                                           r.loops[i].invariant, oo));
    } catch (const OracleError& e) {
      InvariantCheck c;
      c.detail = std::string("skipped: ") + e.what();
      out.push_back(c);
    }
  }
  return out;
}

bool oracle_ok(const std::vector<InvariantCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return c.ok(); });
}

void print_record(std::ostream& out, const VerifyRecord& rec) {
  const FunctionReport& r = rec.report;
  out << r.name << ": " << (r.verified ? "verified" : "FAILED") << " (" << std::fixed << std::setprecision(3)
      << r.seconds << " s)\n";
  out.unsetf(std::ios::fixed);
  for (std::size_t i = 0; i < r.loops.size(); ++i) {
    const InvariantReport& l = r.loops[i];
    out << "  loop " << i + 1 << ": " << (l.success ? l.invariant.str() : "no invariant") << "\n";
    out << "    attempts " << l.attempts;
    if (!l.banned.empty()) {
      out << ", banned";
      for (const auto& b : l.banned) out << " [" << b << "]";
    }
    out << "\n";
    for (const auto& in : l.inner) out << "    inner: " << (in.success ? in.invariant.str() : in.failure) << "\n";
    if (i < rec.oracle.size()) {
      const InvariantCheck& c = rec.oracle[i];
      out << "    oracle: " << (c.ok() ? "ok" : "VIOLATION") << " (" << c.models << " models)";
      if (!c.detail.empty()) out << " " << c.detail;
      if (c.counter_model) out << " " << c.counter_model->str();
      out << "\n";
    }
  }
  if (!r.failure.empty()) out << "  failure: " << r.failure << "\n";
}

std::string backend_label(const Config& cfg) { return cfg.backend; }

}  // namespace

int run_verify(const VerifyArgs& args, const Config& cfg, std::ostream& out) {
  Program prog = load_program(args.file);
  auto funcs = select_funcs(prog, args.func);
  Prover prover(prog.preds);
  SymExec exec(prog.preds, exec_options(cfg));
  auto backend = make_backend(cfg, prover, prog.preds);

  std::vector<VerifyRecord> records;
  bool all = true;
  for (const Func* f : funcs) {
    VerifyRecord rec;
    rec.report = verify_function(prog, *f, prover, exec, *backend, invgen_options(cfg, args.paper_literal));
    if (cfg.oracle > 0 && rec.report.verified) rec.oracle = oracle_checks(prog, rec.report, cfg.oracle);
    all = all && rec.report.verified && oracle_ok(rec.oracle);
    records.push_back(std::move(rec));
  }
  if (args.json) {
    out << make_report(args.file, backend_label(cfg), records).dump(2) << "\n";
  } else {
    for (const auto& r : records) print_record(out, r);
  }
  return all ? kExitOk : kExitFail;
}

int run_exec(const ExecArgs& args, const Config& cfg, std::ostream& out) {
  if (args.steps < 0) throw UsageError("--steps must not be negative");
  Program prog = load_program(args.file);
  const Func* f = args.func ? prog.find(*args.func) : (prog.funcs.empty() ? nullptr : &prog.funcs.front());
  if (!f) throw UsageError(args.func ? "no function named " + *args.func : "no function in " + args.file);
  SymExec exec(prog.preds, exec_options(cfg));

  std::vector<Stmt> items = flatten(inline_calls(prog, f->body)).items();
  std::vector<Stmt> before;
  const Stmt* loop = nullptr;
  for (const auto& s : items) {
    if (s.kind == Stmt::Kind::While) {
      loop = &s;
      break;
    }
    before.push_back(s);
  }
  try {
    Assertion state = exec.exec(f->requires_, flatten(Stmt::seq(before)));
    out << "S0: " << state.str() << "\n";
    if (!loop) return kExitOk;
    Stmt body = flatten(Stmt::seq(loop->body));
    for (int i = 1; i <= args.steps; ++i) {
      state = exec.exec(exec.assume_true(state, loop->cond), body);
      out << "S" << i << ": " << state.str() << "\n";
    }
  } catch (const ExecError& e) {
    out << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitOk;
}

int run_entail(const EntailArgs& args, const Config&, std::ostream& out) {
  std::ifstream in(args.file);
  if (!in) throw UsageError("file not found: " + args.file);
  std::string defs, line;
  std::vector<std::pair<int, std::string>> queries;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find("|-") != std::string::npos) queries.emplace_back(n, line);
    else defs += line + "\n";
  }
  Program prog;
  try {
    prog = parse_program(defs);
  } catch (const ParseError& e) {
    throw UsageError(args.file + ":" + e.what());
  }
  Prover prover(prog.preds);

  bool all = true, sound = true;
  for (const auto& [n, q] : queries) {
    auto bar = q.find("|-");
    Assertion src, tgt;
    try {
      src = parse_assertion(q.substr(0, bar), &prog.preds);
      tgt = parse_assertion(q.substr(bar + 2), &prog.preds);
    } catch (const ParseError& e) {
      throw UsageError(args.file + ":" + std::to_string(n) + ": " + e.what());
    }
    bool proved = prover.entails(src, tgt);
    all = all && proved;
    out << (proved ? "proved   " : "unproved ") << src.str() << " |- " << tgt.str() << "\n";
    if (args.oracle > 0) {
      OracleOptions oo;
      oo.max_addrs = args.oracle;
      try {
        OracleVerdict v = entails_oracle(prog.preds, src, tgt, oo);
        out << "  oracle: " << (v.holds ? "holds" : "fails on " + v.counter_model->str()) << " (" << v.models
            << " models)\n";
        if (proved && !v.holds) {
          out << "  UNSOUND: proved but refuted on a small model\n";
          sound = false;
        }
      } catch (const OracleError& e) {
        out << "  oracle: skipped (" << e.what() << ")\n";
      }
    }
  }
  return all && sound ? kExitOk : kExitFail;
}

int run_gen_data(const GenDataArgs& args, const Config& cfg, std::ostream& out) {
  Program prog;
  if (args.defs) {
    prog = load_program(*args.defs);
  } else {
    prog = parse_program(kDefaultPredicates);
  }
  SynthConfig sc = cfg.synth;
  if (!args.preds.empty()) sc.preds = args.preds;
  for (const auto& p : sc.preds)
    if (!prog.preds.find(p)) throw UsageError("unknown predicate " + p);
  DataSynth synth(prog.preds, sc);

  if (args.out == "-") {
    synth.emit(out, args.count, cfg.seed, args.threads);
    return kExitOk;
  }
  std::ofstream file(args.out, std::ios::binary | std::ios::trunc);
  if (!file) throw UsageError("cannot write " + args.out);
  synth.emit(file, args.count, cfg.seed, args.threads);
  return file ? kExitOk : kExitFail;
}

namespace {

struct BenchRow {
  std::string instance;
  bool verified = false;
  std::string failure;
  Timing timing;
  double total = 0;
};

std::vector<BenchRow> bench_file(const std::filesystem::path& path, const Config& cfg) {
  std::vector<BenchRow> rows;
  std::string stem = path.stem().string();
  Program prog;
  try {
    prog = parse_program_file(path.string());
  } catch (const std::exception& e) {
    rows.push_back({stem, false, e.what(), {}, 0});
    return rows;
  }
  auto start = std::chrono::steady_clock::now();
  Prover prover(prog.preds);
  double setup = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  SymExec exec(prog.preds, exec_options(cfg));
  auto backend = make_backend(cfg, prover, prog.preds);
  for (const auto& f : prog.funcs) {
    FunctionReport r = verify_function(prog, f, prover, exec, *backend, invgen_options(cfg, false));
    bool ok = r.verified;
    std::string failure = r.failure;
    if (ok && cfg.oracle > 0) {
      auto checks = oracle_checks(prog, r, cfg.oracle);
      if (!oracle_ok(checks)) {
        ok = false;
        failure = "oracle violation";
      }
    }
    Timing t = r.timing;
    t.solver += setup;  // lemma validation
    rows.push_back({prog.funcs.size() == 1 ? stem : stem + "/" + f.name, ok, failure, t, r.seconds + setup});
    setup = 0;
  }
  return rows;
}

}  // namespace

int run_bench(const BenchArgs& args, const Config& cfg, std::ostream& out) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(args.corpus)) throw UsageError("corpus directory not found: " + args.corpus);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(args.corpus))
    if (e.is_regular_file() && e.path().extension() == ".invc") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  std::vector<std::vector<BenchRow>> results(files.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next == files.size()) return;
        i = next++;
      }
      results[i] = bench_file(files[i], cfg);
    }
  };
  unsigned jobs = std::max(1u, args.jobs);
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<BenchRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  bool all = std::all_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.verified; });

  if (args.json) {
    nlohmann::ordered_json j;
    j["report_version"] = kReportVersion;
    j["backend"] = cfg.backend;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows)
      j["rows"].push_back({{"instance", r.instance},
                           {"verified", r.verified},
                           {"failure", r.failure},
                           {"timing", to_json(r.timing)},
                           {"total", r.total}});
    out << j.dump(2) << "\n";
    return all ? kExitOk : kExitFail;
  }

  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.instance.size());
  auto num = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v;
    return s.str();
  };
  out << std::left << std::setw(static_cast<int>(width)) << "Instance" << "  Result  " << std::right
      << std::setw(9) << "Symbolic" << std::setw(9) << "Infer" << std::setw(9) << "Solver" << std::setw(9)
      << "Total" << "\n";
  int passed = 0;
  for (const auto& r : rows) {
    passed += r.verified;
    out << std::left << std::setw(static_cast<int>(width)) << r.instance << "  " << (r.verified ? "✓" : "✗")
        << "       " << std::right << std::setw(9) << num(r.timing.symbolic) << std::setw(9) << num(r.timing.infer)
        << std::setw(9) << num(r.timing.solver) << std::setw(9) << num(r.total) << "\n";
  }
  out << passed << "/" << rows.size() << " verified\n";
  for (const auto& r : rows)
    if (!r.verified) out << "  " << r.instance << ": " << r.failure << "\n";
  return all ? kExitOk : kExitFail;
}

int run_serve_check(const ServeCheckArgs& args, const Config& cfg, std::ostream& out) {
  if (args.url.has_value() == args.subprocess.has_value())
    throw UsageError("serve-check needs exactly one of URL or --subprocess");
  if (args.requests < 1) throw UsageError("--requests must be positive");
  Program prog = parse_program(kDefaultPredicates);
  std::unique_ptr<Backend> backend;
  if (args.url) backend = std::make_unique<RemoteBackend>(*args.url, prog.preds, cfg.timeout_ms());
  else backend = std::make_unique<SubprocessBackend>(*args.subprocess, prog.preds, cfg.timeout_ms());

  DataSynth synth(prog.preds, cfg.synth);
  int good = 0;
  for (int i = 0; i < args.requests; ++i) {
    TrainingSample s = synth.sample(sample_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    InferenceRequest req;
    req.assertions = s.inputs;
    try {
      auto cands = backend->query(req);
      ++good;
      if (args.requests == 1 || i == 0) {
        out << "request " << i << ": " << cands.size() << " candidates\n";
        for (const auto& c : cands) out << "  " << c.score << "  " << c.str() << "\n";
      }
    } catch (const InferenceError& e) {
      out << "request " << i << ": " << e.what() << "\n";
    }
  }
  out << good << "/" << args.requests << " schema-valid responses\n";
  return good == args.requests ? kExitOk : kExitFail;
}

}  // namespace sepinv::cli
