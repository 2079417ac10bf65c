#include <CLI11.hpp>
#include <algorithm>
#include <iostream>
#include <map>

#include "commands.hpp"

#ifndef SEPINV_CORPUS_DIR
#define SEPINV_CORPUS_DIR "corpus"
#endif

using namespace sepinv;
using namespace sepinv::cli;

namespace {

// Flags shared by every subcommand; applied over SEPINV_CONFIG and --config.
struct Overrides {
  std::string config;
  std::vector<std::string> backend;
  std::optional<int> max_num, max_attempts, unfold_depth, oracle;
  std::optional<std::uint64_t> seed;
  std::optional<double> timeout;
  std::vector<std::string> settings;  // --set key=value
  std::map<std::string, std::string> synth;  // --p-noise etc.
};

constexpr const char* kSynthKeys[] = {"p_noise", "max_noise", "k_min", "k_max", "p_star",
                                      "p_or",    "mix_depth", "depth_min", "depth_max"};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "key = value settings file");
  app->add_option("--backend", o.backend, "heuristic | remote URL | subprocess CMD")->expected(1, 2);
  app->add_option("--max-num", o.max_num, "symbolic iterations per loop");
  app->add_option("--max-attempts", o.max_attempts, "inference rounds before giving up");
  app->add_option("--unfold-depth", o.unfold_depth, "predicate unfoldings during execution");
  app->add_option("--oracle", o.oracle, "cross-check with models of up to N records");
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("--timeout", o.timeout, "backend timeout in seconds");
  app->add_option("--set", o.settings, "any config key as key=value")->allow_extra_args(false);
}

void add_synth(CLI::App* app, Overrides& o) {
  for (const char* key : kSynthKeys) {
    std::string flag = std::string("--") + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    app->add_option_function<std::string>(flag, [&o, key](const std::string& v) { o.synth[key] = v; },
                                          "data synthesis setting");
  }
}

Config resolve(const Overrides& o) {
  Config cfg = load_config_from_env();
  if (!o.config.empty()) cfg = load_config_file(o.config, cfg);
  for (const auto& kv : o.settings) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [k, v] : o.synth) apply_setting(cfg, k, v);
  if (!o.backend.empty()) {
    cfg.backend = o.backend[0];
    if (o.backend.size() == 2) cfg.backend += " " + o.backend[1];
  }
  if (o.max_num) cfg.max_num = *o.max_num;
  if (o.max_attempts) cfg.max_attempts = *o.max_attempts;
  if (o.unfold_depth) cfg.unfold_depth = *o.unfold_depth;
  if (o.oracle) cfg.oracle = *o.oracle;
  if (o.seed) cfg.seed = *o.seed;
  if (o.timeout) cfg.timeout = *o.timeout;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Separation-logic loop invariant inference"};
  app.require_subcommand(1);
  Overrides o;

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "infer invariants and verify the functions of a program");
  verify->add_option("file", va.file)->required();
  verify->add_option("--func", va.func, "only this function");
  verify->add_flag("--json", va.json, "machine-readable report");
  verify->add_flag("--paper-literal", va.paper_literal, "enter inner loops under their own condition");
  add_common(verify, o);

  ExecArgs ea;
  auto* exec = app.add_subcommand("exec", "print the symbolic states of the first loop");
  exec->add_option("file", ea.file)->required();
  exec->add_option("--func", ea.func);
  exec->add_option("--steps", ea.steps, "iterations to print");
  add_common(exec, o);

  EntailArgs na;
  auto* entail = app.add_subcommand("entail", "check `A |- B` lines against the definitions in the same file");
  entail->add_option("file", na.file)->required();
  entail->add_option("--oracle", na.oracle, "cross-check with models of up to N records");

  GenDataArgs ga;
  auto* gen = app.add_subcommand("gen-data", "synthesize training samples as JSONL");
  gen->add_option("--count", ga.count, "number of samples")->required();
  gen->add_option("-o,--out", ga.out, "output file, - for stdout");
  gen->add_option("--pred", ga.preds, "restrict to this predicate (repeatable)");
  gen->add_option("--defs", ga.defs, "file with predicate definitions");
  gen->add_option("--threads", ga.threads, "worker threads, 0 for hardware concurrency");
  add_common(gen, o);
  add_synth(gen, o);

  BenchArgs ba;
  ba.corpus = SEPINV_CORPUS_DIR;
  auto* bench = app.add_subcommand("bench", "verify every program of the corpus");
  bench->add_option("corpus", ba.corpus, "directory of .invc files");
  bench->add_option("-j,--jobs", ba.jobs, "parallel files");
  bench->add_flag("--json", ba.json);
  add_common(bench, o);

  ServeCheckArgs sa;
  auto* serve = app.add_subcommand("serve-check", "send random queries to an inference service and validate replies");
  serve->add_option("url", sa.url, "http://host:port");
  serve->add_option("--subprocess", sa.subprocess, "command speaking the line protocol");
  serve->add_option("-n,--requests", sa.requests);
  add_common(serve, o);
  add_synth(serve, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    Config cfg = resolve(o);
    if (*verify) return run_verify(va, cfg, std::cout);
    if (*exec) return run_exec(ea, cfg, std::cout);
    if (*entail) return run_entail(na, cfg, std::cout);
    if (*gen) return run_gen_data(ga, cfg, std::cout);
    if (*bench) return run_bench(ba, cfg, std::cout);
    if (*serve) return run_serve_check(sa, cfg, std::cout);
  } catch (const UsageError& e) {
    std::cerr << "sepinv: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "sepinv: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "sepinv: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
