#pragma once

// Subcommands of the `sepinv` tool. Each returns the process exit code.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sepinv/config.hpp"

namespace sepinv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

/// Bad input: missing files, unknown names, malformed flags. Exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VerifyArgs {
  std::string file;
  std::optional<std::string> func;
  bool json = false;
  bool paper_literal = false;
};

struct ExecArgs {
  std::string file;
  std::optional<std::string> func;
  int steps = 5;
};

struct EntailArgs {
  std::string file;
  int oracle = 0;
};

struct GenDataArgs {
  std::size_t count = 0;
  std::string out = "-";
  std::vector<std::string> preds;
  std::optional<std::string> defs;
  unsigned threads = 0;
};

struct BenchArgs {
  std::string corpus;
  unsigned jobs = 1;
  bool json = false;
};

struct ServeCheckArgs {
  std::optional<std::string> url;
  std::optional<std::string> subprocess;
  int requests = 1;
};

int run_verify(const VerifyArgs& args, const Config& cfg, std::ostream& out);
int run_exec(const ExecArgs& args, const Config& cfg, std::ostream& out);
int run_entail(const EntailArgs& args, const Config& cfg, std::ostream& out);
int run_gen_data(const GenDataArgs& args, const Config& cfg, std::ostream& out);
int run_bench(const BenchArgs& args, const Config& cfg, std::ostream& out);
int run_serve_check(const ServeCheckArgs& args, const Config& cfg, std::ostream& out);

/// listrep and lseg, used by gen-data and serve-check without `--defs`.
extern const char* const kDefaultPredicates;

}  // namespace sepinv::cli
