#pragma once

// Run configuration: a key=value file (path in SEPINV_CONFIG) overridden by
// command-line flags.

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "sepinv/datasynth.hpp"

namespace sepinv {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Config {
  /// `heuristic`, `remote <url>` or `subprocess <command>`.
  std::string backend = "heuristic";
  int max_num = 5;
  int max_attempts = 8;
  int unfold_depth = 2;
  SynthConfig synth;
  int oracle = 0;  // max_addrs for the small-model cross-check; 0 disables it
  std::uint64_t seed = 1;
  double timeout = 30;  // seconds, per backend request

  /// Throws ConfigError when a bound is not positive or a probability is
  /// outside [0,1].
  void validate() const;
  std::chrono::milliseconds timeout_ms() const {
    return std::chrono::milliseconds(static_cast<long long>(timeout * 1000));
  }
};

/// Applies one `key = value` setting.
void apply_setting(Config& cfg, const std::string& key, const std::string& value);

/// Reads `path`: one setting per line, `#` starts a comment.
Config load_config_file(const std::string& path, Config base = {});

/// Defaults, then the file named by SEPINV_CONFIG if set.
Config load_config_from_env();

}  // namespace sepinv
