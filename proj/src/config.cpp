#include "sepinv/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <type_traits>

namespace sepinv {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    T out{};
    if constexpr (std::is_same_v<T, double>) out = std::stod(value, &used);
    else if constexpr (std::is_same_v<T, std::uint64_t>) out = std::stoull(value, &used);
    else out = static_cast<T>(std::stol(value, &used));
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("bad value for " + key + ": '" + value + "'");
  }
}

}  // namespace

void Config::validate() const {
  auto positive = [](const char* name, double v) {
    if (!(v > 0)) throw ConfigError(std::string(name) + " must be positive");
  };
  auto probability = [](const char* name, double v) {
    if (!(v >= 0 && v <= 1)) throw ConfigError(std::string(name) + " must lie in [0,1]");
  };
  positive("max_num", max_num);
  positive("max_attempts", max_attempts);
  positive("unfold_depth", unfold_depth);
  positive("timeout", timeout);
  positive("max_noise", synth.max_noise);
  positive("k_min", synth.k_min);
  positive("k_max", synth.k_max);
  positive("mix_depth", synth.mix_depth);
  positive("depth_min", synth.depth_min);
  positive("depth_max", synth.depth_max);
  probability("p_noise", synth.p_noise);
  probability("p_star", synth.p_star);
  probability("p_or", synth.p_or);
  if (synth.p_star + synth.p_or > 1) throw ConfigError("p_star + p_or must not exceed 1");
  if (synth.k_min > synth.k_max) throw ConfigError("k_min exceeds k_max");
  if (synth.depth_min > synth.depth_max) throw ConfigError("depth_min exceeds depth_max");
  if (oracle < 0) throw ConfigError("oracle must not be negative");
  if (backend != "heuristic" && backend.rfind("remote ", 0) != 0 && backend.rfind("subprocess ", 0) != 0)
    throw ConfigError("unknown backend '" + backend + "'");
}

void apply_setting(Config& cfg, const std::string& key, const std::string& value) {
  static const std::map<std::string, std::function<void(Config&, const std::string&, const std::string&)>> table = {
      {"backend", [](Config& c, auto&, auto& v) { c.backend = v; }},
      {"max_num", [](Config& c, auto& k, auto& v) { c.max_num = parse_number<int>(k, v); }},
      {"max_attempts", [](Config& c, auto& k, auto& v) { c.max_attempts = parse_number<int>(k, v); }},
      {"unfold_depth", [](Config& c, auto& k, auto& v) { c.unfold_depth = parse_number<int>(k, v); }},
      {"oracle", [](Config& c, auto& k, auto& v) { c.oracle = parse_number<int>(k, v); }},
      {"seed", [](Config& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"timeout", [](Config& c, auto& k, auto& v) { c.timeout = parse_number<double>(k, v); }},
      {"p_noise", [](Config& c, auto& k, auto& v) { c.synth.p_noise = parse_number<double>(k, v); }},
      {"max_noise", [](Config& c, auto& k, auto& v) { c.synth.max_noise = parse_number<int>(k, v); }},
      {"k_min", [](Config& c, auto& k, auto& v) { c.synth.k_min = parse_number<int>(k, v); }},
      {"k_max", [](Config& c, auto& k, auto& v) { c.synth.k_max = parse_number<int>(k, v); }},
      {"p_star", [](Config& c, auto& k, auto& v) { c.synth.p_star = parse_number<double>(k, v); }},
      {"p_or", [](Config& c, auto& k, auto& v) { c.synth.p_or = parse_number<double>(k, v); }},
      {"mix_depth", [](Config& c, auto& k, auto& v) { c.synth.mix_depth = parse_number<int>(k, v); }},
      {"depth_min", [](Config& c, auto& k, auto& v) { c.synth.depth_min = parse_number<int>(k, v); }},
      {"depth_max", [](Config& c, auto& k, auto& v) { c.synth.depth_max = parse_number<int>(k, v); }},
  };
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown setting '" + key + "'");
  it->second(cfg, key, value);
}

Config load_config_file(const std::string& path, Config base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(n) + ": expected key = value");
    try {
      apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return base;
}

Config load_config_from_env() {
  const char* path = std::getenv("SEPINV_CONFIG");
  if (!path || !*path) return {};
  return load_config_file(path);
}

}  // namespace sepinv
