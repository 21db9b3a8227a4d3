#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ipp/agent.hpp"
#include "ipp/patrol_env.hpp"

namespace ipp {

/// Everything a CLI run needs. Loaded from a flat `key = value` file whose
/// keys mirror the EnvConfig, AgentConfig and NetworkConfig field names.
struct RunConfig {
  std::filesystem::path map_path;
  EnvConfig env;
  AgentConfig agent;

  // benchmark / eval
  std::vector<std::string> policies{"random", "lawnmower", "nrrc", "igreedy"};
  std::filesystem::path checkpoint;  // network used for the "drl" policy
  int eval_episodes = 30;
  int gp_horizon = 67;
  int threads = 1;
  std::uint64_t seed = 0;
};

/// Relative paths resolve against `base_dir`. Throws std::invalid_argument
/// naming the line for unknown keys, duplicate keys and malformed values.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
std::string format_config(const RunConfig& config);

}  // namespace ipp
