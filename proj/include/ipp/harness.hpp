#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ipp/baselines.hpp"
#include "ipp/config.hpp"
#include "ipp/metrics.hpp"
#include "ipp/patrol_env.hpp"

namespace ipp {

/// Greedy rollout of `policy` on a fresh environment reset with `seed`.
EpisodeRecord run_episode(Policy& policy, const EnvConfig& env_config, std::uint64_t seed,
                          int gp_horizon = kDefaultGpHorizon);

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

/// "random", "lawnmower", "nrrc", "igreedy", "drl" (needs `checkpoint`), or a
/// path to a checkpoint file.
PolicyFactory make_policy_factory(const std::string& name, const std::filesystem::path& checkpoint,
                                  bool censoring, const nn::NetworkConfig* expected = nullptr);

/// Episode seeds shared by every policy of a benchmark.
std::vector<std::uint64_t> episode_seeds(std::uint64_t seed, int count);

struct PolicyResult {
  MetricsRow row;
  std::vector<EpisodeRecord> records;
  std::vector<EpisodeMetrics> metrics;
};

/// Runs every seed for one policy; episodes are spread over `threads` workers
/// but results keep seed order.
PolicyResult evaluate_policy(const std::string& label, const PolicyFactory& factory, const EnvConfig& env_config,
                             const std::vector<std::uint64_t>& seeds, int gp_horizon, int threads);

/// Evaluates every configured policy and, when `out_dir` is non-empty, writes
/// summary.csv, episodes.csv and one series_<policy>_<seed>.csv per episode.
std::vector<PolicyResult> run_benchmark(const RunConfig& config, const std::filesystem::path& out_dir);

void write_summary_csv(std::ostream& out, const std::vector<MetricsRow>& rows);
void write_episodes_csv(std::ostream& out, const std::vector<PolicyResult>& results);
/// Columns step, I_t, reward, x, y, a. Row 0 is the start with reward and a empty.
void write_series_csv(std::ostream& out, const EpisodeRecord& record);

}  // namespace ipp
