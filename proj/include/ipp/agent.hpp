#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ipp/baselines.hpp"
#include "ipp/neural.hpp"
#include "ipp/patrol_env.hpp"
#include "ipp/replay.hpp"

namespace ipp {

/// Value written over the Q-values of invalid actions.
inline constexpr double kCensoredQ = -1e18;

enum class Exploration { Noisy, EpsilonGreedy };

const char* exploration_name(Exploration e);

struct AgentConfig {
  double gamma = 0.99;
  double learning_rate = 1e-4;
  double learning_rate_end = -1.0;  // linear decay target over the episode budget; <0 keeps the rate constant
  int batch_size = 64;
  double target_rate = 1e-4;  // soft update constant
  Exploration exploration = Exploration::Noisy;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_episodes = 3000;
  bool censoring = true;
  int episodes = 10000;
  std::size_t buffer_capacity = 20000;
  double per_alpha = 0.5;
  double per_beta_start = 0.5;
  double per_beta_end = 1.0;
  int warmup = -1;  // stored transitions before learning starts; <0 means max(batch, 500)
  int checkpoint_every = 0;  // episodes; 0 disables periodic checkpoints
  nn::NetworkConfig network;

  void validate() const;
  int effective_warmup() const;
};

/// Linear schedule from start at episode 0 to end at `decay_episodes`, then flat.
double epsilon_at(const AgentConfig& config, int episode);
/// Importance-sampling exponent, annealed linearly across the episode budget.
double beta_at(const AgentConfig& config, int episode);
/// Adam step size for an episode.
double learning_rate_at(const AgentConfig& config, int episode);

/// Copies q with invalid actions replaced by kCensoredQ. Throws when the mask
/// has no valid action.
std::vector<double> censor(std::span<const double> q, const ActionMask& mask);

/// Greedy (lowest index on ties) with probability 1 - epsilon, otherwise
/// uniform over the valid actions of `mask`.
int select_action(std::span<const double> q, double epsilon, const ActionMask& mask, std::mt19937_64& rng);

/// y_i = r_i + gamma max_a' Q_target(s'_i, a') with a' restricted to the valid
/// actions when censoring; y_i = r_i at episode end.
std::vector<double> compute_targets(nn::QNetwork& target_net, const nn::QNetworkParams& target,
                                    const std::vector<const Experience*>& batch, double gamma, bool censoring,
                                    const nn::NoiseDraw& noise);

/// Packs states as network input columns.
nn::Matrix stack_states(const std::vector<const PackedState*>& states);
nn::Matrix stack_states(const StateImage& state);

struct EpisodeLog {
  int episode = 0;
  double cumulative_reward = 0.0;
  double final_info = 0.0;
  int collisions = 0;
  int redundant = 0;
  double epsilon = 0.0;
  double wall_ms = 0.0;
};

struct TrainingLog {
  std::vector<EpisodeLog> episodes;
  /// Every action taken was valid under the mask at that step.
  bool censoring_respected = true;

  void write_csv(std::ostream& out) const;
};

struct TrainingResult {
  nn::QNetworkParams params;
  TrainingLog log;
};

struct TrainingHooks {
  /// Called after each episode; `params` is the current online network.
  std::function<void(const EpisodeLog&, const nn::QNetworkParams&)> on_episode;
};

/// Noisy / epsilon-greedy censoring DQL with prioritized replay and a soft
/// target network. One gradient step per environment step after warm-up.
TrainingResult train(const EnvConfig& env_config, const AgentConfig& agent_config, std::uint64_t seed,
                     const TrainingHooks& hooks = {});

/// Greedy policy of a trained network: noise off, censoring optional.
class DqnPolicy final : public Policy {
 public:
  DqnPolicy(nn::QNetworkParams params, bool censoring);
  std::string name() const override { return "drl"; }
  void begin_episode(const PatrolEnv&, std::uint64_t) override {}
  int act(const PatrolEnv& env) override;
  std::vector<double> q_values(const StateImage& state);

 private:
  nn::QNetworkParams params_;
  nn::QNetwork net_;
  bool censoring_;
};

/// 64-bit seed mixing for independent deterministic streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ipp
