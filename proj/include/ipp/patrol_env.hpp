#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ipp/ground_truth.hpp"
#include "ipp/info_field.hpp"
#include "ipp/nav_map.hpp"

namespace ipp {

struct EnvConfig {
  std::shared_ptr<const NavMap> map;
  KernelConfig kernel;
  double d_meas = 0.675;            // km per move
  int step_budget = 67;
  double info_threshold = 0.01;     // Delta I_min
  double redundancy_penalty = -0.5; // kappa
  double collision_penalty = -1.0;  // c
  bool dynamic = false;             // drifting peaks
  double v_max_mps = 0.3;
  double seconds_per_step = 300.0;
  ShekelConfig shekel;
  std::uint64_t seed = 0;
  std::optional<Position> fixed_start;

  void validate() const;
  /// Peak speed limit expressed in cells per decision step.
  double v_max_cells() const;
};

/// Three-channel raster, channel-major: [navigability, trail, uncertainty],
/// each height x width row-major.
struct StateImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  static constexpr int kChannels = 3;

  StateImage() = default;
  StateImage(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(kChannels * h * w), 0.0) {}

  std::size_t plane() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  std::span<double> channel(int c) { return {data.data() + static_cast<std::size_t>(c) * plane(), plane()}; }
  std::span<const double> channel(int c) const { return {data.data() + static_cast<std::size_t>(c) * plane(), plane()}; }
  double at(int c, int row, int col) const {
    return data[static_cast<std::size_t>(c) * plane() + static_cast<std::size_t>(row * width + col)];
  }

  friend bool operator==(const StateImage&, const StateImage&) = default;
};

struct StepInfo {
  double delta_info = 0.0;  // I before the step minus I after it
  double info = 0.0;        // I_t after the step
  bool collided = false;
  bool redundant = false;   // kappa was applied
  Position position;
};

struct StepResult {
  StateImage state;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// Informative patrolling MDP over a navigation map.
class PatrolEnv {
 public:
  explicit PatrolEnv(EnvConfig config);

  /// Starts an episode with a seed drawn from the environment's own stream.
  StateImage reset();
  /// Starts an episode fully determined by `episode_seed`.
  StateImage reset(std::uint64_t episode_seed);

  StepResult step(int action);
  StateImage render_state() const;

  ActionMask valid_actions() const;
  const EnvConfig& config() const { return config_; }
  const NavMap& map() const { return *config_.map; }
  const Position& position() const { return position_; }
  const CovarianceState& covariance() const { return *cov_; }
  const GroundTruth& ground_truth() const { return *truth_; }
  double info() const { return info_; }
  int steps_taken() const { return steps_; }
  bool done() const { return steps_ >= config_.step_budget; }
  int collisions() const { return collisions_; }
  int redundant_moves() const { return redundant_; }
  /// Start position followed by every position actually reached.
  const std::vector<Position>& trail() const { return trail_; }
  /// Water-quality reading taken with each sample, aligned with covariance().samples().
  const std::vector<double>& sample_values() const { return sample_values_; }

 private:
  EnvConfig config_;
  std::mt19937_64 episode_stream_;
  std::optional<CovarianceState> cov_;
  std::optional<GroundTruth> truth_;
  Position position_;
  std::vector<Position> trail_;
  std::vector<double> sample_values_;
  double info_ = 0.0;
  int steps_ = 0;
  int collisions_ = 0;
  int redundant_ = 0;
};

}  // namespace ipp
