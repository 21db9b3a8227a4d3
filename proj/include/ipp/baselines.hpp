#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ipp/nav_map.hpp"
#include "ipp/patrol_env.hpp"

namespace ipp {

enum class PlannerKind { Random, LawnMower, Nrrc, IGreedy };

const char* planner_name(PlannerKind kind);

/// Per-episode memory of the classical planners.
struct PlannerState {
  PlannerKind kind = PlannerKind::Random;
  std::mt19937_64 rng;

  // Lawn mower / NRRC
  int direction = -1;      // current sweep or travel direction
  int advance = -1;        // lawn mower: perpendicular shift direction
  bool shifted = false;    // lawn mower: last step was the shift, reverse next

  // I-greedy
  int goal = -1;                 // cell index
  std::vector<double> goal_dist; // octile distance field to goal
  int retargets = 0;
  double retarget_sigma = 0.0;   // sigma of the goal when it was last chosen

  PlannerState() = default;
  PlannerState(PlannerKind k, std::uint64_t seed) : kind(k), rng(seed) {}
};

/// I-greedy drops a goal once its sigma falls below this value.
inline constexpr double kRetargetSigma = 0.05;

int random_step(const ActionMask& mask, std::mt19937_64& rng);
int random_step(const NavMap& map, const Position& pos, double d_meas, std::mt19937_64& rng);

int lawnmower_step(const NavMap& map, const Position& pos, double d_meas, PlannerState& state);

int nrrc_step(const NavMap& map, const Position& pos, double d_meas, PlannerState& state);

/// `uncertainty` is the height x width sigma raster (land cells ignored).
int igreedy_step(const NavMap& map, const Position& pos, double d_meas, PlannerState& state,
                 std::span<const double> uncertainty);

/// Common interface for anything that picks actions in a PatrolEnv.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode(const PatrolEnv& env, std::uint64_t seed) = 0;
  virtual int act(const PatrolEnv& env) = 0;
};

class PlannerPolicy final : public Policy {
 public:
  explicit PlannerPolicy(PlannerKind kind) : kind_(kind) {}
  std::string name() const override { return planner_name(kind_); }
  void begin_episode(const PatrolEnv& env, std::uint64_t seed) override;
  int act(const PatrolEnv& env) override;
  const PlannerState& state() const { return state_; }

 private:
  PlannerKind kind_;
  PlannerState state_;
};

}  // namespace ipp
