#include "ipp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace ipp {

namespace {

constexpr std::array<int, 4> kAxial{static_cast<int>(Action::S), static_cast<int>(Action::E),
                                    static_cast<int>(Action::N), static_cast<int>(Action::W)};

bool is_valid(const ActionMask& mask, int a) { return a >= 0 && mask[static_cast<std::size_t>(a)]; }

int pick_uniform(const std::vector<int>& options, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
  return options[pick(rng)];
}

std::vector<int> valid_list(const ActionMask& mask) {
  std::vector<int> out;
  for (int a = 0; a < kNumActions; ++a) {
    if (mask[static_cast<std::size_t>(a)]) out.push_back(a);
  }
  return out;
}

void require_some_valid(const ActionMask& mask) {
  if (count_valid(mask) == 0) throw std::invalid_argument("planner called with no valid action");
}

// Goal candidates ordered by sigma (descending), then cell index.
std::vector<int> goal_order(const NavMap& map, std::span<const double> uncertainty) {
  std::vector<int> cells = map.water_cells();
  std::stable_sort(cells.begin(), cells.end(), [&](int a, int b) {
    return uncertainty[static_cast<std::size_t>(a)] > uncertainty[static_cast<std::size_t>(b)];
  });
  return cells;
}

// Picks the highest-sigma reachable cell, skipping cells whose centers lie within
// `exclusion` km of pos. Returns false if nothing qualifies.
bool retarget(const NavMap& map, const Position& pos, PlannerState& st, std::span<const double> uncertainty,
              double exclusion) {
  const int here = map.index(map.cell_at(pos));
  for (int cell : goal_order(map, uncertainty)) {
    if (exclusion > 0.0 && distance(map.center(cell), pos) <= exclusion) continue;
    auto field = distance_field(map, cell);
    if (!std::isfinite(field[static_cast<std::size_t>(here)])) continue;
    st.goal = cell;
    st.goal_dist = std::move(field);
    st.retarget_sigma = uncertainty[static_cast<std::size_t>(cell)];
    ++st.retargets;
    return true;
  }
  return false;
}

using ProgressKey = std::pair<double, double>;  // (path distance in cells, euclidean km)

ProgressKey progress_key(const NavMap& map, const PlannerState& st, const Position& p) {
  const double d = st.goal_dist[static_cast<std::size_t>(map.index(map.cell_at(p)))];
  return {std::isfinite(d) ? d : std::numeric_limits<double>::max(), distance(p, map.center(st.goal))};
}

std::pair<int, ProgressKey> best_toward_goal(const NavMap& map, const Position& pos, double d_meas,
                                             const ActionMask& mask, const PlannerState& st) {
  int best = -1;
  ProgressKey best_key{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[static_cast<std::size_t>(a)]) continue;
    const ProgressKey key = progress_key(map, st, move_endpoint(pos, a, d_meas));
    if (key < best_key) {
      best_key = key;
      best = a;
    }
  }
  return {best, best_key};
}

}  // namespace

const char* planner_name(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::Random: return "random";
    case PlannerKind::LawnMower: return "lawnmower";
    case PlannerKind::Nrrc: return "nrrc";
    case PlannerKind::IGreedy: return "igreedy";
  }
  return "unknown";
}

int random_step(const ActionMask& mask, std::mt19937_64& rng) {
  require_some_valid(mask);
  return pick_uniform(valid_list(mask), rng);
}

int random_step(const NavMap& map, const Position& pos, double d_meas, std::mt19937_64& rng) {
  return random_step(valid_action_mask(map, pos, d_meas), rng);
}

int lawnmower_step(const NavMap& map, const Position& pos, double d_meas, PlannerState& st) {
  const ActionMask mask = valid_action_mask(map, pos, d_meas);
  require_some_valid(mask);

  if (st.direction < 0) {
    std::vector<int> axial;
    for (int a : kAxial) {
      if (mask[static_cast<std::size_t>(a)]) axial.push_back(a);
    }
    st.direction = axial.empty() ? pick_uniform({kAxial.begin(), kAxial.end()}, st.rng) : pick_uniform(axial, st.rng);
    std::uniform_int_distribution<int> side(0, 1);
    st.advance = (st.direction + (side(st.rng) == 0 ? 2 : 6)) % kNumActions;
    st.shifted = false;
  }
  if (st.shifted) {
    st.direction = reverse_action(st.direction);
    st.shifted = false;
  }
  if (is_valid(mask, st.direction)) return st.direction;

  // Blocked: shift one step along the advance side, then sweep back.
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (is_valid(mask, st.advance)) {
      st.shifted = true;
      return st.advance;
    }
    st.advance = reverse_action(st.advance);
  }
  if (is_valid(mask, reverse_action(st.direction))) {
    st.direction = reverse_action(st.direction);
    return st.direction;
  }
  return pick_uniform(valid_list(mask), st.rng);
}

int nrrc_step(const NavMap& map, const Position& pos, double d_meas, PlannerState& st) {
  const ActionMask mask = valid_action_mask(map, pos, d_meas);
  require_some_valid(mask);
  if (is_valid(mask, st.direction)) return st.direction;

  const int prev = st.direction;
  std::vector<int> allowed;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[static_cast<std::size_t>(a)] || a == prev) continue;
    if (prev >= 0 && a == reverse_action(prev)) continue;
    allowed.push_back(a);
  }
  if (allowed.empty()) {
    for (int a = 0; a < kNumActions; ++a) {
      if (mask[static_cast<std::size_t>(a)] && a != prev) allowed.push_back(a);
    }
  }
  if (allowed.empty()) allowed = valid_list(mask);
  st.direction = pick_uniform(allowed, st.rng);
  return st.direction;
}

int igreedy_step(const NavMap& map, const Position& pos, double d_meas, PlannerState& st,
                 std::span<const double> uncertainty) {
  if (uncertainty.size() != static_cast<std::size_t>(map.cell_count())) {
    throw std::invalid_argument("uncertainty raster does not match map");
  }
  const ActionMask mask = valid_action_mask(map, pos, d_meas);
  require_some_valid(mask);

  if (st.goal < 0 || uncertainty[static_cast<std::size_t>(st.goal)] < kRetargetSigma) {
    if (!retarget(map, pos, st, uncertainty, 0.0)) return valid_list(mask).front();
  }
  auto [best, key] = best_toward_goal(map, pos, d_meas, mask, st);
  if (!(key < progress_key(map, st, pos))) {
    // Goal reached as closely as the step length allows: choose a goal beyond one move.
    if (retarget(map, pos, st, uncertainty, d_meas)) best = best_toward_goal(map, pos, d_meas, mask, st).first;
  }
  return best;
}

void PlannerPolicy::begin_episode(const PatrolEnv&, std::uint64_t seed) { state_ = PlannerState(kind_, seed); }

int PlannerPolicy::act(const PatrolEnv& env) {
  const auto& map = env.map();
  const double d = env.config().d_meas;
  switch (kind_) {
    case PlannerKind::Random: return random_step(map, env.position(), d, state_.rng);
    case PlannerKind::LawnMower: return lawnmower_step(map, env.position(), d, state_);
    case PlannerKind::Nrrc: return nrrc_step(map, env.position(), d, state_);
    case PlannerKind::IGreedy: {
      const auto unc = uncertainty_channel(env.covariance());
      return igreedy_step(map, env.position(), d, state_, unc);
    }
  }
  throw std::logic_error("unknown planner kind");
}

}  // namespace ipp
