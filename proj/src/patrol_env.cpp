#include "ipp/patrol_env.hpp"

#include <stdexcept>

namespace ipp {

void EnvConfig::validate() const {
  if (!map) throw std::invalid_argument("environment config has no map");
  kernel.validate();
  if (!(d_meas > 0.0)) throw std::invalid_argument("d_meas must be > 0");
  if (step_budget < 1) throw std::invalid_argument("step_budget must be >= 1");
  if (!(info_threshold > 0.0)) throw std::invalid_argument("info_threshold must be > 0");
  if (!(redundancy_penalty < 0.0)) throw std::invalid_argument("redundancy_penalty must be < 0");
  if (!(collision_penalty < 0.0)) throw std::invalid_argument("collision_penalty must be < 0");
  if (!(v_max_mps >= 0.0) || !(seconds_per_step > 0.0)) throw std::invalid_argument("invalid peak speed settings");
  if (fixed_start && !map->navigable(*fixed_start)) throw std::invalid_argument("fixed start is not navigable");
}

double EnvConfig::v_max_cells() const { return v_max_mps * seconds_per_step / 1000.0 / map->cell_size(); }

PatrolEnv::PatrolEnv(EnvConfig config) : config_(std::move(config)), episode_stream_(config_.seed) {
  config_.validate();
}

StateImage PatrolEnv::reset() { return reset(episode_stream_()); }

StateImage PatrolEnv::reset(std::uint64_t episode_seed) {
  std::mt19937_64 rng(episode_seed);
  const NavMap& map = *config_.map;

  if (config_.fixed_start) {
    position_ = *config_.fixed_start;
  } else {
    std::vector<int> candidates;
    for (int cell : map.water_cells()) {
      if (count_valid(valid_action_mask(map, map.center(cell), config_.d_meas)) > 0) candidates.push_back(cell);
    }
    if (candidates.empty()) candidates = map.water_cells();
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    position_ = map.center(candidates[pick(rng)]);
  }

  truth_ = GroundTruth::generate(config_.map, rng(), config_.shekel);
  cov_ = CovarianceState(config_.map, config_.kernel).with_sample(position_, 0);
  trail_.assign(1, position_);
  sample_values_.assign(1, truth_->evaluate(position_));
  info_ = information(*cov_);
  steps_ = 0;
  collisions_ = 0;
  redundant_ = 0;
  return render_state();
}

ActionMask PatrolEnv::valid_actions() const { return valid_action_mask(*config_.map, position_, config_.d_meas); }

StepResult PatrolEnv::step(int action) {
  if (!cov_) throw std::logic_error("step called before reset");
  if (done()) throw std::logic_error("step called after the episode finished");
  if (action < 0 || action >= kNumActions) throw std::out_of_range("action index out of range");

  const int t = steps_ + 1;
  const Position target = move_endpoint(position_, action, config_.d_meas);
  const bool valid = is_segment_navigable(*config_.map, position_, target);

  if (config_.dynamic) *truth_ = truth_->advance(1, config_.v_max_cells());

  const double before = info_;
  if (valid) {
    position_ = target;
    trail_.push_back(position_);
    cov_ = cov_->with_sample(position_, t);
    sample_values_.push_back(truth_->evaluate(position_));
  } else {
    cov_ = cov_->at_time(t);
    ++collisions_;
  }
  info_ = information(*cov_);
  steps_ = t;

  StepResult result;
  result.info.delta_info = before - info_;
  result.info.info = info_;
  result.info.collided = !valid;
  result.info.position = position_;
  if (!valid) {
    result.reward = config_.collision_penalty;
  } else if (result.info.delta_info < config_.info_threshold) {
    result.reward = config_.redundancy_penalty;
    result.info.redundant = true;
    ++redundant_;
  } else {
    result.reward = result.info.delta_info;
  }
  result.done = done();
  result.state = render_state();
  return result;
}

StateImage PatrolEnv::render_state() const {
  if (!cov_) throw std::logic_error("render_state called before reset");
  const NavMap& map = *config_.map;
  StateImage img(map.height(), map.width());

  auto nav = img.channel(0);
  for (int cell : map.water_cells()) nav[static_cast<std::size_t>(cell)] = 1.0;

  // Linear ramp by visit order: oldest 1/(k+1), newest 1.0; a revisit keeps its latest value.
  auto trail = img.channel(1);
  const double denom = static_cast<double>(trail_.size());
  for (std::size_t j = 0; j < trail_.size(); ++j) {
    trail[static_cast<std::size_t>(map.index(map.cell_at(trail_[j])))] = static_cast<double>(j + 1) / denom;
  }

  auto unc = img.channel(2);
  const auto& cells = map.water_cells();
  const auto& sigma = cov_->sigma();
  for (std::size_t i = 0; i < cells.size(); ++i) unc[static_cast<std::size_t>(cells[i])] = std::min(1.0, sigma[i]);
  return img;
}

}  // namespace ipp
