#include "ipp/agent.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace ipp {

const char* exploration_name(Exploration e) { return e == Exploration::Noisy ? "noisy" : "epsilon"; }

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (static_cast<std::size_t>(batch_size) > buffer_capacity) throw std::invalid_argument("batch_size exceeds buffer capacity");
  if (learning_rate_end >= 0.0 && !(learning_rate_end > 0.0)) throw std::invalid_argument("learning_rate_end must be > 0");
  if (!(target_rate >= 0.0 && target_rate <= 1.0)) throw std::invalid_argument("target_rate must be in [0, 1]");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
    throw std::invalid_argument("epsilon bounds must be in [0, 1]");
  }
  if (epsilon_decay_episodes < 0) throw std::invalid_argument("epsilon_decay_episodes must be >= 0");
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  if (!(per_alpha >= 0.0)) throw std::invalid_argument("per_alpha must be >= 0");
  if (!(per_beta_start >= 0.0 && per_beta_end <= 1.0 && per_beta_start <= per_beta_end)) {
    throw std::invalid_argument("PER beta interval must lie in [0, 1]");
  }
  if (exploration == Exploration::Noisy && !network.noisy) {
    throw std::invalid_argument("noisy exploration requires a noisy network");
  }
}

int AgentConfig::effective_warmup() const { return warmup >= 0 ? warmup : std::max(batch_size, 500); }

double epsilon_at(const AgentConfig& c, int episode) {
  if (c.epsilon_decay_episodes <= 0 || episode >= c.epsilon_decay_episodes) return c.epsilon_end;
  const double frac = static_cast<double>(episode) / c.epsilon_decay_episodes;
  return c.epsilon_start + frac * (c.epsilon_end - c.epsilon_start);
}

double beta_at(const AgentConfig& c, int episode) {
  if (c.episodes <= 1) return c.per_beta_end;
  const double frac = std::clamp(static_cast<double>(episode) / (c.episodes - 1), 0.0, 1.0);
  return c.per_beta_start + frac * (c.per_beta_end - c.per_beta_start);
}

double learning_rate_at(const AgentConfig& c, int episode) {
  if (c.learning_rate_end < 0.0) return c.learning_rate;
  if (c.episodes <= 1) return c.learning_rate_end;
  const double frac = std::clamp(static_cast<double>(episode) / (c.episodes - 1), 0.0, 1.0);
  return c.learning_rate + frac * (c.learning_rate_end - c.learning_rate);
}

std::vector<double> censor(std::span<const double> q, const ActionMask& mask) {
  if (q.size() != mask.size()) throw std::invalid_argument("censor: q and mask sizes differ");
  if (count_valid(mask) == 0) throw std::invalid_argument("censor: no valid action (degenerate map?)");
  std::vector<double> out(q.begin(), q.end());
  for (std::size_t a = 0; a < out.size(); ++a) {
    if (!mask[a]) out[a] = kCensoredQ;
  }
  return out;
}

int select_action(std::span<const double> q, double epsilon, const ActionMask& mask, std::mt19937_64& rng) {
  if (q.size() != mask.size()) throw std::invalid_argument("select_action: q and mask sizes differ");
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < epsilon) return random_step(mask, rng);
  }
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

nn::Matrix stack_states(const std::vector<const PackedState*>& states) {
  if (states.empty()) return {};
  const auto rows = static_cast<Eigen::Index>(states.front()->data.size());
  nn::Matrix m(rows, static_cast<Eigen::Index>(states.size()));
  for (std::size_t b = 0; b < states.size(); ++b) {
    const auto& d = states[b]->data;
    if (static_cast<Eigen::Index>(d.size()) != rows) throw std::invalid_argument("states differ in shape");
    m.col(static_cast<Eigen::Index>(b)) = Eigen::Map<const Eigen::VectorXf>(d.data(), rows).cast<double>();
  }
  return m;
}

nn::Matrix stack_states(const StateImage& state) {
  return Eigen::Map<const Eigen::VectorXd>(state.data.data(), static_cast<Eigen::Index>(state.data.size()));
}

std::vector<double> compute_targets(nn::QNetwork& target_net, const nn::QNetworkParams& target,
                                    const std::vector<const Experience*>& batch, double gamma, bool censoring,
                                    const nn::NoiseDraw& noise) {
  std::vector<double> y(batch.size());
  std::vector<const PackedState*> next;
  next.reserve(batch.size());
  for (const auto* e : batch) next.push_back(e->next_state.get());
  const nn::Matrix q_next = target_net.forward(target, stack_states(next), noise);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Experience& e = *batch[i];
    if (e.done || gamma == 0.0) {
      y[i] = e.reward;
      continue;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < nn::kQOutputs; ++a) {
      if (censoring && !e.next_mask[static_cast<std::size_t>(a)]) continue;
      best = std::max(best, q_next(a, static_cast<Eigen::Index>(i)));
    }
    if (!std::isfinite(best)) throw std::invalid_argument("compute_targets: next state has no valid action");
    y[i] = e.reward + gamma * best;
  }
  return y;
}

void TrainingLog::write_csv(std::ostream& out) const {
  out << "episode,cumulative_reward,I_T,collisions,epsilon,wall_ms\n";
  const auto old = out.precision(10);
  for (const auto& e : episodes) {
    out << e.episode << ',' << e.cumulative_reward << ',' << e.final_info << ',' << e.collisions << ',' << e.epsilon
        << ',' << e.wall_ms << '\n';
  }
  out.precision(old);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the pair.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TrainingResult train(const EnvConfig& env_config, const AgentConfig& agent_config, std::uint64_t seed,
                     const TrainingHooks& hooks) {
  AgentConfig cfg = agent_config;
  cfg.network.channels = StateImage::kChannels;
  cfg.network.height = env_config.map->height();
  cfg.network.width = env_config.map->width();
  cfg.validate();
#if defined(__GLIBC__)
  // Batch temporaries are several MB; keep them on the heap instead of mmap/munmap per call.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif

  EnvConfig ec = env_config;
  ec.seed = derive_seed(seed, 1);
  PatrolEnv env(ec);

  std::mt19937_64 rng(derive_seed(seed, 2));
  nn::QNetwork online_net(cfg.network);
  nn::QNetwork target_net(cfg.network);
  TrainingResult result;
  result.params = nn::init_params(cfg.network, derive_seed(seed, 3));
  nn::QNetworkParams target = result.params;
  ReplayBuffer buffer(cfg.buffer_capacity, cfg.per_alpha);
  const auto warmup = static_cast<std::size_t>(std::max(cfg.effective_warmup(), cfg.batch_size));
  const bool noisy = cfg.exploration == Exploration::Noisy;
  const ActionMask all_valid = [] {
    ActionMask m;
    m.fill(true);
    return m;
  }();

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const auto t0 = std::chrono::steady_clock::now();
    const double epsilon = noisy ? 0.0 : epsilon_at(cfg, ep);
    const double beta = beta_at(cfg, ep);
    const double lr = learning_rate_at(cfg, ep);

    StateImage state = env.reset();
    auto packed = std::make_shared<const PackedState>(PackedState::pack(state));
    ActionMask mask = env.valid_actions();
    EpisodeLog log;
    log.episode = ep;
    log.epsilon = epsilon;

    bool done = false;
    while (!done) {
      const nn::NoiseDraw act_noise = noisy ? nn::sample_noise(cfg.network, rng) : nn::NoiseDraw{};
      const nn::Matrix q_mat = online_net.forward(result.params, stack_states(state), act_noise);
      std::vector<double> q(q_mat.data(), q_mat.data() + nn::kQOutputs);
      const ActionMask& choice_mask = cfg.censoring ? mask : all_valid;
      if (cfg.censoring) q = censor(q, mask);
      const int action = select_action(q, epsilon, choice_mask, rng);
      if (!mask[static_cast<std::size_t>(action)] && cfg.censoring) result.log.censoring_respected = false;

      StepResult step = env.step(action);
      const ActionMask next_mask = env.valid_actions();
      auto next_packed = std::make_shared<const PackedState>(PackedState::pack(step.state));
      buffer.push(Experience{packed, action, step.reward, next_packed, step.done, next_mask});

      log.cumulative_reward += step.reward;
      log.collisions += step.info.collided ? 1 : 0;
      log.redundant += step.info.redundant ? 1 : 0;

      if (buffer.size() >= warmup) {
        const auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_size), beta, rng);
        std::vector<const Experience*> exps;
        std::vector<const PackedState*> states;
        std::vector<int> actions;
        exps.reserve(batch.indices.size());
        for (auto idx : batch.indices) {
          const Experience& e = buffer.at(idx);
          exps.push_back(&e);
          states.push_back(e.state.get());
          actions.push_back(e.action);
        }
        const nn::NoiseDraw train_noise = noisy ? nn::sample_noise(cfg.network, rng) : nn::NoiseDraw{};
        const auto y = compute_targets(target_net, target, exps, cfg.gamma, cfg.censoring, train_noise);
        const auto loss =
            nn::loss_and_gradients(online_net, result.params, stack_states(states), actions, y, batch.weights, train_noise);
        nn::adam_step(result.params, loss.grad, lr);
        nn::soft_update(target, result.params, cfg.target_rate);
        buffer.update_priorities(batch.indices, loss.td);
      }

      state = std::move(step.state);
      packed = std::move(next_packed);
      mask = next_mask;
      done = step.done;
    }
    log.final_info = env.info();
    log.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.log.episodes.push_back(log);
    if (hooks.on_episode) hooks.on_episode(log, result.params);
  }
  return result;
}

DqnPolicy::DqnPolicy(nn::QNetworkParams params, bool censoring)
    : params_(std::move(params)), net_(params_.config), censoring_(censoring) {}

std::vector<double> DqnPolicy::q_values(const StateImage& state) {
  const nn::Matrix q = net_.forward(params_, stack_states(state), nn::NoiseDraw{});
  return {q.data(), q.data() + nn::kQOutputs};
}

int DqnPolicy::act(const PatrolEnv& env) {
  if (env.map().height() != params_.config.height || env.map().width() != params_.config.width) {
    throw std::invalid_argument("checkpoint was trained on a map of a different size");
  }
  auto q = q_values(env.render_state());
  const ActionMask mask = env.valid_actions();
  if (censoring_) q = censor(q, mask);
  return static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin());
}

}  // namespace ipp
