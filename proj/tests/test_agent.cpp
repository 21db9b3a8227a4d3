#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "ipp/agent.hpp"
#include "ipp/baselines.hpp"
#include "support.hpp"

using namespace ipp;
using ipp::test::open_map;

namespace {

nn::NetworkConfig tiny_network(int h, int w) {
  nn::NetworkConfig c;
  c.height = h;
  c.width = w;
  c.conv_filters = {4};
  c.fc_widths = {16};
  c.value_hidden = 8;
  c.advantage_hidden = 8;
  return c;
}

AgentConfig tiny_agent(int h, int w, int episodes) {
  AgentConfig a;
  a.network = tiny_network(h, w);
  a.episodes = episodes;
  a.batch_size = 8;
  a.warmup = 16;
  a.buffer_capacity = 2000;
  a.learning_rate = 1e-3;
  a.target_rate = 0.01;
  return a;
}

std::shared_ptr<const PackedState> packed_random(int h, int w, std::mt19937_64& rng) {
  StateImage img(h, w);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : img.data) v = u(rng);
  return std::make_shared<const PackedState>(PackedState::pack(img));
}

}  // namespace

TEST(Censor, ReplacesInvalidActions) {
  const std::vector<double> q{5, 1, 2, 3, 4, 9, 0, -1};
  ActionMask mask{};
  mask[1] = mask[3] = mask[6] = true;
  const auto c = censor(q, mask);
  for (std::size_t a = 0; a < 8; ++a) EXPECT_EQ(c[a], mask[a] ? q[a] : kCensoredQ);
  std::mt19937_64 rng(1);
  EXPECT_EQ(select_action(c, 0.0, mask, rng), 3);
  EXPECT_THROW(censor(q, ActionMask{}), std::invalid_argument);
  EXPECT_THROW(censor(std::vector<double>{1.0}, mask), std::invalid_argument);
}

TEST(SelectAction, GreedyTiesAndUniformExploration) {
  std::mt19937_64 rng(2);
  ActionMask all;
  all.fill(true);
  EXPECT_EQ(select_action(std::vector<double>{0, 3, 3, 1, 0, 0, 0, 0}, 0.0, all, rng), 1);

  ActionMask mask{};
  mask[0] = mask[4] = mask[7] = true;
  const auto q = censor(std::vector<double>(8, 0.0), mask);
  std::map<int, int> counts;
  for (int i = 0; i < 30000; ++i) ++counts[select_action(q, 1.0, mask, rng)];
  ASSERT_EQ(counts.size(), 3u);
  for (auto [a, c] : counts) {
    EXPECT_TRUE(mask[static_cast<std::size_t>(a)]);
    EXPECT_NEAR(c / 30000.0, 1.0 / 3, 0.015);
  }
}

TEST(Schedules, EpsilonAndBeta) {
  AgentConfig c;
  c.epsilon_decay_episodes = 100;
  EXPECT_DOUBLE_EQ(epsilon_at(c, 0), 1.0);
  EXPECT_NEAR(epsilon_at(c, 50), 0.525, 1e-12);
  EXPECT_DOUBLE_EQ(epsilon_at(c, 100), 0.05);
  EXPECT_DOUBLE_EQ(epsilon_at(c, 5000), 0.05);
  c.episodes = 11;
  EXPECT_DOUBLE_EQ(beta_at(c, 0), 0.5);
  EXPECT_DOUBLE_EQ(beta_at(c, 5), 0.75);
  EXPECT_DOUBLE_EQ(beta_at(c, 10), 1.0);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 7), c.learning_rate);
  c.learning_rate = 1e-3;
  c.learning_rate_end = 1e-4;
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 0), 1e-3);
  EXPECT_NEAR(learning_rate_at(c, 5), 5.5e-4, 1e-15);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 10), 1e-4);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 50), 1e-4);
  EXPECT_EQ(c.effective_warmup(), 500);
  c.batch_size = 600;
  c.buffer_capacity = 1000;
  EXPECT_EQ(c.effective_warmup(), 600);
  c.warmup = 10;
  EXPECT_EQ(c.effective_warmup(), 10);
}

TEST(AgentConfig, Validation) {
  AgentConfig c;
  c.network = tiny_network(8, 8);
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.gamma = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.batch_size = 30000;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.learning_rate_end = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.network.noisy = false;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad.exploration = Exploration::EpsilonGreedy;
  EXPECT_NO_THROW(bad.validate());
}

TEST(Targets, TerminalCensoredAndUncensored) {
  const int h = 4, w = 4;
  const auto cfg = tiny_network(h, w);
  nn::QNetwork net(cfg);
  const auto params = nn::init_params(cfg, 5);
  std::mt19937_64 rng(5);
  std::vector<Experience> exps(3);
  for (auto& e : exps) {
    e.state = packed_random(h, w, rng);
    e.next_state = packed_random(h, w, rng);
    e.reward = 0.7;
  }
  exps[0].done = true;
  exps[1].next_mask[2] = exps[1].next_mask[6] = true;
  exps[2].next_mask.fill(true);
  std::vector<const Experience*> batch{&exps[0], &exps[1], &exps[2]};
  const auto noise = nn::zero_noise(cfg);

  std::vector<const PackedState*> next{exps[0].next_state.get(), exps[1].next_state.get(), exps[2].next_state.get()};
  const nn::Matrix qn = net.forward(params, stack_states(next), noise);
  const auto y = compute_targets(net, params, batch, 0.9, true, noise);
  EXPECT_DOUBLE_EQ(y[0], 0.7);
  EXPECT_NEAR(y[1], 0.7 + 0.9 * std::max(qn(2, 1), qn(6, 1)), 1e-12);
  EXPECT_NEAR(y[2], 0.7 + 0.9 * qn.col(2).maxCoeff(), 1e-12);
  const auto u = compute_targets(net, params, batch, 0.9, false, noise);
  EXPECT_NEAR(u[1], 0.7 + 0.9 * qn.col(1).maxCoeff(), 1e-12);

  exps[1].next_mask = ActionMask{};
  EXPECT_THROW(compute_targets(net, params, batch, 0.9, true, noise), std::invalid_argument);
}

TEST(StackStates, ColumnLayout) {
  StateImage img(2, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = 0.125 * static_cast<double>(i);
  const auto p = PackedState::pack(img);
  std::vector<const PackedState*> v{&p, &p};
  const auto m = stack_states(v);
  ASSERT_EQ(m.rows(), 18);
  ASSERT_EQ(m.cols(), 2);
  for (int i = 0; i < 18; ++i) {
    EXPECT_EQ(m(i, 0), img.data[static_cast<std::size_t>(i)]);
    EXPECT_EQ(m(i, 1), img.data[static_cast<std::size_t>(i)]);
  }
  EXPECT_EQ(stack_states(img), m.col(0));
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

TEST(Training, DeterministicForSeed) {
  const auto m = open_map(8, 8, 0.225);
  EnvConfig env;
  env.map = m;
  env.step_budget = 12;
  auto agent = tiny_agent(8, 8, 5);
  const auto a = train(env, agent, 42);
  const auto b = train(env, agent, 42);
  EXPECT_EQ(a.params.values, b.params.values);
  ASSERT_EQ(a.log.episodes.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a.log.episodes[i].cumulative_reward, b.log.episodes[i].cumulative_reward);
    EXPECT_EQ(a.log.episodes[i].final_info, b.log.episodes[i].final_info);
  }
  const auto c = train(env, agent, 43);
  EXPECT_NE(a.params.values, c.params.values);
  EXPECT_GT(a.params.adam_step, 0);
}

TEST(Training, CensoringPreventsCollisions) {
  const auto m = ipp::test::map_from({"0011111100", "0111111110", "1111001111", "1111001111", "0111111110",
                                      "0011111100"},
                                     0.225);
  EnvConfig env;
  env.map = m;
  env.step_budget = 25;
  for (auto exploration : {Exploration::Noisy, Exploration::EpsilonGreedy}) {
    auto agent = tiny_agent(6, 10, 8);
    agent.network.conv_filters = {4};
    agent.exploration = exploration;
    agent.epsilon_decay_episodes = 4;
    const auto r = train(env, agent, 3);
    EXPECT_TRUE(r.log.censoring_respected);
    for (const auto& e : r.log.episodes) EXPECT_EQ(e.collisions, 0);

    agent.censoring = false;
    agent.exploration = Exploration::EpsilonGreedy;
    agent.epsilon_decay_episodes = 1000;  // nearly uniform over all eight moves
    const auto u = train(env, agent, 3);
    int collisions = 0;
    for (const auto& e : u.log.episodes) collisions += e.collisions;
    EXPECT_GT(collisions, 0);
  }
}

TEST(Training, HookSeesEveryEpisodeAndLogCsv) {
  const auto m = open_map(8, 8, 0.225);
  EnvConfig env;
  env.map = m;
  env.step_budget = 6;
  auto agent = tiny_agent(8, 8, 3);
  std::vector<int> seen;
  TrainingHooks hooks;
  hooks.on_episode = [&](const EpisodeLog& log, const nn::QNetworkParams& p) {
    seen.push_back(log.episode);
    EXPECT_EQ(p.values.size(), agent.network.parameter_count());
  };
  const auto r = train(env, agent, 1, hooks);
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2}));
  std::ostringstream csv;
  r.log.write_csv(csv);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "episode,cumulative_reward,I_T,collisions,epsilon,wall_ms");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(DqnPolicy, GreedyCensoredAndShapeChecked) {
  const auto m = open_map(8, 8, 0.225);
  auto cfg = tiny_network(8, 8);
  DqnPolicy policy(nn::init_params(cfg, 9), true);
  EnvConfig env_cfg;
  env_cfg.map = m;
  env_cfg.step_budget = 30;
  PatrolEnv env(env_cfg);
  env.reset(1);
  while (!env.done()) {
    const auto mask = env.valid_actions();
    const int a = policy.act(env);
    ASSERT_TRUE(mask[static_cast<std::size_t>(a)]);
    const auto q = censor(policy.q_values(env.render_state()), mask);
    EXPECT_EQ(a, std::max_element(q.begin(), q.end()) - q.begin());
    env.step(a);
  }
  EXPECT_EQ(env.collisions(), 0);

  EnvConfig other = env_cfg;
  other.map = open_map(9, 8, 0.225);
  PatrolEnv env2(other);
  env2.reset(1);
  EXPECT_THROW(policy.act(env2), std::invalid_argument);
}

TEST(Training, RewardImprovesOnSmallLake) {
  const auto m = open_map(12, 10, 0.225);
  EnvConfig env;
  env.map = m;
  env.step_budget = 20;
  auto agent = tiny_agent(10, 12, 150);
  agent.network.conv_filters = {8, 8};
  agent.network.fc_widths = {64};
  agent.batch_size = 32;
  agent.warmup = 200;
  agent.learning_rate = 5e-4;
  agent.target_rate = 0.005;
  const auto r = train(env, agent, 7);
  double early = 0.0, late = 0.0;
  for (int i = 0; i < 30; ++i) {
    early += r.log.episodes[static_cast<std::size_t>(i)].cumulative_reward;
    late += r.log.episodes[static_cast<std::size_t>(120 + i)].cumulative_reward;
  }
  EXPECT_GT(late, early);
  EXPECT_TRUE(r.log.censoring_respected);
}
