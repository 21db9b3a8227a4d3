#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ipp/agent.hpp"
#include "ipp/config.hpp"
#include "ipp/harness.hpp"
#include "ipp/info_field.hpp"
#include "ipp/nav_map.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<std::uint64_t> read_seeds(const std::string& arg, int count) {
  std::uint64_t base = 0;
  const auto* end = arg.data() + arg.size();
  if (auto [ptr, ec] = std::from_chars(arg.data(), end, base); ec == std::errc() && ptr == end) {
    return ipp::episode_seeds(base, count);
  }
  std::ifstream in(arg);
  if (!in) throw std::runtime_error("--seeds is neither an integer nor a readable file: " + arg);
  std::vector<std::uint64_t> seeds;
  std::uint64_t s = 0;
  while (in >> s) seeds.push_back(s);
  if (!in.eof()) throw std::runtime_error("malformed seed file " + arg);
  if (seeds.empty()) throw std::runtime_error("seed file is empty: " + arg);
  if (count > 0 && static_cast<std::size_t>(count) < seeds.size()) seeds.resize(static_cast<std::size_t>(count));
  return seeds;
}

void print_rows(const std::vector<ipp::PolicyResult>& results) {
  std::vector<ipp::MetricsRow> rows;
  for (const auto& r : results) rows.push_back(r.row);
  ipp::write_summary_csv(std::cout, rows);
}

int cmd_train(const fs::path& config_path, std::uint64_t seed, bool seed_given, const fs::path& out) {
  auto cfg = ipp::load_config(config_path);
  if (seed_given) cfg.seed = seed;
  fs::create_directories(out);
  {
    std::ofstream snap(out / "config.txt");
    snap << ipp::format_config(cfg);
  }

  std::ofstream log_csv(out / "training_log.csv");
  log_csv << "episode,cumulative_reward,I_T,collisions,epsilon,wall_ms\n";
  ipp::TrainingHooks hooks;
  const int every = cfg.agent.checkpoint_every;
  hooks.on_episode = [&](const ipp::EpisodeLog& e, const ipp::nn::QNetworkParams& params) {
    log_csv << e.episode << ',' << e.cumulative_reward << ',' << e.final_info << ',' << e.collisions << ','
            << e.epsilon << ',' << e.wall_ms << '\n';
    if (every > 0 && (e.episode + 1) % every == 0) {
      ipp::nn::save_checkpoint(out / ("checkpoint_" + std::to_string(e.episode + 1) + ".bin"), params);
    }
    if ((e.episode + 1) % 50 == 0) {
      std::cerr << "episode " << e.episode + 1 << " reward " << e.cumulative_reward << " I_T " << e.final_info
                << " collisions " << e.collisions << "\n";
    }
  };
  const auto result = ipp::train(cfg.env, cfg.agent, cfg.seed, hooks);
  ipp::nn::save_checkpoint(out / "model.bin", result.params);
  std::cout << "trained " << result.log.episodes.size() << " episodes, checkpoint " << (out / "model.bin").string()
            << "\n";
  return 0;
}

int cmd_eval(const std::string& policy, const fs::path& config_path, int episodes, const std::string& seeds_arg,
             const fs::path& out) {
  auto cfg = ipp::load_config(config_path);
  const auto seeds = read_seeds(seeds_arg.empty() ? std::to_string(cfg.seed) : seeds_arg, episodes);
  const auto factory = ipp::make_policy_factory(policy, cfg.checkpoint, cfg.agent.censoring, &cfg.agent.network);
  const std::string label = factory()->name();
  std::vector<ipp::PolicyResult> results{
      ipp::evaluate_policy(label, factory, cfg.env, seeds, cfg.gp_horizon, cfg.threads)};
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream summary(out / "summary.csv");
    ipp::write_summary_csv(summary, {results.front().row});
    std::ofstream ep(out / "episodes.csv");
    ipp::write_episodes_csv(ep, results);
    for (const auto& rec : results.front().records) {
      std::ofstream series(out / ("series_" + rec.policy + "_" + std::to_string(rec.seed) + ".csv"));
      ipp::write_series_csv(series, rec);
    }
  }
  print_rows(results);
  return 0;
}

int cmd_benchmark(const fs::path& config_path, std::uint64_t seed, bool seed_given, const fs::path& out) {
  auto cfg = ipp::load_config(config_path);
  if (seed_given) cfg.seed = seed;
  print_rows(ipp::run_benchmark(cfg, out));
  return 0;
}

int cmd_map_info(const fs::path& map_path) {
  auto map = std::make_shared<const ipp::NavMap>(ipp::load_map(map_path));
  const ipp::CovarianceState prior(map, ipp::KernelConfig{});
  std::cout << "width " << map->width() << "\n"
            << "height " << map->height() << "\n"
            << "cell_size_km " << map->cell_size() << "\n"
            << "water_cells " << map->water_cells().size() << "\n"
            << "water_area_km2 " << map->water_cells().size() * map->cell_size() * map->cell_size() << "\n"
            << "prior_information " << ipp::information(prior) << "\n"
            << "prior_entropy_nats " << ipp::entropy(prior) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Informative patrolling planner: DQN training, evaluation and baselines"};
  app.require_subcommand(1);

  fs::path config_path, out_dir, map_path;
  std::uint64_t seed = 0;
  std::string policy, seeds_arg;
  int episodes = 30;

  auto* train = app.add_subcommand("train", "train a censoring noisy dueling DQN");
  train->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  auto* train_seed = train->add_option("--seed", seed, "master seed (overrides the config)");
  train->add_option("--out", out_dir, "output directory")->required();

  auto* eval = app.add_subcommand("eval", "evaluate one policy");
  eval->add_option("--policy", policy, "random|lawnmower|nrrc|igreedy|drl|<checkpoint file>")->required();
  eval->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes, "episode count")->check(CLI::PositiveNumber);
  eval->add_option("--seeds", seeds_arg, "seed file (one per line) or base seed");
  eval->add_option("--out", out_dir, "output directory");

  auto* bench = app.add_subcommand("benchmark", "evaluate every configured policy on shared seeds");
  bench->add_option("--config", config_path, "config file")->required()->check(CLI::ExistingFile);
  auto* bench_seed = bench->add_option("--seed", seed, "master seed (overrides the config)");
  bench->add_option("--out", out_dir, "output directory")->required();

  auto* info = app.add_subcommand("map-info", "print map statistics");
  info->add_option("--map", map_path, "map file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path, seed, train_seed->count() > 0, out_dir);
    if (*eval) return cmd_eval(policy, config_path, episodes, seeds_arg, out_dir);
    if (*bench) return cmd_benchmark(config_path, seed, bench_seed->count() > 0, out_dir);
    if (*info) return cmd_map_info(map_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
