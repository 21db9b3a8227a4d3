#include "ipp/harness.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "ipp/agent.hpp"

namespace ipp {
namespace {

std::vector<double> peak_sigmas(const PatrolEnv& env) {
  const NavMap& map = env.map();
  const auto& sigma = env.covariance().sigma();
  std::vector<double> out;
  for (const auto& p : env.ground_truth().peak_locations()) {
    if (!map.navigable(p)) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    out.push_back(sigma[static_cast<std::size_t>(map.water_index(map.index(map.cell_at(p))))]);
  }
  return out;
}

constexpr std::uint64_t kPolicyStream = 0x706f6c;
constexpr std::uint64_t kEpisodeStream = 0x657069;

}  // namespace

EpisodeRecord run_episode(Policy& policy, const EnvConfig& env_config, std::uint64_t seed, int gp_horizon) {
  PatrolEnv env(env_config);
  env.reset(seed);
  policy.begin_episode(env, derive_seed(seed, kPolicyStream));

  EpisodeRecord rec;
  rec.policy = policy.name();
  rec.seed = seed;
  rec.dynamic = env_config.dynamic;
  rec.kernel = env_config.kernel;
  rec.cell_size = env.map().cell_size();
  rec.gp_horizon = gp_horizon;
  rec.positions.push_back(env.position());
  rec.info.push_back(env.info());
  rec.peak_sigma.push_back(peak_sigmas(env));

  while (!env.done()) {
    const int a = policy.act(env);
    const StepResult r = env.step(a);
    rec.actions.push_back(a);
    rec.rewards.push_back(r.reward);
    rec.positions.push_back(env.position());
    rec.info.push_back(env.info());
    rec.peak_sigma.push_back(peak_sigmas(env));
    rec.collisions += r.info.collided ? 1 : 0;
    rec.redundant += r.info.redundant ? 1 : 0;
  }
  rec.samples = env.covariance().samples();
  rec.sample_values = env.sample_values();
  rec.final_sigma = env.covariance().sigma();
  rec.final_truth = env.ground_truth().water_values();
  return rec;
}

PolicyFactory make_policy_factory(const std::string& name, const std::filesystem::path& checkpoint, bool censoring,
                                  const nn::NetworkConfig* expected) {
  for (auto kind : {PlannerKind::Random, PlannerKind::LawnMower, PlannerKind::Nrrc, PlannerKind::IGreedy}) {
    if (name == planner_name(kind)) {
      return [kind] { return std::make_unique<PlannerPolicy>(kind); };
    }
  }
  std::filesystem::path path = name == "drl" ? checkpoint : std::filesystem::path(name);
  if (path.empty()) throw std::invalid_argument("policy 'drl' needs a checkpoint");
  if (!std::filesystem::exists(path)) throw std::invalid_argument("unknown policy or missing checkpoint: " + name);
  auto params = std::make_shared<const nn::QNetworkParams>(nn::load_checkpoint(path));
  if (expected && (params->config.height != expected->height || params->config.width != expected->width ||
                   params->config.channels != expected->channels)) {
    throw std::invalid_argument("checkpoint " + path.string() + " does not match the configured map");
  }
  return [params, censoring] { return std::make_unique<DqnPolicy>(*params, censoring); };
}

std::vector<std::uint64_t> episode_seeds(std::uint64_t seed, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(derive_seed(seed, kEpisodeStream + static_cast<std::uint64_t>(i)));
  return out;
}

PolicyResult evaluate_policy(const std::string& label, const PolicyFactory& factory, const EnvConfig& env_config,
                             const std::vector<std::uint64_t>& seeds, int gp_horizon, int threads) {
  PolicyResult result;
  result.records.resize(seeds.size());
  result.metrics.resize(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    try {
      auto policy = factory();
      for (std::size_t i = next++; i < seeds.size(); i = next++) {
        result.records[i] = run_episode(*policy, env_config, seeds[i], gp_horizon);
        result.records[i].policy = label;
        result.metrics[i] = compute_metrics(result.records[i], *env_config.map);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = seeds.size();
    }
  };

  const int n = std::max(1, std::min<int>(threads, static_cast<int>(seeds.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  result.row = aggregate(label, result.metrics);
  return result;
}

std::vector<PolicyResult> run_benchmark(const RunConfig& config, const std::filesystem::path& out_dir) {
  EnvConfig env = config.env;
  const auto seeds = episode_seeds(config.seed, config.eval_episodes);
  std::vector<PolicyResult> results;
  for (const auto& name : config.policies) {
    const auto factory = make_policy_factory(name, config.checkpoint, config.agent.censoring, &config.agent.network);
    const std::string label = factory()->name();
    results.push_back(evaluate_policy(label, factory, env, seeds, config.gp_horizon, config.threads));
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::vector<MetricsRow> rows;
    for (const auto& r : results) rows.push_back(r.row);
    std::ofstream summary(out_dir / "summary.csv");
    write_summary_csv(summary, rows);
    std::ofstream episodes(out_dir / "episodes.csv");
    write_episodes_csv(episodes, results);
    for (const auto& r : results) {
      for (const auto& rec : r.records) {
        std::ofstream series(out_dir / ("series_" + rec.policy + "_" + std::to_string(rec.seed) + ".csv"));
        write_series_csv(series, rec);
      }
    }
    if (!summary || !episodes) throw std::runtime_error("failed writing results to " + out_dir.string());
  }
  return results;
}

void write_summary_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  const auto old = out.precision(10);
  out << "algorithm,episodes,I_mean,I_std,area_km2_mean,area_km2_std,xi_mean,xi_std,mse_mean,mse_std,"
         "collisions_mean,redundant_mean\n";
  for (const auto& r : rows) {
    out << r.algorithm << ',' << r.episodes << ',' << r.information.mean << ',' << r.information.std << ','
        << r.coverage.mean << ',' << r.coverage.std << ',' << r.peak_detection.mean << ',' << r.peak_detection.std
        << ',' << r.mse.mean << ',' << r.mse.std << ',' << r.collisions.mean << ',' << r.redundant.mean << '\n';
  }
  out.precision(old);
}

void write_episodes_csv(std::ostream& out, const std::vector<PolicyResult>& results) {
  const auto old = out.precision(17);
  out << "algorithm,seed,I,area_km2,xi,mse,collisions,redundant\n";
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      const auto& m = r.metrics[i];
      out << r.row.algorithm << ',' << r.records[i].seed << ',' << m.information << ',' << m.coverage << ','
          << m.peak_detection << ',' << m.mse << ',' << m.collisions << ',' << m.redundant << '\n';
    }
  }
  out.precision(old);
}

void write_series_csv(std::ostream& out, const EpisodeRecord& record) {
  const auto old = out.precision(10);
  out << "step,I_t,reward,x,y,a\n";
  for (std::size_t t = 0; t < record.positions.size(); ++t) {
    out << t << ',' << record.info[t] << ',';
    if (t > 0) out << record.rewards[t - 1];
    out << ',' << record.positions[t].x << ',' << record.positions[t].y << ',';
    if (t > 0) out << action_name(record.actions[t - 1]);
    out << '\n';
  }
  out.precision(old);
}

}  // namespace ipp
