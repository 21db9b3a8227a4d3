#include "ipp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace ipp {

double metric_information(std::span<const double> info, bool dynamic) {
  if (info.empty()) throw std::invalid_argument("empty information series");
  if (!dynamic) return info.back();
  const auto first = static_cast<std::size_t>(kDynamicWarmSteps) + 1;
  if (info.size() <= first) throw std::invalid_argument("dynamic record shorter than the warm-up steps");
  double sum = 0.0;
  for (std::size_t t = first; t < info.size(); ++t) sum += info[t];
  return sum / static_cast<double>(info.size() - first);
}

double metric_information(const EpisodeRecord& record) { return metric_information(record.info, record.dynamic); }

double metric_coverage(std::span<const double> sigma, double cell_size, double threshold) {
  const auto covered = std::count_if(sigma.begin(), sigma.end(), [&](double s) { return s < threshold; });
  return static_cast<double>(covered) * cell_size * cell_size;
}

double metric_coverage(const EpisodeRecord& record) { return metric_coverage(record.final_sigma, record.cell_size); }

double metric_peak_detection(const std::vector<std::vector<double>>& peak_sigma, bool dynamic, double threshold) {
  if (peak_sigma.empty()) throw std::invalid_argument("no peak sigma recorded");
  const std::size_t k = peak_sigma.front().size();
  int eligible = 0;
  int detected = 0;
  for (std::size_t p = 0; p < k; ++p) {
    bool seen = false;
    bool hit = false;
    const std::size_t first = dynamic ? 0 : peak_sigma.size() - 1;
    for (std::size_t t = first; t < peak_sigma.size(); ++t) {
      const double s = peak_sigma[t].at(p);
      if (std::isnan(s)) continue;
      seen = true;
      hit = hit || s < threshold;
    }
    eligible += seen ? 1 : 0;
    detected += hit ? 1 : 0;
  }
  if (eligible == 0) throw std::invalid_argument("no peak over navigable water");
  return static_cast<double>(detected) / eligible;
}

double metric_peak_detection(const EpisodeRecord& record) {
  return metric_peak_detection(record.peak_sigma, record.dynamic);
}

std::vector<double> gp_regress(const SampleSet& samples, std::span<const double> values, const KernelConfig& kernel,
                               std::span<const Position> targets, bool temporal, int horizon, int t) {
  if (samples.empty()) throw std::invalid_argument("gp_regress needs at least one sample");
  if (values.size() != samples.size()) throw std::invalid_argument("gp_regress: one value per sample required");
  if (horizon < 1) throw std::invalid_argument("gp_regress: horizon must be >= 1");

  SampleSet used;
  std::size_t first = 0;
  if (temporal && samples.size() > static_cast<std::size_t>(horizon)) first = samples.size() - horizon;
  for (std::size_t i = first; i < samples.size(); ++i) used.add(samples.positions[i], samples.times[i]);

  KernelConfig k = kernel;
  if (!temporal) k.tau = 0.0;
  const Eigen::MatrixXd cov = sample_covariance(used, k, t);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("gp_regress: singular sample covariance");
  Eigen::VectorXd y(static_cast<Eigen::Index>(used.size()));
  for (std::size_t i = 0; i < used.size(); ++i) y(static_cast<Eigen::Index>(i)) = values[first + i];
  const Eigen::VectorXd alpha = llt.solve(y);

  std::vector<double> out(targets.size());
  for (std::size_t j = 0; j < targets.size(); ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < used.size(); ++i) {
      m += rbf(targets[j], used.positions[i], kernel.lengthscale) * alpha(static_cast<Eigen::Index>(i));
    }
    out[j] = m;
  }
  return out;
}

double metric_mse(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("metric_mse: shapes differ");
  if (predicted.empty()) throw std::invalid_argument("metric_mse: empty field");
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(predicted.size());
}

double metric_mse(const EpisodeRecord& record, const NavMap& map) {
  const auto pred = gp_regress(record.samples, record.sample_values, record.kernel, map.water_centers(),
                               record.dynamic, record.gp_horizon, record.steps());
  return metric_mse(pred, record.final_truth);
}

EpisodeMetrics compute_metrics(const EpisodeRecord& record, const NavMap& map) {
  EpisodeMetrics m;
  m.information = metric_information(record);
  m.coverage = metric_coverage(record);
  m.peak_detection = metric_peak_detection(record);
  m.mse = metric_mse(record, map);
  m.collisions = record.collisions;
  m.redundant = record.redundant;
  return m;
}

Stat summarize(std::span<const double> values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

MetricsRow aggregate(const std::string& algorithm, std::span<const EpisodeMetrics> episodes) {
  MetricsRow row;
  row.algorithm = algorithm;
  row.episodes = static_cast<int>(episodes.size());
  auto column = [&](auto getter) {
    std::vector<double> v;
    v.reserve(episodes.size());
    for (const auto& e : episodes) v.push_back(static_cast<double>(getter(e)));
    return summarize(v);
  };
  row.information = column([](const EpisodeMetrics& e) { return e.information; });
  row.coverage = column([](const EpisodeMetrics& e) { return e.coverage; });
  row.peak_detection = column([](const EpisodeMetrics& e) { return e.peak_detection; });
  row.mse = column([](const EpisodeMetrics& e) { return e.mse; });
  row.collisions = column([](const EpisodeMetrics& e) { return e.collisions; });
  row.redundant = column([](const EpisodeMetrics& e) { return e.redundant; });
  return row;
}

}  // namespace ipp
