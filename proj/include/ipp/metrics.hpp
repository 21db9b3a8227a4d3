#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ipp/info_field.hpp"
#include "ipp/nav_map.hpp"

namespace ipp {

/// Sampling horizon of the GP used for the temporal MSE.
inline constexpr int kDefaultGpHorizon = 67;
/// Dynamic I statistic averages I_t over the steps after this one.
inline constexpr int kDynamicWarmSteps = 67;
inline constexpr double kCoverageSigma = 0.05;

/// Self-contained trace of one rollout; every metric is a function of it.
struct EpisodeRecord {
  std::string policy;
  std::uint64_t seed = 0;
  bool dynamic = false;
  KernelConfig kernel;
  double cell_size = 0.0;
  int gp_horizon = kDefaultGpHorizon;

  std::vector<Position> positions;  // steps + 1
  std::vector<int> actions;         // steps
  std::vector<double> rewards;      // steps
  std::vector<double> info;         // I_0 .. I_T, steps + 1
  int collisions = 0;
  int redundant = 0;

  SampleSet samples;
  std::vector<double> sample_values;

  std::vector<double> final_sigma;  // water cells
  std::vector<double> final_truth;  // water cells, field at the last step
  /// peak_sigma[t][k]: sigma of the cell containing peak k after step t, NaN
  /// when that cell is land. steps + 1 rows.
  std::vector<std::vector<double>> peak_sigma;

  int steps() const { return static_cast<int>(actions.size()); }
};

/// Static: I_T. Dynamic: mean of I_t for t > kDynamicWarmSteps.
double metric_information(const EpisodeRecord& record);
double metric_information(std::span<const double> info_series, bool dynamic);

/// Water area (km^2) with sigma below the threshold.
double metric_coverage(std::span<const double> sigma, double cell_size, double threshold = kCoverageSigma);
double metric_coverage(const EpisodeRecord& record);

/// Fraction of eligible peaks detected. Static records use the final sigma;
/// dynamic records count a peak once its cell's sigma ever drops below the
/// threshold. Throws when no peak ever sat over water.
double metric_peak_detection(const std::vector<std::vector<double>>& peak_sigma, bool dynamic,
                             double threshold = kCoverageSigma);
double metric_peak_detection(const EpisodeRecord& record);

/// Zero-mean GP posterior mean at `targets`. With `temporal`, only the last
/// `horizon` samples are used and each gets tau (t - t_i)^2 extra variance.
std::vector<double> gp_regress(const SampleSet& samples, std::span<const double> values, const KernelConfig& kernel,
                               std::span<const Position> targets, bool temporal, int horizon, int t);

double metric_mse(std::span<const double> predicted, std::span<const double> truth);
/// GP regression of the record's samples against its final ground truth.
double metric_mse(const EpisodeRecord& record, const NavMap& map);

struct EpisodeMetrics {
  double information = 0.0;
  double coverage = 0.0;
  double peak_detection = 0.0;
  double mse = 0.0;
  int collisions = 0;
  int redundant = 0;
};

EpisodeMetrics compute_metrics(const EpisodeRecord& record, const NavMap& map);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population
};

Stat summarize(std::span<const double> values);

struct MetricsRow {
  std::string algorithm;
  int episodes = 0;
  Stat information;
  Stat coverage;
  Stat peak_detection;
  Stat mse;
  Stat collisions;
  Stat redundant;
};

MetricsRow aggregate(const std::string& algorithm, std::span<const EpisodeMetrics> episodes);

}  // namespace ipp
