#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "ipp/nav_map.hpp"

namespace ipp {

/// RBF correlation parameters plus the temporal forgetting rate.
struct KernelConfig {
  double lengthscale = 1.125;  // km
  double jitter = 1e-6;        // added to the sample covariance diagonal
  double tau = 0.0;            // per step^2; 0 disables forgetting

  void validate() const;
};

/// Sampled locations and the decision step at which each was taken.
struct SampleSet {
  std::vector<Position> positions;
  std::vector<int> times;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  void add(const Position& p, int t);
  void validate() const;
};

/// Squared-exponential correlation exp(-|p-q|^2 / (2 l^2)).
double rbf(const Position& p, const Position& q, double lengthscale);

/// RBF(X_meas, X_meas) + (tau (t - t_meas)^2 + jitter) I.
Eigen::MatrixXd sample_covariance(const SampleSet& samples, const KernelConfig& kernel, int t);

/// Posterior marginal standard deviation over the water cells of a map,
/// given a sample set evaluated at step `current_time`.
///
/// Keeps the Cholesky factor L of the sample covariance and V = L^-1 K(X_meas, X)
/// so that sigma_i^2 = 1 - |V_i|^2. With tau == 0 a new sample extends L and V
/// by one row in O(m n); otherwise the factorization is rebuilt.
class CovarianceState {
 public:
  CovarianceState(std::shared_ptr<const NavMap> map, KernelConfig kernel);

  const NavMap& map() const { return *map_; }
  const std::shared_ptr<const NavMap>& map_ptr() const { return map_; }
  const KernelConfig& kernel() const { return kernel_; }
  const SampleSet& samples() const { return samples_; }
  int current_time() const { return current_time_; }

  /// sigma per water cell, in NavMap::water_cells() order.
  const std::vector<double>& sigma() const { return sigma_; }

  /// New state with one more sample taken at step t (t >= current_time()).
  CovarianceState with_sample(const Position& p, int t) const;
  /// Same samples re-evaluated at a later step.
  CovarianceState at_time(int t) const;

  /// Full posterior covariance over the water cells (n x n), jitter excluded.
  Eigen::MatrixXd posterior_covariance() const;

 private:
  friend CovarianceState condition(std::shared_ptr<const NavMap>, const KernelConfig&, const SampleSet&, int);

  void refactor();
  void update_sigma();

  std::shared_ptr<const NavMap> map_;
  KernelConfig kernel_;
  SampleSet samples_;
  int current_time_ = 0;
  std::vector<double> sigma_;

  Eigen::MatrixXd cross_;    // m x n, RBF(X_meas, X)
  Eigen::MatrixXd inner_;    // m x m, RBF(X_meas, X_meas)
  Eigen::MatrixXd chol_;     // m x m lower factor of sample_covariance
  Eigen::MatrixXd whitened_; // m x n, chol^-1 cross
};

/// Posterior state of the map conditioned on `samples` at step t.
CovarianceState condition(std::shared_ptr<const NavMap> map, const KernelConfig& kernel, const SampleSet& samples,
                          int t);

/// Trace of the posterior covariance (A-optimal information).
double information(const CovarianceState& state);
double information_gain(const CovarianceState& before, const CovarianceState& after);

/// Differential entropy of the posterior over water cells, in nats.
double entropy(const CovarianceState& state);

/// Row-major height x width raster: sigma on water cells, 0 on land.
std::vector<double> uncertainty_channel(const CovarianceState& state);

}  // namespace ipp
