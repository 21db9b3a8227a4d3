#pragma once

#include <cmath>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ipp/info_field.hpp"
#include "ipp/nav_map.hpp"

namespace ipp::test {

inline std::shared_ptr<const NavMap> map_from(std::initializer_list<std::string> rows, double cell_size) {
  std::string doc = "cellsize " + std::to_string(cell_size) + "\n";
  for (const auto& r : rows) doc += r + "\n";
  return std::make_shared<const NavMap>(parse_map(doc));
}

inline std::shared_ptr<const NavMap> open_map(int width, int height, double cell_size) {
  return std::make_shared<const NavMap>(width, height, cell_size,
                                        std::vector<bool>(static_cast<std::size_t>(width * height), true));
}

inline double corr(const Position& a, const Position& b, double l) {
  const double d2 = (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
  return std::exp(-d2 / (2.0 * l * l));
}

/// Posterior covariance over the water cells straight from the Schur
/// complement, solved with a pivoted LU in extended precision.
inline Eigen::MatrixXd dense_posterior(const NavMap& map, const KernelConfig& k, const SampleSet& s, int t) {
  using Real = long double;
  using M = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  auto c = [&](const Position& a, const Position& b) {
    const Real dx = static_cast<Real>(a.x) - b.x, dy = static_cast<Real>(a.y) - b.y;
    const Real l = k.lengthscale;
    return std::exp(-(dx * dx + dy * dy) / (2 * l * l));
  };
  const auto& xs = map.water_centers();
  const auto n = static_cast<Eigen::Index>(xs.size());
  const auto m = static_cast<Eigen::Index>(s.size());
  M kxx(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) kxx(i, j) = c(xs[i], xs[j]);
  if (m > 0) {
    M kmm(m, m);
    M kmx(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) kmm(i, j) = c(s.positions[i], s.positions[j]);
      const Real age = t - s.times[i];
      kmm(i, i) += static_cast<Real>(k.tau) * age * age + static_cast<Real>(k.jitter);
      for (Eigen::Index j = 0; j < n; ++j) kmx(i, j) = c(s.positions[i], xs[j]);
    }
    kxx -= kmx.transpose() * kmm.fullPivLu().solve(kmx);
  }
  return kxx.cast<double>();
}

inline std::vector<double> dense_sigma(const NavMap& map, const KernelConfig& k, const SampleSet& s, int t) {
  const Eigen::MatrixXd post = dense_posterior(map, k, s, t);
  std::vector<double> out(static_cast<std::size_t>(post.rows()));
  for (Eigen::Index i = 0; i < post.rows(); ++i) out[i] = std::sqrt(std::max(0.0, post(i, i)));
  return out;
}

}  // namespace ipp::test
