#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "ipp/nav_map.hpp"

namespace ipp {

struct Peak {
  Position center;
  double sharpness = 1.0;  // c_k in km^2; smaller is sharper
};

struct ShekelConfig {
  int n_peaks = 5;
  double sharpness_min = 0.15;
  double sharpness_max = 1.0;
};

/// Randomized Shekel field sum_k 1 / (c_k + |x - a_k|^2), min-max normalized
/// over the water cell centers. Peaks may drift with a clipped Brownian walk.
class GroundTruth {
 public:
  static GroundTruth generate(std::shared_ptr<const NavMap> map, std::uint64_t seed, const ShekelConfig& config = {});

  /// Normalized value at p, clamped into [0, 1]. Throws for non-navigable p.
  double evaluate(const Position& p) const;
  /// Un-normalized Shekel sum.
  double raw(const Position& p) const;

  /// Field after `steps` Brownian steps of each peak. Per-step displacement is
  /// isotropic Gaussian with std 0.5 * v_max, clipped to norm v_max, where
  /// v_max = v_max_cells * cell_size km; peaks reflect at the map bounds.
  GroundTruth advance(int steps, double v_max_cells) const;

  std::vector<Position> peak_locations() const;
  const std::vector<Peak>& peaks() const { return peaks_; }
  /// Normalized values at the water cell centers, NavMap::water_cells() order.
  std::vector<double> water_values() const;
  const NavMap& map() const { return *map_; }
  double norm_min() const { return min_; }
  double norm_max() const { return max_; }

 private:
  GroundTruth(std::shared_ptr<const NavMap> map, std::vector<Peak> peaks, std::mt19937_64 rng);
  void renormalize();

  std::shared_ptr<const NavMap> map_;
  std::vector<Peak> peaks_;
  std::mt19937_64 rng_;
  double min_ = 0.0;
  double max_ = 1.0;
};

}  // namespace ipp
