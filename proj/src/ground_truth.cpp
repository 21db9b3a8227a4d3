#include "ipp/ground_truth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ipp {

namespace {

double reflect(double v, double hi) {
  // A single Brownian step is far shorter than the map, but loop anyway.
  for (int i = 0; i < 8 && (v < 0.0 || v > hi); ++i) {
    if (v < 0.0) v = -v;
    if (v > hi) v = 2.0 * hi - v;
  }
  return std::clamp(v, 0.0, hi);
}

}  // namespace

GroundTruth::GroundTruth(std::shared_ptr<const NavMap> map, std::vector<Peak> peaks, std::mt19937_64 rng)
    : map_(std::move(map)), peaks_(std::move(peaks)), rng_(rng) {
  renormalize();
}

GroundTruth GroundTruth::generate(std::shared_ptr<const NavMap> map, std::uint64_t seed, const ShekelConfig& config) {
  if (!map) throw std::invalid_argument("ground truth needs a map");
  if (config.n_peaks < 1) throw std::invalid_argument("n_peaks must be >= 1");
  if (!(config.sharpness_min > 0.0) || config.sharpness_max < config.sharpness_min) {
    throw std::invalid_argument("invalid Shekel sharpness range");
  }
  std::mt19937_64 rng(seed);
  const auto& cells = map->water_cells();
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  std::uniform_real_distribution<double> sharp(config.sharpness_min, config.sharpness_max);
  std::vector<Peak> peaks;
  peaks.reserve(static_cast<std::size_t>(config.n_peaks));
  for (int k = 0; k < config.n_peaks; ++k) {
    const Position c = map->center(cells[pick(rng)]);
    peaks.push_back({c, sharp(rng)});
  }
  return GroundTruth(std::move(map), std::move(peaks), rng);
}

double GroundTruth::raw(const Position& p) const {
  double f = 0.0;
  for (const auto& pk : peaks_) {
    const double dx = p.x - pk.center.x;
    const double dy = p.y - pk.center.y;
    f += 1.0 / (pk.sharpness + dx * dx + dy * dy);
  }
  return f;
}

void GroundTruth::renormalize() {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& c : map_->water_centers()) {
    const double v = raw(c);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  min_ = lo;
  max_ = hi;
}

double GroundTruth::evaluate(const Position& p) const {
  if (!map_->navigable(p)) throw std::invalid_argument("ground truth evaluated at a non-navigable position");
  const double range = max_ - min_;
  if (!(range > 0.0)) return 1.0;
  return std::clamp((raw(p) - min_) / range, 0.0, 1.0);
}

std::vector<double> GroundTruth::water_values() const {
  std::vector<double> out;
  out.reserve(map_->water_centers().size());
  const double range = max_ - min_;
  for (const auto& c : map_->water_centers()) {
    out.push_back(range > 0.0 ? std::clamp((raw(c) - min_) / range, 0.0, 1.0) : 1.0);
  }
  return out;
}

GroundTruth GroundTruth::advance(int steps, double v_max_cells) const {
  if (steps < 0) throw std::invalid_argument("advance steps must be >= 0");
  if (!(v_max_cells >= 0.0)) throw std::invalid_argument("v_max must be >= 0");
  GroundTruth next(*this);
  if (steps == 0 || v_max_cells == 0.0) return next;

  const double vmax = v_max_cells * map_->cell_size();
  const double xmax = map_->width() * map_->cell_size();
  const double ymax = map_->height() * map_->cell_size();
  std::normal_distribution<double> gauss(0.0, 0.5 * vmax);
  for (int s = 0; s < steps; ++s) {
    for (auto& pk : next.peaks_) {
      double dx = gauss(next.rng_);
      double dy = gauss(next.rng_);
      const double norm = std::hypot(dx, dy);
      if (norm > vmax) {
        dx *= vmax / norm;
        dy *= vmax / norm;
      }
      pk.center.x = reflect(pk.center.x + dx, xmax);
      pk.center.y = reflect(pk.center.y + dy, ymax);
    }
  }
  next.renormalize();
  return next;
}

std::vector<Position> GroundTruth::peak_locations() const {
  std::vector<Position> out;
  out.reserve(peaks_.size());
  for (const auto& pk : peaks_) out.push_back(pk.center);
  return out;
}

}  // namespace ipp
