#include "ipp/info_field.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

namespace ipp {

namespace {

constexpr double kSigmaOvershoot = 1e-9;
// Pivot floor relative to the unit prior variance.
constexpr double kMinPivot = 1e-14;

}  // namespace

void KernelConfig::validate() const {
  if (!(lengthscale > 0.0)) throw std::invalid_argument("kernel lengthscale must be > 0");
  if (!(jitter > 0.0)) throw std::invalid_argument("kernel jitter must be > 0");
  if (!(tau >= 0.0)) throw std::invalid_argument("kernel tau must be >= 0");
}

void SampleSet::add(const Position& p, int t) {
  if (!times.empty() && t < times.back()) throw std::invalid_argument("sample times must be non-decreasing");
  positions.push_back(p);
  times.push_back(t);
}

void SampleSet::validate() const {
  if (positions.size() != times.size()) throw std::invalid_argument("sample positions/times length mismatch");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] < times[i - 1]) throw std::invalid_argument("sample times must be non-decreasing");
  }
}

double rbf(const Position& p, const Position& q, double lengthscale) {
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  return std::exp(-(dx * dx + dy * dy) / (2.0 * lengthscale * lengthscale));
}

Eigen::MatrixXd sample_covariance(const SampleSet& samples, const KernelConfig& kernel, int t) {
  samples.validate();
  const auto m = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd k(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const int age = t - samples.times[static_cast<std::size_t>(i)];
    if (age < 0) throw std::invalid_argument("sample time is in the future of the evaluation step");
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = rbf(samples.positions[static_cast<std::size_t>(i)], samples.positions[static_cast<std::size_t>(j)],
                           kernel.lengthscale);
      k(i, j) = v;
      k(j, i) = v;
    }
    k(i, i) = 1.0 + kernel.tau * static_cast<double>(age) * age + kernel.jitter;
  }
  return k;
}

CovarianceState::CovarianceState(std::shared_ptr<const NavMap> map, KernelConfig kernel)
    : map_(std::move(map)), kernel_(kernel) {
  if (!map_) throw std::invalid_argument("CovarianceState needs a map");
  kernel_.validate();
  sigma_.assign(map_->water_cells().size(), 1.0);
  const auto n = static_cast<Eigen::Index>(sigma_.size());
  cross_.resize(0, n);
  whitened_.resize(0, n);
}

void CovarianceState::refactor() {
  const Eigen::Index m = inner_.rows();
  Eigen::MatrixXd k = inner_;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double age = current_time_ - samples_.times[static_cast<std::size_t>(i)];
    k(i, i) += kernel_.tau * age * age + kernel_.jitter;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw std::runtime_error("sample covariance is not positive definite");
  chol_ = llt.matrixL();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (chol_(i, i) * chol_(i, i) < kMinPivot) {
      throw std::runtime_error("sample covariance is numerically singular (duplicate samples?)");
    }
  }
  whitened_ = chol_.triangularView<Eigen::Lower>().solve(cross_);
  update_sigma();
}

void CovarianceState::update_sigma() {
  const auto n = static_cast<Eigen::Index>(sigma_.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double var = 1.0 - whitened_.col(i).squaredNorm();
    if (var > 1.0 + kSigmaOvershoot) {
      throw std::runtime_error("posterior variance exceeds prior at water cell " + std::to_string(i));
    }
    sigma_[static_cast<std::size_t>(i)] = var > 0.0 ? std::sqrt(var) : 0.0;
  }
}

CovarianceState CovarianceState::with_sample(const Position& p, int t) const {
  if (t < current_time_) throw std::invalid_argument("cannot add a sample in the past");
  if (!map_->navigable(p)) throw std::invalid_argument("sample position is not navigable");

  CovarianceState next(*this);
  next.samples_.add(p, t);
  const bool aged = kernel_.tau > 0.0 && t != current_time_;
  next.current_time_ = t;

  const Eigen::Index m = inner_.rows();
  const auto& centers = map_->water_centers();
  const auto n = static_cast<Eigen::Index>(centers.size());

  Eigen::RowVectorXd cross_row(n);
  for (Eigen::Index j = 0; j < n; ++j) cross_row(j) = rbf(p, centers[static_cast<std::size_t>(j)], kernel_.lengthscale);
  Eigen::VectorXd inner_col(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    inner_col(i) = rbf(p, samples_.positions[static_cast<std::size_t>(i)], kernel_.lengthscale);
  }

  next.cross_.conservativeResize(m + 1, Eigen::NoChange);
  next.cross_.row(m) = cross_row;
  next.inner_.conservativeResize(m + 1, m + 1);
  next.inner_.col(m).head(m) = inner_col;
  next.inner_.row(m).head(m) = inner_col.transpose();
  next.inner_(m, m) = 1.0;

  if (aged) {
    next.refactor();
    return next;
  }

  // Rank-one extension of the Cholesky factor; every existing diagonal term is unchanged.
  const double diag = 1.0 + kernel_.jitter;
  Eigen::VectorXd l = m > 0 ? Eigen::VectorXd(chol_.triangularView<Eigen::Lower>().solve(inner_col)) : Eigen::VectorXd();
  const double pivot2 = diag - l.squaredNorm();
  if (pivot2 < kMinPivot) throw std::runtime_error("sample covariance is numerically singular (duplicate samples?)");
  const double pivot = std::sqrt(pivot2);

  next.chol_.conservativeResize(m + 1, m + 1);
  next.chol_.row(m).head(m) = l.transpose();
  next.chol_.col(m).setZero();
  next.chol_(m, m) = pivot;

  next.whitened_.conservativeResize(m + 1, Eigen::NoChange);
  if (m > 0) {
    next.whitened_.row(m) = (cross_row - l.transpose() * whitened_) / pivot;
  } else {
    next.whitened_.row(m) = cross_row / pivot;
  }
  next.update_sigma();
  return next;
}

CovarianceState CovarianceState::at_time(int t) const {
  if (t < current_time_) throw std::invalid_argument("cannot move a covariance state back in time");
  CovarianceState next(*this);
  next.current_time_ = t;
  if (kernel_.tau > 0.0 && t != current_time_ && !samples_.empty()) next.refactor();
  return next;
}

Eigen::MatrixXd CovarianceState::posterior_covariance() const {
  const auto& centers = map_->water_centers();
  const auto n = static_cast<Eigen::Index>(centers.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cov(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = rbf(centers[static_cast<std::size_t>(i)], centers[static_cast<std::size_t>(j)], kernel_.lengthscale);
      cov(i, j) = v;
      cov(j, i) = v;
    }
  }
  if (whitened_.rows() > 0) cov.noalias() -= whitened_.transpose() * whitened_;
  return cov;
}

CovarianceState condition(std::shared_ptr<const NavMap> map, const KernelConfig& kernel, const SampleSet& samples,
                          int t) {
  samples.validate();
  CovarianceState state(std::move(map), kernel);
  state.current_time_ = t;
  if (samples.empty()) return state;

  const auto& centers = state.map_->water_centers();
  const auto n = static_cast<Eigen::Index>(centers.size());
  const auto m = static_cast<Eigen::Index>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples.times[i] > t) throw std::invalid_argument("sample time is in the future of the evaluation step");
    if (!state.map_->navigable(samples.positions[i])) throw std::invalid_argument("sample position is not navigable");
  }
  state.samples_ = samples;
  state.cross_.resize(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      state.cross_(i, j) =
          rbf(samples.positions[static_cast<std::size_t>(i)], centers[static_cast<std::size_t>(j)], kernel.lengthscale);
    }
  }
  state.inner_.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = i == j ? 1.0
                              : rbf(samples.positions[static_cast<std::size_t>(i)],
                                    samples.positions[static_cast<std::size_t>(j)], kernel.lengthscale);
      state.inner_(i, j) = v;
      state.inner_(j, i) = v;
    }
  }
  state.refactor();
  return state;
}

double information(const CovarianceState& state) {
  double total = 0.0;
  for (double s : state.sigma()) total += s * s;
  return total;
}

double information_gain(const CovarianceState& before, const CovarianceState& after) {
  if (&before.map() != &after.map() && before.map().water_cells() != after.map().water_cells()) {
    throw std::invalid_argument("information_gain requires states over the same map");
  }
  return information(before) - information(after);
}

double entropy(const CovarianceState& state) {
  Eigen::MatrixXd cov = state.posterior_covariance();
  cov.diagonal().array() += state.kernel().jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("posterior covariance is not positive definite");
  const auto& l = llt.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) logdet += 2.0 * std::log(l(i, i));
  const double n = static_cast<double>(cov.rows());
  return 0.5 * logdet + 0.5 * n * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

std::vector<double> uncertainty_channel(const CovarianceState& state) {
  const NavMap& map = state.map();
  std::vector<double> raster(static_cast<std::size_t>(map.cell_count()), 0.0);
  const auto& cells = map.water_cells();
  const auto& sigma = state.sigma();
  for (std::size_t i = 0; i < cells.size(); ++i) raster[static_cast<std::size_t>(cells[i])] = sigma[i];
  return raster;
}

}  // namespace ipp
