#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "ipp/nav_map.hpp"
#include "ipp/patrol_env.hpp"

namespace ipp {

/// Binary tree of partial sums over a fixed number of leaves.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  void set(std::size_t leaf, double value);
  double get(std::size_t leaf) const { return nodes_[base_ + leaf]; }
  double total() const { return nodes_[1]; }
  /// Leaf whose cumulative interval contains `mass`, for mass in [0, total()).
  std::size_t find(double mass) const;

 private:
  std::size_t capacity_;
  std::size_t base_;
  std::vector<double> nodes_;
};

/// State raster stored at single precision; replay memory dominates RAM.
struct PackedState {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  static PackedState pack(const StateImage& img);
  StateImage unpack() const;
};

struct Experience {
  std::shared_ptr<const PackedState> state;
  int action = 0;
  double reward = 0.0;
  std::shared_ptr<const PackedState> next_state;
  bool done = false;
  ActionMask next_mask{};
};

/// Proportional prioritized replay with FIFO eviction. Sampling probability is
/// priority^alpha / sum(priority^alpha); new entries get the largest priority
/// seen so far.
class ReplayBuffer {
 public:
  static constexpr double kPriorityFloor = 1e-6;

  ReplayBuffer(std::size_t capacity, double alpha);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  double alpha() const { return alpha_; }
  double max_priority() const { return max_priority_; }

  void push(Experience e);
  const Experience& at(std::size_t index) const { return items_.at(index); }
  double priority(std::size_t index) const { return priorities_.at(index); }
  /// P_i of drawing entry i.
  double probability(std::size_t index) const;
  double total_mass() const { return tree_.total(); }

  struct Batch {
    std::vector<std::size_t> indices;
    std::vector<double> probabilities;
    /// (N P_i)^-beta divided by the batch maximum.
    std::vector<double> weights;
  };
  /// Stratified draw: one index from each of batch_size equal slices of the
  /// priority mass.
  Batch sample(std::size_t batch_size, double beta, std::mt19937_64& rng) const;

  /// priority_i = |td_i| + kPriorityFloor.
  void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors);

 private:
  void set_priority(std::size_t index, double priority);

  std::size_t capacity_;
  double alpha_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  double max_priority_ = 1.0;
  std::vector<Experience> items_;
  std::vector<double> priorities_;
  SumTree tree_;
};

}  // namespace ipp
