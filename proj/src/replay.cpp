#include "ipp/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ipp {

SumTree::SumTree(std::size_t capacity) : capacity_(capacity), base_(1) {
  if (capacity == 0) throw std::invalid_argument("sum tree capacity must be positive");
  while (base_ < capacity) base_ <<= 1;
  nodes_.assign(2 * base_, 0.0);
}

void SumTree::set(std::size_t leaf, double value) {
  if (leaf >= capacity_) throw std::out_of_range("sum tree leaf out of range");
  if (!(value >= 0.0) || !std::isfinite(value)) throw std::invalid_argument("sum tree values must be finite and >= 0");
  std::size_t i = base_ + leaf;
  nodes_[i] = value;
  // Parents are recomputed from their children so the root never drifts.
  for (i >>= 1; i >= 1; i >>= 1) nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
}

std::size_t SumTree::find(double mass) const {
  if (!(total() > 0.0)) throw std::logic_error("sampling from an empty sum tree");
  mass = std::clamp(mass, 0.0, total());
  std::size_t i = 1;
  while (i < base_) {
    const double left = nodes_[2 * i];
    if (mass < left || nodes_[2 * i + 1] <= 0.0) {
      i = 2 * i;
    } else {
      mass -= left;
      i = 2 * i + 1;
    }
  }
  return std::min(i - base_, capacity_ - 1);
}

PackedState PackedState::pack(const StateImage& img) {
  PackedState p;
  p.height = img.height;
  p.width = img.width;
  p.data.assign(img.data.begin(), img.data.end());
  return p;
}

StateImage PackedState::unpack() const {
  StateImage img(height, width);
  std::copy(data.begin(), data.end(), img.data.begin());
  return img;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, double alpha)
    : capacity_(capacity), alpha_(alpha), items_(capacity), priorities_(capacity, 0.0), tree_(capacity) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("PER alpha must be >= 0");
}

void ReplayBuffer::set_priority(std::size_t index, double priority) {
  priorities_[index] = priority;
  tree_.set(index, std::pow(priority, alpha_));
  max_priority_ = std::max(max_priority_, priority);
}

void ReplayBuffer::push(Experience e) {
  if (e.action < 0 || e.action >= kNumActions) throw std::out_of_range("experience action out of range");
  items_[next_] = std::move(e);
  set_priority(next_, max_priority_);
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

double ReplayBuffer::probability(std::size_t index) const {
  if (index >= size_) throw std::out_of_range("replay index out of range");
  return tree_.get(index) / tree_.total();
}

ReplayBuffer::Batch ReplayBuffer::sample(std::size_t batch_size, double beta, std::mt19937_64& rng) const {
  if (size_ == 0) throw std::logic_error("sampling from an empty replay buffer");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  Batch b;
  b.indices.resize(batch_size);
  b.probabilities.resize(batch_size);
  b.weights.resize(batch_size);
  const double total = tree_.total();
  const double segment = total / static_cast<double>(batch_size);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double max_w = 0.0;
  for (std::size_t i = 0; i < batch_size; ++i) {
    const double mass = (static_cast<double>(i) + u(rng)) * segment;
    std::size_t idx = tree_.find(mass);
    if (idx >= size_) idx = size_ - 1;
    b.indices[i] = idx;
    b.probabilities[i] = tree_.get(idx) / total;
    b.weights[i] = std::pow(static_cast<double>(size_) * b.probabilities[i], -beta);
    max_w = std::max(max_w, b.weights[i]);
  }
  for (auto& w : b.weights) w /= max_w;
  return b;
}

void ReplayBuffer::update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors) {
  if (indices.size() != td_errors.size()) throw std::invalid_argument("indices and td errors differ in length");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size_) throw std::out_of_range("replay index out of range");
    set_priority(indices[i], std::abs(td_errors[i]) + kPriorityFloor);
  }
}

}  // namespace ipp
