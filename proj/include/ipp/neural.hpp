#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ipp/nn_layers.hpp"

namespace ipp::nn {

inline constexpr int kQOutputs = 8;

/// Convolutional dueling Q-network shape. Every conv block is a 3x3 same-size
/// convolution followed by ReLU and (when `pool`) a 2x2 max-pool. Fully
/// connected layers, both head hidden layers and both head outputs are noisy
/// when `noisy` is set.
struct NetworkConfig {
  int channels = 3;
  int height = 60;
  int width = 75;
  std::vector<int> conv_filters{64, 32, 16};
  bool pool = true;
  std::vector<int> fc_widths{256, 256, 256};
  int value_hidden = 64;
  int advantage_hidden = 64;
  bool noisy = true;
  double noise_init = 0.017;

  void validate() const;
  int input_size() const { return channels * height * width; }
  /// Closed-form number of trainable scalars.
  std::size_t parameter_count() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct ConvLayout {
  SpatialShape in;
  int out_channels = 0;
  std::size_t weight = 0;  // out x (9*in) block in the parameter vector
  std::size_t bias = 0;
};

struct DenseLayout {
  int in = 0;
  int out = 0;
  bool relu = true;
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t noise_weight = 0;  // W_n, only when noisy
  std::size_t noise_bias = 0;    // b_n
  std::size_t eps_weight = 0;    // offsets into NoiseDraw
  std::size_t eps_bias = 0;
};

/// Offsets of every layer inside the flat parameter vector.
struct NetworkLayout {
  std::vector<ConvLayout> convs;
  SpatialShape flat_shape;
  std::vector<DenseLayout> trunk;  // fully connected stack
  DenseLayout value_hidden, value_out, advantage_hidden, advantage_out;
  std::size_t parameter_count = 0;
  std::size_t noise_count = 0;

  explicit NetworkLayout(const NetworkConfig& config);
};

/// Trainable parameters plus Adam state, all in one flat layout.
struct QNetworkParams {
  NetworkConfig config;
  std::vector<double> values;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  std::int64_t adam_step = 0;

  friend bool operator==(const QNetworkParams&, const QNetworkParams&) = default;
};

/// Weights and biases uniform in +-1/sqrt(fan_in); noise scales at noise_init.
QNetworkParams init_params(const NetworkConfig& config, std::uint64_t seed);

/// Standard normal epsilon per noisy weight and bias. Empty means no noise.
struct NoiseDraw {
  std::vector<double> eps;
  bool empty() const { return eps.empty(); }
};

NoiseDraw sample_noise(const NetworkConfig& config, std::mt19937_64& rng);
NoiseDraw zero_noise(const NetworkConfig& config);

/// Q_a = V + A_a - mean(A).
std::vector<double> dueling_combine(double value, std::span<const double> advantage);

/// Forward/backward engine for one NetworkConfig. Holds the activation cache
/// of the last forward pass, so an instance must not be shared across threads.
class QNetwork {
 public:
  explicit QNetwork(NetworkConfig config);

  const NetworkConfig& config() const { return config_; }
  const NetworkLayout& layout() const { return layout_; }

  /// inputs: (channels*H*W) x batch, one state per column. Returns 8 x batch.
  Matrix forward(const QNetworkParams& params, const Matrix& inputs, const NoiseDraw& noise);
  /// Backpropagates dL/dQ (8 x batch) through the last forward pass.
  /// grad is resized to the parameter count and overwritten.
  void backward(const QNetworkParams& params, const NoiseDraw& noise, const Matrix& grad_q,
                std::vector<double>& grad);

 private:
  struct DenseCache {
    Matrix input;
    Matrix output;  // post-activation
    Matrix weights; // effective weights used
  };
  void dense_layer_forward(const QNetworkParams& params, const DenseLayout& l, const NoiseDraw& noise,
                           const Matrix& input, DenseCache& cache);
  void dense_layer_backward(const QNetworkParams& params, const DenseLayout& l, const NoiseDraw& noise,
                            DenseCache& cache, Matrix grad_out, std::vector<double>& grad, Matrix* grad_in);
  void check_params(const QNetworkParams& params) const;

  NetworkConfig config_;
  NetworkLayout layout_;
  int batch_ = 0;
  std::vector<Matrix> conv_in_;
  std::vector<Matrix> conv_cols_;
  std::vector<Matrix> conv_out_;  // post-ReLU, pre-pool
  std::vector<std::vector<int>> pool_argmax_;
  Matrix flat_;
  std::vector<DenseCache> trunk_;
  DenseCache value_hidden_, value_out_, adv_hidden_, adv_out_;
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
  std::vector<double> q_taken;  // Q(s_i, a_i)
  std::vector<double> td;       // Q(s_i, a_i) - y_i
};

/// Importance-weighted squared TD loss mean_i w_i (Q(s_i, a_i) - y_i)^2 and its
/// gradient with the noise draw held fixed.
LossResult loss_and_gradients(QNetwork& net, const QNetworkParams& params, const Matrix& states,
                              std::span<const int> actions, std::span<const double> targets,
                              std::span<const double> weights, const NoiseDraw& noise);

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(QNetworkParams& params, std::span<const double> grad, double learning_rate,
               const AdamSettings& settings = {});

/// target <- (1 - rate) target + rate online, on the trainable values only.
void soft_update(QNetworkParams& target, const QNetworkParams& online, double rate);

/// Versioned binary checkpoint; loading restores bit-identical values.
void save_checkpoint(const std::filesystem::path& path, const QNetworkParams& params);
QNetworkParams load_checkpoint(const std::filesystem::path& path);

}  // namespace ipp::nn
