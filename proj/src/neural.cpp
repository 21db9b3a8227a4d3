#include "ipp/neural.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace ipp::nn {

namespace {

DenseLayout make_dense(int in, int out, bool relu, bool noisy, std::size_t& offset, std::size_t& noise_offset) {
  DenseLayout l;
  l.in = in;
  l.out = out;
  l.relu = relu;
  const auto nw = static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
  const auto nb = static_cast<std::size_t>(out);
  l.weight = offset;
  offset += nw;
  l.bias = offset;
  offset += nb;
  if (noisy) {
    l.noise_weight = offset;
    offset += nw;
    l.noise_bias = offset;
    offset += nb;
    l.eps_weight = noise_offset;
    noise_offset += nw;
    l.eps_bias = noise_offset;
    noise_offset += nb;
  }
  return l;
}

template <typename F>
void for_each_dense(const NetworkLayout& layout, F&& f) {
  for (const auto& l : layout.trunk) f(l);
  f(layout.value_hidden);
  f(layout.value_out);
  f(layout.advantage_hidden);
  f(layout.advantage_out);
}

ConstMatrixMap weight_map(const std::vector<double>& v, std::size_t off, int rows, int cols) {
  return ConstMatrixMap(v.data() + off, rows, cols);
}

}  // namespace

void NetworkConfig::validate() const {
  if (channels < 1 || height < 1 || width < 1) throw std::invalid_argument("network input shape must be positive");
  int h = height;
  int w = width;
  for (int f : conv_filters) {
    if (f < 1) throw std::invalid_argument("conv filter counts must be >= 1");
    if (pool) {
      h /= 2;
      w /= 2;
      if (h < 1 || w < 1) throw std::invalid_argument("input raster too small for the number of pooled conv blocks");
    }
  }
  for (int n : fc_widths) {
    if (n < 1) throw std::invalid_argument("fully connected widths must be >= 1");
  }
  if (value_hidden < 1 || advantage_hidden < 1) throw std::invalid_argument("head widths must be >= 1");
  if (noisy && !(noise_init >= 0.0)) throw std::invalid_argument("noise_init must be >= 0");
}

std::size_t NetworkConfig::parameter_count() const {
  std::size_t total = 0;
  int in_c = channels;
  int h = height;
  int w = width;
  for (int f : conv_filters) {
    total += static_cast<std::size_t>(9 * in_c * f + f);
    in_c = f;
    if (pool) {
      h /= 2;
      w /= 2;
    }
  }
  const std::size_t mult = noisy ? 2 : 1;
  auto dense = [&](std::size_t in, std::size_t out) { return mult * (in * out + out); };
  std::size_t in = static_cast<std::size_t>(in_c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  for (int n : fc_widths) {
    total += dense(in, static_cast<std::size_t>(n));
    in = static_cast<std::size_t>(n);
  }
  total += dense(in, static_cast<std::size_t>(value_hidden)) + dense(static_cast<std::size_t>(value_hidden), 1);
  total += dense(in, static_cast<std::size_t>(advantage_hidden)) +
           dense(static_cast<std::size_t>(advantage_hidden), static_cast<std::size_t>(kQOutputs));
  return total;
}

NetworkLayout::NetworkLayout(const NetworkConfig& config) {
  config.validate();
  std::size_t off = 0;
  std::size_t noise = 0;
  SpatialShape shape{config.channels, config.height, config.width};
  for (int f : config.conv_filters) {
    ConvLayout c;
    c.in = shape;
    c.out_channels = f;
    c.weight = off;
    off += static_cast<std::size_t>(9 * shape.channels * f);
    c.bias = off;
    off += static_cast<std::size_t>(f);
    convs.push_back(c);
    shape.channels = f;
    if (config.pool) shape = pooled(shape);
  }
  flat_shape = shape;
  int in = shape.channels * shape.pixels();
  for (int n : config.fc_widths) {
    trunk.push_back(make_dense(in, n, true, config.noisy, off, noise));
    in = n;
  }
  value_hidden = make_dense(in, config.value_hidden, true, config.noisy, off, noise);
  value_out = make_dense(config.value_hidden, 1, false, config.noisy, off, noise);
  advantage_hidden = make_dense(in, config.advantage_hidden, true, config.noisy, off, noise);
  advantage_out = make_dense(config.advantage_hidden, kQOutputs, false, config.noisy, off, noise);
  parameter_count = off;
  noise_count = noise;
}

QNetworkParams init_params(const NetworkConfig& config, std::uint64_t seed) {
  const NetworkLayout layout(config);
  QNetworkParams p;
  p.config = config;
  p.values.assign(layout.parameter_count, 0.0);
  p.adam_m.assign(layout.parameter_count, 0.0);
  p.adam_v.assign(layout.parameter_count, 0.0);
  std::mt19937_64 rng(seed);

  auto fill_uniform = [&](std::size_t off, std::size_t n, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < n; ++i) p.values[off + i] = u(rng);
  };
  for (const auto& c : layout.convs) {
    const double bound = 1.0 / std::sqrt(9.0 * c.in.channels);
    fill_uniform(c.weight, static_cast<std::size_t>(9 * c.in.channels * c.out_channels), bound);
    fill_uniform(c.bias, static_cast<std::size_t>(c.out_channels), bound);
  }
  for_each_dense(layout, [&](const DenseLayout& l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    const auto nw = static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out);
    fill_uniform(l.weight, nw, bound);
    fill_uniform(l.bias, static_cast<std::size_t>(l.out), bound);
    if (config.noisy) {
      std::fill_n(p.values.begin() + static_cast<std::ptrdiff_t>(l.noise_weight), nw, config.noise_init);
      std::fill_n(p.values.begin() + static_cast<std::ptrdiff_t>(l.noise_bias), l.out, config.noise_init);
    }
  });
  return p;
}

NoiseDraw sample_noise(const NetworkConfig& config, std::mt19937_64& rng) {
  NoiseDraw d;
  if (!config.noisy) return d;
  const NetworkLayout layout(config);
  d.eps.resize(layout.noise_count);
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& e : d.eps) e = g(rng);
  return d;
}

NoiseDraw zero_noise(const NetworkConfig& config) {
  NoiseDraw d;
  if (config.noisy) d.eps.assign(NetworkLayout(config).noise_count, 0.0);
  return d;
}

std::vector<double> dueling_combine(double value, std::span<const double> advantage) {
  if (advantage.empty()) return {};
  const double mean = std::accumulate(advantage.begin(), advantage.end(), 0.0) / static_cast<double>(advantage.size());
  std::vector<double> q(advantage.size());
  for (std::size_t a = 0; a < advantage.size(); ++a) q[a] = value + advantage[a] - mean;
  return q;
}

QNetwork::QNetwork(NetworkConfig config) : config_(std::move(config)), layout_(config_) {
  const auto n = layout_.convs.size();
  conv_in_.resize(n);
  conv_cols_.resize(n);
  conv_out_.resize(n);
  pool_argmax_.resize(n);
  trunk_.resize(layout_.trunk.size());
}

void QNetwork::check_params(const QNetworkParams& params) const {
  if (params.values.size() != layout_.parameter_count) {
    throw std::invalid_argument("parameter vector does not match the network layout");
  }
}

void QNetwork::dense_layer_forward(const QNetworkParams& params, const DenseLayout& l, const NoiseDraw& noise,
                                   const Matrix& input, DenseCache& cache) {
  const auto& v = params.values;
  cache.input = input;
  cache.weights = weight_map(v, l.weight, l.out, l.in);
  Vector bias = ConstVectorMap(v.data() + l.bias, l.out);
  if (config_.noisy && !noise.empty()) {
    cache.weights.array() += weight_map(v, l.noise_weight, l.out, l.in).array() *
                             ConstMatrixMap(noise.eps.data() + l.eps_weight, l.out, l.in).array();
    bias.array() += ConstVectorMap(v.data() + l.noise_bias, l.out).array() *
                    ConstVectorMap(noise.eps.data() + l.eps_bias, l.out).array();
  }
  dense_forward(cache.input, cache.weights, bias, cache.output);
  if (l.relu) relu_inplace(cache.output);
}

Matrix QNetwork::forward(const QNetworkParams& params, const Matrix& inputs, const NoiseDraw& noise) {
  check_params(params);
  if (inputs.rows() != config_.input_size()) throw std::invalid_argument("state shape does not match the network");
  if (config_.noisy && !noise.empty() && noise.eps.size() != layout_.noise_count) {
    throw std::invalid_argument("noise draw does not match the network");
  }
  batch_ = static_cast<int>(inputs.cols());
  const auto& v = params.values;

  SpatialShape shape{config_.channels, config_.height, config_.width};
  Matrix act;
  unflatten(inputs, shape, batch_, act);
  for (std::size_t i = 0; i < layout_.convs.size(); ++i) {
    const auto& c = layout_.convs[i];
    conv_in_[i] = std::move(act);
    conv3x3_forward(conv_in_[i], c.in, batch_, ConstMatrixMap(v.data() + c.weight, c.out_channels, 9 * c.in.channels),
                    ConstVectorMap(v.data() + c.bias, c.out_channels), conv_cols_[i], conv_out_[i]);
    relu_inplace(conv_out_[i]);
    shape = {c.out_channels, c.in.height, c.in.width};
    if (config_.pool) {
      maxpool2_forward(conv_out_[i], shape, batch_, act, pool_argmax_[i]);
      shape = pooled(shape);
    } else {
      act = conv_out_[i];
    }
  }
  if (layout_.convs.empty()) {
    flat_ = inputs;
  } else {
    flatten(act, shape, batch_, flat_);
  }

  const Matrix* h = &flat_;
  for (std::size_t i = 0; i < layout_.trunk.size(); ++i) {
    dense_layer_forward(params, layout_.trunk[i], noise, *h, trunk_[i]);
    h = &trunk_[i].output;
  }
  dense_layer_forward(params, layout_.value_hidden, noise, *h, value_hidden_);
  dense_layer_forward(params, layout_.value_out, noise, value_hidden_.output, value_out_);
  dense_layer_forward(params, layout_.advantage_hidden, noise, *h, adv_hidden_);
  dense_layer_forward(params, layout_.advantage_out, noise, adv_hidden_.output, adv_out_);

  Matrix q = adv_out_.output;
  const Eigen::RowVectorXd mean = q.colwise().mean();
  for (Eigen::Index b = 0; b < q.cols(); ++b) q.col(b).array() += value_out_.output(0, b) - mean(b);
  return q;
}

void QNetwork::dense_layer_backward(const QNetworkParams& params, const DenseLayout& l, const NoiseDraw& noise,
                                    DenseCache& cache, Matrix grad_out, std::vector<double>& grad, Matrix* grad_in) {
  (void)params;
  if (l.relu) relu_backward_inplace(cache.output, grad_out);
  MatrixMap gw(grad.data() + l.weight, l.out, l.in);
  VectorMap gb(grad.data() + l.bias, l.out);
  dense_backward(cache.input, grad_out, cache.weights, gw, gb, grad_in);
  if (config_.noisy) {
    MatrixMap gwn(grad.data() + l.noise_weight, l.out, l.in);
    VectorMap gbn(grad.data() + l.noise_bias, l.out);
    if (noise.empty()) {
      gwn.setZero();
      gbn.setZero();
    } else {
      gwn = gw.array() * ConstMatrixMap(noise.eps.data() + l.eps_weight, l.out, l.in).array();
      gbn = gb.array() * ConstVectorMap(noise.eps.data() + l.eps_bias, l.out).array();
    }
  }
}

void QNetwork::backward(const QNetworkParams& params, const NoiseDraw& noise, const Matrix& grad_q,
                        std::vector<double>& grad) {
  check_params(params);
  if (grad_q.rows() != kQOutputs || grad_q.cols() != batch_) throw std::invalid_argument("grad_q shape mismatch");
  grad.assign(layout_.parameter_count, 0.0);

  // Dueling head: dV = sum_a dQ_a, dA_a = dQ_a - mean(dQ).
  Matrix grad_v = grad_q.colwise().sum();
  Matrix grad_a = grad_q;
  const Eigen::RowVectorXd mean = grad_q.colwise().mean();
  grad_a.rowwise() -= mean;

  Matrix g_vh, g_ah, g_trunk_v, g_trunk_a;
  dense_layer_backward(params, layout_.value_out, noise, value_out_, grad_v, grad, &g_vh);
  dense_layer_backward(params, layout_.value_hidden, noise, value_hidden_, g_vh, grad, &g_trunk_v);
  dense_layer_backward(params, layout_.advantage_out, noise, adv_out_, grad_a, grad, &g_ah);
  dense_layer_backward(params, layout_.advantage_hidden, noise, adv_hidden_, g_ah, grad, &g_trunk_a);

  Matrix g = g_trunk_v + g_trunk_a;
  for (std::size_t i = layout_.trunk.size(); i-- > 0;) {
    Matrix g_in;
    dense_layer_backward(params, layout_.trunk[i], noise, trunk_[i], g, grad, &g_in);
    g = std::move(g_in);
  }
  if (layout_.convs.empty()) return;

  SpatialShape shape = layout_.flat_shape;
  Matrix g_spatial;
  unflatten(g, shape, batch_, g_spatial);
  const auto& v = params.values;
  for (std::size_t i = layout_.convs.size(); i-- > 0;) {
    const auto& c = layout_.convs[i];
    const SpatialShape out_shape{c.out_channels, c.in.height, c.in.width};
    Matrix g_out;
    if (config_.pool) {
      maxpool2_backward(g_spatial, pool_argmax_[i], out_shape, batch_, g_out);
    } else {
      g_out = std::move(g_spatial);
    }
    relu_backward_inplace(conv_out_[i], g_out);
    MatrixMap gw(grad.data() + c.weight, c.out_channels, 9 * c.in.channels);
    VectorMap gb(grad.data() + c.bias, c.out_channels);
    Matrix g_in;
    conv3x3_backward(conv_cols_[i], g_out, c.in, batch_,
                     ConstMatrixMap(v.data() + c.weight, c.out_channels, 9 * c.in.channels), gw, gb,
                     i > 0 ? &g_in : nullptr);
    g_spatial = std::move(g_in);
  }
}

LossResult loss_and_gradients(QNetwork& net, const QNetworkParams& params, const Matrix& states,
                              std::span<const int> actions, std::span<const double> targets,
                              std::span<const double> weights, const NoiseDraw& noise) {
  const auto n = static_cast<std::size_t>(states.cols());
  if (actions.size() != n || targets.size() != n || weights.size() != n) {
    throw std::invalid_argument("batch, targets and weights must have the same length");
  }
  if (n == 0) throw std::invalid_argument("empty training batch");
  const Matrix q = net.forward(params, states, noise);
  LossResult r;
  r.q_taken.resize(n);
  r.td.resize(n);
  Matrix grad_q = Matrix::Zero(kQOutputs, static_cast<Eigen::Index>(n));
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int a = actions[i];
    if (a < 0 || a >= kQOutputs) throw std::out_of_range("batch action out of range");
    const double qa = q(a, static_cast<Eigen::Index>(i));
    const double td = qa - targets[i];
    r.q_taken[i] = qa;
    r.td[i] = td;
    r.loss += weights[i] * td * td * inv_n;
    grad_q(a, static_cast<Eigen::Index>(i)) = 2.0 * weights[i] * td * inv_n;
  }
  net.backward(params, noise, grad_q, r.grad);
  return r;
}

void adam_step(QNetworkParams& params, std::span<const double> grad, double learning_rate,
               const AdamSettings& s) {
  const std::size_t n = params.values.size();
  if (grad.size() != n) throw std::invalid_argument("gradient size does not match parameters");
  if (params.adam_m.size() != n) params.adam_m.assign(n, 0.0);
  if (params.adam_v.size() != n) params.adam_v.assign(n, 0.0);
  ++params.adam_step;
  const double t = static_cast<double>(params.adam_step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    params.adam_m[i] = s.beta1 * params.adam_m[i] + (1.0 - s.beta1) * g;
    params.adam_v[i] = s.beta2 * params.adam_v[i] + (1.0 - s.beta2) * g * g;
    const double mhat = params.adam_m[i] / c1;
    const double vhat = params.adam_v[i] / c2;
    params.values[i] -= learning_rate * mhat / (std::sqrt(vhat) + s.eps);
  }
}

void soft_update(QNetworkParams& target, const QNetworkParams& online, double rate) {
  if (target.values.size() != online.values.size()) throw std::invalid_argument("soft_update shape mismatch");
  if (rate == 1.0) {
    target.values = online.values;
    return;
  }
  const double keep = 1.0 - rate;
  for (std::size_t i = 0; i < target.values.size(); ++i) {
    target.values[i] = keep * target.values[i] + rate * online.values[i];
  }
}

namespace {

constexpr char kMagic[8] = {'I', 'P', 'P', 'Q', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return v;
}

void put_ints(std::ostream& out, const std::vector<int>& xs) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(xs.size()));
  for (int x : xs) put<std::int32_t>(out, x);
}

std::vector<int> get_ints(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  if (n > 4096) throw std::runtime_error("corrupt checkpoint layer list");
  std::vector<int> xs(n);
  for (auto& x : xs) x = get<std::int32_t>(in);
  return xs;
}

void put_doubles(std::ostream& out, const std::vector<double>& xs) {
  put<std::uint64_t>(out, xs.size());
  out.write(reinterpret_cast<const char*>(xs.data()), static_cast<std::streamsize>(xs.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& in, std::size_t limit) {
  const auto n = get<std::uint64_t>(in);
  if (n > limit) throw std::runtime_error("checkpoint array larger than the network");
  std::vector<double> xs(n);
  in.read(reinterpret_cast<char*>(xs.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return xs;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const QNetworkParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, kVersion);
  const auto& c = p.config;
  put<std::int32_t>(out, c.channels);
  put<std::int32_t>(out, c.height);
  put<std::int32_t>(out, c.width);
  put_ints(out, c.conv_filters);
  put<std::uint8_t>(out, c.pool ? 1 : 0);
  put_ints(out, c.fc_widths);
  put<std::int32_t>(out, c.value_hidden);
  put<std::int32_t>(out, c.advantage_hidden);
  put<std::uint8_t>(out, c.noisy ? 1 : 0);
  put<double>(out, c.noise_init);
  put_doubles(out, p.values);
  put_doubles(out, p.adam_m);
  put_doubles(out, p.adam_v);
  put<std::int64_t>(out, p.adam_step);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

QNetworkParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw std::runtime_error("not a Q-network checkpoint");
  if (get<std::uint32_t>(in) != kVersion) throw std::runtime_error("unsupported checkpoint version");
  QNetworkParams p;
  auto& c = p.config;
  c.channels = get<std::int32_t>(in);
  c.height = get<std::int32_t>(in);
  c.width = get<std::int32_t>(in);
  c.conv_filters = get_ints(in);
  c.pool = get<std::uint8_t>(in) != 0;
  c.fc_widths = get_ints(in);
  c.value_hidden = get<std::int32_t>(in);
  c.advantage_hidden = get<std::int32_t>(in);
  c.noisy = get<std::uint8_t>(in) != 0;
  c.noise_init = get<double>(in);
  const std::size_t expected = NetworkLayout(c).parameter_count;
  p.values = get_doubles(in, expected);
  p.adam_m = get_doubles(in, expected);
  p.adam_v = get_doubles(in, expected);
  p.adam_step = get<std::int64_t>(in);
  if (p.values.size() != expected) throw std::runtime_error("checkpoint parameter count does not match its config");
  return p;
}

}  // namespace ipp::nn
