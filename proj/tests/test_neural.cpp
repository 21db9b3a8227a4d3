#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "ipp/neural.hpp"

using namespace ipp::nn;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Central differences of f over every entry of x.
std::vector<double> numeric_gradient(std::vector<double>& x, const std::function<double()>& f, double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    norm += (std::abs(a[i]) + std::abs(b[i])) * (std::abs(a[i]) + std::abs(b[i]));
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12);
}

std::vector<double> as_vector(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

NetworkConfig small_config(bool noisy) {
  NetworkConfig c;
  c.channels = 3;
  c.height = 8;
  c.width = 8;
  c.conv_filters = {4, 3};
  c.fc_widths = {6};
  c.value_hidden = 5;
  c.advantage_hidden = 5;
  c.noisy = noisy;
  c.noise_init = 0.1;
  return c;
}

}  // namespace

TEST(Layers, DenseGradients) {
  std::mt19937_64 rng(1);
  const int in = 5, out = 4, batch = 3;
  Matrix x = random_matrix(in, batch, rng);
  Matrix w = random_matrix(out, in, rng);
  Vector b = random_matrix(out, 1, rng);
  const Matrix g = random_matrix(out, batch, rng);
  auto loss = [&] {
    Matrix y;
    dense_forward(x, w, b, y);
    return (y.array() * g.array()).sum();
  };
  Matrix dw(out, in), dx;
  Vector db(out);
  dense_backward(x, g, w, MatrixMap(dw.data(), out, in), VectorMap(db.data(), out), &dx);

  std::vector<double> xv = as_vector(x), wv = as_vector(w), bv(b.data(), b.data() + out);
  auto nx = numeric_gradient(xv, [&] { x = Eigen::Map<Matrix>(xv.data(), in, batch); return loss(); });
  x = Eigen::Map<Matrix>(xv.data(), in, batch);
  auto nw = numeric_gradient(wv, [&] { w = Eigen::Map<Matrix>(wv.data(), out, in); return loss(); });
  w = Eigen::Map<Matrix>(wv.data(), out, in);
  auto nb = numeric_gradient(bv, [&] { b = Eigen::Map<Vector>(bv.data(), out); return loss(); });
  EXPECT_LT(relative_error(as_vector(dx), nx), 1e-4);
  EXPECT_LT(relative_error(as_vector(dw), nw), 1e-4);
  EXPECT_LT(relative_error(std::vector<double>(db.data(), db.data() + out), nb), 1e-4);
}

TEST(Layers, ConvGradients) {
  std::mt19937_64 rng(2);
  const SpatialShape s{2, 5, 4};
  const int batch = 2, out = 3;
  Matrix x = random_matrix(s.channels, batch * s.pixels(), rng);
  Matrix w = random_matrix(out, 9 * s.channels, rng);
  Vector b = random_matrix(out, 1, rng);
  const Matrix g = random_matrix(out, batch * s.pixels(), rng);
  auto loss = [&] {
    Matrix cols, y;
    conv3x3_forward(x, s, batch, ConstMatrixMap(w.data(), out, w.cols()), ConstVectorMap(b.data(), out), cols, y);
    return (y.array() * g.array()).sum();
  };
  Matrix cols, y, dw(out, w.cols()), dx;
  Vector db(out);
  conv3x3_forward(x, s, batch, ConstMatrixMap(w.data(), out, w.cols()), ConstVectorMap(b.data(), out), cols, y);
  conv3x3_backward(cols, g, s, batch, ConstMatrixMap(w.data(), out, w.cols()), MatrixMap(dw.data(), out, w.cols()),
                   VectorMap(db.data(), out), &dx);

  std::vector<double> xv = as_vector(x), wv = as_vector(w);
  auto nx = numeric_gradient(xv, [&] { x = Eigen::Map<Matrix>(xv.data(), x.rows(), x.cols()); return loss(); });
  x = Eigen::Map<Matrix>(xv.data(), x.rows(), x.cols());
  auto nw = numeric_gradient(wv, [&] { w = Eigen::Map<Matrix>(wv.data(), out, w.cols()); return loss(); });
  EXPECT_LT(relative_error(as_vector(dx), nx), 1e-4);
  EXPECT_LT(relative_error(as_vector(dw), nw), 1e-4);
  EXPECT_NEAR(db(0), g.row(0).sum(), 1e-12);
}

TEST(Layers, ConvMatchesDirectLoop) {
  std::mt19937_64 rng(3);
  const SpatialShape s{2, 4, 3};
  Matrix x = random_matrix(2, s.pixels(), rng);
  Matrix w = random_matrix(1, 18, rng);
  Vector b = Vector::Constant(1, 0.5);
  Matrix cols, y;
  conv3x3_forward(x, s, 1, ConstMatrixMap(w.data(), 1, 18), ConstVectorMap(b.data(), 1), cols, y);
  for (int r = 0; r < s.height; ++r) {
    for (int c = 0; c < s.width; ++c) {
      double acc = 0.5;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const int rr = r + ky - 1, cc = c + kx - 1;
          if (rr < 0 || rr >= s.height || cc < 0 || cc >= s.width) continue;
          for (int ch = 0; ch < 2; ++ch) acc += w(0, (ky * 3 + kx) * 2 + ch) * x(ch, rr * s.width + cc);
        }
      }
      EXPECT_NEAR(y(0, r * s.width + c), acc, 1e-12);
    }
  }
}

TEST(Layers, MaxPoolForwardAndGradient) {
  const SpatialShape s{1, 3, 5};
  Matrix x(1, 15);
  for (int i = 0; i < 15; ++i) x(0, i) = (i * 7) % 11;
  Matrix y;
  std::vector<int> arg;
  maxpool2_forward(x, s, 1, y, arg);
  ASSERT_EQ(y.cols(), 2);  // floor(3/2) x floor(5/2)
  EXPECT_EQ(y(0, 0), std::max({x(0, 0), x(0, 1), x(0, 5), x(0, 6)}));
  EXPECT_EQ(y(0, 1), std::max({x(0, 2), x(0, 3), x(0, 7), x(0, 8)}));

  std::mt19937_64 rng(4);
  const SpatialShape t{2, 4, 6};
  Matrix z = random_matrix(2, 2 * t.pixels(), rng);
  const Matrix g = random_matrix(2, 2 * pooled(t).pixels(), rng);
  maxpool2_forward(z, t, 2, y, arg);
  Matrix dz;
  maxpool2_backward(g, arg, t, 2, dz);
  std::vector<double> zv = as_vector(z);
  auto nz = numeric_gradient(zv, [&] {
    Matrix zz = Eigen::Map<Matrix>(zv.data(), z.rows(), z.cols()), yy;
    std::vector<int> aa;
    maxpool2_forward(zz, t, 2, yy, aa);
    return (yy.array() * g.array()).sum();
  });
  EXPECT_LT(relative_error(as_vector(dz), nz), 1e-4);
}

TEST(Layers, FlattenRoundTripAndRelu) {
  std::mt19937_64 rng(5);
  const SpatialShape s{3, 2, 4};
  const Matrix x = random_matrix(3, 2 * s.pixels(), rng);
  Matrix d, back;
  flatten(x, s, 2, d);
  ASSERT_EQ(d.rows(), 24);
  ASSERT_EQ(d.cols(), 2);
  EXPECT_EQ(d(1 * s.pixels() + 5, 1), x(1, s.pixels() + 5));
  unflatten(d, s, 2, back);
  EXPECT_EQ(back, x);

  Matrix r = x;
  relu_inplace(r);
  Matrix gr = Matrix::Ones(r.rows(), r.cols());
  relu_backward_inplace(r, gr);
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    EXPECT_EQ(r.data()[i], std::max(0.0, x.data()[i]));
    EXPECT_EQ(gr.data()[i], x.data()[i] > 0 ? 1.0 : 0.0);
  }
}

TEST(Network, DuelingCombineExamples) {
  const std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8};
  const auto q = dueling_combine(2.0, a);
  EXPECT_DOUBLE_EQ(q[0], 2.0 + 1 - 4.5);
  EXPECT_DOUBLE_EQ(q[7], 2.0 + 8 - 4.5);
  double mean = 0.0;
  for (double v : q) mean += v / 8;
  EXPECT_NEAR(mean, 2.0, 1e-12);
  const auto flat = dueling_combine(-1.0, std::vector<double>(8, 3.0));
  for (double v : flat) EXPECT_DOUBLE_EQ(v, -1.0);
}

TEST(Network, ParameterCount) {
  auto c = small_config(false);
  c.conv_filters = {4};
  // conv 3*9*4+4, fc 64*6+6, value 6*5+5 and 5+1, advantage 6*5+5 and 5*8+8
  EXPECT_EQ(c.parameter_count(), 112u + 390u + 35u + 6u + 35u + 48u);
  EXPECT_EQ(NetworkLayout(c).parameter_count, c.parameter_count());
  c.noisy = true;
  EXPECT_EQ(c.parameter_count(), 112u + 2 * (390u + 35u + 6u + 35u + 48u));
  EXPECT_EQ(NetworkLayout(c).parameter_count, c.parameter_count());
  EXPECT_EQ(NetworkLayout(c).noise_count, 390u + 35u + 6u + 35u + 48u);

  NetworkConfig full;
  EXPECT_EQ(NetworkLayout(full).parameter_count, full.parameter_count());
  EXPECT_EQ(init_params(small_config(true), 1).values.size(), small_config(true).parameter_count());
}

TEST(Network, ConfigValidation) {
  auto c = small_config(true);
  c.conv_filters = {2, 2, 2, 2};  // 8 -> 4 -> 2 -> 1 -> 0
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config(true);
  c.fc_widths = {0};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config(true);
  c.height = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Network, FullGradientMatchesFiniteDifferences) {
  for (bool noisy : {true, false}) {
    const auto cfg = small_config(noisy);
    QNetwork net(cfg);
    auto params = init_params(cfg, 7);
    std::mt19937_64 rng(8);
    const NoiseDraw noise = sample_noise(cfg, rng);
    const int batch = 3;
    const Matrix x = random_matrix(cfg.input_size(), batch, rng);
    const std::vector<int> actions{0, 5, 7};
    const std::vector<double> targets{0.3, -1.2, 2.0};
    const std::vector<double> weights{1.0, 0.5, 0.8};
    const auto r = loss_and_gradients(net, params, x, actions, targets, weights, noise);
    ASSERT_EQ(r.grad.size(), params.values.size());
    auto numeric = numeric_gradient(params.values, [&] {
      QNetwork probe(cfg);
      return loss_and_gradients(probe, params, x, actions, targets, weights, noise).loss;
    });
    EXPECT_LT(relative_error(r.grad, numeric), 1e-4) << "noisy=" << noisy;
    int nonzero = 0;
    for (double g : r.grad) nonzero += g != 0.0;
    EXPECT_GT(nonzero, static_cast<int>(r.grad.size()) / 2);
  }
}

TEST(Network, LossValueAndTd) {
  const auto cfg = small_config(true);
  QNetwork net(cfg);
  const auto params = init_params(cfg, 3);
  std::mt19937_64 rng(3);
  const Matrix x = random_matrix(cfg.input_size(), 2, rng);
  const auto noise = zero_noise(cfg);
  const Matrix q = net.forward(params, x, noise);
  ASSERT_EQ(q.rows(), 8);
  ASSERT_EQ(q.cols(), 2);
  const std::vector<int> a{2, 6};
  const std::vector<double> y{1.0, -1.0}, w{1.0, 0.25};
  const auto r = loss_and_gradients(net, params, x, a, y, w, noise);
  const double td0 = q(2, 0) - 1.0, td1 = q(6, 1) + 1.0;
  EXPECT_NEAR(r.td[0], td0, 1e-12);
  EXPECT_NEAR(r.td[1], td1, 1e-12);
  EXPECT_NEAR(r.loss, (td0 * td0 + 0.25 * td1 * td1) / 2, 1e-12);
  EXPECT_THROW(loss_and_gradients(net, params, x, std::vector<int>{2}, y, w, noise), std::invalid_argument);
}

TEST(Noise, DrawStatisticsAndEffect) {
  const auto cfg = small_config(true);
  std::mt19937_64 rng(10);
  const auto d = sample_noise(cfg, rng);
  ASSERT_EQ(d.eps.size(), NetworkLayout(cfg).noise_count);
  EXPECT_TRUE(sample_noise(small_config(false), rng).empty());
  for (double e : zero_noise(cfg).eps) EXPECT_EQ(e, 0.0);

  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (int k = 0; k < 40; ++k) {
    for (double e : sample_noise(cfg, rng).eps) {
      sum += e;
      sq += e * e;
      ++n;
    }
  }
  EXPECT_NEAR(sum / static_cast<double>(n), 0.0, 0.02);
  EXPECT_NEAR(sq / static_cast<double>(n), 1.0, 0.03);

  QNetwork net(cfg);
  auto params = init_params(cfg, 11);
  const Matrix x = random_matrix(cfg.input_size(), 1, rng);
  const Matrix clean = net.forward(params, x, zero_noise(cfg));
  EXPECT_NE(net.forward(params, x, d), clean);
  // Zero noise scales make the draw irrelevant.
  for (const auto* l : {&net.layout().value_hidden, &net.layout().value_out, &net.layout().advantage_hidden,
                        &net.layout().advantage_out, &net.layout().trunk[0]}) {
    std::fill_n(params.values.begin() + static_cast<std::ptrdiff_t>(l->noise_weight), l->in * l->out, 0.0);
    std::fill_n(params.values.begin() + static_cast<std::ptrdiff_t>(l->noise_bias), l->out, 0.0);
  }
  EXPECT_EQ(net.forward(params, x, d), net.forward(params, x, zero_noise(cfg)));
}

TEST(Optimizer, AdamFirstStepIsSignTimesRate) {
  const auto cfg = small_config(false);
  auto p = init_params(cfg, 1);
  const auto before = p.values;
  std::vector<double> g(p.values.size());
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& x : g) x = n(rng);
  adam_step(p, g, 1e-3);
  EXPECT_EQ(p.adam_step, 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double expect = -1e-3 * g[i] / (std::abs(g[i]) + 1e-8);
    EXPECT_NEAR(p.values[i] - before[i], expect, 1e-15);
  }
  EXPECT_THROW(adam_step(p, std::vector<double>(3), 1e-3), std::invalid_argument);
}

TEST(Optimizer, AdamMinimisesQuadratic) {
  QNetworkParams p;
  p.values = {3.0, -2.0};
  for (int i = 0; i < 3000; ++i) {
    const std::vector<double> g{2 * (p.values[0] - 1.0), 2 * (p.values[1] + 0.5)};
    adam_step(p, g, 0.01);
  }
  EXPECT_NEAR(p.values[0], 1.0, 1e-3);
  EXPECT_NEAR(p.values[1], -0.5, 1e-3);
}

TEST(Optimizer, SoftUpdate) {
  QNetworkParams target, online;
  target.values = {0.0, 1.0};
  online.values = {1.0, 3.0};
  soft_update(target, online, 0.25);
  EXPECT_DOUBLE_EQ(target.values[0], 0.25);
  EXPECT_DOUBLE_EQ(target.values[1], 1.5);
  for (int i = 0; i < 2000; ++i) soft_update(target, online, 0.01);
  EXPECT_NEAR(target.values[0], 1.0, 1e-8);
  soft_update(target, online, 1.0);
  EXPECT_EQ(target.values, online.values);
  online.values.push_back(0.0);
  EXPECT_THROW(soft_update(target, online, 0.5), std::invalid_argument);
}

TEST(Checkpoint, BitExactRoundTrip) {
  auto p = init_params(small_config(true), 21);
  std::vector<double> g(p.values.size(), 0.1);
  adam_step(p, g, 1e-3);
  const auto path = std::filesystem::temp_directory_path() / "ipp_test_checkpoint.bin";
  save_checkpoint(path, p);
  const auto q = load_checkpoint(path);
  EXPECT_EQ(q, p);

  {
    std::ofstream junk(path, std::ios::binary | std::ios::trunc);
    junk << "not a checkpoint";
  }
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), std::runtime_error);
}

TEST(Network, ForwardIsDeterministicAndBatchIndependent) {
  const auto cfg = small_config(true);
  QNetwork net(cfg);
  const auto params = init_params(cfg, 4);
  std::mt19937_64 rng(4);
  const auto noise = sample_noise(cfg, rng);
  const Matrix x = random_matrix(cfg.input_size(), 4, rng);
  const Matrix all = net.forward(params, x, noise);
  for (int b = 0; b < 4; ++b) {
    const Matrix one = net.forward(params, x.col(b), noise);
    for (int a = 0; a < 8; ++a) EXPECT_NEAR(one(a, 0), all(a, b), 1e-12);
  }
  EXPECT_EQ(net.forward(params, x, noise), all);
}
