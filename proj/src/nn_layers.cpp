#include "ipp/nn_layers.hpp"

#include <stdexcept>

namespace ipp::nn {

// Patch rows are ordered offset-major: row = k * channels + c with k = ky * 3 + kx,
// so each 3x3 offset copies one contiguous channel column.

void im2col3x3(const Matrix& input, const SpatialShape& s, int batch, Matrix& cols) {
  const int c = s.channels;
  const int h = s.height;
  const int w = s.width;
  const Eigen::Index p = s.pixels();
  cols.resize(9 * c, batch * p);
  for (int b = 0; b < batch; ++b) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Eigen::Index j = b * p + y * w + x;
        auto col = cols.col(j);
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = x + kx - 1;
            const int k = ky * 3 + kx;
            if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
              col.segment(k * c, c).setZero();
            } else {
              col.segment(k * c, c) = input.col(b * p + sy * w + sx);
            }
          }
        }
      }
    }
  }
}

void col2im3x3(const Matrix& grad_cols, const SpatialShape& s, int batch, Matrix& grad_input) {
  const int c = s.channels;
  const int h = s.height;
  const int w = s.width;
  const Eigen::Index p = s.pixels();
  grad_input.setZero(c, batch * p);
  for (int b = 0; b < batch; ++b) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Eigen::Index j = b * p + y * w + x;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= w) continue;
            grad_input.col(b * p + sy * w + sx) += grad_cols.col(j).segment((ky * 3 + kx) * c, c);
          }
        }
      }
    }
  }
}

void conv3x3_forward(const Matrix& input, const SpatialShape& shape, int batch, ConstMatrixMap weights,
                     ConstVectorMap bias, Matrix& cols, Matrix& output) {
  if (input.rows() != shape.channels || input.cols() != static_cast<Eigen::Index>(batch) * shape.pixels()) {
    throw std::invalid_argument("conv3x3_forward: input shape mismatch");
  }
  im2col3x3(input, shape, batch, cols);
  // Aligned copy: product kernels over mapped storage depend on the pointer alignment.
  const Matrix w = weights;
  output.noalias() = w * cols;
  output.colwise() += bias;
}

void conv3x3_backward(const Matrix& cols, const Matrix& grad_output, const SpatialShape& shape, int batch,
                      ConstMatrixMap weights, MatrixMap grad_weights, VectorMap grad_bias, Matrix* grad_input) {
  Matrix gw;
  gw.noalias() = grad_output * cols.transpose();
  grad_weights = gw;
  const Vector gb = grad_output.rowwise().sum();
  grad_bias = gb;
  if (grad_input != nullptr) {
    const Matrix w = weights;
    Matrix grad_cols = w.transpose() * grad_output;
    col2im3x3(grad_cols, shape, batch, *grad_input);
  }
}

SpatialShape pooled(const SpatialShape& s) { return {s.channels, s.height / 2, s.width / 2}; }

void maxpool2_forward(const Matrix& input, const SpatialShape& s, int batch, Matrix& output,
                      std::vector<int>& argmax) {
  const SpatialShape o = pooled(s);
  if (o.height == 0 || o.width == 0) throw std::invalid_argument("maxpool2 on a raster smaller than 2x2");
  const int c = s.channels;
  const Eigen::Index ip = s.pixels();
  const Eigen::Index op = o.pixels();
  output.resize(c, batch * op);
  argmax.resize(static_cast<std::size_t>(c) * static_cast<std::size_t>(batch * op));
  for (int b = 0; b < batch; ++b) {
    for (int y = 0; y < o.height; ++y) {
      for (int x = 0; x < o.width; ++x) {
        const Eigen::Index oj = b * op + y * o.width + x;
        const Eigen::Index base = b * ip + (2 * y) * s.width + 2 * x;
        const Eigen::Index src[4] = {base, base + 1, base + s.width, base + s.width + 1};
        for (int ch = 0; ch < c; ++ch) {
          Eigen::Index best = src[0];
          double v = input(ch, src[0]);
          for (int q = 1; q < 4; ++q) {
            if (input(ch, src[q]) > v) {
              v = input(ch, src[q]);
              best = src[q];
            }
          }
          output(ch, oj) = v;
          argmax[static_cast<std::size_t>(oj * c + ch)] = static_cast<int>(best);
        }
      }
    }
  }
}

void maxpool2_backward(const Matrix& grad_output, const std::vector<int>& argmax, const SpatialShape& s, int batch,
                       Matrix& grad_input) {
  const int c = s.channels;
  grad_input.setZero(c, batch * s.pixels());
  for (Eigen::Index oj = 0; oj < grad_output.cols(); ++oj) {
    for (int ch = 0; ch < c; ++ch) {
      grad_input(ch, argmax[static_cast<std::size_t>(oj * c + ch)]) += grad_output(ch, oj);
    }
  }
}

void relu_inplace(Matrix& m) { m = m.cwiseMax(0.0); }

void relu_backward_inplace(const Matrix& activation, Matrix& grad) {
  grad = (activation.array() > 0.0).select(grad, 0.0);
}

void flatten(const Matrix& spatial, const SpatialShape& s, int batch, Matrix& dense) {
  const Eigen::Index p = s.pixels();
  dense.resize(s.channels * p, batch);
  for (int b = 0; b < batch; ++b) {
    for (int ch = 0; ch < s.channels; ++ch) {
      dense.col(b).segment(ch * p, p) = spatial.row(ch).segment(b * p, p).transpose();
    }
  }
}

void unflatten(const Matrix& dense, const SpatialShape& s, int batch, Matrix& spatial) {
  const Eigen::Index p = s.pixels();
  spatial.resize(s.channels, batch * p);
  for (int b = 0; b < batch; ++b) {
    for (int ch = 0; ch < s.channels; ++ch) {
      spatial.row(ch).segment(b * p, p) = dense.col(b).segment(ch * p, p).transpose();
    }
  }
}

void dense_forward(const Matrix& input, const Matrix& weights, const Vector& bias, Matrix& output) {
  if (input.rows() != weights.cols()) throw std::invalid_argument("dense_forward: input shape mismatch");
  output.noalias() = weights * input;
  output.colwise() += bias;
}

void dense_backward(const Matrix& input, const Matrix& grad_output, const Matrix& weights, MatrixMap grad_weights,
                    VectorMap grad_bias, Matrix* grad_input) {
  Matrix gw;
  gw.noalias() = grad_output * input.transpose();
  grad_weights = gw;
  const Vector gb = grad_output.rowwise().sum();
  grad_bias = gb;
  if (grad_input != nullptr) grad_input->noalias() = weights.transpose() * grad_output;
}

}  // namespace ipp::nn
