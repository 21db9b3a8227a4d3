#pragma once

#include <vector>

#include <Eigen/Core>

// Layer primitives of the Q-network. Spatial activations are stored as
// (channels x batch*height*width) matrices: row c holds channel c, column
// b*H*W + y*W + x holds pixel (y, x) of batch element b. Dense activations are
// (features x batch).

namespace ipp::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

struct SpatialShape {
  int channels = 0;
  int height = 0;
  int width = 0;
  int pixels() const { return height * width; }
};

/// 3x3 patches with zero padding: (channels*9) x (batch*H*W).
void im2col3x3(const Matrix& input, const SpatialShape& shape, int batch, Matrix& cols);
/// Adjoint of im2col3x3, accumulating into grad_input (channels x batch*H*W).
void col2im3x3(const Matrix& grad_cols, const SpatialShape& shape, int batch, Matrix& grad_input);

/// Same-size 3x3 convolution, stride 1. weights: out x (in*9); bias: out.
void conv3x3_forward(const Matrix& input, const SpatialShape& shape, int batch, ConstMatrixMap weights,
                     ConstVectorMap bias, Matrix& cols, Matrix& output);
/// Gradients of a conv3x3 layer. grad_input may be null when not needed.
void conv3x3_backward(const Matrix& cols, const Matrix& grad_output, const SpatialShape& shape, int batch,
                      ConstMatrixMap weights, MatrixMap grad_weights, VectorMap grad_bias, Matrix* grad_input);

/// 2x2 max pooling, stride 2, floor on odd sizes. argmax holds the winning
/// input column per output entry.
void maxpool2_forward(const Matrix& input, const SpatialShape& shape, int batch, Matrix& output,
                      std::vector<int>& argmax);
void maxpool2_backward(const Matrix& grad_output, const std::vector<int>& argmax, const SpatialShape& shape,
                       int batch, Matrix& grad_input);
SpatialShape pooled(const SpatialShape& shape);

void relu_inplace(Matrix& m);
/// Zeroes grad where the forward activation was not positive.
void relu_backward_inplace(const Matrix& activation, Matrix& grad);

/// (channels x batch*P) spatial layout to (channels*P x batch) dense layout.
void flatten(const Matrix& spatial, const SpatialShape& shape, int batch, Matrix& dense);
void unflatten(const Matrix& dense, const SpatialShape& shape, int batch, Matrix& spatial);

/// y = W x + b for every column of x.
void dense_forward(const Matrix& input, const Matrix& weights, const Vector& bias, Matrix& output);
/// Accumulates dW, db and writes dX (if requested) for y = W x + b.
void dense_backward(const Matrix& input, const Matrix& grad_output, const Matrix& weights, MatrixMap grad_weights,
                    VectorMap grad_bias, Matrix* grad_input);

}  // namespace ipp::nn
