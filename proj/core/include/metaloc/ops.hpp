#pragma once

#include <metaloc/tensor.hpp>

#include <memory>
#include <vector>

namespace metaloc::ad {

// Elementwise; operands must have identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

/// (m x k) * (k x n) -> (m x n).
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// Adds a per-channel bias along axis 1 of an (N x C) or (N x C x L) tensor.
Tensor add_bias(const Tensor& x, const Tensor& bias);
/// Sums an (N x C) or (N x C x L) tensor over every axis except 1.
Tensor channel_sum(const Tensor& x);
/// Repeats a length-C vector along axes 0 and 2 to fill `shape`.
Tensor channel_broadcast(const Tensor& bias, const Shape& shape);

/// Batched 1-D convolution (cross-correlation): x (N x C x L), w (O x C x K) -> (N x O x L+2p-K+1).
Tensor conv1d(const Tensor& x, const Tensor& w, std::size_t padding);
/// Adjoint of conv1d in its input; `length` is the input signal length.
Tensor conv1d_input_grad(const Tensor& grad, const Tensor& w, std::size_t length, std::size_t padding);
/// Adjoint of conv1d in its weight; `kernel` is the kernel width.
Tensor conv1d_weight_grad(const Tensor& x, const Tensor& grad, std::size_t kernel, std::size_t padding);

/// Non-overlapping max pooling over the last axis; trailing samples that do not fill a window are dropped.
Tensor maxpool1d(const Tensor& x, std::size_t kernel);

using IndexMap = std::shared_ptr<const std::vector<std::size_t>>;
/// out[i] = x[index[i]].
Tensor gather(const Tensor& x, const IndexMap& index, const Shape& out_shape);
/// out[index[i]] += g[i]; adjoint of gather.
Tensor scatter_add(const Tensor& g, const IndexMap& index, const Shape& out_shape);

Tensor relu(const Tensor& x);
/// x * mask with a constant 0/1 mask.
Tensor mask_mul(const Tensor& x, const std::shared_ptr<const std::vector<double>>& mask);

Tensor reshape(const Tensor& x, Shape shape);
/// (N x d1 x d2 ...) -> (N x d1*d2*...).
Tensor flatten(const Tensor& x);

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
/// Fills `shape` with the scalar s.
Tensor expand_scalar(const Tensor& s, const Shape& shape);

/// mean((pred - target)^2) over every element.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

} // namespace metaloc::ad
