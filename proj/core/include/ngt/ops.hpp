#pragma once

#include <cstdint>
#include <vector>

#include "ngt/tensor.hpp"

namespace ngt {

// f(v) = v for v > 0, slope * v otherwise.
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope);

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out, T slope);

// Numerically stable logistic; output strictly inside (0, 1).
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

// Takes the forward *output* (sigmoid'(x) = y (1 - y)).
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& grad_out);

// (N,C,H,W) -> (N,2,H,W): channel 0 the per-pixel mean over C, channel 1 the
// per-pixel max. Ties in the max route gradient to the lowest channel index.
template <typename T>
Tensor<T> channel_pool(const Tensor<T>& x);

template <typename T>
Tensor<T> channel_pool_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

// Channels stacked a-then-b; a's channels come first.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int c_begin, int c_end);

// Broadcast-multiply a 1-channel map over every channel of x.
template <typename T>
Tensor<T> broadcast_mul(const Tensor<T>& x, const Tensor<T>& map);

template <typename T>
Tensor<T> clamp01(const Tensor<T>& x);

template <typename T>
Tensor<T> clamp01_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

template <typename T>
struct LossResult {
    double value = 0.0;
    Tensor<T> grad;  // d value / d pred
};

// Mean over all elements of (target - pred)^2.
template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target);

// Mean absolute difference; subgradient at zero is zero.
template <typename T>
LossResult<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target);

}  // namespace ngt
