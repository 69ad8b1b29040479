#pragma once

#include <cstddef>
#include <vector>

#include "ngt/tensor.hpp"

namespace ngt {

// 2-D convolution layer (cross-correlation, zero padding). Weights are
// stored out x in x k x k, biases per output channel.
template <typename T>
struct Conv2d {
    int in_ch = 0, out_ch = 0, k = 1, stride = 1, pad = 0;
    std::vector<T> weight;
    std::vector<T> bias;
    std::vector<T> weight_grad;
    std::vector<T> bias_grad;

    Conv2d() = default;
    Conv2d(int in_channels, int out_channels, int kernel, int stride_ = 1, int pad_ = -1)
        : in_ch(in_channels), out_ch(out_channels), k(kernel), stride(stride_),
          pad(pad_ >= 0 ? pad_ : (kernel - 1) / 2),
          weight(static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel, T(0)),
          bias(out_channels, T(0)),
          weight_grad(weight.size(), T(0)),
          bias_grad(out_channels, T(0)) {}

    std::size_t param_count() const { return weight.size() + bias.size(); }

    int out_extent(int extent) const { return (extent + 2 * pad - k) / stride + 1; }

    const T* kernel_at(int oc, int ic) const {
        return weight.data() + (static_cast<std::size_t>(oc) * in_ch + ic) * k * k;
    }
    T* kernel_at(int oc, int ic) {
        return weight.data() + (static_cast<std::size_t>(oc) * in_ch + ic) * k * k;
    }
};

template <typename T>
struct ConvGrads {
    Tensor<T> x;
    std::vector<T> weight;
    std::vector<T> bias;
};

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Conv2d<T>& layer);

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Conv2d<T>& layer, const Tensor<T>& grad_out,
                             bool need_input_grad = true);

// Backward that stores parameter gradients on the layer and returns the
// input gradient (empty tensor when need_input_grad is false).
template <typename T>
Tensor<T> backward_into(Conv2d<T>& layer, const Tensor<T>& x, const Tensor<T>& grad_out,
                        bool need_input_grad = true) {
    ConvGrads<T> grads = conv2d_backward(x, layer, grad_out, need_input_grad);
    layer.weight_grad = std::move(grads.weight);
    layer.bias_grad = std::move(grads.bias);
    return std::move(grads.x);
}

}  // namespace ngt
