#include "ngt/ops.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <stdexcept>

namespace ngt {

namespace {

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* who) {
    if (!a.same_shape(b)) throw std::runtime_error(std::string(who) + ": shape mismatch");
}

}  // namespace

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
    Tensor<T> out = x;
    for (auto& v : out.values) v = v > T(0) ? v : slope * v;
    return out;
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out, T slope) {
    check_same_shape(x, grad_out, "leaky_relu_backward");
    Tensor<T> gx = grad_out;
    for (std::size_t i = 0; i < gx.values.size(); ++i)
        if (x.values[i] <= T(0)) gx.values[i] *= slope;
    return gx;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    // The exact logistic rounds to 1.0 (or underflows to 0.0) once |x|
    // passes the precision horizon; outputs are pinned to the open
    // interval so downstream products never see a hard 0 or 1.
    const T hi = std::nextafter(T(1), T(0));
    const T lo = std::numeric_limits<T>::min();
    Tensor<T> out = x;
    for (auto& v : out.values) {
        if (v >= T(0)) {
            const T e = std::exp(-v);
            v = T(1) / (T(1) + e);
        } else {
            const T e = std::exp(v);
            v = e / (T(1) + e);
        }
        v = std::clamp(v, lo, hi);
    }
    return out;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& grad_out) {
    check_same_shape(y, grad_out, "sigmoid_backward");
    Tensor<T> gx = grad_out;
    for (std::size_t i = 0; i < gx.values.size(); ++i)
        gx.values[i] *= y.values[i] * (T(1) - y.values[i]);
    return gx;
}

template <typename T>
Tensor<T> channel_pool(const Tensor<T>& x) {
    if (x.c < 1) throw std::runtime_error("channel_pool: no channels");
    Tensor<T> out = Tensor<T>::uninit(x.n, 2, x.h, x.w);
    const std::size_t ps = x.plane_size();
    for (int n = 0; n < x.n; ++n) {
        T* mean = out.plane(n, 0);
        T* mx = out.plane(n, 1);
        const T* first = x.plane(n, 0);
        for (std::size_t i = 0; i < ps; ++i) {
            mean[i] = first[i];
            mx[i] = first[i];
        }
        for (int c = 1; c < x.c; ++c) {
            const T* p = x.plane(n, c);
            for (std::size_t i = 0; i < ps; ++i) {
                mean[i] += p[i];
                mx[i] = std::max(mx[i], p[i]);
            }
        }
        const T inv = T(1) / static_cast<T>(x.c);
        for (std::size_t i = 0; i < ps; ++i) mean[i] *= inv;
    }
    return out;
}

template <typename T>
Tensor<T> channel_pool_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
    if (grad_out.n != x.n || grad_out.c != 2 || grad_out.h != x.h || grad_out.w != x.w)
        throw std::runtime_error("channel_pool_backward: shape mismatch");
    Tensor<T> gx = zeros_like(x);
    const std::size_t ps = x.plane_size();
    const T inv = T(1) / static_cast<T>(x.c);
    for (int n = 0; n < x.n; ++n) {
        const T* gmean = grad_out.plane(n, 0);
        const T* gmax = grad_out.plane(n, 1);
        for (std::size_t i = 0; i < ps; ++i) {
            int best = 0;
            T best_v = x.plane(n, 0)[i];
            for (int c = 1; c < x.c; ++c) {
                const T v = x.plane(n, c)[i];
                if (v > best_v) {
                    best_v = v;
                    best = c;
                }
            }
            for (int c = 0; c < x.c; ++c) gx.plane(n, c)[i] += gmean[i] * inv;
            gx.plane(n, best)[i] += gmax[i];
        }
    }
    return gx;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (b.numel() == 0) return a;
    if (a.numel() == 0) return b;
    if (a.n != b.n || a.h != b.h || a.w != b.w)
        throw std::runtime_error("concat_channels: spatial shape mismatch");
    Tensor<T> out = Tensor<T>::uninit(a.n, a.c + b.c, a.h, a.w);
    const std::size_t ps = a.plane_size();
    for (int n = 0; n < a.n; ++n) {
        for (int c = 0; c < a.c; ++c)
            std::copy_n(a.plane(n, c), ps, out.plane(n, c));
        for (int c = 0; c < b.c; ++c)
            std::copy_n(b.plane(n, c), ps, out.plane(n, a.c + c));
    }
    return out;
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, int c_begin, int c_end) {
    if (c_begin < 0 || c_end > x.c || c_begin >= c_end)
        throw std::runtime_error("slice_channels: bad channel range");
    Tensor<T> out = Tensor<T>::uninit(x.n, c_end - c_begin, x.h, x.w);
    for (int n = 0; n < x.n; ++n)
        for (int c = c_begin; c < c_end; ++c)
            std::copy_n(x.plane(n, c), x.plane_size(), out.plane(n, c - c_begin));
    return out;
}

template <typename T>
Tensor<T> broadcast_mul(const Tensor<T>& x, const Tensor<T>& map) {
    if (map.c != 1 || map.n != x.n || map.h != x.h || map.w != x.w)
        throw std::runtime_error("broadcast_mul: map must be (N,1,H,W) matching x");
    Tensor<T> out = x;
    for (int n = 0; n < x.n; ++n) {
        const T* m = map.plane(n, 0);
        for (int c = 0; c < x.c; ++c) {
            T* p = out.plane(n, c);
            for (std::size_t i = 0; i < x.plane_size(); ++i) p[i] *= m[i];
        }
    }
    return out;
}

template <typename T>
Tensor<T> clamp01(const Tensor<T>& x) {
    Tensor<T> out = x;
    for (auto& v : out.values) v = std::clamp(v, T(0), T(1));
    return out;
}

template <typename T>
Tensor<T> clamp01_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
    check_same_shape(x, grad_out, "clamp01_backward");
    Tensor<T> gx = grad_out;
    for (std::size_t i = 0; i < gx.values.size(); ++i)
        if (x.values[i] <= T(0) || x.values[i] >= T(1)) gx.values[i] = T(0);
    return gx;
}

template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    check_same_shape(pred, target, "mse_loss");
    LossResult<T> res;
    res.grad = zeros_like(pred);
    const double inv_n = 1.0 / static_cast<double>(pred.numel());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double d = static_cast<double>(pred.values[i]) - static_cast<double>(target.values[i]);
        sum += d * d;
        res.grad.values[i] = static_cast<T>(2.0 * d * inv_n);
    }
    res.value = sum * inv_n;
    return res;
}

template <typename T>
LossResult<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    check_same_shape(pred, target, "l1_loss");
    LossResult<T> res;
    res.grad = zeros_like(pred);
    const double inv_n = 1.0 / static_cast<double>(pred.numel());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double d = static_cast<double>(pred.values[i]) - static_cast<double>(target.values[i]);
        sum += std::abs(d);
        res.grad.values[i] = static_cast<T>((d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) * inv_n);
    }
    res.value = sum * inv_n;
    return res;
}

#define NGT_INSTANTIATE(T)                                                            \
    template Tensor<T> leaky_relu(const Tensor<T>&, T);                              \
    template Tensor<T> leaky_relu_backward(const Tensor<T>&, const Tensor<T>&, T);   \
    template Tensor<T> sigmoid(const Tensor<T>&);                                    \
    template Tensor<T> sigmoid_backward(const Tensor<T>&, const Tensor<T>&);         \
    template Tensor<T> channel_pool(const Tensor<T>&);                               \
    template Tensor<T> channel_pool_backward(const Tensor<T>&, const Tensor<T>&);    \
    template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);          \
    template Tensor<T> slice_channels(const Tensor<T>&, int, int);                   \
    template Tensor<T> broadcast_mul(const Tensor<T>&, const Tensor<T>&);            \
    template Tensor<T> clamp01(const Tensor<T>&);                                    \
    template Tensor<T> clamp01_backward(const Tensor<T>&, const Tensor<T>&);         \
    template LossResult<T> mse_loss(const Tensor<T>&, const Tensor<T>&);             \
    template LossResult<T> l1_loss(const Tensor<T>&, const Tensor<T>&);

NGT_INSTANTIATE(float)
NGT_INSTANTIATE(double)
#undef NGT_INSTANTIATE

}  // namespace ngt
