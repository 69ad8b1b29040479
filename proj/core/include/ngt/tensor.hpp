#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

#include "ngt/image.hpp"

namespace ngt {

// Allocator that skips value-initialization on resize; buffers that are
// fully overwritten (conv outputs, concats) shouldn't pay for a memset.
template <typename T, typename A = std::allocator<T>>
struct DefaultInitAllocator : public A {
    template <typename U>
    struct rebind {
        using other = DefaultInitAllocator<U, typename std::allocator_traits<A>::template rebind_alloc<U>>;
    };
    using A::A;
    template <typename U>
    void construct(U* ptr) noexcept(std::is_nothrow_default_constructible_v<U>) {
        ::new (static_cast<void*>(ptr)) U;
    }
    template <typename U, typename... Args>
    void construct(U* ptr, Args&&... args) {
        std::allocator_traits<A>::construct(static_cast<A&>(*this), ptr,
                                            std::forward<Args>(args)...);
    }
};

template <typename T>
using RawVector = std::vector<T, DefaultInitAllocator<T>>;

// N x C x H x W dense array. Training math runs in float; the
// finite-difference harness instantiates the same code in double.
template <typename T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    RawVector<T> values;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_),
          values(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

    // Shape set, contents unspecified; caller must write every element.
    static Tensor uninit(int n_, int c_, int h_, int w_) {
        Tensor t;
        t.n = n_;
        t.c = c_;
        t.h = h_;
        t.w = w_;
        t.values.resize(static_cast<std::size_t>(n_) * c_ * h_ * w_);
        return t;
    }

    std::size_t numel() const { return values.size(); }
    std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }

    T* plane(int in, int ic) {
        return values.data() + (static_cast<std::size_t>(in) * c + ic) * plane_size();
    }
    const T* plane(int in, int ic) const {
        return values.data() + (static_cast<std::size_t>(in) * c + ic) * plane_size();
    }

    T& at(int in, int ic, int y, int x) { return plane(in, ic)[static_cast<std::size_t>(y) * w + x]; }
    T at(int in, int ic, int y, int x) const { return plane(in, ic)[static_cast<std::size_t>(y) * w + x]; }

    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

template <typename T>
Tensor<T> zeros_like(const Tensor<T>& x) {
    return Tensor<T>(x.n, x.c, x.h, x.w);
}

// Image (HWC interleaved) -> single-batch CHW tensor.
template <typename T>
Tensor<T> to_tensor(const Image& img) {
    Tensor<T> t = Tensor<T>::uninit(1, 3, img.height(), img.width());
    for (int c = 0; c < 3; ++c) {
        T* dst = t.plane(0, c);
        const float* src = img.data();
        for (std::size_t i = 0; i < t.plane_size(); ++i) dst[i] = static_cast<T>(src[i * 3 + c]);
    }
    return t;
}

template <typename T>
Tensor<T> to_tensor(const NoiseField& field) {
    Tensor<T> t = Tensor<T>::uninit(1, 3, field.height(), field.width());
    for (int c = 0; c < 3; ++c) {
        T* dst = t.plane(0, c);
        const float* src = field.data();
        for (std::size_t i = 0; i < t.plane_size(); ++i) dst[i] = static_cast<T>(src[i * 3 + c]);
    }
    return t;
}

// Image list -> (B,3,H,W); all images must share a shape.
template <typename T>
Tensor<T> to_batch(const std::vector<Image>& images) {
    if (images.empty()) throw std::runtime_error("to_batch: empty batch");
    const int h = images[0].height(), w = images[0].width();
    Tensor<T> t = Tensor<T>::uninit(static_cast<int>(images.size()), 3, h, w);
    for (std::size_t b = 0; b < images.size(); ++b) {
        if (images[b].height() != h || images[b].width() != w)
            throw std::runtime_error("to_batch: images differ in shape");
        for (int c = 0; c < 3; ++c) {
            T* dst = t.plane(static_cast<int>(b), c);
            const float* src = images[b].data();
            for (std::size_t i = 0; i < t.plane_size(); ++i) dst[i] = static_cast<T>(src[i * 3 + c]);
        }
    }
    return t;
}

template <typename T>
Image to_image(const Tensor<T>& t, int batch_index = 0) {
    Image img(t.h, t.w);
    for (int c = 0; c < 3; ++c) {
        const T* src = t.plane(batch_index, c);
        float* dst = img.data();
        for (std::size_t i = 0; i < t.plane_size(); ++i) dst[i * 3 + c] = static_cast<float>(src[i]);
    }
    img.clamp01();
    return img;
}

template <typename T>
NoiseField to_noise_field(const Tensor<T>& t, int batch_index = 0) {
    NoiseField field(t.h, t.w);
    for (int c = 0; c < 3; ++c) {
        const T* src = t.plane(batch_index, c);
        float* dst = field.data();
        for (std::size_t i = 0; i < t.plane_size(); ++i) dst[i * 3 + c] = static_cast<float>(src[i]);
    }
    return field;
}

}  // namespace ngt
