#include "ngt/conv.hpp"

#include <stdexcept>
#include <string>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

// Direct convolution kernels. Stride-1 convs (the only ones the networks
// use) run on a zero-padded copy of each input image so the inner loops are
// branch-free; the float path has AVX-512 kernels for the 3x3 and 1x1
// shapes, everything else goes through the portable loops. Summation order
// is fixed in all paths, so results are bit-reproducible run to run.

namespace ngt {

namespace {

template <typename T>
void check_forward_shapes(const Tensor<T>& x, const Conv2d<T>& layer) {
    if (x.c != layer.in_ch)
        throw std::runtime_error("conv2d: input has " + std::to_string(x.c) +
                                 " channels, layer expects " + std::to_string(layer.in_ch));
    if (x.h + 2 * layer.pad < layer.k || x.w + 2 * layer.pad < layer.k)
        throw std::runtime_error("conv2d: input smaller than kernel");
}

// Zero-padded copy of one image: C x (H+2p) x (W+2p). Only the border is
// cleared; interior rows are copied over whatever the buffer held.
template <typename T>
void pad_image(const Tensor<T>& x, int n, int pad, RawVector<T>& out) {
    const int ph = x.h + 2 * pad, pw = x.w + 2 * pad;
    out.resize(static_cast<std::size_t>(x.c) * ph * pw);
    for (int c = 0; c < x.c; ++c) {
        T* plane = out.data() + static_cast<std::size_t>(c) * ph * pw;
        for (int y = 0; y < pad; ++y) {
            std::fill_n(plane + static_cast<std::size_t>(y) * pw, pw, T(0));
            std::fill_n(plane + static_cast<std::size_t>(ph - 1 - y) * pw, pw, T(0));
        }
        const T* src = x.plane(n, c);
        for (int y = 0; y < x.h; ++y) {
            T* row = plane + static_cast<std::size_t>(y + pad) * pw;
            std::fill_n(row, pad, T(0));
            std::copy_n(src + static_cast<std::size_t>(y) * x.w, x.w, row + pad);
            std::fill_n(row + pad + x.w, pad, T(0));
        }
    }
}

// ---- portable stride-1 kernels ------------------------------------------------

template <typename T>
void row_k3(T* __restrict acc, const T* __restrict r0, const T* __restrict r1,
            const T* __restrict r2, const T* __restrict w, int ow) {
    const T w0 = w[0], w1 = w[1], w2 = w[2], w3 = w[3], w4 = w[4], w5 = w[5], w6 = w[6],
            w7 = w[7], w8 = w[8];
    for (int x = 0; x < ow; ++x) {
        acc[x] += w0 * r0[x] + w1 * r0[x + 1] + w2 * r0[x + 2] + w3 * r1[x] + w4 * r1[x + 1] +
                  w5 * r1[x + 2] + w6 * r2[x] + w7 * r2[x + 1] + w8 * r2[x + 2];
    }
}

template <typename T>
void row_generic(T* __restrict acc, const T* __restrict row, const T* __restrict w, int k,
                 int ow) {
    for (int kx = 0; kx < k; ++kx) {
        const T wk = w[kx];
        for (int x = 0; x < ow; ++x) acc[x] += wk * row[x + kx];
    }
}

template <typename T>
void forward_s1(const RawVector<T>& padded, const Conv2d<T>& layer, Tensor<T>& out, int n,
                int pw) {
    const int k = layer.k, ow = out.w, oh = out.h;
    std::vector<T> acc(ow);
    for (int oc = 0; oc < layer.out_ch; ++oc) {
        T* dst = out.plane(n, oc);
        for (int y = 0; y < oh; ++y) {
            acc.assign(ow, layer.bias[oc]);
            for (int ic = 0; ic < layer.in_ch; ++ic) {
                const T* base = padded.data() + static_cast<std::size_t>(ic) * pw * (oh + k - 1) +
                                static_cast<std::size_t>(y) * pw;
                const T* w = layer.kernel_at(oc, ic);
                if (k == 3) {
                    row_k3(acc.data(), base, base + pw, base + 2 * pw, w, ow);
                } else {
                    for (int ky = 0; ky < k; ++ky)
                        row_generic(acc.data(), base + static_cast<std::size_t>(ky) * pw,
                                    w + ky * k, k, ow);
                }
            }
            for (int x = 0; x < ow; ++x) dst[static_cast<std::size_t>(y) * ow + x] = acc[x];
        }
    }
}

// Lane-array accumulators: sixteen explicit partial sums per tap keep the
// reduction order fixed and the loop vectorizable without reassociation.
template <typename T>
void wgrad_s1(const RawVector<T>& padded, const Tensor<T>& grad_out, const Conv2d<T>& layer,
              int n, int pw, std::vector<T>& grad_w) {
    constexpr int kLanes = 16;
    const int k = layer.k, oh = grad_out.h, ow = grad_out.w;
    for (int oc = 0; oc < layer.out_ch; ++oc) {
        const T* go = grad_out.plane(n, oc);
        for (int ic = 0; ic < layer.in_ch; ++ic) {
            T lanes[49][kLanes] = {};  // k up to 7
            const T* base = padded.data() + static_cast<std::size_t>(ic) * pw * (oh + k - 1);
            for (int y = 0; y < oh; ++y) {
                const T* __restrict go_row = go + static_cast<std::size_t>(y) * ow;
                for (int ky = 0; ky < k; ++ky) {
                    const T* in_row = base + static_cast<std::size_t>(y + ky) * pw;
                    for (int kx = 0; kx < k; ++kx) {
                        T* __restrict lane = lanes[ky * k + kx];
                        const T* __restrict in_s = in_row + kx;
                        int x = 0;
                        for (; x + kLanes <= ow; x += kLanes)
                            for (int l = 0; l < kLanes; ++l) lane[l] += go_row[x + l] * in_s[x + l];
                        for (int l = 0; x + l < ow; ++l) lane[l] += go_row[x + l] * in_s[x + l];
                    }
                }
            }
            T* dst = grad_w.data() + (static_cast<std::size_t>(oc) * layer.in_ch + ic) * k * k;
            for (int j = 0; j < k * k; ++j) {
                T sum = T(0);
                for (int l = 0; l < kLanes; ++l) sum += lanes[j][l];
                dst[j] += sum;
            }
        }
    }
}

// ---- AVX-512 float kernels ------------------------------------------------------

#if defined(__AVX512F__)

// 3x3 forward, register-tiled: OCB output channels x 32 px held in
// accumulators while the full input-channel reduction streams row loads
// shared by every output channel in the tile.
template <int OCB>
void fwd_k3_tile(const float* padded, int pw, int ph, const Conv2d<float>& layer, int oc0,
                 int y, int x0, __mmask16 m0, __mmask16 m1, float* out_base,
                 std::size_t out_plane_stride, int ow) {
    __m512 acc[OCB][2];
    for (int b = 0; b < OCB; ++b) {
        acc[b][0] = _mm512_set1_ps(layer.bias[oc0 + b]);
        acc[b][1] = _mm512_set1_ps(layer.bias[oc0 + b]);
    }
    const std::size_t wstride = static_cast<std::size_t>(layer.in_ch) * 9;
    const float* w0 = layer.weight.data() + static_cast<std::size_t>(oc0) * wstride;
    for (int ic = 0; ic < layer.in_ch; ++ic) {
        const float* row = padded + static_cast<std::size_t>(ic) * ph * pw +
                           static_cast<std::size_t>(y) * pw + x0;
        const float* w = w0 + ic * 9;
        for (int t = 0; t < 3; ++t, row += pw) {
            for (int kx = 0; kx < 3; ++kx) {
                const __m512 v0 = _mm512_maskz_loadu_ps(m0, row + kx);
                const __m512 v1 = _mm512_maskz_loadu_ps(m1, row + kx + 16);
                for (int b = 0; b < OCB; ++b) {
                    const __m512 wb = _mm512_set1_ps(w[b * wstride + t * 3 + kx]);
                    acc[b][0] = _mm512_fmadd_ps(wb, v0, acc[b][0]);
                    acc[b][1] = _mm512_fmadd_ps(wb, v1, acc[b][1]);
                }
            }
        }
    }
    float* dst = out_base + static_cast<std::size_t>(oc0) * out_plane_stride +
                 static_cast<std::size_t>(y) * ow + x0;
    for (int b = 0; b < OCB; ++b, dst += out_plane_stride) {
        _mm512_mask_storeu_ps(dst, m0, acc[b][0]);
        if (m1) _mm512_mask_storeu_ps(dst + 16, m1, acc[b][1]);
    }
}

void fwd_k3_f32(const RawVector<float>& padded, const Conv2d<float>& layer, Tensor<float>& out,
                int n, int pw) {
    const int ow = out.w, oh = out.h, ph = oh + 2;
    float* out_base = out.plane(n, 0);
    const std::size_t plane_stride = out.plane_size();
    for (int y = 0; y < oh; ++y) {
        for (int x0 = 0; x0 < ow; x0 += 32) {
            const int left = ow - x0;
            const __mmask16 m0 = left >= 16 ? static_cast<__mmask16>(0xffff)
                                            : static_cast<__mmask16>((1u << left) - 1);
            const int left1 = left - 16;
            const __mmask16 m1 = left1 >= 16  ? static_cast<__mmask16>(0xffff)
                                 : left1 <= 0 ? static_cast<__mmask16>(0)
                                              : static_cast<__mmask16>((1u << left1) - 1);
            int oc = 0;
            for (; oc + 4 <= layer.out_ch; oc += 4)
                fwd_k3_tile<4>(padded.data(), pw, ph, layer, oc, y, x0, m0, m1, out_base,
                               plane_stride, ow);
            for (; oc < layer.out_ch; ++oc)
                fwd_k3_tile<1>(padded.data(), pw, ph, layer, oc, y, x0, m0, m1, out_base,
                               plane_stride, ow);
        }
    }
}

// 1x1 convs have no padding; treat each plane as one flat vector.
template <int OCB>
void fwd_k1_tile(const Tensor<float>& x, const Conv2d<float>& layer, int n, int oc0,
                 std::size_t i0, __mmask16 m0, __mmask16 m1, float* out_base,
                 std::size_t out_plane_stride) {
    __m512 acc[OCB][2];
    for (int b = 0; b < OCB; ++b) {
        acc[b][0] = _mm512_set1_ps(layer.bias[oc0 + b]);
        acc[b][1] = _mm512_set1_ps(layer.bias[oc0 + b]);
    }
    for (int ic = 0; ic < layer.in_ch; ++ic) {
        const float* src = x.plane(n, ic) + i0;
        const __m512 v0 = _mm512_maskz_loadu_ps(m0, src);
        const __m512 v1 = _mm512_maskz_loadu_ps(m1, src + 16);
        for (int b = 0; b < OCB; ++b) {
            const __m512 w =
                _mm512_set1_ps(layer.weight[static_cast<std::size_t>(oc0 + b) * layer.in_ch + ic]);
            acc[b][0] = _mm512_fmadd_ps(w, v0, acc[b][0]);
            acc[b][1] = _mm512_fmadd_ps(w, v1, acc[b][1]);
        }
    }
    float* dst = out_base + static_cast<std::size_t>(oc0) * out_plane_stride + i0;
    for (int b = 0; b < OCB; ++b, dst += out_plane_stride) {
        _mm512_mask_storeu_ps(dst, m0, acc[b][0]);
        if (m1) _mm512_mask_storeu_ps(dst + 16, m1, acc[b][1]);
    }
}

void fwd_k1_f32(const Tensor<float>& x, const Conv2d<float>& layer, Tensor<float>& out, int n) {
    const std::size_t plane = x.plane_size();
    float* out_base = out.plane(n, 0);
    for (std::size_t i0 = 0; i0 < plane; i0 += 32) {
        const std::size_t left = plane - i0;
        const __mmask16 m0 = left >= 16 ? static_cast<__mmask16>(0xffff)
                                        : static_cast<__mmask16>((1u << left) - 1);
        const __mmask16 m1 = left >= 32   ? static_cast<__mmask16>(0xffff)
                             : left <= 16 ? static_cast<__mmask16>(0)
                                          : static_cast<__mmask16>((1u << (left - 16)) - 1);
        int oc = 0;
        for (; oc + 4 <= layer.out_ch; oc += 4)
            fwd_k1_tile<4>(x, layer, n, oc, i0, m0, m1, out_base, plane);
        for (; oc < layer.out_ch; ++oc)
            fwd_k1_tile<1>(x, layer, n, oc, i0, m0, m1, out_base, plane);
    }
}

// 3x3 weight gradient: two output channels share every input-row load; nine
// tap accumulators per channel live in registers across the whole plane.
template <int OCB>
void wgrad_k3_tile(const float* padded, const Tensor<float>& grad_out, const Conv2d<float>& layer,
                   int n, int pw, int ph, int oc0, int ic, std::vector<float>& grad_w) {
    const int oh = grad_out.h, ow = grad_out.w;
    const int chunks = (ow + 15) / 16;
    const __mmask16 last_mask = ow % 16 == 0 ? static_cast<__mmask16>(0xffff)
                                             : static_cast<__mmask16>((1u << (ow % 16)) - 1);
    __m512 acc[OCB][9];
    for (int b = 0; b < OCB; ++b)
        for (int j = 0; j < 9; ++j) acc[b][j] = _mm512_setzero_ps();
    const float* base = padded + static_cast<std::size_t>(ic) * ph * pw;
    const float* go[OCB];
    for (int b = 0; b < OCB; ++b) go[b] = grad_out.plane(n, oc0 + b);
    for (int y = 0; y < oh; ++y) {
        const float* r0 = base + static_cast<std::size_t>(y) * pw;
        for (int c = 0; c < chunks; ++c) {
            const __mmask16 mask = c == chunks - 1 ? last_mask : static_cast<__mmask16>(0xffff);
            const int x = c * 16;
            __m512 g[OCB];
            for (int b = 0; b < OCB; ++b)
                g[b] = _mm512_maskz_loadu_ps(mask, go[b] + static_cast<std::size_t>(y) * ow + x);
            for (int t = 0; t < 3; ++t) {
                const float* row = r0 + static_cast<std::size_t>(t) * pw + x;
                const __m512 v0 = _mm512_maskz_loadu_ps(mask, row);
                const __m512 v1 = _mm512_maskz_loadu_ps(mask, row + 1);
                const __m512 v2 = _mm512_maskz_loadu_ps(mask, row + 2);
                for (int b = 0; b < OCB; ++b) {
                    acc[b][t * 3 + 0] = _mm512_fmadd_ps(g[b], v0, acc[b][t * 3 + 0]);
                    acc[b][t * 3 + 1] = _mm512_fmadd_ps(g[b], v1, acc[b][t * 3 + 1]);
                    acc[b][t * 3 + 2] = _mm512_fmadd_ps(g[b], v2, acc[b][t * 3 + 2]);
                }
            }
        }
    }
    for (int b = 0; b < OCB; ++b) {
        float* dst =
            grad_w.data() + (static_cast<std::size_t>(oc0 + b) * layer.in_ch + ic) * 9;
        for (int j = 0; j < 9; ++j) dst[j] += _mm512_reduce_add_ps(acc[b][j]);
    }
}

void wgrad_k3_f32(const RawVector<float>& padded, const Tensor<float>& grad_out,
                  const Conv2d<float>& layer, int n, int pw, std::vector<float>& grad_w) {
    const int ph = grad_out.h + 2;
    for (int ic = 0; ic < layer.in_ch; ++ic) {
        int oc = 0;
        for (; oc + 2 <= layer.out_ch; oc += 2)
            wgrad_k3_tile<2>(padded.data(), grad_out, layer, n, pw, ph, oc, ic, grad_w);
        for (; oc < layer.out_ch; ++oc)
            wgrad_k3_tile<1>(padded.data(), grad_out, layer, n, pw, ph, oc, ic, grad_w);
    }
}

void wgrad_k1_f32(const Tensor<float>& x, const Tensor<float>& grad_out,
                  const Conv2d<float>& layer, int n, std::vector<float>& grad_w) {
    const std::size_t plane = x.plane_size();
    const std::size_t chunks = (plane + 15) / 16;
    const __mmask16 last_mask =
        plane % 16 == 0 ? static_cast<__mmask16>(0xffff)
                        : static_cast<__mmask16>((1u << (plane % 16)) - 1);
    for (int oc = 0; oc < layer.out_ch; ++oc) {
        const float* go = grad_out.plane(n, oc);
        for (int ic = 0; ic < layer.in_ch; ++ic) {
            const float* src = x.plane(n, ic);
            __m512 acc = _mm512_setzero_ps();
            for (std::size_t c = 0; c < chunks; ++c) {
                const __mmask16 mask = c == chunks - 1 ? last_mask : static_cast<__mmask16>(0xffff);
                const std::size_t i = c * 16;
                if (mask != 0xffff) {
                    acc = _mm512_fmadd_ps(_mm512_maskz_loadu_ps(mask, go + i),
                                          _mm512_maskz_loadu_ps(mask, src + i), acc);
                } else {
                    acc = _mm512_fmadd_ps(_mm512_loadu_ps(go + i), _mm512_loadu_ps(src + i), acc);
                }
            }
            grad_w[static_cast<std::size_t>(oc) * layer.in_ch + ic] += _mm512_reduce_add_ps(acc);
        }
    }
}

#endif  // __AVX512F__

// ---- arbitrary-stride fallback ---------------------------------------------------

template <typename T>
void forward_generic(const Tensor<T>& x, const Conv2d<T>& layer, Tensor<T>& out) {
    const int k = layer.k, s = layer.stride, p = layer.pad;
    for (int n = 0; n < x.n; ++n)
        for (int oc = 0; oc < layer.out_ch; ++oc)
            for (int oy = 0; oy < out.h; ++oy)
                for (int ox = 0; ox < out.w; ++ox) {
                    T sum = layer.bias[oc];
                    for (int ic = 0; ic < x.c; ++ic) {
                        const T* w = layer.kernel_at(oc, ic);
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = oy * s + ky - p;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = ox * s + kx - p;
                                if (ix < 0 || ix >= x.w) continue;
                                sum += w[ky * k + kx] * x.at(n, ic, iy, ix);
                            }
                        }
                    }
                    out.at(n, oc, oy, ox) = sum;
                }
}

template <typename T>
void wgrad_generic(const Tensor<T>& x, const Tensor<T>& grad_out, const Conv2d<T>& layer,
                   std::vector<T>& grad_w) {
    const int k = layer.k, s = layer.stride, p = layer.pad;
    for (int n = 0; n < x.n; ++n)
        for (int oc = 0; oc < layer.out_ch; ++oc)
            for (int ic = 0; ic < layer.in_ch; ++ic)
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx) {
                        T sum = T(0);
                        for (int oy = 0; oy < grad_out.h; ++oy) {
                            const int iy = oy * s + ky - p;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int ox = 0; ox < grad_out.w; ++ox) {
                                const int ix = ox * s + kx - p;
                                if (ix < 0 || ix >= x.w) continue;
                                sum += grad_out.at(n, oc, oy, ox) * x.at(n, ic, iy, ix);
                            }
                        }
                        grad_w[(static_cast<std::size_t>(oc) * layer.in_ch + ic) * k * k +
                               ky * k + kx] += sum;
                    }
}

template <typename T>
Conv2d<T> transposed_kernel(const Conv2d<T>& layer) {
    Conv2d<T> t(layer.out_ch, layer.in_ch, layer.k, 1, layer.k - 1 - layer.pad);
    for (int oc = 0; oc < layer.out_ch; ++oc)
        for (int ic = 0; ic < layer.in_ch; ++ic) {
            const T* src = layer.kernel_at(oc, ic);
            T* dst = t.kernel_at(ic, oc);
            for (int j = 0; j < layer.k * layer.k; ++j) dst[j] = src[layer.k * layer.k - 1 - j];
        }
    return t;
}

template <typename T>
void dgrad_generic(const Tensor<T>& grad_out, const Conv2d<T>& layer, Tensor<T>& grad_x) {
    const int k = layer.k, s = layer.stride, p = layer.pad;
    for (int n = 0; n < grad_out.n; ++n)
        for (int oc = 0; oc < layer.out_ch; ++oc)
            for (int oy = 0; oy < grad_out.h; ++oy)
                for (int ox = 0; ox < grad_out.w; ++ox) {
                    const T g = grad_out.at(n, oc, oy, ox);
                    for (int ic = 0; ic < layer.in_ch; ++ic) {
                        const T* w = layer.kernel_at(oc, ic);
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = oy * s + ky - p;
                            if (iy < 0 || iy >= grad_x.h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = ox * s + kx - p;
                                if (ix < 0 || ix >= grad_x.w) continue;
                                grad_x.at(n, ic, iy, ix) += g * w[ky * k + kx];
                            }
                        }
                    }
                }
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Conv2d<T>& layer) {
    check_forward_shapes(x, layer);
    Tensor<T> out = Tensor<T>::uninit(x.n, layer.out_ch, layer.out_extent(x.h), layer.out_extent(x.w));
    if (layer.stride != 1) {
        forward_generic(x, layer, out);
        return out;
    }
#if defined(__AVX512F__)
    if constexpr (std::is_same_v<T, float>) {
        if (layer.k == 1 && layer.pad == 0) {
            for (int n = 0; n < x.n; ++n) fwd_k1_f32(x, layer, out, n);
            return out;
        }
        if (layer.k == 3 && layer.pad == 1) {
            const int pw = x.w + 2;
            RawVector<float> padded;
            for (int n = 0; n < x.n; ++n) {
                pad_image(x, n, 1, padded);
                fwd_k3_f32(padded, layer, out, n, pw);
            }
            return out;
        }
    }
#endif
    {
        const int pw = x.w + 2 * layer.pad;
        RawVector<T> padded;
        for (int n = 0; n < x.n; ++n) {
            pad_image(x, n, layer.pad, padded);
            forward_s1(padded, layer, out, n, pw);
        }
    }
    return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Conv2d<T>& layer, const Tensor<T>& grad_out,
                             bool need_input_grad) {
    check_forward_shapes(x, layer);
    if (grad_out.c != layer.out_ch || grad_out.h != layer.out_extent(x.h) ||
        grad_out.w != layer.out_extent(x.w) || grad_out.n != x.n)
        throw std::runtime_error("conv2d_backward: grad_out shape mismatch");

    ConvGrads<T> grads;
    grads.weight.assign(layer.weight.size(), T(0));
    grads.bias.assign(layer.bias.size(), T(0));

    // Bias gradient: per-channel sum of grad_out.
    for (int oc = 0; oc < layer.out_ch; ++oc) {
        double sum = 0.0;
        for (int n = 0; n < grad_out.n; ++n) {
            const T* go = grad_out.plane(n, oc);
            const std::size_t plane = grad_out.plane_size();
#if defined(__AVX512F__)
            if constexpr (std::is_same_v<T, float>) {
                __m512 acc = _mm512_setzero_ps();
                std::size_t i = 0;
                for (; i + 16 <= plane; i += 16) acc = _mm512_add_ps(acc, _mm512_loadu_ps(go + i));
                sum += static_cast<double>(_mm512_reduce_add_ps(acc));
                for (; i < plane; ++i) sum += static_cast<double>(go[i]);
                continue;
            }
#endif
            for (std::size_t i = 0; i < plane; ++i) sum += static_cast<double>(go[i]);
        }
        grads.bias[oc] = static_cast<T>(sum);
    }

    if (layer.stride != 1) {
        wgrad_generic(x, grad_out, layer, grads.weight);
        if (need_input_grad) {
            grads.x = zeros_like(x);
            dgrad_generic(grad_out, layer, grads.x);
        }
        return grads;
    }

#if defined(__AVX512F__)
    if constexpr (std::is_same_v<T, float>) {
        if (layer.k == 1 && layer.pad == 0) {
            for (int n = 0; n < x.n; ++n) wgrad_k1_f32(x, grad_out, layer, n, grads.weight);
            if (need_input_grad) grads.x = conv2d_forward(grad_out, transposed_kernel(layer));
            return grads;
        }
        if (layer.k == 3 && layer.pad == 1) {
            const int pw = x.w + 2;
            RawVector<float> padded;
            for (int n = 0; n < x.n; ++n) {
                pad_image(x, n, 1, padded);
                wgrad_k3_f32(padded, grad_out, layer, n, pw, grads.weight);
            }
            if (need_input_grad) grads.x = conv2d_forward(grad_out, transposed_kernel(layer));
            return grads;
        }
    }
#endif
    {
        const int pw = x.w + 2 * layer.pad;
        RawVector<T> padded;
        for (int n = 0; n < x.n; ++n) {
            pad_image(x, n, layer.pad, padded);
            wgrad_s1(padded, grad_out, layer, n, pw, grads.weight);
        }
        if (need_input_grad) grads.x = conv2d_forward(grad_out, transposed_kernel(layer));
    }
    return grads;
}

template Tensor<float> conv2d_forward(const Tensor<float>&, const Conv2d<float>&);
template Tensor<double> conv2d_forward(const Tensor<double>&, const Conv2d<double>&);
template ConvGrads<float> conv2d_backward(const Tensor<float>&, const Conv2d<float>&,
                                          const Tensor<float>&, bool);
template ConvGrads<double> conv2d_backward(const Tensor<double>&, const Conv2d<double>&,
                                           const Tensor<double>&, bool);

}  // namespace ngt
