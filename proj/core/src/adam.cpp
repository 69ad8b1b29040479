#include "ngt/adam.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace ngt {

bool operator==(const AdamConfig& a, const AdamConfig& b) {
    return a.lr == b.lr && a.beta1 == b.beta1 && a.beta2 == b.beta2 && a.eps == b.eps;
}

template <typename T>
Adam<T>::Adam(AdamConfig cfg, const std::vector<std::size_t>& buffer_sizes) : cfg_(cfg) {
    m_.reserve(buffer_sizes.size());
    v_.reserve(buffer_sizes.size());
    for (std::size_t size : buffer_sizes) {
        m_.emplace_back(size, T(0));
        v_.emplace_back(size, T(0));
    }
}

template <typename T>
void Adam<T>::step(const std::vector<std::span<T>>& params,
                   const std::vector<std::span<const T>>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw std::runtime_error("adam_step: buffer count mismatch");
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto& m = m_[b];
        auto& v = v_[b];
        auto p = params[b];
        auto g = grads[b];
        if (p.size() != m.size() || g.size() != m.size())
            throw std::runtime_error("adam_step: buffer size mismatch");
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double gi = static_cast<double>(g[i]);
            const double mi = cfg_.beta1 * static_cast<double>(m[i]) + (1.0 - cfg_.beta1) * gi;
            const double vi = cfg_.beta2 * static_cast<double>(v[i]) + (1.0 - cfg_.beta2) * gi * gi;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double m_hat = mi / bc1;
            const double v_hat = vi / bc2;
            p[i] = static_cast<T>(static_cast<double>(p[i]) - cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps));
        }
    }
}

template <typename T>
void Adam<T>::save(std::ostream& out) const {
    out.write(reinterpret_cast<const char*>(&cfg_), sizeof(cfg_));
    out.write(reinterpret_cast<const char*>(&step_), sizeof(step_));
    const std::uint64_t count = m_.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (std::size_t b = 0; b < m_.size(); ++b) {
        const std::uint64_t size = m_[b].size();
        out.write(reinterpret_cast<const char*>(&size), sizeof(size));
        out.write(reinterpret_cast<const char*>(m_[b].data()), size * sizeof(T));
        out.write(reinterpret_cast<const char*>(v_[b].data()), size * sizeof(T));
    }
}

template <typename T>
void Adam<T>::load(std::istream& in) {
    in.read(reinterpret_cast<char*>(&cfg_), sizeof(cfg_));
    in.read(reinterpret_cast<char*>(&step_), sizeof(step_));
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    m_.assign(count, {});
    v_.assign(count, {});
    for (std::uint64_t b = 0; b < count; ++b) {
        std::uint64_t size = 0;
        in.read(reinterpret_cast<char*>(&size), sizeof(size));
        m_[b].resize(size);
        v_[b].resize(size);
        in.read(reinterpret_cast<char*>(m_[b].data()), size * sizeof(T));
        in.read(reinterpret_cast<char*>(v_[b].data()), size * sizeof(T));
    }
    if (!in) throw std::runtime_error("adam: truncated state");
}

template class Adam<float>;
template class Adam<double>;

}  // namespace ngt
