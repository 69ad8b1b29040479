#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace ngt {

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;
};

// Bias-corrected Adam over a fixed set of parameter buffers. Moment buffers
// are shaped exactly like their parameters; the step counter is shared.
template <typename T>
class Adam {
public:
    Adam() = default;
    Adam(AdamConfig cfg, const std::vector<std::size_t>& buffer_sizes);

    // params[i] and grads[i] must match the size registered at construction.
    void step(const std::vector<std::span<T>>& params,
              const std::vector<std::span<const T>>& grads);

    std::int64_t step_count() const { return step_; }
    const AdamConfig& config() const { return cfg_; }

    void save(std::ostream& out) const;
    void load(std::istream& in);

    bool operator==(const Adam& other) const = default;

private:
    AdamConfig cfg_;
    std::int64_t step_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

bool operator==(const AdamConfig& a, const AdamConfig& b);

}  // namespace ngt
