#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ngt {

struct GradCheckResult {
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Central finite differences (h = 1e-5) against the analytic backward of
// every differentiable operation and block, all in double precision.
// Primitive checks gate at 1e-6, end-to-end NEN/RN checks at 1e-5.
// Relative error per element: |a - f| / max(|a| + |f|, 1e-2).
// `corrupt_first` perturbs the first analytic gradient; it exists so tests
// can prove the harness actually detects a broken backward.
std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed, bool corrupt_first = false);

}  // namespace ngt
