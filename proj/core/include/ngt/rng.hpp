#pragma once

#include <cstdint>
#include <iosfwd>

namespace ngt {

// Seedable 64-bit generator (xoshiro256++, state expanded from the seed with
// splitmix64). All derived draws use explicit, platform-independent
// transforms so that a given seed produces the same stream everywhere:
//
//   uniform_double : (next() >> 11) * 2^-53            -> [0, 1)
//   normal         : Box-Muller, z = sqrt(-2 ln u1) * cos(2 pi u2)
//                    with u1 = ((next() >> 11) + 1) * 2^-53 in (0, 1]
//
// The second Box-Muller variate is discarded; the generator carries no
// hidden cache, so its entire state is the four words below.
class Rng {
public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    void reseed(std::uint64_t seed);

    std::uint64_t next();

    // Uniform on [0, 1).
    double uniform_double();

    // Uniform on [lo, hi).
    double uniform_real(double lo, double hi);

    // Uniform integer in {0, ..., n-1}; n >= 1.
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via Box-Muller (see transform above).
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // A generator seeded from this one's stream; used to give independent
    // components their own streams without correlated draws.
    Rng split() { return Rng(next()); }

    void save(std::ostream& out) const;
    void load(std::istream& in);

    bool operator==(const Rng& other) const = default;

private:
    std::uint64_t state_[4]{};
};

}  // namespace ngt
