#pragma once

#include <cstdint>
#include <cstddef>

namespace cbf {

// xoshiro256++ with splitmix64 seeding. Self-contained so that seeded runs
// reproduce bit-for-bit across platforms and standard library versions.
class Rng {
public:
    explicit Rng(uint64_t seed);

    // Independent stream derived from (seed, stream). Streams with different
    // indices never share state even for adjacent seeds.
    static Rng fork(uint64_t seed, uint64_t stream);

    uint64_t next_u64();

    // uniform in [0, 1), 53-bit resolution
    double uniform();
    double uniform(double lo, double hi);

    // unbiased integer in [0, n), n > 0
    uint64_t uniform_int(uint64_t n);

    // standard normal, Box-Muller, one spare cached
    double normal();

private:
    uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace cbf
