#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace deepmvc {

// Seeded RNG with hand-rolled distributions. std::uniform_real_distribution
// and friends are implementation-defined, so sampling goes through our own
// transforms to keep every seed bit-reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Rejection-free modulo is biased only below 2^-53 at desk-scale n.
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    // Standard normal via Box-Muller. Caches the second deviate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// splitmix64 finalizer; good enough to decorrelate derived streams.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent substream for (seed, index); used for per-trial and
// per-component streams so parallel work stays deterministic.
inline Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix_seed(seed, index));
}

} // namespace deepmvc
