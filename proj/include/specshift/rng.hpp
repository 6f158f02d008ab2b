#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace specshift {

// splitmix64 step; used to spread seed material before it reaches the engine.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic random stream keyed by (seed, key1, key2).  The same triple
// always produces the same draws, independent of thread scheduling or call
// order, so simulation cells can be recomputed bit-for-bit in any order.
//
// All floating-point draws are derived from raw engine bits here rather than
// through std::uniform_real_distribution, whose output is implementation
// defined and would silently break reproducibility across toolchains.
class rng_stream {
  public:
    explicit rng_stream(std::uint64_t seed, std::uint64_t key1 = 0, std::uint64_t key2 = 0) {
        std::uint64_t s = seed;
        std::uint64_t mix = splitmix64(s);
        s ^= (key1 + 0x9e3779b97f4a7c15ULL) * 0xff51afd7ed558ccdULL;
        mix ^= splitmix64(s);
        s ^= (key2 + 0xc2b2ae3d27d4eb4fULL) * 0xc4ceb9fe1a85ec53ULL;
        mix ^= splitmix64(s);
        engine_.seed(mix);
    }

    std::uint64_t bits() { return engine_(); }

    // Uniform on [0,1) with 53 random mantissa bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]; never returns 0, so log/ratio transforms are safe.
    double uniform_open0() { return 1.0 - uniform(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Marsaglia polar method built on the portable uniform above.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, q;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            q = u * u + v * v;
        } while (q >= 1.0 || q == 0.0);
        const double f = std::sqrt(-2.0 * std::log(q) / q);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace specshift
