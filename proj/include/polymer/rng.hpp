#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace polymer {

// Counter-based keyed generation. Every random quantity in the library is a
// pure function of a 64-bit key built by hashing words (seed, tags, lattice
// coordinates, replicate indices). Values therefore do not depend on
// traversal order or thread schedule, and enlarging a region never changes
// existing draws.
//
// The mixing function is the splitmix64 finalizer; the distribution samplers
// below are pinned algorithmically (inversion for exponentials, Box-Muller
// for normals, Marsaglia-Tsang for Gamma) so that a (seed, key) pair
// reproduces the same stream on any platform with IEEE doubles.

inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t hash_words(std::initializer_list<uint64_t> words) {
    uint64_t k = 0x8f1bbcdcbfa53e0bULL;
    for (uint64_t w : words)
        k = mix64(k ^ w);
    return k;
}

// Key-derivation tags keeping independent purposes on disjoint streams.
namespace rng_tag {
inline constexpr uint64_t kWeight = 0x57454947u;      // environment weights
inline constexpr uint64_t kBulkColumn = 0x42554c4bu;  // bulk-view column-0 resample
inline constexpr uint64_t kRowResample = 0x524f5753u; // Efron-Stein row resample
inline constexpr uint64_t kDraw = 0x44524157u;        // polymer sampling streams
inline constexpr uint64_t kEnvSeed = 0x454e5653u;     // per-replicate environment seeds
inline constexpr uint64_t kAuxSeed = 0x41555853u;     // per-replicate bulk-view aux seeds
inline constexpr uint64_t kScalar = 0x53434c52u;      // standalone scalar draws
} // namespace rng_tag

class CounterRng {
public:
    explicit CounterRng(uint64_t key) : key_(key) {}

    static CounterRng from_words(std::initializer_list<uint64_t> words) {
        return CounterRng(hash_words(words));
    }

    uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

    // Uniform on the open interval (0,1); never returns an endpoint.
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_exponential(double rate) { return -std::log(next_unit()) / rate; }

    // Box-Muller, first coordinate only.
    double next_normal() {
        const double u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Marsaglia-Tsang squeeze for shape >= 1; for shape < 1 the boost
    // Gamma(shape) = Gamma(shape+1) * U^{1/shape}.
    double next_gamma(double shape, double rate) {
        if (shape < 1.0) {
            const double g = next_gamma(shape + 1.0, 1.0);
            const double u = next_unit();
            return g * std::pow(u, 1.0 / shape) / rate;
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = next_normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = next_unit();
            if (u < 1.0 - 0.0331 * x * x * x * x)
                return d * v / rate;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v / rate;
        }
    }

private:
    uint64_t key_;
    uint64_t counter_ = 0;
};

} // namespace polymer
