#pragma once

#include <cstdint>
#include <random>

namespace ilab {

// SplitMix64 step; used both as a stream generator and as a stable
// seed-mixing hash so that (master_seed, index) -> substream seed is
// platform independent.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stable derived seed for job/path substreams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x6a09e667f3bcc909ULL + index * 0x9e3779b97f4a7c15ULL);
    splitmix64(s);
    return splitmix64(s);
}

// Deterministic RNG. Distributions are hand-rolled on top of the raw
// 64-bit stream so that sampled sequences depend only on the seed, not
// on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed == 0 ? 0x9e3779b97f4a7c15ULL : seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Standard normal via Box-Muller. The cosine branch only; one normal
    // consumes two uniforms, keeping the stream layout trivial.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    double normal(double mu, double sd) { return mu + sd * normal(); }

    // Rademacher sign.
    int sign() { return (next_u64() & 1ULL) ? 1 : -1; }

private:
    std::mt19937_64 eng_;
};

}  // namespace ilab
