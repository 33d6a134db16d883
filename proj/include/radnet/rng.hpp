#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace radnet {

/**
 * Deterministic seeded RNG (xoshiro256** core, splitmix64 seeding).
 *
 * All distributions are derived from uniform64() with fixed algorithms so a
 * given seed produces the same stream on every build of the same binary.
 * Substreams for independent entities are derived with stream(), which hashes
 * the parent seed together with caller-chosen tags; entities drawn from
 * separate substreams stay reproducible regardless of processing order.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) {
        std::uint64_t x = seed;
        for (auto& w : state_) w = splitmix64(x);
    }

    /// Derived substream seed for (seed, tags...). Order of tags matters.
    template <typename... Tags>
    static std::uint64_t stream(std::uint64_t seed, Tags... tags) {
        std::uint64_t h = seed + 0x9e3779b97f4a7c15ull;
        ((h = mix(h ^ static_cast<std::uint64_t>(tags))), ...);
        return h;
    }

    std::uint64_t uniform64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(uniform64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n), bias-free via rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t t = (0ull - n) % n;  // 2^64 mod n
        std::uint64_t v = uniform64();
        if (t != 0)
            while (v >= 0ull - t) v = uniform64();
        return v % n;
    }

    /// Standard normal via Box-Muller (no cached spare).
    double gaussian() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    /// Poisson count by Knuth's product method (fine for small means).
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double prod = uniform01();
        while (prod > limit) {
            ++k;
            prod *= uniform01();
        }
        return k;
    }

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static constexpr double two_pi = 6.283185307179586476925286766559;

    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t splitmix64(std::uint64_t& x) { return mix(x += 0x9e3779b97f4a7c15ull); }

    std::uint64_t state_[4];
};

}  // namespace radnet
