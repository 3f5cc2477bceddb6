// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_UTIL_RNG_HPP_
#define DOCLAB_UTIL_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "doclab/util/error.hpp"

namespace doclab {

// splitmix64, used for seeding and for deriving independent sub-streams.
inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Mixes a seed with stream indices so sub-streams (per class, per rollout,
// per example) are independent and order-free.
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = seed;
    uint64_t h = splitmix64(s);
    s ^= a * 0x9E3779B97F4A7C15ULL + 0x7F4A7C15ULL;
    h ^= splitmix64(s);
    s ^= b * 0xBF58476D1CE4E5B9ULL + 0x1CE4E5B9ULL;
    h ^= splitmix64(s);
    s ^= c * 0x94D049BB133111EBULL + 0x33111EBULL;
    h ^= splitmix64(s);
    return h;
}

// xoshiro256++ with explicit float construction. The standard library
// distributions are implementation-defined, so everything random in the lab
// goes through this class to keep runs reproducible across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl_(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl_(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 bits of randomness.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        if (n == 0) throw UsageError("Rng::below(0)");
        // Rejection sampling to avoid modulo bias.
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    int below_int(int n) { return static_cast<int>(below(static_cast<uint64_t>(n))); }

    // Standard normal via Box-Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Draws an index from an unnormalized non-negative weight vector.
    template <class Real>
    size_t categorical(const std::vector<Real>& weights) {
        double total = 0.0;
        for (Real w : weights) total += static_cast<double>(w);
        if (!(total > 0.0)) throw DegenerateInputError("categorical weights sum to zero");
        const double r = uniform() * total;
        double cum = 0.0;
        for (size_t i = 0; i < weights.size(); ++i) {
            cum += static_cast<double>(weights[i]);
            if (r < cum) return i;
        }
        return weights.size() - 1;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        if (v.size() <= 1) return;
        for (size_t i = v.size() - 1; i > 0; --i) {
            const size_t j = below(i + 1);
            std::swap(v[i], v[j]);
        }
    }

private:
    static uint64_t rotl_(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t s_[4] = {1, 2, 3, 4};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace doclab

#endif  // DOCLAB_UTIL_RNG_HPP_
