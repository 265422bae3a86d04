#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace dnrl {

/// Deterministic xoshiro256++ generator with an explicit, serializable state.
/// std::mt19937 is avoided on purpose: its distributions are implementation
/// defined and its state does not fit the checkpoint format.
class Rng {
public:
    Rng() : Rng(0x9e3779b97f4a7c15ull) {}

    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& si : s_) {
            x += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            si = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), n >= 1. Lemire's multiply-shift, unbiased.
    std::uint32_t uniform_int(std::uint32_t n) {
        std::uint64_t x = next_u64() >> 32;
        std::uint64_t m = x * static_cast<std::uint64_t>(n);
        std::uint64_t l = m & 0xffffffffull;
        if (l < n) {
            std::uint64_t t = (0x100000000ull - n) % n;
            while (l < t) {
                x = next_u64() >> 32;
                m = x * static_cast<std::uint64_t>(n);
                l = m & 0xffffffffull;
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

    /// Standard normal via Box-Muller (cosine branch only, so the generator
    /// state is the whole story when serializing).
    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    std::array<std::uint64_t, 4> state() const { return s_; }
    void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> s_{};
};

} // namespace dnrl
