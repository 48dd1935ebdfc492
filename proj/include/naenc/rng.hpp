#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace naenc {

// FNV-1a, used for vocabulary hashes and for deriving per-name seeds.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 14695981039346656037ull) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Deterministic RNG. mt19937_64 output is pinned by the standard; the
// distributions below are written out explicitly because std::*_distribution
// is implementation-defined and would break byte-reproducible runs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, n). Modulo bias is irrelevant at desk scale and keeps
    // the draw sequence fully pinned.
    std::uint64_t uniform_u64(std::uint64_t n) { return engine_() % n; }

    std::size_t uniform_index(std::size_t n) { return static_cast<std::size_t>(uniform_u64(n)); }

    // Uniform in [0, 1) with 53 bits.
    double uniform_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform_real() < p; }

    // Box-Muller; one draw consumed per pair, the spare is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform_real();
        } while (u1 <= 0.0);
        double u2 = uniform_real();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    // Normal(0, stddev) truncated to +/- 2 stddev by re-draw.
    double truncated_normal(double stddev) {
        double v = normal();
        while (v < -2.0 || v > 2.0) {
            v = normal();
        }
        return v * stddev;
    }

    // Fisher-Yates with pinned index draws.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        if (items.size() < 2) return;
        for (std::size_t i = items.size() - 1; i > 0; --i) {
            std::size_t j = uniform_index(i + 1);
            std::swap(items[i], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace naenc
