#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

/// 64-bit FNV-1a over raw bytes. This is the project's pinned non-cryptographic
/// hash, used for seed derivation, config hashes, and output manifests.
/// Test vectors live in tests/test_rng_io.cpp; do not change the constants.
inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

/// splitmix64 output function (Steele, Lea, Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Deterministic per-stream seed derivation: global seed + namespace + index.
/// derive(ns, i) = mix of fnv1a64(ns), the global seed, and the stream index.
/// Streams are independent enough for data-pipeline use and stable across
/// platforms (pure integer arithmetic).
struct SeedScheme {
    std::uint64_t global_seed = 0;

    std::uint64_t derive(std::string_view ns, std::uint64_t index) const {
        std::uint64_t s = global_seed ^ fnv1a64(ns);
        s ^= index * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull;
        std::uint64_t t = s;
        return splitmix64(t);
    }
};

/// Small self-contained PRNG built on splitmix64. Owning the generator (rather
/// than std::mt19937 + std:: distributions) keeps every sampled stream
/// bit-stable across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Unbiased via rejection.
    std::uint64_t uniform_index(std::uint64_t n) {
        // n == 0 is a caller bug; fold to 0 to keep the generator total.
        if (n <= 1) return 0;
        std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    /// Standard normal via Box-Muller, caching the spare value.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    std::vector<double> normals(std::size_t n) {
        std::vector<double> out(n);
        for (auto& x : out) x = normal();
        return out;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace forge
