#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace onionnet {

// Single deterministic random stream per run. All randomness flows through
// this wrapper so that a run is reproducible from its 64-bit seed alone:
// the bounded/real helpers below are implemented by hand instead of through
// std distributions, whose draw sequences vary between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [lo, hi], inclusive. Lemire multiply-shift reduction; the
    // O(2^-64) bias is irrelevant at simulation scale and keeps the draw
    // count fixed at one word per call.
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;  // span == 0 means the full 2^64 range
        if (span == 0) return next_u64();
        const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * span;
        return lo + static_cast<std::uint64_t>(wide >> 64);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool chance(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform01() < p;
    }

    template <typename T>
    const T& pick(const std::vector<T>& items) {
        return items[uniform(0, items.size() - 1)];
    }

    // k distinct indices out of [0, n), in draw order. Partial Fisher-Yates.
    std::vector<std::uint32_t> sample_indices(std::uint32_t n, std::uint32_t k) {
        std::vector<std::uint32_t> pool(n);
        for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
        if (k > n) k = n;
        for (std::uint32_t i = 0; i < k; ++i) {
            const auto j = static_cast<std::uint32_t>(uniform(i, n - 1));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

    std::vector<std::uint8_t> bytes(std::size_t count) {
        std::vector<std::uint8_t> out(count);
        std::uint64_t word = 0;
        for (std::size_t i = 0; i < count; ++i) {
            if (i % 8 == 0) word = next_u64();
            out[i] = static_cast<std::uint8_t>(word >> ((i % 8) * 8));
        }
        return out;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace onionnet
