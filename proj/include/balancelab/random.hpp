#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <utility>
#include <vector>

#include "balancelab/errors.hpp"

namespace balancelab {

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer (Steele/Lea/Flood). Full-avalanche 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

} // namespace detail

/// Seeded, splittable random source. Identical seeds give identical draw
/// sequences, and child streams are a pure function of (seed, label), so
/// they do not depend on how many draws the parent has already made.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        state_ += detail::kGolden;
        return detail::mix64(state_);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

    bool bernoulli(double p) { return next_double() < p; }

    /// Standard normal via Box-Muller (one value per pair of uniforms).
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Unbiased integer in [0, n) by rejection.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw UsageError("RandomSource::next_below: n must be positive");
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    std::size_t index_below(std::size_t n) {
        return static_cast<std::size_t>(next_below(static_cast<std::uint64_t>(n)));
    }

    /// Child stream keyed by a string label; independent of parent draw position.
    RandomSource child(std::string_view label) const {
        return RandomSource(detail::mix64(seed_ ^ detail::fnv1a(label)));
    }

    /// Child stream keyed by an index.
    RandomSource child(std::uint64_t index) const {
        return RandomSource(detail::mix64(detail::mix64(seed_ + 0x5851F42D4C957F2Dull) + index * detail::kGolden));
    }

    /// Stateless uniform in [0,1) keyed by (a, b); independent of draw order.
    double draw_at(std::uint64_t a, std::uint64_t b) const {
        std::uint64_t h = detail::mix64(seed_ ^ 0x6C62272E07BB0142ull);
        h = detail::mix64(h + (a + 1) * detail::kGolden);
        h = detail::mix64(h + (b + 1) * detail::kGolden);
        return static_cast<double>(h >> 11) * 0x1.0p-53;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = index_below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    /// k distinct indices drawn uniformly from [0, population), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t k) {
        if (k > population)
            throw UsageError("RandomSource::sample_without_replacement: k exceeds population");
        std::vector<std::size_t> pool(population);
        for (std::size_t i = 0; i < population; ++i) pool[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + index_below(population - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

} // namespace balancelab
