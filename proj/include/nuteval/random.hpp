#pragma once

#include <cstdint>
#include <limits>
#include <string_view>
#include <utility>
#include <vector>

namespace nuteval {

/// Seedable, splittable pseudo-random generator.
///
/// The algorithm is SplitMix64 (Steele, Lea & Flood 2014). Everything built on
/// top of it (bounded integers, shuffles, k-means++ sampling) is implemented
/// here rather than through <random> distributions, whose output is
/// implementation-defined. Split manifests and clusterings are therefore
/// reproducible across compilers and platforms for the same seed.
///
///   next():      state += 0x9e3779b97f4a7c15; z = state;
///                z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9;
///                z = (z ^ (z >> 27)) * 0x94d049bb133111eb;
///                return z ^ (z >> 31);
///   uniform():   (next() >> 11) * 2^-53
///   below(n):    rejection sampling on next() over the largest multiple of n
///   shuffle(v):  Fisher-Yates, i = n-1 .. 1, j = below(i + 1)
///   split(tag):  child seeded with mix(state XOR fnv1a64(tag))
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept;
    result_type operator()() noexcept { return next(); }
    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    // Uniform double in [0, 1).
    double uniform() noexcept;

    // Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) noexcept;

    // Independent child stream; does not advance this generator.
    Rng split(std::string_view tag) const noexcept;

    template <typename T>
    void shuffle(std::vector<T>& items) noexcept {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace nuteval
