#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace fedsurv::rng {

// Named purposes for derived RNG streams. One root seed per experiment;
// every stochastic step draws from its own stream keyed by
// (seed, stream, a, b) so partial re-runs stay reproducible.
enum class Stream : std::uint64_t {
    kDataGen = 1,
    kCensoring = 2,
    kPartition = 3,
    kClientSplit = 4,
    kModelInit = 5,
    kClientSelect = 6,
    kShuffle = 7,
    kLocalTrain = 8,
    kDropout = 9,
    kTestSplit = 10,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, Stream stream, std::uint64_t a = 0,
                         std::uint64_t b = 0) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return h;
}

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream stream,
                                   std::uint64_t a = 0, std::uint64_t b = 0) {
    return std::mt19937_64(mix(seed, stream, a, b));
}

// Uniform draw strictly inside (0, 1). The 53-bit mantissa is offset by
// half an ulp so neither endpoint is reachable.
inline double uniform01(std::mt19937_64& gen) {
    const std::uint64_t bits = gen() >> 11; // top 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller. Consumes exactly two draws per call.
inline double normal(std::mt19937_64& gen) {
    const double u1 = uniform01(gen);
    const double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
        const std::uint64_t r = gen();
        if (r >= threshold) return r % n;
    }
}

template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& gen) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(bounded(gen, i));
        std::swap(items[i - 1], items[j]);
    }
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& gen) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle(idx, gen);
    return idx;
}

} // namespace fedsurv::rng
