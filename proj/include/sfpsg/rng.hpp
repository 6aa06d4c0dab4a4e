#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sfpsg/errors.hpp"

namespace sfpsg {

// All randomness flows from one named 64-bit seed. Streams for the generator,
// a run, and oracle multi-starts are derived by mixing the seed with a stream
// tag and context words, so they never overlap and results are reproducible
// across module boundaries. SplitMix64 is pure integer arithmetic, hence
// bit-identical on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in {0, ..., n-1}.
    int uniform_int(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

private:
    std::uint64_t state_;
};

enum class Stream : std::uint64_t {
    Generate = 1,
    Run = 2,
    OracleMultistart = 3,
    Scratch = 4,
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
    h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}
}  // namespace detail

inline SplitMix64 derive(std::uint64_t seed, Stream stream, std::uint64_t a = 0,
                         std::uint64_t b = 0) {
    std::uint64_t h = detail::mix64(seed, static_cast<std::uint64_t>(stream));
    h = detail::mix64(h, a);
    h = detail::mix64(h, b);
    return SplitMix64(h);
}

// Sample an index from a probability vector (entries >= 0, sum ~ 1).
inline int sample_discrete(std::span<const double> weights, SplitMix64& rng) {
    double u = rng.uniform01();
    double cum = 0.0;
    int last = 0;
    for (int i = 0; i < static_cast<int>(weights.size()); ++i) {
        if (weights[i] <= 0.0) continue;
        cum += weights[i];
        last = i;
        if (u < cum) return i;
    }
    return last;
}

// Uniform (Dirichlet(1,...,1)) point in the interior of the simplex.
inline std::vector<double> sample_simplex(int n, SplitMix64& rng) {
    std::vector<double> x(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform01();
        // -log(1-u) is Exp(1); 1-u > 0 since uniform01 < 1
        x[i] = -std::log(1.0 - u);
        sum += x[i];
    }
    if (sum <= 0.0) {
        for (int i = 0; i < n; ++i) x[i] = 1.0 / n;
        return x;
    }
    for (int i = 0; i < n; ++i) x[i] /= sum;
    return x;
}

// FNV-1a over a word stream; used for cheap determinism fingerprints.
class Fnv1a {
public:
    void add(std::uint64_t w) {
        for (int i = 0; i < 8; ++i) {
            hash_ ^= (w >> (8 * i)) & 0xffULL;
            hash_ *= 0x100000001b3ULL;
        }
    }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

}  // namespace sfpsg
