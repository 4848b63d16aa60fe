#pragma once

// Seed derivation and Gaussian sampling.
//
// Every stream is keyed by (base seed, trajectory index, stream id) through a
// splitmix64 hash, so results do not depend on how work is scheduled.

#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <random>
#include <string_view>

namespace fnbo {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t deriveSeed(std::uint64_t base, std::uint64_t index, std::uint64_t stream = 0) {
    return splitmix64(splitmix64(splitmix64(base) ^ index) + 0x632be59bd9b4e019ULL * (stream + 1));
}

/// FNV-1a 64-bit hash.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// mt19937_64 with a ziggurat normal sampler; deterministic across platforms.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}
    double normal() { return dist_(engine_); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace fnbo
