#pragma once

#include <cstdint>
#include <random>

namespace gemmix {

// Well-known stream ids. Every random consumer draws from its own stream so
// that adding a consumer never perturbs another one's numbers.
enum class Stream : std::uint64_t {
    sampling = 1,
    population = 2,
    initialization = 3,
    stochastic = 4,
    rademacher = 5,
    multistart = 6,
    trial_points = 7,
    trials = 8,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for the (master, stream, index) triple. Deterministic and independent
// of how work is split across threads.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
    return splitmix64(splitmix64(splitmix64(master) ^ stream) + index);
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
    return derive_seed(master, static_cast<std::uint64_t>(stream), index);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
    return Engine(derive_seed(master, stream, index));
}

}  // namespace gemmix
