// Seed splitting. Every random consumer draws from its own stream so that
// changing one noise source does not perturb the others.
#pragma once

#include <cstdint>
#include <random>

namespace flam {

enum class RngStream : std::uint64_t {
    trajectory = 1,
    ins_accel = 2,
    ins_gyro = 3,
    adcp = 4,
    turbulence = 5,
};

/// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31U);
}

constexpr std::uint64_t stream_seed(std::uint64_t seed, RngStream stream) {
    return mix64(mix64(seed) ^ mix64(static_cast<std::uint64_t>(stream) * 0xd1b54a32d192ed03ULL));
}

inline std::mt19937_64 make_rng(std::uint64_t seed, RngStream stream) {
    return std::mt19937_64(stream_seed(seed, stream));
}

}  // namespace flam
