#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "anchorcrc/errors.hpp"

namespace anchorcrc::rng {

using Seed = std::uint64_t;
using Engine = std::mt19937_64;

/// Seed used by tools when the caller does not pass one, so casual runs
/// are reproducible. Seed 0 is reserved for entropy seeding at the CLI.
inline constexpr Seed kDefaultSeed = 12345;

// Salts separating the independent random streams hanging off one master
// seed. Each consumer owns one salt so streams never collide.
inline constexpr std::uint64_t kStreamGenerate = 1;
inline constexpr std::uint64_t kStreamImpute = 2;
inline constexpr std::uint64_t kStreamPosterior = 3;
inline constexpr std::uint64_t kStreamLpImpute = 4;
inline constexpr std::uint64_t kStreamReplicate = 5;

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stateless per-unit seed derivation: the seed of work unit (a, b) depends
/// only on (master, a, b), never on execution order. This is what makes
/// parallel schedules reproduce serial results bit for bit.
inline Seed derive_seed(Seed master, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(mix64(master) ^ mix64(a ^ 0x517cc1b727220a95ULL)) ^ b);
}

inline Engine make_engine(Seed seed) { return Engine(seed); }

inline double uniform01(Engine& eng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
}

inline bool bernoulli(Engine& eng, double p) { return uniform01(eng) < p; }

/// Binomial draw with guarded degenerate probabilities.
inline std::int64_t binomial(Engine& eng, std::int64_t n, double p) {
    if (n < 0) throw InternalError("binomial draw with negative trial count");
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<std::int64_t>(n, p)(eng);
}

inline double gamma(Engine& eng, double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(eng);
}

/// Dirichlet draw via normalized independent Gamma(alpha_i, 1) variates.
/// Shape parameters may be non-integral but must be positive.
inline std::array<double, 3> dirichlet3(Engine& eng, double a1, double a2, double a3) {
    if (a1 <= 0.0 || a2 <= 0.0 || a3 <= 0.0)
        throw InternalError("dirichlet3 requires positive shape parameters");
    const double g1 = gamma(eng, a1);
    const double g2 = gamma(eng, a2);
    const double g3 = gamma(eng, a3);
    const double sum = g1 + g2 + g3;
    if (sum <= 0.0) throw InternalError("dirichlet3 degenerate gamma sum");
    return {g1 / sum, g2 / sum, g3 / sum};
}

} // namespace anchorcrc::rng
