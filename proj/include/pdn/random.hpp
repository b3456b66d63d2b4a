#pragma once

#include <cstdint>
#include <random>

#include "pdn/sparse.hpp"

namespace pdn {

using Rng = std::mt19937_64;

/// Independent, reproducible stream for (seed, stream id).
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

/// Glorot/Xavier uniform initialization, U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
DenseMatrix glorot_uniform(Index fan_in, Index fan_out, Rng& rng);

DenseMatrix standard_normal(Index rows, Index cols, Rng& rng);

}  // namespace pdn
