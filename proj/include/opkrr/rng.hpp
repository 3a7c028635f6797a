#pragma once

#include <cstdint>
#include <random>

namespace opkrr {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream, substream). Trial t of schedule
/// entry k uses make_stream(seed, k, t), so results never depend on which
/// thread ran the trial.
Rng make_stream(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0);

}  // namespace opkrr
