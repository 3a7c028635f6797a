#include "opkrr/rng.hpp"

#include <array>

namespace opkrr {

Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
  const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffU); };
  const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(substream), hi(substream)};
  return Rng(seq);
}

}  // namespace opkrr
