#pragma once

#include <cstdint>
#include <random>

namespace owdisc::detail {

// Independent stream for (seed, stream) so stages never share RNG state.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

enum Stream : std::uint64_t {
  kStreamKMeans = 1,
  kStreamSeenTraining = 2,
  kStreamFinetuneSource = 3,
  kStreamFinetuneTarget = 4,
  kStreamSimpleKMeans = 5,
  kStreamEstimate = 6,
};

}  // namespace owdisc::detail
