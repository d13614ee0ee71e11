#pragma once

#include <cstdint>
#include <random>

namespace levyest {

using Engine = std::mt19937_64;

// Independent child streams. Every consumer of randomness draws its seed
// from derive_seed(master, stream, index) so no two consumers share a stream.
enum class Stream : std::uint64_t {
  path = 1,
  initial_state = 2,
  design = 3,
  noise = 4,
  bootstrap = 5,
  replication = 6,
  observation = 7,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) noexcept;

}  // namespace levyest
