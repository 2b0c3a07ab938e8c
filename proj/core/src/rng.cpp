#include "tdqmc/rng.hpp"

namespace tdqmc {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, StreamId id) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ id.walker);
  h = splitmix64(h ^ (id.species + 0x51ed27ULL));
  h = splitmix64(h ^ static_cast<std::uint64_t>(id.purpose));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(id.walker)};
  engine_.seed(seq);
}

}  // namespace tdqmc
