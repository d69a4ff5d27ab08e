#pragma once

#include <cstdint>

namespace cofed {

/// Independent random streams fanned out from a master seed.
enum class SeedStream : std::uint64_t {
  Taxonomy = 1,
  TestPool = 2,
  Partition = 3,
  Unlabeled = 4,
  LocalTraining = 5,
  UpdateTraining = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based derivation: seed = mix(mix(master ^ mix(stream)) + index).
/// Adding a participant never changes the seeds of the others.
constexpr std::uint64_t derive_seed(std::uint64_t master, SeedStream stream,
                                    std::uint64_t index = 0) {
  const auto s = splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(stream)));
  return splitmix64(s + index);
}

}  // namespace cofed
