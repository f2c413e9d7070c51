#pragma once

#include <cstdint>
#include <random>

namespace chansel {

using Rng = std::mt19937_64;

// Purpose tags for seed derivation. Values are part of the reproducibility
// contract: changing one changes every run that uses it.
enum class Stream : std::uint64_t {
  kInit = 1,
  kPolicy = 2,
  kReplay = 3,
  kTrainEnv = 4,
  kEvalEnv = 5,
  kEvalPolicy = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent sub-seed for (purpose, index). Agent k's streams depend only on
// the master seed and k, so adding agents leaves existing streams untouched.
inline std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return splitmix64(h ^ (index * 0xD1B54A32D192ED03ULL));
}

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return Rng{derive_seed(master, stream, index)};
}

}  // namespace chansel
