#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spinal {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed for replica `replica` of stream `stream` under a user seed. Each level
// is mixed separately so nearby tuples give unrelated engines.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t replica) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ replica);
}

// Stream identifiers; distinct per experiment role.
namespace streams {
inline constexpr std::uint64_t kPopulation = 0x706f70;
inline constexpr std::uint64_t kSpine = 0x7370696e;
inline constexpr std::uint64_t kHomSpine = 0x686f6d;
inline constexpr std::uint64_t kLimitSpine = 0x6c696d;
inline constexpr std::uint64_t kWeighted = 0x776768;
inline constexpr std::uint64_t kCoupling = 0x63706c;
inline constexpr std::uint64_t kGeneratorCheck = 0x67656e;
inline constexpr std::uint64_t kProbe = 0x707262;
}  // namespace streams

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t replica) : engine_(derive_seed(seed, stream, replica)) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Exponential with the given rate (rate > 0).
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace spinal
