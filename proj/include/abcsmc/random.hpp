#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace abcsmc {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to turn structured keys into well mixed seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a master seed and a sequence of integer keys.
/// Distinct key sequences give (with overwhelming probability) distinct streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = splitmix64(master);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

// Domain tags keep sampler, pilot and data-generation streams apart.
enum class StreamTag : std::uint64_t {
  sampler = 1,
  pilot = 2,
  data = 3,
  calibration = 4,
  variant = 5,
};

/// Stream for one particle's acceptance loop at one step. Attempts consume it
/// in order, so results do not depend on how particles are spread over workers.
inline Rng particle_stream(std::uint64_t seed, int step, std::size_t particle) {
  return Rng{derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::sampler), static_cast<std::uint64_t>(step), particle})};
}

inline Rng tagged_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
  return Rng{derive_seed(seed, {static_cast<std::uint64_t>(tag), index})};
}

/// Uniform draw on [0, 1) with 53 random bits; never returns 1.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace abcsmc
