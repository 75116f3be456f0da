#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vigil {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

/// Seed for trial `index` of a suite run with `master`. The splitting rule is
/// splitmix64(master + index * golden ratio constant).
constexpr std::uint64_t trial_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + index * 0x9e3779b97f4a7c15ULL);
}

/// Combine a base seed with a label and a counter into a stream seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                    std::uint64_t counter = 0) {
  return splitmix64(splitmix64(base ^ hash_label(label)) + counter);
}

/// Deterministic across standard libraries: mt19937_64 output is fixed by the
/// standard and the conversion to [0, 1) is done by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t next() { return engine_(); }

  std::uint64_t below(std::uint64_t bound) { return bound == 0 ? 0 : engine_() % bound; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vigil
