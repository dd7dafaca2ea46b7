#pragma once

#include <cstdint>

namespace rdspot {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, counter), so draw order never depends on who asks first.
class CounterRng {
 public:
  CounterRng() = default;
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }

  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finaliser
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t bits(std::uint64_t seed, std::uint64_t stream,
                            std::uint64_t counter) {
    return mix(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL)) + counter);
  }

  /// Uniform in [0, 1) with 53 random bits.
  static double uniform(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t counter) {
    return static_cast<double>(bits(seed, stream, counter) >> 11) * 0x1.0p-53;
  }

  double uniform_at(std::uint64_t stream, std::uint64_t counter) const {
    return uniform(seed_, stream, counter);
  }

  /// Sequential draw on a stream; advances the shared counter.
  double next_uniform(std::uint64_t stream) {
    return uniform(seed_, stream, counter_++);
  }

  friend bool operator==(const CounterRng&, const CounterRng&) = default;

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace rdspot
