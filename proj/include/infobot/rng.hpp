#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace infobot {

// Deterministic random source. Conversions to doubles and bounded integers are
// done here rather than through <random> distributions so streams are
// reproducible independent of the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Independent stream for (run_seed, index), e.g. one per episode.
  static Rng stream(std::uint64_t run_seed, std::uint64_t index);

  std::uint64_t next() { return engine_(); }
  double uniform();                       // [0, 1)
  std::size_t below(std::size_t n);       // [0, n), n > 0
  bool bernoulli(double p) { return uniform() < p; }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace infobot
