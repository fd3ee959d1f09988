#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace flwire {

// Mixes a base seed with a stream id (splitmix64 finalizer). Streams derived
// from the same base are statistically independent for our purposes.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

// Seeded generator with platform-stable variate transforms. The standard
// <random> distributions are implementation-defined, so every transform used
// by the simulator lives here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1].
  double uniform_positive() { return 1.0 - uniform(); }
  double exponential(double mean);
  double standard_normal();
  bool bernoulli(double p_true) { return uniform() < p_true; }
  // Unbiased integer in [0, n).
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Well-known stream ids used by the harness; keeping them in one place makes
// seed derivations auditable.
namespace streams {
inline constexpr std::uint64_t placement = 1;
inline constexpr std::uint64_t dataset = 2;
inline constexpr std::uint64_t baseline = 3;
inline constexpr std::uint64_t transmission = 4;
inline constexpr std::uint64_t validation = 5;
}  // namespace streams

}  // namespace flwire
