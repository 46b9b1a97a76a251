#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace bispec {

// Seedable, splittable random stream.
//
// The engine is std::mt19937_64 seeded through std::seed_seq, both of which
// the standard specifies bit-for-bit. The uniform/normal/bounded transforms
// below are written out by hand because the std:: distributions are
// implementation-defined, which would make outputs differ between standard
// libraries.
//
// Child streams are derived from (seed, tags...) rather than from generator
// state, so any work item can reconstruct its stream without coordinating
// with other threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

  // Child stream keyed by this stream's seed and tags.
  Rng split(std::initializer_list<std::uint64_t> tags) const;

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via Box-Muller (no cached second value).
  double normal();

  // Uniform integer in [0, n). n must be > 0.
  std::size_t below(std::size_t n);

  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  Rng(std::uint64_t seed, std::seed_seq& seq);

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// Deterministic 64-bit mix of a seed and a list of tags.
std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

}  // namespace bispec
