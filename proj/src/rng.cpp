#include "bispec/rng.hpp"

#include "bispec/error.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace bispec {

namespace {

std::vector<std::uint32_t> seed_words(std::uint64_t seed,
                                      std::initializer_list<std::uint64_t> tags) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * tags.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto t : tags) push(t);
  return words;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  auto words = seed_words(seed, {});
  std::seed_seq seq(words.begin(), words.end());
  engine_.seed(seq);
}

Rng::Rng(std::uint64_t seed, std::seed_seq& seq) : seed_(seed), engine_(seq) {}

std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  auto words = seed_words(seed, tags);
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

Rng Rng::derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  auto words = seed_words(seed, tags);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(mix_seed(seed, tags), seq);
}

Rng Rng::split(std::initializer_list<std::uint64_t> tags) const {
  return derive(seed_, tags);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  double u1 = uniform();
  double u2 = uniform();
  // 1 - u1 lies in (0, 1], keeping the log finite.
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw Error(Errc::invalid_argument, "rng: below(0)");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return static_cast<std::size_t>(v % bound);
}

}  // namespace bispec
