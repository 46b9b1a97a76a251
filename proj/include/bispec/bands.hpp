#pragma once

#include "bispec/bispectrum.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bispec {

enum class Band { delta = 0, theta = 1, alpha = 2, beta = 3, gamma = 4 };

inline constexpr std::size_t kBandCount = 5;
inline constexpr std::size_t kBandPairCount = kBandCount * kBandCount;

struct BandDef {
  Band band;
  std::string_view name;
  double low;   // Hz, inclusive
  double high;  // Hz, exclusive except for gamma
};

// delta [1,4), theta [4,8), alpha [8,13), beta [13,30), gamma [30,40].
const std::array<BandDef, kBandCount>& canonical_bands();
const BandDef& band_def(Band b);
std::optional<Band> band_from_name(std::string_view name);

// Frequency used when injecting synthetic coupling into a band.
double band_center_hz(Band b);

struct BandPair {
  Band driver;
  Band responder;

  // Driver-major position in canonical order, 0..24.
  std::size_t index() const noexcept {
    return static_cast<std::size_t>(driver) * kBandCount + static_cast<std::size_t>(responder);
  }
  static BandPair from_index(std::size_t i) {
    return {static_cast<Band>(i / kBandCount), static_cast<Band>(i % kBandCount)};
  }
  std::string name() const;  // e.g. "theta-beta"
};

// Frequency bins of `band` present on the grid's responder axis (the two axes
// share bins for square grids). Requires 1 Hz resolution; throws band-error
// when the band has no bins.
std::vector<std::size_t> band_bins(const BandDef& band, const FreqGrid& grid);

// Rows = driver bins, columns = responder bins.
ComplexMatrix extract_submatrix(const BicoherenceMatrix& b, const BandPair& pair);

}  // namespace bispec
