#include "bispec/bands.hpp"

#include "bispec/error.hpp"

#include <algorithm>
#include <cmath>

namespace bispec {

const std::array<BandDef, kBandCount>& canonical_bands() {
  static const std::array<BandDef, kBandCount> bands{{
      {Band::delta, "delta", 1.0, 4.0},
      {Band::theta, "theta", 4.0, 8.0},
      {Band::alpha, "alpha", 8.0, 13.0},
      {Band::beta, "beta", 13.0, 30.0},
      {Band::gamma, "gamma", 30.0, 40.0},
  }};
  return bands;
}

const BandDef& band_def(Band b) { return canonical_bands()[static_cast<std::size_t>(b)]; }

std::optional<Band> band_from_name(std::string_view name) {
  for (const auto& def : canonical_bands()) {
    if (def.name == name) return def.band;
  }
  return std::nullopt;
}

double band_center_hz(Band b) {
  switch (b) {
    case Band::delta: return 2.0;
    case Band::theta: return 6.0;
    case Band::alpha: return 10.0;
    case Band::beta: return 20.0;
    case Band::gamma: return 35.0;
  }
  return 0.0;
}

std::string BandPair::name() const {
  return std::string(band_def(driver).name) + "-" + std::string(band_def(responder).name);
}

namespace {

bool in_band(const BandDef& band, double hz) {
  if (band.band == Band::gamma) return hz >= band.low && hz <= band.high;
  return hz >= band.low && hz < band.high;
}

std::vector<std::size_t> positions_in_band(const BandDef& band,
                                           const std::vector<std::size_t>& bins,
                                           double resolution) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (in_band(band, static_cast<double>(bins[i]) * resolution)) pos.push_back(i);
  }
  return pos;
}

void require_unit_resolution(const FreqGrid& grid) {
  if (std::abs(grid.resolution - 1.0) > 1e-12) {
    throw Error(Errc::band, "band_bins: band segmentation requires a 1 Hz grid");
  }
}

}  // namespace

std::vector<std::size_t> band_bins(const BandDef& band, const FreqGrid& grid) {
  require_unit_resolution(grid);
  std::vector<std::size_t> bins;
  for (std::size_t i : positions_in_band(band, grid.f2_bins, grid.resolution)) {
    bins.push_back(grid.f2_bins[i]);
  }
  if (bins.empty()) {
    throw Error(Errc::band, "band_bins: band " + std::string(band.name) + " has no grid bins");
  }
  return bins;
}

ComplexMatrix extract_submatrix(const BicoherenceMatrix& b, const BandPair& pair) {
  const auto& grid = b.grid;
  require_unit_resolution(grid);
  const auto rows = positions_in_band(band_def(pair.driver), grid.f1_bins, grid.resolution);
  const auto cols = positions_in_band(band_def(pair.responder), grid.f2_bins, grid.resolution);
  if (rows.empty() || cols.empty()) {
    throw Error(Errc::band, "extract_submatrix: " + pair.name() + " has no grid bins");
  }
  ComplexMatrix sub(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols.size(); ++c) sub.at(r, c) = b.values.at(rows[r], cols[c]);
  return sub;
}

}  // namespace bispec
