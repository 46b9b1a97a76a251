#include "bispec/bispectrum.hpp"

#include "bispec/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bispec {

FreqGrid FreqGrid::square(std::size_t lo_bin, std::size_t hi_bin, double resolution) {
  if (hi_bin < lo_bin) throw Error(Errc::grid, "grid: hi_bin < lo_bin");
  FreqGrid g;
  g.resolution = resolution;
  for (std::size_t b = lo_bin; b <= hi_bin; ++b) {
    g.f1_bins.push_back(b);
    g.f2_bins.push_back(b);
  }
  return g;
}

FreqGrid FreqGrid::default_for(const WindowSpec& spec, double fs) {
  const double res = fs / static_cast<double>(spec.nfft);
  const auto lo = static_cast<std::size_t>(std::llround(1.0 / res));
  const auto hi = static_cast<std::size_t>(std::llround(40.0 / res));
  return square(lo, hi, res);
}

void FreqGrid::check_compatible(const SegmentSpectra& spectra) const {
  if (f1_bins.empty() || f2_bins.empty()) throw Error(Errc::grid, "grid: empty axis");
  const double expected = spectra.resolution();
  if (std::abs(resolution - expected) > 1e-9 * expected) {
    throw Error(Errc::grid, "grid: resolution " + std::to_string(resolution) +
                                " Hz does not match fs/nfft = " + std::to_string(expected));
  }
  const std::size_t nyquist = spectra.nfft / 2;
  const auto max1 = *std::max_element(f1_bins.begin(), f1_bins.end());
  const auto max2 = *std::max_element(f2_bins.begin(), f2_bins.end());
  if (max1 + max2 > nyquist) {
    throw Error(Errc::grid, "grid: f1 + f2 exceeds the Nyquist bin");
  }
}

ComplexMatrix ComplexMatrix::transpose() const {
  ComplexMatrix t(cols, rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t.at(j, i) = at(i, j);
  return t;
}

BispectrumMatrix estimate_bispectrum(const SegmentSpectra& spectra, const FreqGrid& grid) {
  grid.check_compatible(spectra);
  if (spectra.n_segments == 0) throw Error(Errc::invalid_argument, "bispectrum: no segments");

  BispectrumMatrix out;
  out.grid = grid;
  out.n_segments = spectra.n_segments;
  out.values = ComplexMatrix(grid.f1_bins.size(), grid.f2_bins.size());
  const double inv_k = 1.0 / static_cast<double>(spectra.n_segments);

  for (std::size_t i = 0; i < grid.f1_bins.size(); ++i) {
    const std::size_t b1 = grid.f1_bins[i];
    for (std::size_t j = 0; j < grid.f2_bins.size(); ++j) {
      const std::size_t b2 = grid.f2_bins[j];
      std::complex<double> acc = 0.0;
      for (std::size_t s = 0; s < spectra.n_segments; ++s) {
        acc += spectra.at(s, b1) * spectra.at(s, b2) * std::conj(spectra.at(s, b1 + b2));
      }
      out.values.at(i, j) = acc * inv_k;
    }
  }
  return out;
}

BicoherenceMatrix estimate_bicoherence(const SegmentSpectra& spectra, const FreqGrid& grid) {
  grid.check_compatible(spectra);
  if (spectra.n_segments == 0) throw Error(Errc::invalid_argument, "bicoherence: no segments");

  BicoherenceMatrix out;
  out.grid = grid;
  out.n_segments = spectra.n_segments;
  out.values = ComplexMatrix(grid.f1_bins.size(), grid.f2_bins.size());
  const double inv_k = 1.0 / static_cast<double>(spectra.n_segments);
  const double floor = kBicoherenceEpsilon * kBicoherenceEpsilon;

  for (std::size_t i = 0; i < grid.f1_bins.size(); ++i) {
    const std::size_t b1 = grid.f1_bins[i];
    for (std::size_t j = 0; j < grid.f2_bins.size(); ++j) {
      const std::size_t b2 = grid.f2_bins[j];
      std::complex<double> num = 0.0;
      double pair_power = 0.0;
      double sum_power = 0.0;
      for (std::size_t s = 0; s < spectra.n_segments; ++s) {
        const auto pair = spectra.at(s, b1) * spectra.at(s, b2);
        const auto x3 = spectra.at(s, b1 + b2);
        num += pair * std::conj(x3);
        pair_power += std::norm(pair);
        sum_power += std::norm(x3);
      }
      const double den = std::sqrt(std::max(pair_power * inv_k * sum_power * inv_k, floor));
      std::complex<double> b = num * inv_k / den;
      const double mag = std::abs(b);
      if (mag > 1.0) {
        if (mag > 1.0 + kBicoherenceSlack) {
          throw Error(Errc::normalization,
                      "bicoherence: |b| = " + std::to_string(mag) + " exceeds 1");
        }
        b /= mag;
      }
      out.values.at(i, j) = b;
    }
  }
  return out;
}

Peak peak(const ComplexMatrix& values, const FreqGrid& grid) {
  if (values.rows == 0 || values.cols == 0) {
    throw Error(Errc::invalid_argument, "peak: empty matrix");
  }
  // Row-major scan visits f1 ascending then f2 ascending when the grid axes
  // are sorted; strict comparison keeps the first maximum.
  std::size_t best_i = 0, best_j = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < values.rows; ++i) {
    for (std::size_t j = 0; j < values.cols; ++j) {
      const double m = std::abs(values.at(i, j));
      if (m > best) {
        best = m;
        best_i = i;
        best_j = j;
      }
    }
  }
  const auto& v = values.at(best_i, best_j);
  return Peak{grid.f1_hz(best_i), grid.f2_hz(best_j), best, std::arg(v)};
}

}  // namespace bispec
