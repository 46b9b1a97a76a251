#pragma once

#include "bispec/dsp.hpp"

#include <complex>
#include <cstddef>
#include <vector>

namespace bispec {

// Driver (rows) x responder (columns) frequency bins.
struct FreqGrid {
  std::vector<std::size_t> f1_bins;
  std::vector<std::size_t> f2_bins;
  double resolution = 1.0;  // Hz per bin

  // Square grid covering bins [lo_bin, hi_bin] on both axes.
  static FreqGrid square(std::size_t lo_bin, std::size_t hi_bin, double resolution);
  // The 1-40 Hz square for the given sampling parameters.
  static FreqGrid default_for(const WindowSpec& spec, double fs);

  double f1_hz(std::size_t i) const { return static_cast<double>(f1_bins[i]) * resolution; }
  double f2_hz(std::size_t j) const { return static_cast<double>(f2_bins[j]) * resolution; }

  // Throws grid-error unless the resolution matches fs/nfft and every sum bin
  // f1 + f2 stays at or below Nyquist.
  void check_compatible(const SegmentSpectra& spectra) const;
};

struct ComplexMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::complex<double>> values;  // row-major

  ComplexMatrix() = default;
  ComplexMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c) {}

  std::complex<double>& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  const std::complex<double>& at(std::size_t i, std::size_t j) const {
    return values[i * cols + j];
  }
  ComplexMatrix transpose() const;
};

struct BispectrumMatrix {
  ComplexMatrix values;
  FreqGrid grid;
  std::size_t n_segments = 0;
};

struct BicoherenceMatrix {
  ComplexMatrix values;
  FreqGrid grid;
  std::size_t n_segments = 0;
};

// B(f1, f2) = mean over segments of X(f1) X(f2) conj(X(f1 + f2)).
BispectrumMatrix estimate_bispectrum(const SegmentSpectra& spectra, const FreqGrid& grid);

// b(f1, f2) = B(f1, f2) / sqrt(E|X(f1) X(f2)|^2 * E|X(f1 + f2)|^2), with the
// denominator floored at epsilon^2 (epsilon = 1e-12) so silent inputs map to
// zero. Magnitudes above 1 + 1e-9 raise a normalization error.
BicoherenceMatrix estimate_bicoherence(const SegmentSpectra& spectra, const FreqGrid& grid);

inline constexpr double kBicoherenceEpsilon = 1e-12;
inline constexpr double kBicoherenceSlack = 1e-9;

struct Peak {
  double f1 = 0.0;
  double f2 = 0.0;
  double magnitude = 0.0;
  double phase = 0.0;
};

// Cell of largest magnitude; ties go to the smallest f1, then f2.
Peak peak(const ComplexMatrix& values, const FreqGrid& grid);
inline Peak peak(const BispectrumMatrix& m) { return peak(m.values, m.grid); }
inline Peak peak(const BicoherenceMatrix& m) { return peak(m.values, m.grid); }

}  // namespace bispec
