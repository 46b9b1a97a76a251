#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bispec {

struct TimeSeries {
  std::vector<double> samples;
  double fs = 256.0;

  // Throws invalid-argument unless fs > 0, samples non-empty and finite.
  void validate() const;
  std::size_t size() const noexcept { return samples.size(); }
};

enum class WindowKind { hann };

struct WindowSpec {
  std::size_t nfft = 256;
  double overlap_fraction = 0.5;
  WindowKind window = WindowKind::hann;

  // nfft a power of two, overlap in [0,1), nfft*overlap integral.
  void validate() const;
  std::size_t hop() const;
};

// Per-segment one-sided spectra: n_segments rows of nfft/2 + 1 bins.
struct SegmentSpectra {
  std::vector<std::complex<double>> spectra;
  std::size_t nfft = 0;
  std::size_t n_segments = 0;
  double fs = 0.0;

  std::size_t n_bins() const noexcept { return nfft / 2 + 1; }
  double resolution() const noexcept { return fs / static_cast<double>(nfft); }

  const std::complex<double>& at(std::size_t segment, std::size_t bin) const {
    return spectra[segment * n_bins() + bin];
  }
  std::span<const std::complex<double>> segment(std::size_t s) const {
    return {spectra.data() + s * n_bins(), n_bins()};
  }
};

// Periodic Hann taper, w[k] = 0.5 (1 - cos(2 pi k / n)).
std::vector<double> hann_window(std::size_t n);

// floor((len - nfft) / hop) + 1; zero when len < nfft.
std::size_t segment_count(std::size_t len, const WindowSpec& spec);

// Mean-removed, Hann-windowed copy of segment `s` (the exact input handed to
// the FFT).
std::vector<double> windowed_segment(std::span<const double> x, const WindowSpec& spec,
                                     std::size_t s);

// Splits x into overlapping segments, removes each segment's mean, applies
// the window and transforms it. No zero padding, no power normalization.
SegmentSpectra segment_and_fft(std::span<const double> x, double fs, const WindowSpec& spec);
SegmentSpectra segment_and_fft(const TimeSeries& x, const WindowSpec& spec);

}  // namespace bispec
