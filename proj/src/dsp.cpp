#include "bispec/dsp.hpp"

#include "bispec/error.hpp"
#include "bispec/fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace bispec {

void TimeSeries::validate() const {
  if (!(fs > 0.0) || !std::isfinite(fs)) {
    throw Error(Errc::invalid_argument, "timeseries: fs must be positive");
  }
  if (samples.empty()) throw Error(Errc::invalid_argument, "timeseries: no samples");
  for (double v : samples) {
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "timeseries: non-finite sample");
  }
}

void WindowSpec::validate() const {
  if (nfft < 2 || !std::has_single_bit(nfft)) {
    throw Error(Errc::invalid_argument, "window: nfft must be a power of two >= 2");
  }
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw Error(Errc::invalid_argument, "window: overlap_fraction must lie in [0, 1)");
  }
  const double overlap = overlap_fraction * static_cast<double>(nfft);
  if (overlap != std::floor(overlap)) {
    throw Error(Errc::invalid_argument, "window: overlap_fraction * nfft must be an integer");
  }
}

std::size_t WindowSpec::hop() const {
  return nfft - static_cast<std::size_t>(overlap_fraction * static_cast<double>(nfft));
}

std::vector<double> hann_window(std::size_t n) {
  if (n < 2) throw Error(Errc::invalid_argument, "hann_window: n must be >= 2");
  std::vector<double> w(n);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = 0.5 * (1.0 - std::cos(step * static_cast<double>(k)));
  }
  // Quarter-period points are exact in closed form.
  if (n % 4 == 0) {
    w[n / 4] = 0.5;
    w[3 * n / 4] = 0.5;
  }
  if (n % 2 == 0) w[n / 2] = 1.0;
  w[0] = 0.0;
  return w;
}

std::size_t segment_count(std::size_t len, const WindowSpec& spec) {
  if (len < spec.nfft) return 0;
  return (len - spec.nfft) / spec.hop() + 1;
}

namespace {

void taper_segment(std::span<const double> seg, std::span<const double> window,
                   std::span<double> out) {
  double mean = 0.0;
  for (double v : seg) mean += v;
  mean /= static_cast<double>(seg.size());
  for (std::size_t k = 0; k < seg.size(); ++k) out[k] = (seg[k] - mean) * window[k];
}

}  // namespace

std::vector<double> windowed_segment(std::span<const double> x, const WindowSpec& spec,
                                     std::size_t s) {
  spec.validate();
  const std::size_t start = s * spec.hop();
  if (start + spec.nfft > x.size()) {
    throw Error(Errc::invalid_argument, "windowed_segment: segment index out of range");
  }
  const auto window = hann_window(spec.nfft);
  std::vector<double> out(spec.nfft);
  taper_segment(x.subspan(start, spec.nfft), window, out);
  return out;
}

SegmentSpectra segment_and_fft(std::span<const double> x, double fs, const WindowSpec& spec) {
  spec.validate();
  if (!(fs > 0.0)) throw Error(Errc::invalid_argument, "segment_and_fft: fs must be positive");
  if (x.size() < spec.nfft) {
    throw Error(Errc::too_short_signal,
                "segment_and_fft: signal has " + std::to_string(x.size()) +
                    " samples, fewer than nfft=" + std::to_string(spec.nfft));
  }

  SegmentSpectra out;
  out.nfft = spec.nfft;
  out.fs = fs;
  out.n_segments = segment_count(x.size(), spec);
  out.spectra.resize(out.n_segments * out.n_bins());

  const auto window = hann_window(spec.nfft);
  std::vector<double> seg(spec.nfft);
  for (std::size_t s = 0; s < out.n_segments; ++s) {
    taper_segment(x.subspan(s * spec.hop(), spec.nfft), window, seg);
    auto spectrum = rfft(seg);
    std::copy(spectrum.begin(), spectrum.end(), out.spectra.begin() + s * out.n_bins());
  }
  return out;
}

SegmentSpectra segment_and_fft(const TimeSeries& x, const WindowSpec& spec) {
  x.validate();
  return segment_and_fft(x.samples, x.fs, spec);
}

}  // namespace bispec
