#pragma once

#include "bispec/dsp.hpp"

#include <array>
#include <span>
#include <vector>

namespace bispec {

// One biquad in transposed direct form II. a0 is normalized to 1.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 2> a{};  // a1, a2
};

struct SosFilter {
  std::vector<Biquad> sections;

  // Largest pole radius over all sections.
  double max_pole_radius() const;
  // Complex response at digital frequency f (Hz) for sampling rate fs.
  std::complex<double> response(double f, double fs) const;
};

// Butterworth bandpass designed from an order-`order` analog lowpass
// prototype (so 2*order poles) via the bilinear transform with prewarping.
// Each section is scaled to unit gain at the geometric band center.
SosFilter design_butterworth_bandpass(double low, double high, double fs, int order);

// Single causal pass.
std::vector<double> sos_filter(const SosFilter& filter, std::span<const double> x);

// Forward-backward filtering. The signal is odd-reflected at each edge and
// then held constant out to the point where the filter transients have
// decayed, so the result is the two-sided filter applied to that extension.
// Reversing the input reverses the output.
std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x);

// Order must be even and 0 < low < high < fs/2.
TimeSeries butterworth_bandpass_zero_phase(const TimeSeries& x, double low, double high,
                                           int order = 4);

}  // namespace bispec
