#include "bispec/filter.hpp"

#include "bispec/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace bispec {

namespace {

using cd = std::complex<double>;

std::complex<double> section_response(const Biquad& s, cd z_inv) {
  cd num = s.b[0] + z_inv * (s.b[1] + z_inv * s.b[2]);
  cd den = 1.0 + z_inv * (s.a[0] + z_inv * s.a[1]);
  return num / den;
}

double section_dc_gain(const Biquad& s) {
  return (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[0] + s.a[1]);
}

// State that a section holds after an infinitely long constant input `c`.
std::array<double, 2> steady_state(const Biquad& s, double c) {
  const double g = section_dc_gain(s);
  return {(g - s.b[0]) * c, (s.b[2] - s.a[1] * g) * c};
}

void run_section(const Biquad& s, std::array<double, 2> state, std::vector<double>& x) {
  double z1 = state[0];
  double z2 = state[1];
  for (double& v : x) {
    const double in = v;
    const double out = s.b[0] * in + z1;
    z1 = s.b[1] * in - s.a[0] * out + z2;
    z2 = s.b[2] * in - s.a[1] * out;
    v = out;
  }
}

// Runs the cascade in place, starting every section in the steady state for
// a constant input equal to x.front().
void run_cascade_steady(const SosFilter& f, std::vector<double>& x) {
  if (x.empty()) return;
  double level = x.front();
  for (const auto& s : f.sections) {
    run_section(s, steady_state(s, level), x);
    level *= section_dc_gain(s);
  }
}

// Samples until the slowest pole has decayed by 1e-16.
std::size_t settle_length(const SosFilter& f) {
  const double r = f.max_pole_radius();
  if (r <= 0.0) return 1;
  const double n = std::log(1e-16) / std::log(r);
  return static_cast<std::size_t>(std::clamp(std::ceil(n), 1.0, 1e7));
}

}  // namespace

double SosFilter::max_pole_radius() const {
  double r = 0.0;
  for (const auto& s : sections) {
    // Roots of z^2 + a1 z + a2.
    const cd disc = std::sqrt(cd(s.a[0] * s.a[0] - 4.0 * s.a[1], 0.0));
    const cd p1 = (-s.a[0] + disc) / 2.0;
    const cd p2 = (-s.a[0] - disc) / 2.0;
    r = std::max({r, std::abs(p1), std::abs(p2)});
  }
  return r;
}

std::complex<double> SosFilter::response(double f, double fs) const {
  const cd z_inv = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
  cd h = 1.0;
  for (const auto& s : sections) h *= section_response(s, z_inv);
  return h;
}

SosFilter design_butterworth_bandpass(double low, double high, double fs, int order) {
  if (!(fs > 0.0) || !(low > 0.0) || !(high > low) || !(high < fs / 2.0)) {
    throw Error(Errc::invalid_argument, "butterworth: require 0 < low < high < fs/2");
  }
  if (order < 2 || order % 2 != 0) {
    throw Error(Errc::invalid_argument, "butterworth: order must be even and >= 2");
  }

  const double two_fs = 2.0 * fs;
  const double w1 = two_fs * std::tan(std::numbers::pi * low / fs);
  const double w2 = two_fs * std::tan(std::numbers::pi * high / fs);
  const double bw = w2 - w1;
  const double w0_sq = w1 * w2;
  const double center = 2.0 * std::atan(std::sqrt(w0_sq) / two_fs);  // rad/sample
  const cd z_inv_center = std::polar(1.0, -center);

  SosFilter filter;
  for (int k = 0; k < order; ++k) {
    const double theta =
        std::numbers::pi * static_cast<double>(2 * k + 1 + order) / (2.0 * order);
    const cd proto = std::polar(1.0, theta);
    if (proto.imag() <= 0.0) continue;  // conjugates handled by pairing below

    // Lowpass-to-bandpass: s^2 - p*bw*s + w0^2 = 0.
    const cd q = proto * bw / 2.0;
    const cd d = std::sqrt(q * q - w0_sq);
    for (const cd s_pole : {q + d, q - d}) {
      const cd z = (two_fs + s_pole) / (two_fs - s_pole);
      if (!(std::abs(z) < 1.0)) {
        throw Error(Errc::filter_design, "butterworth: pole on or outside the unit circle");
      }
      Biquad sec;
      sec.b = {1.0, 0.0, -1.0};  // zeros at z = +1 and z = -1
      sec.a = {-2.0 * z.real(), std::norm(z)};
      const double g = 1.0 / std::abs(section_response(sec, z_inv_center));
      for (auto& b : sec.b) b *= g;
      filter.sections.push_back(sec);
    }
  }

  // The analog prototype has H(j w0) = 1; fix the overall sign to match.
  if (filter.response(center * fs / (2.0 * std::numbers::pi), fs).real() < 0.0) {
    for (auto& b : filter.sections.front().b) b = -b;
  }
  if (!(filter.max_pole_radius() < 1.0)) {
    throw Error(Errc::filter_design, "butterworth: unstable design");
  }
  return filter;
}

std::vector<double> sos_filter(const SosFilter& filter, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& s : filter.sections) run_section(s, {0.0, 0.0}, y);
  return y;
}

std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min<std::size_t>(n - 1, 3 * (2 * filter.sections.size() + 1));
  const std::size_t tail = settle_length(filter);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad + tail);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
  const double right_level = ext.back();
  ext.insert(ext.end(), tail, right_level);

  run_cascade_steady(filter, ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade_steady(filter, ext);
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

TimeSeries butterworth_bandpass_zero_phase(const TimeSeries& x, double low, double high,
                                           int order) {
  x.validate();
  auto filter = design_butterworth_bandpass(low, high, x.fs, order);
  return TimeSeries{filtfilt(filter, x.samples), x.fs};
}

}  // namespace bispec
