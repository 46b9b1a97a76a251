#pragma once

#include "bispec/bands.hpp"
#include "bispec/dsp.hpp"
#include "bispec/recording.hpp"
#include "bispec/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace bispec {

// amp * sin(2 pi f0 t + phase) sampled at t = k / fs.
TimeSeries synth_pure_tone(double f0, double amp, double phase, double dur, double fs);

// sin(2 pi f1 t) + sin(2 pi f2 t).
TimeSeries synth_two_tone(double f1, double f2, double dur, double fs);

// n_segments independent blocks of spec.nfft samples, each
// cos(w1 t + p1) + cos(w2 t + p2) + cos((w1 + w2) t + p3). With coupling
// p3 = p1 + p2, otherwise p3 is drawn independently. Frequencies must sit on
// FFT bins of spec.
TimeSeries synth_qpc_triplet(double f1, double f2, bool coupled, std::size_t n_segments,
                             const WindowSpec& spec, double fs, std::uint64_t seed);

// 1/f-shaped noise (power ~ 1/f) scaled to unit RMS.
std::vector<double> pink_noise(std::size_t n, Rng& rng);

struct Injection {
  int label = 0;
  std::string channel;
  Band driver = Band::theta;
  Band responder = Band::beta;
  double driver_hz = 0.0;     // 0 means the band center
  double responder_hz = 0.0;  // 0 means the band center
  double strength = 1.0;      // amplitude of each cosine; background noise has unit RMS
  std::string stage;          // empty means every stage
  bool coupled = true;        // false draws the sum-frequency phase independently

  double f1() const { return driver_hz > 0.0 ? driver_hz : band_center_hz(driver); }
  double f2() const { return responder_hz > 0.0 ? responder_hz : band_center_hz(responder); }
};

struct SynthPlan {
  std::vector<int> classes{0, 1};
  std::size_t trials_per_class = 75;
  std::vector<std::string> channels = default_channel_names();
  double fs = 256.0;
  std::vector<StageWindow> stages{{"planning", 0, 768}, {"execution", 768, 1536}};
  std::vector<Injection> injections;
  double noise_amplitude = 1.0;
  // Triplet phases are redrawn every block_length samples so that only
  // coupled components keep a stable triple-product phase across segments.
  std::size_t block_length = 128;

  std::size_t n_samples() const;
  void validate() const;
};

// Two classes, strong theta-beta coupling at Cz in class 0.
SynthPlan two_class_plan(double strength = 1.0);

// Three classes modelled on a planning/execution paradigm.
SynthPlan paradigm_plan();

EpochedRecording synth_dataset(const SynthPlan& plan, std::uint64_t seed);

}  // namespace bispec
