#include "bispec/synth.hpp"

#include "bispec/error.hpp"
#include "bispec/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bispec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t sample_count(double dur, double fs) {
  if (!(fs > 0.0) || !(dur > 0.0)) throw Error(Errc::invalid_argument, "synth: dur and fs must be > 0");
  return static_cast<std::size_t>(std::llround(dur * fs));
}

void check_nyquist(double f, double fs) {
  if (!(f > 0.0)) throw Error(Errc::invalid_argument, "synth: frequency must be > 0");
  if (f >= fs / 2.0) throw Error(Errc::aliasing, "synth: frequency " + std::to_string(f) + " Hz aliases at fs=" + std::to_string(fs));
}

void check_on_bin(double f, const WindowSpec& spec, double fs) {
  const double bin = f * static_cast<double>(spec.nfft) / fs;
  if (std::abs(bin - std::round(bin)) > 1e-9) {
    throw Error(Errc::invalid_argument, "synth: " + std::to_string(f) + " Hz is not on an FFT bin");
  }
}

}  // namespace

TimeSeries synth_pure_tone(double f0, double amp, double phase, double dur, double fs) {
  const std::size_t n = sample_count(dur, fs);
  check_nyquist(f0, fs);
  TimeSeries x;
  x.fs = fs;
  x.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    x.samples[k] = amp * std::sin(kTwoPi * f0 * (static_cast<double>(k) / fs) + phase);
  }
  return x;
}

TimeSeries synth_two_tone(double f1, double f2, double dur, double fs) {
  auto a = synth_pure_tone(f1, 1.0, 0.0, dur, fs);
  const auto b = synth_pure_tone(f2, 1.0, 0.0, dur, fs);
  for (std::size_t k = 0; k < a.samples.size(); ++k) a.samples[k] += b.samples[k];
  return a;
}

TimeSeries synth_qpc_triplet(double f1, double f2, bool coupled, std::size_t n_segments,
                             const WindowSpec& spec, double fs, std::uint64_t seed) {
  spec.validate();
  if (n_segments == 0) throw Error(Errc::invalid_argument, "synth: n_segments must be > 0");
  check_nyquist(f1, fs);
  check_nyquist(f2, fs);
  check_nyquist(f1 + f2, fs);
  check_on_bin(f1, spec, fs);
  check_on_bin(f2, spec, fs);

  TimeSeries x;
  x.fs = fs;
  x.samples.resize(n_segments * spec.nfft);
  for (std::size_t s = 0; s < n_segments; ++s) {
    auto rng = Rng::derive(seed, {s});
    const double p1 = kTwoPi * rng.uniform();
    const double p2 = kTwoPi * rng.uniform();
    const double p3 = coupled ? p1 + p2 : kTwoPi * rng.uniform();
    for (std::size_t k = 0; k < spec.nfft; ++k) {
      const double t = static_cast<double>(k) / fs;
      x.samples[s * spec.nfft + k] = std::cos(kTwoPi * f1 * t + p1) +
                                     std::cos(kTwoPi * f2 * t + p2) +
                                     std::cos(kTwoPi * (f1 + f2) * t + p3);
    }
  }
  return x;
}

std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  if (n < 2) throw Error(Errc::invalid_argument, "pink_noise: need at least 2 samples");
  std::vector<double> white(n);
  for (auto& v : white) v = rng.normal();
  auto spec = rfft(white);
  spec[0] = 0.0;
  for (std::size_t k = 1; k < spec.size(); ++k) spec[k] /= std::sqrt(static_cast<double>(k));
  auto out = irfft(spec, n);
  double ss = 0.0;
  for (double v : out) ss += v * v;
  const double rms = std::sqrt(ss / static_cast<double>(n));
  if (rms > 0.0) {
    for (auto& v : out) v /= rms;
  }
  return out;
}

std::size_t SynthPlan::n_samples() const {
  std::size_t n = 0;
  for (const auto& s : stages) n = std::max(n, s.end);
  return n;
}

void SynthPlan::validate() const {
  if (classes.empty()) throw Error(Errc::invalid_argument, "synth plan: no classes");
  if (trials_per_class == 0) throw Error(Errc::invalid_argument, "synth plan: trials_per_class is 0");
  if (channels.empty()) throw Error(Errc::invalid_argument, "synth plan: no channels");
  if (stages.empty()) throw Error(Errc::invalid_argument, "synth plan: no stages");
  if (!(fs > 0.0)) throw Error(Errc::invalid_argument, "synth plan: fs must be > 0");
  if (block_length == 0) throw Error(Errc::invalid_argument, "synth plan: block_length is 0");
  if (!(noise_amplitude >= 0.0)) throw Error(Errc::invalid_argument, "synth plan: negative noise");
  for (const auto& s : stages) {
    if (s.end <= s.begin) throw Error(Errc::invalid_argument, "synth plan: empty stage " + s.name);
  }
  for (const auto& inj : injections) {
    if (std::find(classes.begin(), classes.end(), inj.label) == classes.end()) {
      throw Error(Errc::invalid_argument, "synth plan: injection for unknown class");
    }
    if (std::find(channels.begin(), channels.end(), inj.channel) == channels.end()) {
      throw Error(Errc::invalid_argument, "synth plan: injection channel '" + inj.channel + "' unknown");
    }
    if (!inj.stage.empty() &&
        std::none_of(stages.begin(), stages.end(), [&](const auto& s) { return s.name == inj.stage; })) {
      throw Error(Errc::invalid_argument, "synth plan: injection stage '" + inj.stage + "' unknown");
    }
    for (double f : {inj.f1(), inj.f2()}) {
      if (f < 1.0 || f > 40.0) {
        throw Error(Errc::invalid_argument,
                    "synth plan: injection at " + std::to_string(f) + " Hz lies outside 1-40 Hz");
      }
    }
    check_nyquist(inj.f1() + inj.f2(), fs);
    if (!(inj.strength >= 0.0)) throw Error(Errc::invalid_argument, "synth plan: negative strength");
  }
}

SynthPlan two_class_plan(double strength) {
  SynthPlan plan;
  plan.classes = {0, 1};
  plan.injections.push_back({0, "Cz", Band::theta, Band::beta, 0.0, 0.0, strength, ""});
  return plan;
}

SynthPlan paradigm_plan() {
  SynthPlan plan;
  plan.classes = {0, 1, 2};
  plan.injections = {
      {0, "Cz", Band::theta, Band::beta, 0.0, 0.0, 1.0, "execution"},
      {0, "Cz", Band::theta, Band::beta, 0.0, 0.0, 0.3, "planning"},
      {1, "C3", Band::beta, Band::gamma, 0.0, 0.0, 1.0, "execution"},
      {1, "C3", Band::beta, Band::gamma, 0.0, 0.0, 0.3, "planning"},
  };
  return plan;
}

EpochedRecording synth_dataset(const SynthPlan& plan, std::uint64_t seed) {
  plan.validate();
  EpochedRecording rec;
  rec.n_trials = plan.classes.size() * plan.trials_per_class;
  rec.n_channels = plan.channels.size();
  rec.n_samples = plan.n_samples();
  rec.fs = plan.fs;
  rec.channel_names = plan.channels;
  rec.class_set = plan.classes;
  std::sort(rec.class_set.begin(), rec.class_set.end());
  rec.stages = plan.stages;
  rec.data.assign(rec.n_trials * rec.n_channels * rec.n_samples, 0.0);
  rec.labels.resize(rec.n_trials);

  for (std::size_t t = 0; t < rec.n_trials; ++t) {
    const int label = plan.classes[t % plan.classes.size()];
    rec.labels[t] = label;
    for (std::size_t c = 0; c < rec.n_channels; ++c) {
      auto rng = Rng::derive(seed, {1, t, c});
      const auto noise = pink_noise(rec.n_samples, rng);
      auto out = rec.trace(t, c);
      for (std::size_t k = 0; k < rec.n_samples; ++k) out[k] = plan.noise_amplitude * noise[k];
    }
    for (std::size_t i = 0; i < plan.injections.size(); ++i) {
      const auto& inj = plan.injections[i];
      if (inj.label != label || inj.strength == 0.0) continue;
      const auto c = static_cast<std::size_t>(
          std::find(plan.channels.begin(), plan.channels.end(), inj.channel) - plan.channels.begin());
      std::size_t lo = 0, hi = rec.n_samples;
      if (!inj.stage.empty()) {
        const auto& st = rec.stage(inj.stage);
        lo = st.begin;
        hi = st.end;
      }
      const double f1 = inj.f1(), f2 = inj.f2();
      auto out = rec.trace(t, c);
      double p1 = 0.0, p2 = 0.0, p3 = 0.0;
      std::size_t current_block = static_cast<std::size_t>(-1);
      for (std::size_t k = lo; k < hi; ++k) {
        const std::size_t block = k / plan.block_length;
        if (block != current_block) {
          current_block = block;
          auto rng = Rng::derive(seed, {2, t, i, block});
          p1 = kTwoPi * rng.uniform();
          p2 = kTwoPi * rng.uniform();
          p3 = inj.coupled ? p1 + p2 : kTwoPi * rng.uniform();
        }
        const double tt = static_cast<double>(k) / plan.fs;
        out[k] += inj.strength * (std::cos(kTwoPi * f1 * tt + p1) + std::cos(kTwoPi * f2 * tt + p2) +
                                  std::cos(kTwoPi * (f1 + f2) * tt + p3));
      }
    }
  }
  return rec;
}

}  // namespace bispec
