#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bispec {

// The 16-electrode montage used by default.
const std::vector<std::string>& default_channel_names();

struct StageWindow {
  std::string name;
  std::size_t begin = 0;  // inclusive sample index
  std::size_t end = 0;    // exclusive

  std::size_t length() const noexcept { return end - begin; }
};

// Labeled trials x channels x samples, stored row-major.
struct EpochedRecording {
  std::vector<double> data;
  std::size_t n_trials = 0;
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  double fs = 256.0;
  std::vector<std::string> channel_names;
  std::vector<int> labels;
  std::vector<int> class_set{0, 1, 2};
  std::vector<StageWindow> stages;

  std::span<double> trace(std::size_t trial, std::size_t channel) {
    return {data.data() + (trial * n_channels + channel) * n_samples, n_samples};
  }
  std::span<const double> trace(std::size_t trial, std::size_t channel) const {
    return {data.data() + (trial * n_channels + channel) * n_samples, n_samples};
  }

  const StageWindow& stage(const std::string& name) const;
  bool has_stage(const std::string& name) const;

  // Shape, label, channel-name and stage-window consistency. When
  // min_stage_length > 0, every stage must be at least that long.
  void validate(std::size_t min_stage_length = 0) const;
};

}  // namespace bispec
