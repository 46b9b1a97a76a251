#include "bispec/recording.hpp"

#include "bispec/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace bispec {

const std::vector<std::string>& default_channel_names() {
  static const std::vector<std::string> names{"FP1", "FP2", "F3", "Fz", "F4", "C3",
                                              "Cz",  "C4",  "T7", "T8", "P3", "Pz",
                                              "P4",  "PO7", "PO8", "Oz"};
  return names;
}

const StageWindow& EpochedRecording::stage(const std::string& name) const {
  for (const auto& s : stages) {
    if (s.name == name) return s;
  }
  throw Error(Errc::invalid_argument, "recording: unknown stage '" + name + "'");
}

bool EpochedRecording::has_stage(const std::string& name) const {
  return std::any_of(stages.begin(), stages.end(), [&](const auto& s) { return s.name == name; });
}

void EpochedRecording::validate(std::size_t min_stage_length) const {
  if (!(fs > 0.0) || !std::isfinite(fs)) throw Error(Errc::data, "recording: fs must be positive");
  if (n_trials == 0 || n_channels == 0 || n_samples == 0) {
    throw Error(Errc::shape_mismatch, "recording: empty dimension");
  }
  if (data.size() != n_trials * n_channels * n_samples) {
    throw Error(Errc::shape_mismatch,
                "recording: data holds " + std::to_string(data.size()) + " values, shape needs " +
                    std::to_string(n_trials * n_channels * n_samples));
  }
  if (channel_names.size() != n_channels) {
    throw Error(Errc::shape_mismatch, "recording: channel name count differs from n_channels");
  }
  if (std::set<std::string>(channel_names.begin(), channel_names.end()).size() != n_channels) {
    throw Error(Errc::data, "recording: duplicate channel names");
  }
  if (labels.size() != n_trials) {
    throw Error(Errc::label, "recording: label count differs from n_trials");
  }
  for (int l : labels) {
    if (std::find(class_set.begin(), class_set.end(), l) == class_set.end()) {
      throw Error(Errc::label, "recording: label " + std::to_string(l) + " not in class set");
    }
  }
  std::set<std::string> seen;
  for (const auto& s : stages) {
    if (!seen.insert(s.name).second) {
      throw Error(Errc::data, "recording: duplicate stage '" + s.name + "'");
    }
    if (s.end <= s.begin || s.end > n_samples) {
      throw Error(Errc::data, "recording: stage '" + s.name + "' lies outside the trial");
    }
    if (min_stage_length > 0 && s.length() < min_stage_length) {
      throw Error(Errc::too_short_signal, "recording: stage '" + s.name + "' is shorter than " +
                                              std::to_string(min_stage_length) + " samples");
    }
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw Error(Errc::data, "recording: non-finite sample");
  }
}

}  // namespace bispec
