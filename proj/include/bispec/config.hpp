#pragma once

#include "bispec/classify.hpp"
#include "bispec/dsp.hpp"
#include "bispec/io.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace bispec {

struct FilterSettings {
  bool enabled = true;
  double low_hz = 0.5;
  double high_hz = 40.0;
  int order = 4;
};

struct RunConfig {
  WindowSpec window;
  double grid_lo_hz = 1.0;
  double grid_hi_hz = 40.0;
  FilterSettings filter;
  ForestParams forest;
  std::size_t k_folds = 5;
  std::size_t importance_repeats = 10;
  ImportanceScoring importance_scoring = ImportanceScoring::out_of_bag;
  StandardizeMode standardize = StandardizeMode::train_only;
  std::vector<std::string> tasks{"0v1", "0v2", "2v1", "multi"};
  std::vector<std::string> stages{"planning", "execution"};
  bool top_rerun = true;
  bool svg = true;
  bool feature_level_stats = true;
  double fdr_q = 0.05;
  std::array<std::string, 8> color_ramp{"#440154", "#46327e", "#365c8d", "#277f8e",
                                        "#1fa187", "#4ac16d", "#a0da39", "#fde725"};
  std::uint64_t seed = 20240601;
  // Not part of the digest.
  unsigned threads = 1;
  std::string output_dir = "out";

  void validate() const;
  FreqGrid grid(double fs) const;
  std::vector<TaskSpec> task_specs() const;
  SuiteParams suite_params() const;
};

// Every field except seed, threads and output_dir.
json config_to_json(const RunConfig& c, bool include_runtime = false);
// Unknown keys and out-of-range values raise config errors; missing keys keep defaults.
RunConfig config_from_json(const json& j);
RunConfig load_config(const fs::path& path);

// SHA-256 of the canonical JSON form (keys sorted, compact).
std::string config_digest(const RunConfig& c);

inline constexpr const char* kToolkitVersion = "0.1.0";

}  // namespace bispec
