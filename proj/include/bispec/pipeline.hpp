#pragma once

#include "bispec/classify.hpp"
#include "bispec/config.hpp"
#include "bispec/recording.hpp"
#include "bispec/stats.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace bispec {

struct SubjectInput {
  std::string name;
  EpochedRecording rec;
};

// Fig. 5 style table: percent contribution of each (driver, responder) pair.
struct ContributionTable {
  std::string task;
  std::string stage;
  std::array<double, kBandPairCount> percent{};
  bool degenerate = false;  // no positive importance anywhere
  std::size_t n_subjects = 0;
};

// Fig. 6 style counts of selected features, summed over subjects.
struct SelectionCounts {
  std::string task;
  std::string stage;
  std::vector<std::size_t> per_channel;
  std::array<std::size_t, kBandPairCount> per_pair{};
  std::array<std::size_t, kFeatureCount> per_feature{};
  std::array<double, kFeatureCount> importance_per_feature{};  // mean over subjects
};

struct SubjectResult {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<FeatureTensor> tensors;  // one per configured stage, unstandardized
  std::vector<SuiteCell> cells;
};

struct PipelineResult {
  RunConfig config;
  std::string digest;
  std::vector<std::string> channel_names;
  std::vector<SubjectResult> subjects;
  std::vector<ContributionTable> contributions;
  std::vector<SelectionCounts> selections;
  std::optional<SuiteOutput> stage_stats;
  std::optional<FeatureLevelOutput> feature_stats;
  std::vector<std::string> warnings;
};

// Zero-phase Butterworth band-pass on every trace.
EpochedRecording preprocess(const EpochedRecording& rec, const FilterSettings& filter,
                            unsigned threads = 1);

// Raw feature tensors for each configured stage.
std::vector<FeatureTensor> extract_stage_tensors(const EpochedRecording& rec, const RunConfig& cfg);

// Per-subject importance vectors indexed by flat feature id. Negative values
// are clamped to 0, each subject's values summed per band pair over channels
// and feature types, averaged over subjects, then scaled to sum to 100.
std::array<double, kBandPairCount> band_pair_contribution(
    const std::vector<std::vector<double>>& per_subject, bool* degenerate = nullptr);

// Fills contributions, selections and the statistics from res.subjects.
void summarize(PipelineResult& res);

PipelineResult run_pipeline(const std::vector<SubjectInput>& subjects, const RunConfig& cfg);

}  // namespace bispec
