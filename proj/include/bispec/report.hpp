#pragma once

#include "bispec/io.hpp"
#include "bispec/pipeline.hpp"

#include <array>
#include <string>
#include <vector>

namespace bispec {

json cv_report_to_json(const CvReport& r);
json test_result_to_json(const TestResult& t);
json pipeline_to_json(const PipelineResult& r);

// Table 1 layout: one row per feature config, one column per task/stage,
// cells = mean held-out accuracy over subjects ("-" where not run).
std::string table1_csv(const json& results);

// 5x5 heatmap, drivers on rows, responders on columns.
std::string heatmap_svg(const std::array<double, kBandPairCount>& percent, const std::string& title,
                        const std::array<std::string, 8>& ramp);

std::string summary_markdown(const json& results);

struct BundleInfo {
  std::string digest;               // over every numeric CSV/JSON file
  std::vector<std::string> files;   // relative paths, sorted
};

// Writes the full report bundle under dir and returns its digest.
BundleInfo write_bundle(const PipelineResult& r, const fs::path& dir);

// Re-emits table1.csv, the summary and (optionally) heatmaps from results.json.
void render_report(const fs::path& bundle_dir, bool svg);

// Digest of the numeric files listed (relative to dir).
std::string bundle_digest(const fs::path& dir, const std::vector<std::string>& files);

}  // namespace bispec
