#pragma once

#include "bispec/features.hpp"
#include "bispec/forest.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bispec {

struct LabeledDesign {
  DesignMatrix x;
  std::vector<int> y;
  std::vector<int> groups;  // optional subject ids

  void validate() const;
};

// Fold id per sample. Each class's indices are shuffled, then dealt to folds
// round-robin; the fold pointer carries over from one class to the next
// (classes in ascending id order), which keeps fold sizes within one.
std::vector<std::size_t> stratified_kfold(std::span<const int> y, std::size_t k, std::uint64_t seed);

struct CvParams {
  std::size_t k = 5;
  ForestParams forest;
  StandardizeMode mode = StandardizeMode::train_only;
  std::size_t importance_repeats = 0;  // 0 skips permutation importance
  ImportanceScoring importance_scoring = ImportanceScoring::out_of_bag;
  unsigned threads = 1;
  std::string config_digest;
};

struct FoldResult {
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::optional<Standardizer> standardizer;  // absent in global mode
  std::uint64_t forest_fingerprint = 0;
  bool degenerate = false;
};

struct CvReport {
  std::vector<FoldResult> folds;
  std::vector<std::size_t> fold_of;
  std::uint64_t seed = 0;
  std::string config_digest;
  FeatureIndex index;
  std::vector<double> importance;  // per design column, mean over folds; empty if skipped

  double mean_train_acc() const;
  double mean_test_acc() const;
};

// In global mode the design is used as given (the caller standardized
// the whole tensor); otherwise each fold fits its own standardizer on the
// training rows.
CvReport cross_validate(const LabeledDesign& design, const CvParams& params, std::uint64_t seed);

struct Selection {
  std::vector<std::size_t> positions;  // design columns, best first
  std::vector<std::size_t> flat_ids;
  std::vector<double> scores;
  bool empty = false;
};

// Columns with importance strictly above threshold, by descending importance,
// ties by flat id.
Selection select_top(std::span<const double> importance, const FeatureIndex& index,
                     double threshold = 0.0);

struct TaskSpec {
  std::string name;
  std::vector<int> classes;
};

// 0v1, 0v2, 2v1 and the three-class task.
const std::vector<TaskSpec>& default_tasks();

struct SuiteCell {
  std::string task;
  std::string stage;
  std::string feature_config;  // band name, "WB" or "top"
  CvReport report;
  std::vector<std::size_t> selected;  // flat ids (WB and top cells)
  bool selection_empty = false;      // top fell back to the full set
};

struct SuiteParams {
  CvParams cv;
  std::vector<TaskSpec> tasks = default_tasks();
  bool top_rerun = true;
};

// For every stage tensor and task: the five single-driver slices, whole-band
// (with permutation importance) and, for binary tasks, the rerun on the
// selected features. Tasks whose classes are missing from the data are
// skipped.
std::vector<SuiteCell> run_task_suite(const std::vector<FeatureTensor>& stages,
                                      const SuiteParams& params, std::uint64_t seed);

std::vector<std::string> feature_config_names();

}  // namespace bispec
