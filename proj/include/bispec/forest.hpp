#pragma once

#include "bispec/features.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace bispec {

struct ForestParams {
  std::size_t n_trees = 200;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_leaf = 1;
  std::size_t mtry = 0;       // 0 = floor(sqrt(p))

  std::size_t resolved_mtry(std::size_t p) const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int leaf_class = 0;  // index into ForestModel::classes
  std::vector<std::size_t> counts;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<std::size_t> features_used;  // sorted, unique
  std::vector<std::size_t> in_bag;         // design rows drawn by the bootstrap, sorted, unique

  // Goes left when x[feature] <= threshold.
  int predict(std::span<const double> row) const;
  // Same, but reads `value` in place of row[feature].
  int predict_override(std::span<const double> row, std::size_t feature, double value) const;
  bool uses(std::size_t feature) const;
  bool saw(std::size_t row) const;
};

struct ForestModel {
  std::vector<Tree> trees;
  std::vector<int> classes;  // ascending
  ForestParams params;
  std::uint64_t seed = 0;
  std::size_t n_features = 0;
  bool degenerate = false;   // trained on a single class

  int predict_row(std::span<const double> row) const;
  std::vector<int> predict(const DesignMatrix& x) const;
  std::vector<int> predict(const DesignMatrix& x, std::span<const std::size_t> rows) const;
  // Hash of every node; equal models hash equal.
  std::uint64_t fingerprint() const;
};

// Majority vote over class indices; ties go to the smallest index.
int vote_winner(std::span<const std::size_t> votes);

ForestModel train_forest(const DesignMatrix& x, std::span<const int> y,
                         std::span<const std::size_t> rows, const ForestParams& params,
                         std::uint64_t seed, unsigned threads = 1);
ForestModel train_forest(const DesignMatrix& x, std::span<const int> y, const ForestParams& params,
                         std::uint64_t seed, unsigned threads = 1);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

// How rows are scored inside permutation importance. out_of_bag lets each
// row be voted on only by trees whose bootstrap left it out, so that
// training rows are not scored by trees that memorised them; all_trees uses
// the whole forest.
enum class ImportanceScoring { out_of_bag, all_trees };
std::string_view importance_scoring_name(ImportanceScoring s);

// Mean accuracy drop over `repeats` shuffles of each column, evaluated on
// `rows`. Column c of repeat r is shuffled with Rng::derive(seed, {fold,
// flat_id(c), r}). Features no tree splits on get exactly 0.
std::vector<double> permutation_importance(const ForestModel& model, const DesignMatrix& x,
                                           std::span<const int> y,
                                           std::span<const std::size_t> rows, std::size_t repeats,
                                           std::uint64_t seed, std::size_t fold,
                                           unsigned threads = 1,
                                           ImportanceScoring scoring = ImportanceScoring::out_of_bag);

// Reference implementation: re-predicts every tree for every shuffle.
std::vector<double> permutation_importance_naive(const ForestModel& model, const DesignMatrix& x,
                                                 std::span<const int> y,
                                                 std::span<const std::size_t> rows,
                                                 std::size_t repeats, std::uint64_t seed,
                                                 std::size_t fold,
                                                 ImportanceScoring scoring = ImportanceScoring::out_of_bag);

}  // namespace bispec
