#pragma once

#include "bispec/features.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bispec {

struct ShapiroResult {
  double w = 0.0;
  double p = 0.0;
  bool degenerate = false;  // constant input; p forced to 0
};

// Royston's AS R94 coefficients and p-value approximation, 3 <= n <= 5000.
ShapiroResult shapiro_wilk(std::span<const double> x);

// AS 241 PPND7, the normal quantile used inside AS R94.
double ppnd7(double p);

enum class Branch { none, t_test, wilcoxon };
std::string_view branch_name(Branch b);

struct TestResult {
  std::string test_name;
  std::string context;
  double statistic = 0.0;
  double df = 0.0;
  double p_raw = 1.0;
  double p_fdr = 1.0;
  std::string effect_name;  // cohens_d, rank_biserial or kendalls_w
  double effect_size = 0.0;
  double cohens_d = 0.0;    // reported for every paired comparison; NaN when undefined
  std::size_t n = 0;
  double normality_p = 1.0;
  bool normality_degenerate = false;
  Branch branch = Branch::none;
  std::string note;
};

// Differences are a - b. When every difference is zero the result is t = 0,
// p = 1, d = 0; a zero-variance nonzero difference throws undefined-effect.
TestResult paired_ttest(std::span<const double> a, std::span<const double> b);

// Zero differences dropped, tied |d| get average ranks. Exact two-sided p for
// m <= 25 nonzero differences, else normal approximation with continuity and
// tie correction. statistic = min(W+, W-); effect = (W+ - W-) / (W+ + W-).
TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kWilcoxonExactMax = 25;

// Probability of each W+ value (in doubled-rank units) under the sign-flip
// null, for integer doubled ranks.
std::vector<double> signed_rank_null(std::span<const long> doubled_ranks);

// Shapiro-Wilk on a - b; p <= 0.05 selects Wilcoxon, otherwise the paired t.
// Cohen's d is filled in either way.
TestResult paired_comparison(std::span<const double> a, std::span<const double> b);

struct BhResult {
  std::vector<double> adjusted;
  std::vector<bool> reject;
};
BhResult bh_fdr(std::span<const double> p, double q = 0.05);

struct FriedmanResult {
  double chi2 = 0.0;
  double df = 0.0;
  double p = 1.0;
  double kendalls_w = 0.0;
  double tie_correction = 1.0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::string context;
  std::vector<TestResult> posthoc;  // filled when p < alpha
};

// Rows are subjects, columns conditions (row-major, n x k).
FriedmanResult friedman(std::span<const double> values, std::size_t n, std::size_t k,
                        double alpha = 0.05, const std::vector<std::string>& condition_names = {});

// Per-subject training accuracy for one (task, stage, feature config) cell.
struct AccuracyRecord {
  std::size_t subject = 0;
  std::string task;
  std::string stage;
  std::string config;
  double value = 0.0;
};

struct SuiteOutput {
  std::vector<TestResult> tests;
  std::vector<FriedmanResult> friedman;
  std::vector<std::string> warnings;
};

// Per (task, band): execution - planning on per-subject values, gated paired
// test, BH across the five bands of each task. Also a Friedman test over the
// five bands for each (task, stage).
SuiteOutput stage_comparison_suite(const std::vector<AccuracyRecord>& records,
                                   const std::string& first_stage = "planning",
                                   const std::string& second_stage = "execution");

struct FeatureLevelOutput {
  std::vector<TestResult> tests;         // one per flat feature id
  std::vector<std::size_t> survivors;    // flat ids with p_fdr < q
  double q = 0.05;
};

// Subject-level trial means of each flat feature, paired across the two
// tensor lists (second - first), one BH family over all features.
FeatureLevelOutput feature_level_suite(const std::vector<FeatureTensor>& first,
                                       const std::vector<FeatureTensor>& second,
                                       double q = 0.05, unsigned threads = 1);

// Same, from precomputed subject x feature means (row-major).
FeatureLevelOutput feature_level_suite(std::span<const double> first_means,
                                       std::span<const double> second_means,
                                       std::size_t n_subjects, std::size_t n_features,
                                       double q = 0.05, unsigned threads = 1);

}  // namespace bispec
