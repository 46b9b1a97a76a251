#include "bispec/pipeline.hpp"
#include "bispec/report.hpp"
#include "bispec/synth.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace bispec;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.forest.n_trees = 25;
  cfg.importance_repeats = 2;
  cfg.tasks = {"0v1", "multi"};
  cfg.feature_level_stats = true;
  return cfg;
}

std::vector<SubjectInput> small_subjects(std::size_t n, std::size_t trials) {
  auto plan = paradigm_plan();
  plan.channels = {"C3", "Cz", "C4"};
  plan.trials_per_class = trials;
  std::vector<SubjectInput> out;
  for (std::size_t s = 0; s < n; ++s) out.push_back({"s" + std::to_string(s), synth_dataset(plan, 100 + s)});
  return out;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::path(::testing::TempDir()) / ("bispec_pipe_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Contribution, NormalizesToHundred) {
  Rng rng(1);
  std::vector<std::vector<double>> subj(3, std::vector<double>(2 * kBandPairCount * kFeatureCount));
  for (auto& s : subj)
    for (auto& v : s) v = rng.normal();
  bool degenerate = true;
  const auto pct = band_pair_contribution(subj, &degenerate);
  EXPECT_FALSE(degenerate);
  EXPECT_NEAR(std::accumulate(pct.begin(), pct.end(), 0.0), 100.0, 1e-9);
  for (double v : pct) EXPECT_GE(v, 0.0);
}

TEST(Contribution, HandComputed) {
  // One subject, one channel: pair 8 gets 3 (one negative value clamped away), pair 0 gets 1.
  std::vector<double> imp(kBandPairCount * kFeatureCount, 0.0);
  imp[FeatureIndex::flat(0, 8, 0)] = 2.0;
  imp[FeatureIndex::flat(0, 8, 5)] = 1.0;
  imp[FeatureIndex::flat(0, 8, 6)] = -4.0;
  imp[FeatureIndex::flat(0, 0, 2)] = 1.0;
  const auto pct = band_pair_contribution({imp});
  EXPECT_DOUBLE_EQ(pct[8], 75.0);
  EXPECT_DOUBLE_EQ(pct[0], 25.0);

  bool degenerate = false;
  const auto zero = band_pair_contribution({std::vector<double>(imp.size(), -1.0)}, &degenerate);
  EXPECT_TRUE(degenerate);
  EXPECT_EQ(std::accumulate(zero.begin(), zero.end(), 0.0), 0.0);
}

TEST(Pipeline, TablesSumToHundredAndStatsRun) {
  const auto res = run_pipeline(small_subjects(3, 10), small_config());
  ASSERT_EQ(res.subjects.size(), 3u);
  EXPECT_EQ(res.contributions.size(), 4u);  // 2 tasks x 2 stages
  for (const auto& t : res.contributions) {
    if (t.degenerate) continue;
    EXPECT_NEAR(std::accumulate(t.percent.begin(), t.percent.end(), 0.0), 100.0, 1e-6)
        << t.task << " " << t.stage;
  }
  ASSERT_TRUE(res.stage_stats.has_value());
  EXPECT_EQ(res.stage_stats->tests.size(), 2u * kBandCount);  // per task and band
  ASSERT_TRUE(res.feature_stats.has_value());
  EXPECT_EQ(res.feature_stats->tests.size(), 3u * kBandPairCount * kFeatureCount);
}

TEST(Pipeline, ThetaBetaAmongTopThree) {
  auto plan = paradigm_plan();
  plan.channels = {"C3", "Cz", "C4", "Pz"};
  plan.trials_per_class = 40;
  RunConfig cfg;
  cfg.forest.n_trees = 100;
  cfg.importance_repeats = 3;
  cfg.tasks = {"0v1"};
  cfg.stages = {"execution"};
  cfg.top_rerun = false;
  const auto res = run_pipeline({{"s0", synth_dataset(plan, 7)}}, cfg);
  ASSERT_EQ(res.contributions.size(), 1u);
  const auto& pct = res.contributions[0].percent;
  std::vector<std::size_t> order(kBandPairCount);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pct[a] > pct[b]; });
  const auto theta_beta = BandPair{Band::theta, Band::beta}.index();
  EXPECT_NE(std::find(order.begin(), order.begin() + 3, theta_beta), order.begin() + 3)
      << "top pair " << BandPair::from_index(order[0]).name() << " at " << pct[order[0]];
}

TEST(Pipeline, BundleDigestIndependentOfThreads) {
  const auto subjects = small_subjects(3, 8);
  std::string first;
  for (unsigned threads : {1u, 4u, 8u}) {
    auto cfg = small_config();
    cfg.threads = threads;
    const auto dir = scratch("threads" + std::to_string(threads));
    const auto info = write_bundle(run_pipeline(subjects, cfg), dir);
    if (first.empty()) first = info.digest;
    EXPECT_EQ(info.digest, first) << threads << " threads";
    EXPECT_EQ(bundle_digest(dir, info.files), info.digest);
  }
}

TEST(Pipeline, BundleCarriesProvenance) {
  auto cfg = small_config();
  cfg.svg = false;
  const auto res = run_pipeline(small_subjects(1, 8), cfg);
  const auto dir = scratch("prov");
  const auto info = write_bundle(res, dir);
  EXPECT_FALSE(fs::exists(dir / "svg"));
  EXPECT_TRUE(fs::exists(dir / "table1.csv"));
  const auto prov = read_json(dir / "provenance.json");
  EXPECT_EQ(prov["config_digest"], res.digest);
  EXPECT_EQ(prov["bundle_digest"], info.digest);
  for (const auto& f : info.files) {
    if (f.ends_with(".csv") && f != "table1.csv") {
      const auto text = read_text(dir / f);
      EXPECT_NE(text.find(res.digest), std::string::npos) << f;
    }
  }
  // Rendering again from results.json reproduces the table.
  const auto before = read_text(dir / "table1.csv");
  render_report(dir, true);
  EXPECT_EQ(read_text(dir / "table1.csv"), before);
  EXPECT_TRUE(fs::exists(dir / "svg"));
}

TEST(Pipeline, BundleCsvRowsMatchHeaderWidth) {
  const auto res = run_pipeline(small_subjects(3, 8), small_config());
  const auto dir = scratch("csvshape");
  const auto info = write_bundle(res, dir);
  // Quote-aware field count: commas inside "..." do not separate fields.
  auto fields = [](const std::string& line) {
    std::size_t n = 1;
    bool quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      else if (c == ',' && !quoted) ++n;
    }
    return n;
  };
  std::size_t checked = 0;
  for (const auto& f : info.files) {
    if (!f.ends_with(".csv")) continue;
    std::istringstream in(read_text(dir / f));
    std::string line;
    std::getline(in, line);
    const auto width = fields(line);
    while (std::getline(in, line)) {
      if (!line.empty()) EXPECT_EQ(fields(line), width) << f << ": " << line;
    }
    ++checked;
  }
  EXPECT_GT(checked, 5u);
}

TEST(Pipeline, Errors) {
  EXPECT_ERRC(run_pipeline({}, small_config()), Errc::invalid_argument);
  auto subjects = small_subjects(2, 5);
  subjects[1].rec.channel_names[0] = "Fz";
  EXPECT_ERRC(run_pipeline(subjects, small_config()), Errc::shape_mismatch);
  auto cfg = small_config();
  cfg.stages = {"planning", "rest"};
  try {
    run_pipeline(small_subjects(1, 5), cfg);
    ADD_FAILURE() << "expected a data error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::data);
    EXPECT_NE(std::string(e.what()).find("subject s0"), std::string::npos);
  }
}

TEST(Table1, LayoutFromResults) {
  const auto res = run_pipeline(small_subjects(1, 8), small_config());
  const auto csv = table1_csv(pipeline_to_json(res));
  const auto header = csv.substr(0, csv.find('\n'));
  EXPECT_NE(header.find("0v1"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 7);  // header + 7 feature configs
}
