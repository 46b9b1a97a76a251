#include "bispec/config.hpp"
#include "bispec/io.hpp"
#include "bispec/rng.hpp"
#include "bispec/synth.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <fstream>

using namespace bispec;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::path(::testing::TempDir()) / ("bispec_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

EpochedRecording small_recording(std::uint64_t seed) {
  EpochedRecording rec;
  rec.n_trials = 6;
  rec.n_channels = 3;
  rec.n_samples = 512;
  rec.channel_names = {"C3", "Cz", "C4"};
  rec.labels = {0, 1, 2, 0, 1, 2};
  rec.stages = {{"planning", 0, 256}, {"execution", 256, 512}};
  Rng rng(seed);
  rec.data.resize(rec.n_trials * rec.n_channels * rec.n_samples);
  for (auto& v : rec.data) v = rng.normal();
  return rec;
}

void edit_manifest(const fs::path& path, const std::function<void(json&)>& fn) {
  auto j = read_json(path);
  fn(j);
  write_json(path, j);
}

}  // namespace

TEST(Dataset, RoundTripIsBitIdentical) {
  const auto dir = scratch("roundtrip");
  const auto rec = small_recording(1);
  const auto path = save_dataset(rec, dir, "ds");
  const auto back = load_dataset(path);
  ASSERT_EQ(back.data.size(), rec.data.size());
  EXPECT_EQ(std::memcmp(back.data.data(), rec.data.data(), rec.data.size() * sizeof(double)), 0);
  EXPECT_EQ(back.labels, rec.labels);
  EXPECT_EQ(back.channel_names, rec.channel_names);
  ASSERT_EQ(back.stages.size(), 2u);
  EXPECT_EQ(back.stage("execution").begin, 256u);
  EXPECT_EQ(back.n_samples, 512u);
}

TEST(Dataset, FullSizeParadigmLoads) {
  const auto dir = scratch("full");
  auto plan = paradigm_plan();
  const auto rec = synth_dataset(plan, 3);
  ASSERT_EQ(rec.n_trials, 225u);
  const auto back = load_dataset(save_dataset(rec, dir, "p"));
  EXPECT_EQ(back.n_trials, 225u);
  EXPECT_EQ(back.n_channels, 16u);
  EXPECT_EQ(back.n_samples, 1536u);
  EXPECT_EQ(fs::file_size(dir / "p.f64"), 225u * 16u * 1536u * 8u);
}

TEST(Dataset, ByteLengthMismatch) {
  const auto dir = scratch("bytes");
  const auto path = save_dataset(small_recording(2), dir, "ds");
  {
    std::ofstream out(dir / "ds.f64", std::ios::binary | std::ios::app);
    out.put('\0');
  }
  EXPECT_ERRC(load_dataset(path), Errc::shape_mismatch);

  const auto path2 = save_dataset(small_recording(2), dir, "ds2");
  edit_manifest(path2, [](json& j) { j["n_samples"] = 511; });
  EXPECT_ERRC(load_dataset(path2), Errc::shape_mismatch);
}

TEST(Dataset, DistinctErrorCodes) {
  const auto dir = scratch("codes");
  const auto path = save_dataset(small_recording(4), dir, "ds");

  edit_manifest(path, [](json& j) { j["dtype"] = "float32"; });
  EXPECT_ERRC(load_dataset(path), Errc::unknown_dtype);

  save_dataset(small_recording(4), dir, "ds");
  edit_manifest(path, [](json& j) { j["labels"] = {0, 1, 7, 0, 1, 2}; });
  EXPECT_ERRC(load_dataset(path), Errc::label);

  save_dataset(small_recording(4), dir, "ds");
  fs::remove(dir / "ds.f64");
  EXPECT_ERRC(load_dataset(path), Errc::missing_file);
  EXPECT_ERRC(load_dataset(dir / "nope.json"), Errc::missing_file);
}

TEST(Dataset, StageOutsideRecordingRejected) {
  const auto dir = scratch("stage");
  const auto path = save_dataset(small_recording(5), dir, "ds");
  edit_manifest(path, [](json& j) { j["stage_windows"]["execution"] = {256, 600}; });
  EXPECT_THROW(load_dataset(path), Error);
}

TEST(Dataset, LabelsFromFileAndBigEndian) {
  const auto dir = scratch("labels");
  const auto rec = small_recording(6);
  const auto path = save_dataset(rec, dir, "ds");
  write_text(dir / "labels.txt", "0\n1\n2\n0\n1\n2\n");
  // Byte-swap the data and declare it big-endian.
  auto raw = read_f64(dir / "ds.f64");
  std::vector<double> swapped(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    unsigned char b[8];
    std::memcpy(b, &raw[i], 8);
    std::reverse(b, b + 8);
    std::memcpy(&swapped[i], b, 8);
  }
  write_f64(dir / "ds.f64", swapped);
  edit_manifest(path, [](json& j) {
    j["labels"] = "labels.txt";
    j["endianness"] = "big";
  });
  const auto back = load_dataset(path);
  EXPECT_EQ(back.labels, rec.labels);
  EXPECT_EQ(back.data, rec.data);
}

TEST(Dataset, SameSeedSameFile) {
  const auto dir = scratch("seed");
  auto plan = two_class_plan();
  plan.trials_per_class = 4;
  save_dataset(synth_dataset(plan, 9), dir, "a");
  save_dataset(synth_dataset(plan, 9), dir, "b");
  save_dataset(synth_dataset(plan, 10), dir, "c");
  EXPECT_EQ(sha256_file(dir / "a.f64"), sha256_file(dir / "b.f64"));
  EXPECT_NE(sha256_file(dir / "a.f64"), sha256_file(dir / "c.f64"));
}

TEST(MatrixCsv, RoundTrip) {
  const auto dir = scratch("csv");
  const auto grid = FreqGrid::square(1, 4, 1.0);
  ComplexMatrix m(4, 4);
  Rng rng(11);
  for (auto& v : m.values) v = {rng.normal(), rng.normal() * 1e-17};
  write_matrix_csv(dir / "m.csv", m, grid);
  const auto text = read_text(dir / "m.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "f1,f2,re,im");
  EXPECT_EQ(text.substr(text.find('\n') + 1, 4), "1,1,");
  const auto back = read_matrix_csv(dir / "m.csv");
  EXPECT_EQ(back.rows, 4u);
  EXPECT_EQ(back.values, m.values);  // shortest round-trip formatting is exact

  ComplexMatrix wrong(3, 4);
  EXPECT_ERRC(write_matrix_csv(dir / "w.csv", wrong, grid), Errc::shape_mismatch);
  write_text(dir / "bad.csv", "a,b\n");
  EXPECT_ERRC(read_matrix_csv(dir / "bad.csv"), Errc::data);
}

TEST(FeatureTensorFile, RoundTripWithStandardizer) {
  const auto dir = scratch("tensor");
  FeatureTensor t;
  t.n_trials = 3;
  t.n_channels = 2;
  t.channel_names = {"C3", "C4"};
  t.labels = {0, 1, 0};
  t.stage = "planning";
  t.values.resize(t.n_trials * t.row_width());
  Rng rng(12);
  for (auto& v : t.values) v = rng.normal();
  auto s = fit_standardizer(t);
  apply_standardizer(s, t);
  const auto back = load_feature_tensor(save_feature_tensor(t, dir, "ft"));
  EXPECT_EQ(back.values, t.values);
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_EQ(back.stage, "planning");
  ASSERT_TRUE(back.standardization.has_value());
  EXPECT_EQ(back.standardization->mean, t.standardization->mean);
  EXPECT_EQ(back.standardization->sd, t.standardization->sd);

  auto j = read_json(dir / "ft.json");
  j["shape"] = {3, 2, 25, 8};
  write_json(dir / "ft.json", j);
  EXPECT_ERRC(load_feature_tensor(dir / "ft.json"), Errc::shape_mismatch);
}

TEST(Config, DefaultsRoundTrip) {
  RunConfig c;
  const auto back = config_from_json(config_to_json(c, true));
  EXPECT_EQ(config_digest(back), config_digest(c));
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.importance_scoring, ImportanceScoring::out_of_bag);
}

TEST(Config, RuntimeFieldsOutsideDigest) {
  RunConfig a, b;
  b.seed = 7;
  b.threads = 8;
  b.output_dir = "elsewhere";
  EXPECT_EQ(config_digest(a), config_digest(b));
  b.forest.n_trees = 50;
  EXPECT_NE(config_digest(a), config_digest(b));
  b = a;
  b.importance_scoring = ImportanceScoring::all_trees;
  EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(Config, Rejections) {
  EXPECT_ERRC(config_from_json(json{{"bogus", 1}}), Errc::config);
  EXPECT_ERRC(config_from_json(json{{"forest", {{"trees", 5}}}}), Errc::config);
  EXPECT_ERRC(config_from_json(json{{"k_folds", 1}}), Errc::config);
  EXPECT_ERRC(config_from_json(json{{"k_folds", "five"}}), Errc::config);
  EXPECT_ERRC(config_from_json(json{{"importance_scoring", "inbag"}}), Errc::config);
  EXPECT_ERRC(config_from_json(json{{"tasks", {"0v9"}}}), Errc::config);
  EXPECT_ERRC(config_from_json(json{{"window", {{"overlap", 1.0}}}}), Errc::config);
  EXPECT_ERRC(config_from_json(json{{"stages", {"planning", "planning"}}}), Errc::config);
  EXPECT_ERRC(config_from_json(json{{"bands", json::array()}}), Errc::config);
  EXPECT_EQ(config_from_json(json{{"importance_scoring", "all-trees"}}).importance_scoring,
            ImportanceScoring::all_trees);
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0), "1");
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.normal() * 10);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}
