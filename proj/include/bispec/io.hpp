#pragma once

#include "bispec/bispectrum.hpp"
#include "bispec/features.hpp"
#include "bispec/recording.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bispec {

namespace fs = std::filesystem;
using json = nlohmann::json;

// On-disk description of a dataset: raw float64 samples, row-major
// (trial, channel, sample), next to a JSON manifest.
struct DatasetManifest {
  int version = 1;
  double fs = 256.0;
  std::size_t n_trials = 0;
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  std::vector<std::string> channel_names;
  std::vector<int> labels;     // inline labels, or
  std::string labels_file;     // one integer per line, relative to the manifest
  std::vector<int> class_set{0, 1, 2};
  std::vector<StageWindow> stages;
  std::string data_file;       // relative to the manifest
  std::string endianness = "little";
  std::string dtype = "float64";
  json provenance = json::object();
};

json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const json& j);

// Missing files -> missing-file, dtype other than float64 -> unknown-dtype,
// byte length or field disagreement -> shape-mismatch, labels outside the
// class set -> label-error.
EpochedRecording load_dataset(const fs::path& manifest_path);

// Writes <stem>.json and <stem>.f64 into dir; returns the manifest path.
fs::path save_dataset(const EpochedRecording& rec, const fs::path& dir, const std::string& stem,
                      const json& provenance = json::object());

// Feature tensor: <stem>.f64 (trial, channel, pair, feature) plus <stem>.json.
fs::path save_feature_tensor(const FeatureTensor& t, const fs::path& dir, const std::string& stem,
                             const json& provenance = json::object());
FeatureTensor load_feature_tensor(const fs::path& sidecar_path);

json standardizer_to_json(const Standardizer& s);
Standardizer standardizer_from_json(const json& j);

// Header "f1,f2,re,im"; one row per grid cell, f1-major.
void write_matrix_csv(const fs::path& path, const ComplexMatrix& m, const FreqGrid& grid);
ComplexMatrix read_matrix_csv(const fs::path& path);

json read_json(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
void write_json(const fs::path& path, const json& j);

void write_f64(const fs::path& path, const std::vector<double>& values);
std::vector<double> read_f64(const fs::path& path, bool big_endian = false);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const fs::path& path);

}  // namespace bispec
