#pragma once

#include "bispec/bands.hpp"
#include "bispec/bispectrum.hpp"
#include "bispec/dsp.hpp"
#include "bispec/recording.hpp"

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bispec {

struct RawFeatureVector {
  double mean_bicoh = 0.0;
  double max_bicoh = 0.0;
  double sum_bicoh = 0.0;
  double mag_entropy = 0.0;
  double mean_phase = 0.0;
  double phase_entropy = 0.0;
  double circ_variance = 0.0;
  double phase_concentration = 0.0;
};

inline constexpr std::size_t kFeatureCount = 9;
inline constexpr std::size_t kPhaseBins = 36;

enum class Feature : std::size_t {
  mean = 0,
  max = 1,
  log_sum = 2,
  mag_entropy = 3,
  sin_phase = 4,
  cos_phase = 5,
  phase_entropy = 6,
  circ_variance = 7,
  phase_concentration = 8,
};

const std::array<std::string_view, kFeatureCount>& feature_names();

// Magnitude and phase summaries of one band-pair submatrix. Entropies use
// natural logs; phases are histogrammed into 36 equal bins over [-pi, pi).
RawFeatureVector compute_raw_features(std::span<const std::complex<double>> cells);
inline RawFeatureVector compute_raw_features(const ComplexMatrix& sub) {
  return compute_raw_features(std::span<const std::complex<double>>(sub.values));
}

// Canonical 9-vector: mean_phase becomes (sin, cos); sum becomes ln(sum + 1e-12).
std::array<double, kFeatureCount> expand_features(const RawFeatureVector& raw);

// Maps design-matrix columns to (channel, band-pair, feature). Flat ids are
// channel-major, then band-pair (driver-major), then feature.
struct FeatureIndex {
  std::size_t n_channels = 0;
  std::vector<std::size_t> columns;  // flat id of each design column

  struct Coord {
    std::size_t channel;
    std::size_t pair;
    std::size_t feature;
  };

  static FeatureIndex full(std::size_t n_channels);

  static std::size_t flat(std::size_t channel, std::size_t pair, std::size_t feature) {
    return (channel * kBandPairCount + pair) * kFeatureCount + feature;
  }
  static Coord coord(std::size_t flat_id) {
    return {flat_id / (kBandPairCount * kFeatureCount),
            (flat_id / kFeatureCount) % kBandPairCount, flat_id % kFeatureCount};
  }

  std::size_t width() const noexcept { return columns.size(); }
  std::size_t feature_of(std::size_t column) const { return columns[column] % kFeatureCount; }

  FeatureIndex driver_slice(Band driver) const;
  FeatureIndex select(std::span<const std::size_t> positions) const;
};

// Row-major real matrix with a column index.
struct DesignMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  FeatureIndex index;

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  DesignMatrix select_rows(std::span<const std::size_t> rows) const;
  DesignMatrix select_columns(std::span<const std::size_t> positions) const;
};

enum class StandardizeMode { train_only, global };

std::string_view standardize_mode_name(StandardizeMode mode);
std::optional<StandardizeMode> standardize_mode_from_name(std::string_view name);

// Per-feature-type z-scoring parameters.
struct Standardizer {
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> sd{};
  std::array<bool, kFeatureCount> constant{};  // sd hit the 1e-12 floor
  std::array<std::size_t, kFeatureCount> population{};
  std::string provenance;  // what the parameters were fit on
};

inline constexpr double kSdFloor = 1e-12;

struct FeatureTensor {
  std::size_t n_trials = 0;
  std::size_t n_channels = 0;
  std::vector<double> values;  // (trial, channel, pair, feature), row-major
  std::vector<std::string> channel_names;
  std::vector<int> labels;
  std::string stage;
  std::optional<Standardizer> standardization;

  double& at(std::size_t t, std::size_t c, std::size_t p, std::size_t f) {
    return values[((t * n_channels + c) * kBandPairCount + p) * kFeatureCount + f];
  }
  double at(std::size_t t, std::size_t c, std::size_t p, std::size_t f) const {
    return values[((t * n_channels + c) * kBandPairCount + p) * kFeatureCount + f];
  }
  std::size_t row_width() const noexcept { return n_channels * kBandPairCount * kFeatureCount; }
};

// Bicoherence features for every (trial, channel) of one stage window.
FeatureTensor build_feature_tensor(const EpochedRecording& rec, const std::string& stage,
                                   const WindowSpec& spec, const FreqGrid& grid,
                                   unsigned threads = 1);

// Features of a single bicoherence matrix, 25 pairs x 9 values.
std::array<double, kBandPairCount * kFeatureCount> bandpair_features(const BicoherenceMatrix& b);

// Fits over every (trial, channel, pair) cell of the tensor.
Standardizer fit_standardizer(const FeatureTensor& tensor);
// Fits over the given rows of a design matrix, pooling columns by feature type.
Standardizer fit_standardizer(const DesignMatrix& x, std::span<const std::size_t> rows);

void apply_standardizer(const Standardizer& s, FeatureTensor& tensor);
void apply_standardizer(const Standardizer& s, DesignMatrix& x);

// T x (channels * 225) design matrix, and the inverse.
DesignMatrix flatten(const FeatureTensor& tensor);
FeatureTensor unflatten(const DesignMatrix& x, std::vector<std::string> channel_names);

}  // namespace bispec
