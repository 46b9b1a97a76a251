#include "bispec/features.hpp"

#include "bispec/error.hpp"
#include "bispec/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bispec {

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

std::size_t phase_bin(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double shifted = theta + std::numbers::pi;  // [0, 2pi]
  if (shifted >= two_pi) shifted -= two_pi;   // arg() can return +pi, same as -pi
  auto bin = static_cast<std::size_t>(shifted / (two_pi / static_cast<double>(kPhaseBins)));
  return std::min(bin, kPhaseBins - 1);
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static const std::array<std::string_view, kFeatureCount> names{
      "mean_bicoh", "max_bicoh",  "log_sum_bicoh", "mag_entropy",        "sin_phase",
      "cos_phase",  "phase_entropy", "circ_variance", "phase_concentration"};
  return names;
}

RawFeatureVector compute_raw_features(std::span<const std::complex<double>> cells) {
  if (cells.empty()) throw Error(Errc::invalid_argument, "features: empty submatrix");
  const double n = static_cast<double>(cells.size());

  RawFeatureVector r;
  double sum = 0.0;
  double max = 0.0;
  std::complex<double> phasor_sum = 0.0;
  std::array<std::size_t, kPhaseBins> hist{};
  for (const auto& c : cells) {
    const double m = std::abs(c);
    sum += m;
    max = std::max(max, m);
    const double theta = std::arg(c);
    phasor_sum += std::polar(1.0, theta);
    ++hist[phase_bin(theta)];
  }
  r.sum_bicoh = sum;
  r.mean_bicoh = sum / n;
  r.max_bicoh = max;

  if (sum > 0.0) {
    double h = 0.0;
    for (const auto& c : cells) {
      const double p = std::abs(c) / sum;
      if (p > 0.0) h -= p * std::log(p);
    }
    r.mag_entropy = h;
  }

  r.mean_phase = std::arg(phasor_sum);
  double hp = 0.0;
  for (std::size_t count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    hp -= p * std::log(p);
  }
  r.phase_entropy = hp;
  r.phase_concentration = std::min(1.0, std::abs(phasor_sum) / n);
  r.circ_variance = 1.0 - r.phase_concentration;
  return r;
}

std::array<double, kFeatureCount> expand_features(const RawFeatureVector& raw) {
  return {raw.mean_bicoh,
          raw.max_bicoh,
          std::log(raw.sum_bicoh + 1e-12),
          raw.mag_entropy,
          std::sin(raw.mean_phase),
          std::cos(raw.mean_phase),
          raw.phase_entropy,
          raw.circ_variance,
          raw.phase_concentration};
}

FeatureIndex FeatureIndex::full(std::size_t n_channels) {
  FeatureIndex idx;
  idx.n_channels = n_channels;
  idx.columns.resize(n_channels * kBandPairCount * kFeatureCount);
  for (std::size_t i = 0; i < idx.columns.size(); ++i) idx.columns[i] = i;
  return idx;
}

FeatureIndex FeatureIndex::driver_slice(Band driver) const {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (BandPair::from_index(coord(columns[i]).pair).driver == driver) keep.push_back(i);
  }
  return select(keep);
}

FeatureIndex FeatureIndex::select(std::span<const std::size_t> positions) const {
  FeatureIndex out;
  out.n_channels = n_channels;
  out.columns.reserve(positions.size());
  for (auto p : positions) out.columns.push_back(columns.at(p));
  return out;
}

DesignMatrix DesignMatrix::select_rows(std::span<const std::size_t> which) const {
  DesignMatrix out;
  out.rows = which.size();
  out.cols = cols;
  out.index = index;
  out.data.reserve(out.rows * cols);
  for (auto r : which) {
    auto src = row(r);
    out.data.insert(out.data.end(), src.begin(), src.end());
  }
  return out;
}

DesignMatrix DesignMatrix::select_columns(std::span<const std::size_t> positions) const {
  DesignMatrix out;
  out.rows = rows;
  out.cols = positions.size();
  out.index = index.select(positions);
  out.data.resize(out.rows * out.cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < positions.size(); ++c) out.at(r, c) = at(r, positions[c]);
  return out;
}

std::string_view standardize_mode_name(StandardizeMode mode) {
  return mode == StandardizeMode::train_only ? "train-only" : "global";
}

std::optional<StandardizeMode> standardize_mode_from_name(std::string_view name) {
  if (name == "train-only" || name == "per-feature-global") return StandardizeMode::train_only;
  if (name == "global" || name == "paper-global") return StandardizeMode::global;
  return std::nullopt;
}

std::array<double, kBandPairCount * kFeatureCount> bandpair_features(const BicoherenceMatrix& b) {
  std::array<double, kBandPairCount * kFeatureCount> out{};
  for (std::size_t p = 0; p < kBandPairCount; ++p) {
    const auto expanded =
        expand_features(compute_raw_features(extract_submatrix(b, BandPair::from_index(p))));
    std::copy(expanded.begin(), expanded.end(), out.begin() + p * kFeatureCount);
  }
  return out;
}

FeatureTensor build_feature_tensor(const EpochedRecording& rec, const std::string& stage,
                                   const WindowSpec& spec, const FreqGrid& grid,
                                   unsigned threads) {
  spec.validate();
  if (!rec.has_stage(stage)) {
    throw Error(Errc::invalid_argument, "features: recording has no stage '" + stage + "'");
  }
  const auto& window = rec.stage(stage);
  if (window.length() < spec.nfft) {
    throw Error(Errc::too_short_signal, "features: stage '" + stage + "' is shorter than nfft");
  }

  FeatureTensor tensor;
  tensor.n_trials = rec.n_trials;
  tensor.n_channels = rec.n_channels;
  tensor.channel_names = rec.channel_names;
  tensor.labels = rec.labels;
  tensor.stage = stage;
  tensor.values.resize(rec.n_trials * tensor.row_width());

  const std::size_t per_trace = kBandPairCount * kFeatureCount;
  parallel_for(rec.n_trials * rec.n_channels, threads, [&](std::size_t item) {
    const std::size_t t = item / rec.n_channels;
    const std::size_t c = item % rec.n_channels;
    try {
      auto samples = rec.trace(t, c).subspan(window.begin, window.length());
      auto spectra = segment_and_fft(samples, rec.fs, spec);
      auto feats = bandpair_features(estimate_bicoherence(spectra, grid));
      std::copy(feats.begin(), feats.end(), tensor.values.begin() + item * per_trace);
    } catch (const Error& e) {
      throw Error(e.code(), "trial " + std::to_string(t) + ", channel " + std::to_string(c) +
                                ": " + e.what());
    }
  });
  return tensor;
}

namespace {

Standardizer finish_fit(const std::array<std::vector<double>, kFeatureCount>& pools) {
  Standardizer s;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto& v = pools[f];
    if (v.empty()) {
      // No column of this type in the design (a feature subset); never applied.
      s.sd[f] = 1.0;
      continue;
    }
    if (v.size() < 2) {
      throw Error(Errc::invalid_argument, "standardizer: fewer than 2 samples for feature " +
                                              std::string(feature_names()[f]));
    }
    CompensatedSum sum;
    for (double x : v) sum.add(x);
    const double mean = sum.value() / static_cast<double>(v.size());
    CompensatedSum sq;
    for (double x : v) sq.add((x - mean) * (x - mean));
    double sd = std::sqrt(sq.value() / static_cast<double>(v.size() - 1));
    s.mean[f] = mean;
    s.population[f] = v.size();
    s.constant[f] = !(sd > kSdFloor);
    s.sd[f] = s.constant[f] ? kSdFloor : sd;
  }
  return s;
}

}  // namespace

Standardizer fit_standardizer(const FeatureTensor& tensor) {
  std::array<std::vector<double>, kFeatureCount> pools;
  for (std::size_t i = 0; i < tensor.values.size(); ++i) {
    pools[i % kFeatureCount].push_back(tensor.values[i]);
  }
  auto s = finish_fit(pools);
  s.provenance = "tensor:" + tensor.stage + ":all-trials";
  return s;
}

Standardizer fit_standardizer(const DesignMatrix& x, std::span<const std::size_t> rows) {
  std::array<std::vector<double>, kFeatureCount> pools;
  for (auto r : rows) {
    for (std::size_t c = 0; c < x.cols; ++c) pools[x.index.feature_of(c)].push_back(x.at(r, c));
  }
  auto s = finish_fit(pools);
  s.provenance = "design-rows:" + std::to_string(rows.size());
  return s;
}

void apply_standardizer(const Standardizer& s, FeatureTensor& tensor) {
  for (std::size_t i = 0; i < tensor.values.size(); ++i) {
    const std::size_t f = i % kFeatureCount;
    tensor.values[i] = (tensor.values[i] - s.mean[f]) / s.sd[f];
  }
  tensor.standardization = s;
}

void apply_standardizer(const Standardizer& s, DesignMatrix& x) {
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      const std::size_t f = x.index.feature_of(c);
      x.at(r, c) = (x.at(r, c) - s.mean[f]) / s.sd[f];
    }
  }
}

DesignMatrix flatten(const FeatureTensor& tensor) {
  DesignMatrix x;
  x.rows = tensor.n_trials;
  x.cols = tensor.row_width();
  x.data = tensor.values;  // row-major layout already matches the flat order
  x.index = FeatureIndex::full(tensor.n_channels);
  return x;
}

FeatureTensor unflatten(const DesignMatrix& x, std::vector<std::string> channel_names) {
  const std::size_t n_channels = channel_names.size();
  const auto full = FeatureIndex::full(n_channels);
  if (x.index.columns != full.columns) {
    throw Error(Errc::invalid_argument, "unflatten: design matrix is not a full feature set");
  }
  FeatureTensor t;
  t.n_trials = x.rows;
  t.n_channels = n_channels;
  t.values = x.data;
  t.channel_names = std::move(channel_names);
  return t;
}

}  // namespace bispec
