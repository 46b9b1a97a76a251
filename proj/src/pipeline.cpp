#include "bispec/pipeline.hpp"

#include "bispec/error.hpp"
#include "bispec/filter.hpp"
#include "bispec/parallel.hpp"
#include "bispec/rng.hpp"

#include <algorithm>

namespace bispec {

EpochedRecording preprocess(const EpochedRecording& rec, const FilterSettings& filter,
                            unsigned threads) {
  if (!filter.enabled) return rec;
  EpochedRecording out = rec;
  const auto sos = design_butterworth_bandpass(filter.low_hz, filter.high_hz, rec.fs, filter.order);
  parallel_for(rec.n_trials * rec.n_channels, threads, [&](std::size_t item) {
    const auto t = item / rec.n_channels, c = item % rec.n_channels;
    const auto y = filtfilt(sos, rec.trace(t, c));
    std::copy(y.begin(), y.end(), out.trace(t, c).begin());
  });
  return out;
}

std::vector<FeatureTensor> extract_stage_tensors(const EpochedRecording& rec, const RunConfig& cfg) {
  cfg.validate();
  rec.validate(cfg.window.nfft);
  const auto clean = preprocess(rec, cfg.filter, cfg.threads);
  const auto grid = cfg.grid(rec.fs);
  std::vector<FeatureTensor> out;
  for (const auto& stage : cfg.stages) {
    if (!rec.has_stage(stage)) {
      throw Error(Errc::data, "dataset has no stage '" + stage + "' named in the config");
    }
    try {
      out.push_back(build_feature_tensor(clean, stage, cfg.window, grid, cfg.threads));
    } catch (const Error& e) {
      throw Error(e.code(), "stage " + stage + ": " + e.what());
    }
  }
  return out;
}

std::array<double, kBandPairCount> band_pair_contribution(
    const std::vector<std::vector<double>>& per_subject, bool* degenerate) {
  std::array<double, kBandPairCount> total{};
  for (const auto& imp : per_subject) {
    for (std::size_t f = 0; f < imp.size(); ++f) {
      total[FeatureIndex::coord(f).pair] += std::max(0.0, imp[f]);
    }
  }
  double sum = 0.0;
  for (auto& v : total) {
    v /= static_cast<double>(std::max<std::size_t>(1, per_subject.size()));
    sum += v;
  }
  if (degenerate) *degenerate = !(sum > 0.0);
  if (!(sum > 0.0)) return {};
  for (auto& v : total) v = 100.0 * v / sum;
  return total;
}

namespace {

const SuiteCell* find_cell(const std::vector<SuiteCell>& cells, const std::string& task,
                           const std::string& stage, const std::string& config) {
  for (const auto& c : cells) {
    if (c.task == task && c.stage == stage && c.feature_config == config) return &c;
  }
  return nullptr;
}

}  // namespace

PipelineResult run_pipeline(const std::vector<SubjectInput>& subjects, const RunConfig& cfg) {
  cfg.validate();
  if (subjects.empty()) throw Error(Errc::invalid_argument, "pipeline: no datasets");
  PipelineResult res;
  res.config = cfg;
  res.digest = config_digest(cfg);
  res.channel_names = subjects.front().rec.channel_names;
  const auto params = cfg.suite_params();

  for (std::size_t s = 0; s < subjects.size(); ++s) {
    const auto& in = subjects[s];
    if (in.rec.channel_names != res.channel_names) {
      throw Error(Errc::shape_mismatch, "pipeline: subject " + in.name + " has a different montage");
    }
    SubjectResult sr;
    sr.name = in.name;
    sr.seed = mix_seed(cfg.seed, {s});
    try {
      sr.tensors = extract_stage_tensors(in.rec, cfg);
      sr.cells = run_task_suite(sr.tensors, params, sr.seed);
    } catch (const Error& e) {
      throw Error(e.code(), "subject " + in.name + ": " + e.what());
    }
    res.subjects.push_back(std::move(sr));
  }
  summarize(res);
  return res;
}

void summarize(PipelineResult& res) {
  const auto& cfg = res.config;
  const auto params = cfg.suite_params();
  res.contributions.clear();
  res.selections.clear();
  const std::size_t n_channels = res.channel_names.size();
  for (const auto& task : params.tasks) {
    for (const auto& stage : cfg.stages) {
      std::vector<std::vector<double>> per_subject;
      SelectionCounts counts;
      counts.task = task.name;
      counts.stage = stage;
      counts.per_channel.assign(n_channels, 0);
      for (const auto& sr : res.subjects) {
        const auto* wb = find_cell(sr.cells, task.name, stage, "WB");
        if (!wb) continue;
        std::vector<double> flat(n_channels * kBandPairCount * kFeatureCount, 0.0);
        for (std::size_t c = 0; c < wb->report.importance.size(); ++c) {
          flat[wb->report.index.columns[c]] = wb->report.importance[c];
        }
        for (std::size_t f = 0; f < flat.size(); ++f) {
          counts.importance_per_feature[f % kFeatureCount] += flat[f];
        }
        per_subject.push_back(std::move(flat));
        for (auto id : wb->selected) {
          const auto co = FeatureIndex::coord(id);
          ++counts.per_channel[co.channel];
          ++counts.per_pair[co.pair];
          ++counts.per_feature[co.feature];
        }
      }
      if (per_subject.empty()) continue;
      for (auto& v : counts.importance_per_feature) v /= static_cast<double>(per_subject.size());
      ContributionTable table;
      table.task = task.name;
      table.stage = stage;
      table.n_subjects = per_subject.size();
      table.percent = band_pair_contribution(per_subject, &table.degenerate);
      res.contributions.push_back(table);
      res.selections.push_back(std::move(counts));
    }
  }

  if (res.subjects.size() >= 3 && cfg.stages.size() >= 2) {
    std::vector<AccuracyRecord> records;
    for (std::size_t s = 0; s < res.subjects.size(); ++s) {
      for (const auto& c : res.subjects[s].cells) {
        records.push_back({s, c.task, c.stage, c.feature_config, c.report.mean_train_acc()});
      }
    }
    res.stage_stats = stage_comparison_suite(records, cfg.stages[0], cfg.stages[1]);
    for (const auto& w : res.stage_stats->warnings) res.warnings.push_back(w);

    if (cfg.feature_level_stats) {
      std::vector<FeatureTensor> first, second;
      for (const auto& sr : res.subjects) {
        first.push_back(sr.tensors[0]);
        second.push_back(sr.tensors[1]);
      }
      res.feature_stats = feature_level_suite(first, second, cfg.fdr_q, cfg.threads);
    }
  } else {
    res.warnings.push_back("statistics need >= 3 subjects and two stages; skipped");
  }
}

}  // namespace bispec
