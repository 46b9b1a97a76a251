#include "bispec/config.hpp"
#include "bispec/error.hpp"
#include "bispec/features.hpp"
#include "bispec/io.hpp"
#include "bispec/pipeline.hpp"
#include "bispec/report.hpp"
#include "bispec/rng.hpp"
#include "bispec/stats.hpp"
#include "bispec/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

using namespace bispec;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads) cfg.threads = std::max(1u, *g.threads);
  if (!g.out.empty()) cfg.output_dir = g.out;
  cfg.validate();
  return cfg;
}

json provenance(const RunConfig& cfg, const std::string& command) {
  return {{"command", command},
          {"config_digest", config_digest(cfg)},
          {"seed", cfg.seed},
          {"toolkit_version", kToolkitVersion}};
}

EpochedRecording single_trace(const TimeSeries& x) {
  EpochedRecording rec;
  rec.n_trials = 1;
  rec.n_channels = 1;
  rec.n_samples = x.size();
  rec.fs = x.fs;
  rec.data = x.samples;
  rec.channel_names = {"X"};
  rec.labels = {0};
  rec.class_set = {0};
  rec.stages = {{"full", 0, x.size()}};
  return rec;
}

json peak_json(const Peak& p) {
  return {{"f1", p.f1}, {"f2", p.f2}, {"magnitude", p.magnitude}, {"phase", p.phase}};
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ls(line);
  std::string tok;
  while (std::getline(ls, tok, ',')) f.push_back(tok);
  return f;
}

// Accepts subject,task,stage,config,value rows, or a bundle's per-fold accuracy.csv
// (subject,task,stage,feature_config,fold,train_acc,test_acc,...), which is reduced to
// the mean training accuracy per cell with subjects numbered by first appearance.
std::vector<AccuracyRecord> read_accuracy_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  const bool per_fold = line.rfind("subject,task,stage,feature_config,fold,train_acc,test_acc", 0) == 0;
  if (!per_fold && line.rfind("subject,task,stage,config,value", 0) != 0) {
    throw Error(Errc::data, path.string() +
                                ": expected header subject,task,stage,config,value or a bundle accuracy.csv");
  }
  std::vector<AccuracyRecord> out;
  std::vector<std::string> subjects;
  std::vector<std::size_t> folds;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < (per_fold ? 7u : 5u)) throw Error(Errc::data, path.string() + ": short row '" + line + "'");
    try {
      if (!per_fold) {
        out.push_back({std::stoul(f[0]), f[1], f[2], f[3], std::stod(f[4])});
        continue;
      }
      auto it = std::find(subjects.begin(), subjects.end(), f[0]);
      const auto s = static_cast<std::size_t>(it - subjects.begin());
      if (it == subjects.end()) subjects.push_back(f[0]);
      auto cell = std::find_if(out.begin(), out.end(), [&](const AccuracyRecord& r) {
        return r.subject == s && r.task == f[1] && r.stage == f[2] && r.config == f[3];
      });
      if (cell == out.end()) {
        out.push_back({s, f[1], f[2], f[3], 0.0});
        folds.push_back(0);
        cell = out.end() - 1;
      }
      cell->value += std::stod(f[5]);
      ++folds[static_cast<std::size_t>(cell - out.begin())];
    } catch (const std::exception&) {
      throw Error(Errc::data, path.string() + ": bad number in '" + line + "'");
    }
  }
  for (std::size_t i = 0; i < folds.size(); ++i) out[i].value /= static_cast<double>(folds[i]);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bispectral EEG analysis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Run configuration JSON");
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic signals or datasets");
  std::string signal = "paradigm";
  std::size_t trials = 75, subjects = 1, segments = 32;
  double f0 = 10.0, amp = 2.0, dur = 1.0, fs = 256.0, f1 = 8.0, f2 = 20.0;
  bool uncoupled = false;
  synth->add_option("--signal", signal)
      ->check(CLI::IsMember({"pure", "scaled", "shifted", "twotone", "qpc", "paradigm"}));
  synth->add_option("--trials", trials, "Trials per class (paradigm)");
  synth->add_option("--subjects", subjects, "Number of subjects (paradigm)");
  synth->add_option("--f0", f0, "Tone frequency");
  synth->add_option("--amp", amp, "Amplitude of the scaled tone");
  synth->add_option("--dur", dur, "Duration in seconds");
  synth->add_option("--fs", fs, "Sampling rate");
  synth->add_option("--f1", f1, "QPC first frequency");
  synth->add_option("--f2", f2, "QPC second frequency");
  synth->add_option("--segments", segments, "QPC segment count");
  synth->add_flag("--uncoupled", uncoupled, "QPC with independent sum-frequency phase");

  // bispec
  auto* bispec_cmd = app.add_subcommand("bispec", "Bispectrum/bicoherence matrices and peaks");
  std::string dataset;
  std::optional<std::size_t> only_trial;
  std::string only_channel, only_stage;
  std::optional<double> grid_lo, grid_hi;
  bispec_cmd->add_option("--dataset", dataset, "Dataset manifest")->required();
  bispec_cmd->add_option("--trial", only_trial);
  bispec_cmd->add_option("--channel", only_channel);
  bispec_cmd->add_option("--stage", only_stage);
  bispec_cmd->add_option("--grid-lo", grid_lo, "Lowest grid frequency (Hz)");
  bispec_cmd->add_option("--grid-hi", grid_hi, "Highest grid frequency (Hz)");

  // features
  auto* features = app.add_subcommand("features", "Band-pair feature tensors per stage");
  std::string feat_dataset;
  features->add_option("--dataset", feat_dataset)->required();

  // classify
  auto* classify = app.add_subcommand("classify", "Task suite on saved feature tensors");
  std::vector<std::string> tensor_paths;
  classify->add_option("--features", tensor_paths, "Feature tensor sidecars, one per stage")->required();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Features, classification, statistics, report");
  std::vector<std::string> datasets;
  pipeline->add_option("--dataset", datasets, "Dataset manifest, repeat per subject")->required();

  // stats
  auto* stats = app.add_subcommand("stats", "Statistics on accuracies or feature tensors");
  std::string acc_csv;
  std::vector<std::string> first_tensors, second_tensors;
  stats->add_option("--accuracies", acc_csv, "CSV: subject,task,stage,config,value");
  stats->add_option("--first", first_tensors, "First-stage feature tensors, one per subject");
  stats->add_option("--second", second_tensors, "Second-stage feature tensors, one per subject");

  // report
  auto* report = app.add_subcommand("report", "Re-render tables and heatmaps from a bundle");
  std::string bundle;
  report->add_option("--bundle", bundle, "Bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = resolve_config(g);
    const fs::path out = cfg.output_dir;

    if (synth->parsed()) {
      if (signal == "paradigm") {
        auto plan = paradigm_plan();
        plan.trials_per_class = trials;
        plan.fs = fs;
        plan.validate();
        if (subjects == 0) throw Error(Errc::config, "synth: --subjects must be >= 1");
        for (std::size_t s = 0; s < subjects; ++s) {
          const auto seed = subjects == 1 ? cfg.seed : mix_seed(cfg.seed, {s});
          auto prov = provenance(cfg, "synth paradigm");
          prov["generator_seed"] = seed;
          prov["trials_per_class"] = trials;
          const std::string stem = subjects == 1 ? "paradigm" : "subject_" + std::to_string(s);
          std::cout << save_dataset(synth_dataset(plan, seed), out, stem, prov).string() << "\n";
        }
      } else {
        TimeSeries x;
        if (signal == "pure") x = synth_pure_tone(f0, 1.0, 0.0, dur, fs);
        else if (signal == "scaled") x = synth_pure_tone(f0, amp, 0.0, dur, fs);
        else if (signal == "shifted") x = synth_pure_tone(f0, 1.0, std::numbers::pi / 4.0, dur, fs);
        else if (signal == "twotone") x = synth_two_tone(f0, 2.0 * f0, dur, fs);
        else x = synth_qpc_triplet(f1, f2, !uncoupled, segments, cfg.window, fs, cfg.seed);
        auto prov = provenance(cfg, "synth " + signal);
        prov["signal"] = signal;
        std::cout << save_dataset(single_trace(x), out, signal, prov).string() << "\n";
      }
      return 0;
    }

    if (bispec_cmd->parsed()) {
      const auto rec = load_dataset(dataset);
      RunConfig c = cfg;
      if (grid_lo) c.grid_lo_hz = *grid_lo;
      if (grid_hi) c.grid_hi_hz = *grid_hi;
      c.validate();
      const auto grid = c.grid(rec.fs);
      json peaks = json::array();
      for (std::size_t t = 0; t < rec.n_trials; ++t) {
        if (only_trial && *only_trial != t) continue;
        for (std::size_t ch = 0; ch < rec.n_channels; ++ch) {
          const auto& name = rec.channel_names[ch];
          if (!only_channel.empty() && only_channel != name) continue;
          for (const auto& st : rec.stages) {
            if (!only_stage.empty() && only_stage != st.name) continue;
            const auto samples = rec.trace(t, ch).subspan(st.begin, st.length());
            const auto spectra = segment_and_fft(samples, rec.fs, c.window);
            const auto b = estimate_bispectrum(spectra, grid);
            const auto bc = estimate_bicoherence(spectra, grid);
            const std::string stem = "bispec/t" + std::to_string(t) + "_" + name + "_" + st.name;
            write_matrix_csv(out / (stem + "_bispectrum.csv"), b.values, grid);
            write_matrix_csv(out / (stem + "_bicoherence.csv"), bc.values, grid);
            peaks.push_back({{"trial", t},
                             {"channel", name},
                             {"stage", st.name},
                             {"segments", spectra.n_segments},
                             {"bispectrum_peak", peak_json(peak(b))},
                             {"bicoherence_peak", peak_json(peak(bc))}});
          }
        }
      }
      if (peaks.empty()) throw Error(Errc::data, "bispec: no traces selected");
      json j = provenance(c, "bispec");
      j["grid"] = {{"lo_hz", c.grid_lo_hz}, {"hi_hz", c.grid_hi_hz}, {"resolution", grid.resolution}};
      j["peaks"] = peaks;
      write_json(out / "peaks.json", j);
      std::cout << (out / "peaks.json").string() << "\n";
      return 0;
    }

    if (features->parsed()) {
      const auto rec = load_dataset(feat_dataset);
      auto tensors = extract_stage_tensors(rec, cfg);
      for (auto& t : tensors) {
        if (cfg.standardize == StandardizeMode::global) apply_standardizer(fit_standardizer(t), t);
        std::cout << save_feature_tensor(t, out, "features_" + t.stage, provenance(cfg, "features")).string()
                  << "\n";
      }
      return 0;
    }

    if (classify->parsed()) {
      PipelineResult res;
      res.config = cfg;
      res.digest = config_digest(cfg);
      SubjectResult sr;
      sr.name = "subject_0";
      sr.seed = mix_seed(cfg.seed, {0});
      for (const auto& p : tensor_paths) {
        auto t = load_feature_tensor(p);
        t.standardization.reset();
        sr.tensors.push_back(std::move(t));
      }
      res.channel_names = sr.tensors.front().channel_names;
      RunConfig c = cfg;
      c.stages.clear();
      for (const auto& t : sr.tensors) c.stages.push_back(t.stage);
      res.config = c;
      sr.cells = run_task_suite(sr.tensors, c.suite_params(), sr.seed);
      res.subjects.push_back(std::move(sr));
      summarize(res);
      const auto info = write_bundle(res, out);
      std::cout << "bundle_digest " << info.digest << "\n";
      return 0;
    }

    if (pipeline->parsed()) {
      std::vector<SubjectInput> inputs;
      for (const auto& d : datasets) inputs.push_back({fs::path(d).stem().string(), load_dataset(d)});
      const auto res = run_pipeline(inputs, cfg);
      const auto info = write_bundle(res, out);
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "bundle_digest " << info.digest << "\n";
      return 0;
    }

    if (stats->parsed()) {
      bool did = false;
      if (!acc_csv.empty()) {
        const auto suite = stage_comparison_suite(read_accuracy_csv(acc_csv), cfg.stages.at(0),
                                                  cfg.stages.at(1));
        json j = provenance(cfg, "stats");
        j["tests"] = json::array();
        for (const auto& t : suite.tests) j["tests"].push_back(test_result_to_json(t));
        j["friedman"] = json::array();
        for (const auto& f : suite.friedman) {
          j["friedman"].push_back({{"context", f.context},
                                   {"chi2", f.chi2},
                                   {"p", f.p},
                                   {"kendalls_w", f.kendalls_w}});
        }
        j["warnings"] = suite.warnings;
        write_json(out / "stats_stage.json", j);
        did = true;
      }
      if (!first_tensors.empty() || !second_tensors.empty()) {
        std::vector<FeatureTensor> a, b;
        for (const auto& p : first_tensors) a.push_back(load_feature_tensor(p));
        for (const auto& p : second_tensors) b.push_back(load_feature_tensor(p));
        const auto fl = feature_level_suite(a, b, cfg.fdr_q, cfg.threads);
        json j = provenance(cfg, "stats");
        j["survivors"] = json::array();
        for (auto f : fl.survivors) {
          auto t = test_result_to_json(fl.tests[f]);
          t["flat_id"] = f;
          j["survivors"].push_back(t);
        }
        write_json(out / "stats_features.json", j);
        did = true;
      }
      if (!did) throw Error(Errc::config, "stats: give --accuracies or --first/--second");
      return 0;
    }

    if (report->parsed()) {
      render_report(bundle, cfg.svg);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const json::exception& e) {
    std::cerr << "error [config]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
