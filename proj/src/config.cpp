#include "bispec/config.hpp"

#include "bispec/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace bispec {

void RunConfig::validate() const {
  try {
    window.validate();
  } catch (const Error& e) {
    throw Error(Errc::config, std::string("config: window: ") + e.what());
  }
  if (!(grid_lo_hz >= 0.0 && grid_hi_hz > grid_lo_hz)) {
    throw Error(Errc::config, "config: grid needs 0 <= lo < hi");
  }
  if (filter.enabled && !(filter.low_hz > 0.0 && filter.high_hz > filter.low_hz)) {
    throw Error(Errc::config, "config: filter band must satisfy 0 < low < high");
  }
  if (filter.order < 2 || filter.order % 2 != 0) {
    throw Error(Errc::config, "config: filter order must be even and >= 2");
  }
  if (forest.n_trees == 0 || forest.min_leaf == 0) {
    throw Error(Errc::config, "config: n_trees and min_leaf must be > 0");
  }
  if (k_folds < 2) throw Error(Errc::config, "config: k_folds must be >= 2");
  if (!(fdr_q > 0.0 && fdr_q < 1.0)) throw Error(Errc::config, "config: fdr_q must lie in (0,1)");
  const auto known = default_tasks();
  for (const auto& t : tasks) {
    if (std::none_of(known.begin(), known.end(), [&](const auto& k) { return k.name == t; })) {
      throw Error(Errc::config, "config: unknown task '" + t + "'");
    }
  }
  if (stages.empty()) throw Error(Errc::config, "config: no stages");
  if (std::set<std::string>(stages.begin(), stages.end()).size() != stages.size()) {
    throw Error(Errc::config, "config: duplicate stage names");
  }
}

FreqGrid RunConfig::grid(double fs) const {
  const double res = fs / static_cast<double>(window.nfft);
  const auto lo = static_cast<std::size_t>(std::llround(grid_lo_hz / res));
  const auto hi = static_cast<std::size_t>(std::llround(grid_hi_hz / res));
  return FreqGrid::square(lo, hi, res);
}

std::vector<TaskSpec> RunConfig::task_specs() const {
  std::vector<TaskSpec> out;
  for (const auto& name : tasks) {
    for (const auto& t : default_tasks()) {
      if (t.name == name) out.push_back(t);
    }
  }
  return out;
}

SuiteParams RunConfig::suite_params() const {
  SuiteParams p;
  p.cv.k = k_folds;
  p.cv.forest = forest;
  p.cv.mode = standardize;
  p.cv.importance_repeats = importance_repeats;
  p.cv.importance_scoring = importance_scoring;
  p.cv.threads = threads;
  p.cv.config_digest = config_digest(*this);
  p.tasks = task_specs();
  p.top_rerun = top_rerun;
  return p;
}

json config_to_json(const RunConfig& c, bool include_runtime) {
  json j;
  j["window"] = {{"nfft", c.window.nfft}, {"overlap", c.window.overlap_fraction}, {"kind", "hann"}};
  j["grid"] = {{"lo_hz", c.grid_lo_hz}, {"hi_hz", c.grid_hi_hz}};
  json bands = json::array();
  for (const auto& b : canonical_bands()) bands.push_back({std::string(b.name), b.low, b.high});
  j["bands"] = bands;
  j["filter"] = {{"enabled", c.filter.enabled},
                 {"low_hz", c.filter.low_hz},
                 {"high_hz", c.filter.high_hz},
                 {"order", c.filter.order}};
  j["forest"] = {{"n_trees", c.forest.n_trees},
                 {"max_depth", c.forest.max_depth},
                 {"min_leaf", c.forest.min_leaf},
                 {"mtry", c.forest.mtry}};
  j["k_folds"] = c.k_folds;
  j["importance_repeats"] = c.importance_repeats;
  j["importance_scoring"] = std::string(importance_scoring_name(c.importance_scoring));
  j["standardize_mode"] = std::string(standardize_mode_name(c.standardize));
  j["tasks"] = c.tasks;
  j["stages"] = c.stages;
  j["top_rerun"] = c.top_rerun;
  j["svg"] = c.svg;
  j["feature_level_stats"] = c.feature_level_stats;
  j["fdr_q"] = c.fdr_q;
  j["color_ramp"] = c.color_ramp;
  if (include_runtime) {
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["output_dir"] = c.output_dir;
  }
  return j;
}

namespace {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::config, std::string("config: '") + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* x) { return k == x; })) {
      throw Error(Errc::config, "config: unknown key '" + where + k + "'");
    }
  }
}

}  // namespace

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::config, "config: expected a JSON object");
  reject_unknown(j,
                 {"window", "grid", "bands", "filter", "forest", "k_folds", "importance_repeats",
                  "importance_scoring",
                  "standardize_mode", "tasks", "stages", "top_rerun", "svg", "feature_level_stats",
                  "fdr_q", "color_ramp", "seed", "threads", "output_dir"},
                 "");
  RunConfig c;
  if (j.contains("window")) {
    const auto& w = j["window"];
    reject_unknown(w, {"nfft", "overlap", "kind"}, "window.");
    take(w, "nfft", c.window.nfft);
    take(w, "overlap", c.window.overlap_fraction);
    if (w.contains("kind") && w["kind"] != "hann") throw Error(Errc::config, "config: only hann windows");
  }
  if (j.contains("grid")) {
    reject_unknown(j["grid"], {"lo_hz", "hi_hz"}, "grid.");
    take(j["grid"], "lo_hz", c.grid_lo_hz);
    take(j["grid"], "hi_hz", c.grid_hi_hz);
  }
  if (j.contains("bands")) {
    // Band edges are fixed; the key is accepted only if it restates them.
    json expected = json::array();
    for (const auto& b : canonical_bands()) expected.push_back({std::string(b.name), b.low, b.high});
    if (j["bands"] != expected) throw Error(Errc::config, "config: band definitions are fixed");
  }
  if (j.contains("filter")) {
    const auto& f = j["filter"];
    reject_unknown(f, {"enabled", "low_hz", "high_hz", "order"}, "filter.");
    take(f, "enabled", c.filter.enabled);
    take(f, "low_hz", c.filter.low_hz);
    take(f, "high_hz", c.filter.high_hz);
    take(f, "order", c.filter.order);
  }
  if (j.contains("forest")) {
    const auto& f = j["forest"];
    reject_unknown(f, {"n_trees", "max_depth", "min_leaf", "mtry"}, "forest.");
    take(f, "n_trees", c.forest.n_trees);
    take(f, "max_depth", c.forest.max_depth);
    take(f, "min_leaf", c.forest.min_leaf);
    take(f, "mtry", c.forest.mtry);
  }
  take(j, "k_folds", c.k_folds);
  take(j, "importance_repeats", c.importance_repeats);
  if (j.contains("importance_scoring")) {
    std::string s;
    take(j, "importance_scoring", s);
    if (s == "oob") c.importance_scoring = ImportanceScoring::out_of_bag;
    else if (s == "all-trees") c.importance_scoring = ImportanceScoring::all_trees;
    else throw Error(Errc::config, "config: unknown importance_scoring '" + s + "'");
  }
  if (j.contains("standardize_mode")) {
    std::string s;
    take(j, "standardize_mode", s);
    auto mode = standardize_mode_from_name(s);
    if (!mode) throw Error(Errc::config, "config: unknown standardize_mode '" + s + "'");
    c.standardize = *mode;
  }
  take(j, "tasks", c.tasks);
  take(j, "stages", c.stages);
  take(j, "top_rerun", c.top_rerun);
  take(j, "svg", c.svg);
  take(j, "feature_level_stats", c.feature_level_stats);
  take(j, "fdr_q", c.fdr_q);
  take(j, "color_ramp", c.color_ramp);
  take(j, "seed", c.seed);
  take(j, "threads", c.threads);
  take(j, "output_dir", c.output_dir);
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const Error& e) {
    throw Error(Errc::config, e.what());
  }
  return config_from_json(j);
}

std::string config_digest(const RunConfig& c) { return sha256_hex(config_to_json(c).dump()); }

}  // namespace bispec
