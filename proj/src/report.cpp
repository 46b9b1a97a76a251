#include "bispec/report.hpp"

#include "bispec/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace bispec {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string hex2(int v) {
  char buf[3];
  std::snprintf(buf, sizeof buf, "%02x", std::clamp(v, 0, 255));
  return buf;
}

std::array<int, 3> parse_hex(const std::string& c) {
  if (c.size() != 7 || c[0] != '#') throw Error(Errc::config, "color ramp entry '" + c + "' is not #rrggbb");
  return {std::stoi(c.substr(1, 2), nullptr, 16), std::stoi(c.substr(3, 2), nullptr, 16),
          std::stoi(c.substr(5, 2), nullptr, 16)};
}

std::string ramp_color(double t, const std::array<std::string, 8>& ramp) {
  t = std::clamp(t, 0.0, 1.0) * 7.0;
  const auto i = std::min<std::size_t>(6, static_cast<std::size_t>(t));
  const double u = t - static_cast<double>(i);
  const auto a = parse_hex(ramp[i]), b = parse_hex(ramp[i + 1]);
  std::string out = "#";
  for (int k = 0; k < 3; ++k) out += hex2(static_cast<int>(std::lround(a[k] + u * (b[k] - a[k]))));
  return out;
}

std::string num(double v) { return format_double(v); }

struct CsvTail {
  std::string digest;
  std::uint64_t seed;
  std::string str() const { return "," + digest + "," + std::to_string(seed); }
};

std::string safe(std::string s) {
  for (auto& ch : s) {
    if (ch == ',' || ch == '/' || ch == ' ') ch = '_';
  }
  return s;
}

std::string band_names_row() {
  std::string s;
  for (const auto& b : canonical_bands()) s += "," + std::string(b.name);
  return s;
}

}  // namespace

json cv_report_to_json(const CvReport& r) {
  json j;
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"train_acc", f.train_acc}, {"test_acc", f.test_acc}, {"degenerate", f.degenerate}});
  }
  j["folds"] = folds;
  j["fold_assignments"] = r.fold_of;
  j["seed"] = r.seed;
  j["config_digest"] = r.config_digest;
  j["mean_train_acc"] = r.mean_train_acc();
  j["mean_test_acc"] = r.mean_test_acc();
  return j;
}

json test_result_to_json(const TestResult& t) {
  auto nn = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"test", t.test_name},
          {"context", t.context},
          {"statistic", nn(t.statistic)},
          {"df", t.df},
          {"p_raw", t.p_raw},
          {"p_fdr", t.p_fdr},
          {"effect_name", t.effect_name},
          {"effect", nn(t.effect_size)},
          {"cohens_d", nn(t.cohens_d)},
          {"n", t.n},
          {"normality_p", t.normality_p},
          {"normality_degenerate", t.normality_degenerate},
          {"branch", std::string(branch_name(t.branch))},
          {"note", t.note}};
}

json pipeline_to_json(const PipelineResult& r) {
  json j;
  j["toolkit_version"] = kToolkitVersion;
  j["config_digest"] = r.digest;
  j["seed"] = r.config.seed;
  j["config"] = config_to_json(r.config);
  j["channel_names"] = r.channel_names;
  json subjects = json::array();
  for (const auto& s : r.subjects) {
    json cells = json::array();
    for (const auto& c : s.cells) {
      json cj = cv_report_to_json(c.report);
      cj["task"] = c.task;
      cj["stage"] = c.stage;
      cj["feature_config"] = c.feature_config;
      if (c.feature_config == "WB" || c.feature_config == "top") {
        cj["selected_features"] = c.selected;
        cj["selection_empty"] = c.selection_empty;
      }
      cells.push_back(cj);
    }
    subjects.push_back({{"name", s.name}, {"seed", s.seed}, {"cells", cells}});
  }
  j["subjects"] = subjects;
  json contrib = json::array();
  for (const auto& t : r.contributions) {
    contrib.push_back({{"task", t.task},
                       {"stage", t.stage},
                       {"percent", t.percent},
                       {"degenerate", t.degenerate},
                       {"n_subjects", t.n_subjects}});
  }
  j["contributions"] = contrib;
  json sel = json::array();
  for (const auto& s : r.selections) {
    sel.push_back({{"task", s.task},
                   {"stage", s.stage},
                   {"per_channel", s.per_channel},
                   {"per_pair", s.per_pair},
                   {"per_feature", s.per_feature},
                   {"importance_per_feature", s.importance_per_feature}});
  }
  j["selections"] = sel;
  if (r.stage_stats) {
    json tests = json::array(), fr = json::array();
    for (const auto& t : r.stage_stats->tests) tests.push_back(test_result_to_json(t));
    for (const auto& f : r.stage_stats->friedman) {
      json post = json::array();
      for (const auto& t : f.posthoc) post.push_back(test_result_to_json(t));
      fr.push_back({{"context", f.context},
                    {"chi2", f.chi2},
                    {"df", f.df},
                    {"p", f.p},
                    {"kendalls_w", f.kendalls_w},
                    {"tie_correction", f.tie_correction},
                    {"n", f.n},
                    {"k", f.k},
                    {"posthoc", post}});
    }
    j["stage_stats"] = {{"tests", tests}, {"friedman", fr}, {"warnings", r.stage_stats->warnings}};
  } else {
    j["stage_stats"] = nullptr;
  }
  if (r.feature_stats) {
    json surv = json::array();
    for (auto f : r.feature_stats->survivors) {
      auto t = test_result_to_json(r.feature_stats->tests[f]);
      t["flat_id"] = f;
      surv.push_back(t);
    }
    j["feature_stats"] = {{"q", r.feature_stats->q},
                          {"n_tests", r.feature_stats->tests.size()},
                          {"survivors", surv}};
  } else {
    j["feature_stats"] = nullptr;
  }
  j["warnings"] = r.warnings;
  return j;
}

std::string table1_csv(const json& results) {
  const std::string digest = results.at("config_digest");
  const std::uint64_t seed = results.at("seed");
  std::vector<std::string> columns;
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> acc;
  for (const auto& s : results.at("subjects")) {
    for (const auto& c : s.at("cells")) {
      const std::string col = c.at("task").get<std::string>() + "/" + c.at("stage").get<std::string>();
      if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
      auto& cell = acc[{c.at("feature_config").get<std::string>(), col}];
      cell.first += c.at("mean_test_acc").get<double>();
      cell.second += 1;
    }
  }
  std::string out = "feature_config";
  for (const auto& c : columns) out += "," + c;
  out += ",config_digest,seed\n";
  for (const auto& cfg : feature_config_names()) {
    out += cfg;
    for (const auto& col : columns) {
      auto it = acc.find({cfg, col});
      out += ",";
      out += it == acc.end() ? std::string("-") : num(it->second.first / it->second.second);
    }
    out += CsvTail{digest, seed}.str() + "\n";
  }
  return out;
}

std::string heatmap_svg(const std::array<double, kBandPairCount>& percent, const std::string& title,
                        const std::array<std::string, 8>& ramp) {
  const int cell = 60, left = 70, top = 50;
  const double peak = std::max(1e-12, *std::max_element(percent.begin(), percent.end()));
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + 5 * cell + 20
    << "\" height=\"" << top + 5 * cell + 40 << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<text x=\"" << left << "\" y=\"20\">" << title << "</text>\n";
  for (std::size_t d = 0; d < kBandCount; ++d) {
    const auto& name = canonical_bands()[d].name;
    s << "<text x=\"5\" y=\"" << top + d * cell + cell / 2 + 4 << "\">" << name << "</text>\n";
    s << "<text x=\"" << left + d * cell + 8 << "\" y=\"" << top + 5 * cell + 18 << "\">" << name
      << "</text>\n";
  }
  for (std::size_t d = 0; d < kBandCount; ++d) {
    for (std::size_t r = 0; r < kBandCount; ++r) {
      const double v = percent[d * kBandCount + r];
      s << "<rect x=\"" << left + r * cell << "\" y=\"" << top + d * cell << "\" width=\"" << cell
        << "\" height=\"" << cell << "\" fill=\"" << ramp_color(v / peak, ramp) << "\"/>\n";
      s << "<text x=\"" << left + r * cell + 12 << "\" y=\"" << top + d * cell + cell / 2 + 4
        << "\" fill=\"" << (v / peak > 0.6 ? "#000000" : "#ffffff") << "\">" << fixed(v, 1)
        << "</text>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

std::string summary_markdown(const json& results) {
  std::ostringstream s;
  s << "# Run summary\n\n";
  s << "config digest `" << results.at("config_digest").get<std::string>() << "`, seed "
    << results.at("seed").get<std::uint64_t>() << ", " << results.at("subjects").size()
    << " subject(s)\n\n";
  s << "## Mean held-out accuracy\n\n```\n" << table1_csv(results) << "```\n\n";
  s << "## Band-pair contribution (%)\n\n";
  for (const auto& t : results.at("contributions")) {
    s << "### " << t.at("task").get<std::string>() << " / " << t.at("stage").get<std::string>()
      << (t.at("degenerate").get<bool>() ? " (no positive importance)" : "") << "\n\n";
    s << "| driver \\ responder |";
    for (const auto& b : canonical_bands()) s << " " << b.name << " |";
    s << "\n|---|---|---|---|---|---|\n";
    const auto pct = t.at("percent").get<std::vector<double>>();
    for (std::size_t d = 0; d < kBandCount; ++d) {
      s << "| " << canonical_bands()[d].name << " |";
      for (std::size_t r = 0; r < kBandCount; ++r) s << " " << fixed(pct[d * kBandCount + r], 2) << " |";
      s << "\n";
    }
    s << "\n";
  }
  if (!results.at("stage_stats").is_null()) {
    s << "## Stage comparison\n\n| context | test | p_raw | p_fdr | effect |\n|---|---|---|---|---|\n";
    for (const auto& t : results["stage_stats"]["tests"]) {
      s << "| " << t["context"].get<std::string>() << " | " << t["branch"].get<std::string>() << " | "
        << fixed(t["p_raw"].get<double>(), 4) << " | " << fixed(t["p_fdr"].get<double>(), 4) << " | "
        << (t["effect"].is_null() ? std::string("-") : fixed(t["effect"].get<double>(), 3)) << " |\n";
    }
    s << "\n";
  }
  if (!results.at("feature_stats").is_null()) {
    s << "## Feature-level survivors\n\n";
    const auto& surv = results["feature_stats"]["survivors"];
    if (surv.empty()) s << "none\n";
    for (const auto& t : surv) {
      s << "- " << t["context"].get<std::string>() << ": p_fdr " << fixed(t["p_fdr"].get<double>(), 5)
        << "\n";
    }
  }
  return s.str();
}

std::string bundle_digest(const fs::path& dir, const std::vector<std::string>& files) {
  std::string manifest;
  for (const auto& f : files) manifest += f + "\t" + sha256_file(dir / f) + "\n";
  return sha256_hex(manifest);
}

BundleInfo write_bundle(const PipelineResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  const CsvTail tail{r.digest, r.config.seed};
  std::vector<std::string> files;
  auto emit = [&](const std::string& rel, const std::string& text) {
    write_text(dir / rel, text);
    files.push_back(rel);
  };

  const json results = pipeline_to_json(r);
  emit("results.json", results.dump(2) + "\n");
  emit("table1.csv", table1_csv(results));

  std::string acc = "subject,task,stage,feature_config,fold,train_acc,test_acc,config_digest,seed\n";
  for (const auto& s : r.subjects) {
    for (const auto& c : s.cells) {
      const std::string stem = safe(s.name) + "/" + c.task + "_" + c.stage + "_" + c.feature_config;
      for (std::size_t k = 0; k < c.report.folds.size(); ++k) {
        acc += s.name + "," + c.task + "," + c.stage + "," + c.feature_config + "," +
               std::to_string(k) + "," + num(c.report.folds[k].train_acc) + "," +
               num(c.report.folds[k].test_acc) + tail.str() + "\n";
      }
      json rep = cv_report_to_json(c.report);
      rep["task"] = c.task;
      rep["stage"] = c.stage;
      rep["feature_config"] = c.feature_config;
      rep["subject"] = s.name;
      if (!c.report.importance.empty()) {
        const std::string ipath = "importance/" + stem + ".csv";
        std::string csv = "flat_id,channel,band_pair,feature,importance,config_digest,seed\n";
        for (std::size_t i = 0; i < c.report.importance.size(); ++i) {
          const auto id = c.report.index.columns[i];
          const auto co = FeatureIndex::coord(id);
          csv += std::to_string(id) + "," + r.channel_names.at(co.channel) + "," +
                 BandPair::from_index(co.pair).name() + "," +
                 std::string(feature_names()[co.feature]) + "," + num(c.report.importance[i]) +
                 tail.str() + "\n";
        }
        emit(ipath, csv);
        rep["importance_path"] = ipath;
      }
      if (c.feature_config == "WB" || c.feature_config == "top") {
        rep["selected_features"] = c.selected;
      }
      emit("reports/" + stem + ".json", rep.dump(2) + "\n");
    }
  }
  emit("accuracy.csv", acc);

  std::string fig6 = "task,stage,kind,name,value,config_digest,seed\n";
  for (const auto& t : r.contributions) {
    std::string csv = "driver" + band_names_row() + ",config_digest,seed\n";
    for (std::size_t d = 0; d < kBandCount; ++d) {
      csv += std::string(canonical_bands()[d].name);
      for (std::size_t k = 0; k < kBandCount; ++k) csv += "," + num(t.percent[d * kBandCount + k]);
      csv += tail.str() + "\n";
    }
    emit("fig5/" + t.task + "_" + t.stage + ".csv", csv);
    if (r.config.svg) {
      // presentation only, not part of the digest
      write_text(dir / ("svg/fig5_" + t.task + "_" + t.stage + ".svg"),
                 heatmap_svg(t.percent, t.task + " " + t.stage + " band-pair contribution (%)",
                             r.config.color_ramp));
    }
  }
  for (const auto& s : r.selections) {
    const std::string pre = s.task + "," + s.stage + ",";
    for (std::size_t c = 0; c < s.per_channel.size(); ++c) {
      fig6 += pre + "channel," + r.channel_names[c] + "," + std::to_string(s.per_channel[c]) + tail.str() + "\n";
    }
    for (std::size_t p = 0; p < kBandPairCount; ++p) {
      fig6 += pre + "band_pair," + BandPair::from_index(p).name() + "," +
              std::to_string(s.per_pair[p]) + tail.str() + "\n";
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      fig6 += pre + "feature," + std::string(feature_names()[f]) + "," +
              std::to_string(s.per_feature[f]) + tail.str() + "\n";
    }
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      fig6 += pre + "mean_importance," + std::string(feature_names()[f]) + "," +
              num(s.importance_per_feature[f]) + tail.str() + "\n";
    }
  }
  emit("fig6_selection.csv", fig6);

  const std::string test_header =
      "family,context,test,statistic,p_raw,p_fdr,effect_name,effect,cohens_d,n,normality_p,branch,"
      "config_digest,seed\n";
  auto test_row = [&](const std::string& family, const TestResult& t) {
    return "\"" + family + "\",\"" + t.context + "\"," + t.test_name + "," + num(t.statistic) + "," +
           num(t.p_raw) + "," + num(t.p_fdr) + "," + t.effect_name + "," + num(t.effect_size) +
           "," + num(t.cohens_d) + "," + std::to_string(t.n) + "," + num(t.normality_p) + "," +
           std::string(branch_name(t.branch)) + tail.str() + "\n";
  };
  if (r.stage_stats) {
    std::string csv = test_header;
    for (const auto& t : r.stage_stats->tests) csv += test_row("stage", t);
    for (const auto& f : r.stage_stats->friedman) {
      for (const auto& t : f.posthoc) csv += test_row("posthoc:" + f.context, t);
    }
    emit("stats/stage_tests.csv", csv);
    std::string fcsv = "context,chi2,df,p,kendalls_w,n,k,config_digest,seed\n";
    for (const auto& f : r.stage_stats->friedman) {
      fcsv += "\"" + f.context + "\"," + num(f.chi2) + "," + num(f.df) + "," + num(f.p) + "," +
              num(f.kendalls_w) + "," + std::to_string(f.n) + "," + std::to_string(f.k) +
              tail.str() + "\n";
    }
    emit("stats/friedman.csv", fcsv);
  }
  if (r.feature_stats) {
    std::string csv = test_header;
    for (const auto& t : r.feature_stats->tests) csv += test_row("feature", t);
    emit("stats/features.csv", csv);
  }

  std::sort(files.begin(), files.end());
  BundleInfo info;
  info.files = files;
  info.digest = bundle_digest(dir, files);

  json prov;
  prov["toolkit_version"] = kToolkitVersion;
  prov["config_digest"] = r.digest;
  prov["seed"] = r.config.seed;
  prov["config"] = config_to_json(r.config);
  json subj = json::array();
  for (const auto& s : r.subjects) subj.push_back({{"name", s.name}, {"seed", s.seed}});
  prov["subjects"] = subj;
  json hashes = json::object();
  for (const auto& f : files) hashes[f] = sha256_file(dir / f);
  prov["files"] = hashes;
  prov["bundle_digest"] = info.digest;
  write_json(dir / "provenance.json", prov);
  write_text(dir / "summary.md", summary_markdown(results));
  return info;
}

void render_report(const fs::path& bundle_dir, bool svg) {
  const auto results = read_json(bundle_dir / "results.json");
  write_text(bundle_dir / "table1.csv", table1_csv(results));
  write_text(bundle_dir / "summary.md", summary_markdown(results));
  if (!svg) return;
  const auto cfg = config_from_json(results.at("config"));
  for (const auto& t : results.at("contributions")) {
    std::array<double, kBandPairCount> pct{};
    const auto v = t.at("percent").get<std::vector<double>>();
    std::copy(v.begin(), v.end(), pct.begin());
    const std::string task = t.at("task"), stage = t.at("stage");
    write_text(bundle_dir / ("svg/fig5_" + task + "_" + stage + ".svg"),
               heatmap_svg(pct, task + " " + stage + " band-pair contribution (%)", cfg.color_ramp));
  }
}

}  // namespace bispec
