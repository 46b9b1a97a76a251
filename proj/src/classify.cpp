#include "bispec/classify.hpp"

#include "bispec/error.hpp"
#include "bispec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace bispec {

void LabeledDesign::validate() const {
  if (x.rows != y.size()) throw Error(Errc::shape_mismatch, "design: rows differ from label count");
  if (x.data.size() != x.rows * x.cols) throw Error(Errc::shape_mismatch, "design: data size");
  if (x.index.width() != x.cols) throw Error(Errc::shape_mismatch, "design: index width");
  if (!groups.empty() && groups.size() != y.size()) {
    throw Error(Errc::shape_mismatch, "design: group count differs from label count");
  }
  std::vector<int> classes(y.begin(), y.end());
  std::sort(classes.begin(), classes.end());
  if (std::unique(classes.begin(), classes.end()) - classes.begin() < 2) {
    throw Error(Errc::label, "design: fewer than two classes");
  }
  for (double v : x.data) {
    if (std::isnan(v)) throw Error(Errc::data, "design: NaN feature value");
  }
}

std::vector<std::size_t> stratified_kfold(std::span<const int> y, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::invalid_argument, "stratified_kfold: k must be >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  for (const auto& [label, idx] : by_class) {
    if (idx.size() < k) {
      throw Error(Errc::stratification, "stratified_kfold: class " + std::to_string(label) +
                                            " has " + std::to_string(idx.size()) +
                                            " members, fewer than k=" + std::to_string(k));
    }
  }
  std::vector<std::size_t> fold(y.size(), 0);
  std::size_t next = 0;
  for (auto& [label, idx] : by_class) {
    auto rng = Rng::derive(seed, {static_cast<std::uint64_t>(static_cast<std::int64_t>(label))});
    rng.shuffle(std::span<std::size_t>(idx));
    for (auto i : idx) {
      fold[i] = next;
      next = (next + 1) % k;
    }
  }
  return fold;
}

double CvReport::mean_train_acc() const {
  double s = 0.0;
  for (const auto& f : folds) s += f.train_acc;
  return folds.empty() ? 0.0 : s / static_cast<double>(folds.size());
}

double CvReport::mean_test_acc() const {
  double s = 0.0;
  for (const auto& f : folds) s += f.test_acc;
  return folds.empty() ? 0.0 : s / static_cast<double>(folds.size());
}

namespace {

double rows_accuracy(const ForestModel& model, const DesignMatrix& x, std::span<const int> y,
                     std::span<const std::size_t> rows) {
  const auto pred = model.predict(x, rows);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) hit += pred[i] == y[rows[i]];
  return static_cast<double>(hit) / static_cast<double>(rows.size());
}

}  // namespace

CvReport cross_validate(const LabeledDesign& design, const CvParams& params, std::uint64_t seed) {
  design.validate();
  CvReport report;
  report.seed = seed;
  report.config_digest = params.config_digest;
  report.index = design.x.index;
  report.fold_of = stratified_kfold(design.y, params.k, mix_seed(seed, {0xf0}));
  if (params.importance_repeats > 0) report.importance.assign(design.x.cols, 0.0);

  for (std::size_t k = 0; k < params.k; ++k) {
    FoldResult fr;
    for (std::size_t i = 0; i < design.y.size(); ++i) {
      (report.fold_of[i] == k ? fr.test_rows : fr.train_rows).push_back(i);
    }
    const DesignMatrix* x = &design.x;
    DesignMatrix scaled;
    if (params.mode == StandardizeMode::train_only) {
      fr.standardizer = fit_standardizer(design.x, fr.train_rows);
      scaled = design.x;
      apply_standardizer(*fr.standardizer, scaled);
      x = &scaled;
    }
    const auto model = train_forest(*x, design.y, fr.train_rows, params.forest,
                                    mix_seed(seed, {0xf1, k}), params.threads);
    fr.degenerate = model.degenerate;
    fr.forest_fingerprint = model.fingerprint();
    fr.train_acc = rows_accuracy(model, *x, design.y, fr.train_rows);
    fr.test_acc = rows_accuracy(model, *x, design.y, fr.test_rows);
    if (params.importance_repeats > 0) {
      const auto imp = permutation_importance(model, *x, design.y, fr.train_rows,
                                              params.importance_repeats, mix_seed(seed, {0xf2}), k,
                                              params.threads, params.importance_scoring);
      for (std::size_t c = 0; c < imp.size(); ++c) report.importance[c] += imp[c];
    }
    report.folds.push_back(std::move(fr));
  }
  for (auto& v : report.importance) v /= static_cast<double>(params.k);
  return report;
}

Selection select_top(std::span<const double> importance, const FeatureIndex& index,
                     double threshold) {
  if (importance.size() != index.width()) {
    throw Error(Errc::shape_mismatch, "select_top: importance width differs from index");
  }
  Selection sel;
  for (std::size_t c = 0; c < importance.size(); ++c) {
    if (!std::isfinite(importance[c])) throw Error(Errc::data, "select_top: non-finite importance");
    if (importance[c] > threshold) sel.positions.push_back(c);
  }
  std::sort(sel.positions.begin(), sel.positions.end(), [&](std::size_t a, std::size_t b) {
    if (importance[a] != importance[b]) return importance[a] > importance[b];
    return index.columns[a] < index.columns[b];
  });
  for (auto c : sel.positions) {
    sel.flat_ids.push_back(index.columns[c]);
    sel.scores.push_back(importance[c]);
  }
  sel.empty = sel.positions.empty();
  return sel;
}

const std::vector<TaskSpec>& default_tasks() {
  static const std::vector<TaskSpec> tasks{
      {"0v1", {0, 1}}, {"0v2", {0, 2}}, {"2v1", {2, 1}}, {"multi", {0, 1, 2}}};
  return tasks;
}

std::vector<std::string> feature_config_names() {
  std::vector<std::string> names;
  for (const auto& b : canonical_bands()) names.emplace_back(b.name);
  names.emplace_back("WB");
  names.emplace_back("top");
  return names;
}

std::vector<SuiteCell> run_task_suite(const std::vector<FeatureTensor>& stages,
                                      const SuiteParams& params, std::uint64_t seed) {
  if (stages.empty()) throw Error(Errc::invalid_argument, "task suite: no stage tensors");
  for (const auto& t : stages) {
    if (t.n_channels != stages.front().n_channels || t.labels != stages.front().labels) {
      throw Error(Errc::shape_mismatch, "task suite: stage tensors disagree in layout or labels");
    }
  }

  std::vector<SuiteCell> cells;
  for (std::size_t si = 0; si < stages.size(); ++si) {
    FeatureTensor tensor = stages[si];
    if (params.cv.mode == StandardizeMode::global) {
      apply_standardizer(fit_standardizer(tensor), tensor);
    }
    const DesignMatrix full = flatten(tensor);

    for (std::size_t ti = 0; ti < params.tasks.size(); ++ti) {
      const auto& task = params.tasks[ti];
      std::vector<std::size_t> rows;
      for (std::size_t r = 0; r < tensor.labels.size(); ++r) {
        if (std::find(task.classes.begin(), task.classes.end(), tensor.labels[r]) !=
            task.classes.end()) {
          rows.push_back(r);
        }
      }
      const bool present = std::all_of(task.classes.begin(), task.classes.end(), [&](int c) {
        return std::find(tensor.labels.begin(), tensor.labels.end(), c) != tensor.labels.end();
      });
      if (!present) continue;

      LabeledDesign base;
      base.x = full.select_rows(rows);
      for (auto r : rows) base.y.push_back(tensor.labels[r]);

      auto run = [&](const std::string& config, const DesignMatrix& x, std::size_t config_id,
                     std::size_t repeats) {
        LabeledDesign d{x, base.y, {}};
        CvParams cv = params.cv;
        cv.importance_repeats = repeats;
        SuiteCell cell{task.name, tensor.stage, config, {}, {}, false};
        try {
          cell.report = cross_validate(d, cv, mix_seed(seed, {si, ti, config_id}));
        } catch (const Error& e) {
          throw Error(e.code(), "task " + task.name + ", stage " + tensor.stage + ", " + config +
                                    ": " + e.what());
        }
        return cell;
      };

      for (std::size_t b = 0; b < kBandCount; ++b) {
        const auto slice = full.index.driver_slice(static_cast<Band>(b));
        std::vector<std::size_t> pos(slice.columns.begin(), slice.columns.end());
        cells.push_back(run(std::string(canonical_bands()[b].name), base.x.select_columns(pos), b, 0));
      }

      const std::size_t repeats =
          params.cv.importance_repeats > 0 ? params.cv.importance_repeats : 10;
      auto wb = run("WB", base.x, kBandCount, repeats);
      const auto sel = select_top(wb.report.importance, wb.report.index);
      wb.selected = sel.flat_ids;
      wb.selection_empty = sel.empty;
      cells.push_back(wb);

      if (params.top_rerun && task.classes.size() == 2) {
        std::vector<std::size_t> pos = sel.positions;
        if (sel.empty) {
          pos.resize(base.x.cols);
          std::iota(pos.begin(), pos.end(), std::size_t{0});
        }
        auto top = run("top", base.x.select_columns(pos), kBandCount + 1, 0);
        top.selected = sel.flat_ids;
        top.selection_empty = sel.empty;
        cells.push_back(std::move(top));
      }
    }
  }
  return cells;
}

}  // namespace bispec
