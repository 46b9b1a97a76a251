#include "bispec/forest.hpp"

#include "bispec/error.hpp"
#include "bispec/parallel.hpp"
#include "bispec/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace bispec {

std::size_t ForestParams::resolved_mtry(std::size_t p) const {
  if (mtry > 0) return std::min(mtry, p);
  auto m = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p))));
  return std::max<std::size_t>(1, m);
}

int Tree::predict(std::span<const double> row) const {
  int n = 0;
  while (nodes[n].feature >= 0) {
    const auto& node = nodes[n];
    n = row[node.feature] <= node.threshold ? node.left : node.right;
  }
  return nodes[n].leaf_class;
}

int Tree::predict_override(std::span<const double> row, std::size_t feature, double value) const {
  int n = 0;
  while (nodes[n].feature >= 0) {
    const auto& node = nodes[n];
    const double v = static_cast<std::size_t>(node.feature) == feature ? value : row[node.feature];
    n = v <= node.threshold ? node.left : node.right;
  }
  return nodes[n].leaf_class;
}

bool Tree::uses(std::size_t feature) const {
  return std::binary_search(features_used.begin(), features_used.end(), feature);
}

bool Tree::saw(std::size_t row) const {
  return std::binary_search(in_bag.begin(), in_bag.end(), row);
}

std::string_view importance_scoring_name(ImportanceScoring s) {
  return s == ImportanceScoring::out_of_bag ? "oob" : "all-trees";
}

int vote_winner(std::span<const std::size_t> votes) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < votes.size(); ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  return static_cast<int>(best);
}

int ForestModel::predict_row(std::span<const double> row) const {
  if (degenerate || trees.empty()) return classes.front();
  std::vector<std::size_t> votes(classes.size(), 0);
  for (const auto& t : trees) ++votes[t.predict(row)];
  return classes[vote_winner(votes)];
}

std::vector<int> ForestModel::predict(const DesignMatrix& x) const {
  std::vector<int> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) out[r] = predict_row(x.row(r));
  return out;
}

std::vector<int> ForestModel::predict(const DesignMatrix& x, std::span<const std::size_t> rows) const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(predict_row(x.row(r)));
  return out;
}

std::uint64_t ForestModel::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (int c : classes) mix(static_cast<std::uint64_t>(c));
  for (const auto& t : trees) {
    mix(t.nodes.size());
    for (const auto& n : t.nodes) {
      mix(static_cast<std::uint64_t>(n.feature));
      mix(std::bit_cast<std::uint64_t>(n.threshold));
      mix(static_cast<std::uint64_t>(n.left));
      mix(static_cast<std::uint64_t>(n.right));
      mix(static_cast<std::uint64_t>(n.leaf_class));
    }
  }
  return h;
}

namespace {

struct Grower {
  const DesignMatrix& x;
  const std::vector<int>& cls;  // class index per design row
  std::size_t n_classes;
  const ForestParams& params;
  std::size_t mtry;
  Rng rng;
  Tree tree;
  std::vector<std::size_t> feat_order;
  std::vector<std::pair<double, int>> scratch;

  int grow(std::vector<std::size_t>& samples, std::size_t depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    std::vector<std::size_t> counts(n_classes, 0);
    for (auto s : samples) ++counts[cls[s]];
    const int winner = vote_winner(counts);
    tree.nodes[id].counts = counts;
    tree.nodes[id].leaf_class = winner;

    const std::size_t m = samples.size();
    const bool pure = counts[winner] == m;
    if (pure || m < 2 * params.min_leaf || (params.max_depth > 0 && depth >= params.max_depth)) {
      return id;
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = -1.0;
    const std::size_t p = feat_order.size();
    std::size_t visited = 0;
    for (std::size_t i = 0; i < p && visited < mtry; ++i) {
      const std::size_t j = i + rng.below(p - i);
      std::swap(feat_order[i], feat_order[j]);
      const std::size_t f = feat_order[i];

      scratch.clear();
      for (auto s : samples) scratch.emplace_back(x.at(s, f), cls[s]);
      std::sort(scratch.begin(), scratch.end());
      if (scratch.front().first == scratch.back().first) continue;  // constant here
      ++visited;

      std::vector<double> left(n_classes, 0.0), right(n_classes, 0.0);
      for (const auto& [v, c] : scratch) right[c] += 1.0;
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (double r : right) right_sq += r * r;
      for (std::size_t k = 0; k + 1 < m; ++k) {
        const int c = scratch[k].second;
        left_sq += 2.0 * left[c] + 1.0;
        left[c] += 1.0;
        right_sq -= 2.0 * right[c] - 1.0;
        right[c] -= 1.0;
        const double a = scratch[k].first;
        const double b = scratch[k + 1].first;
        if (!(a < b)) continue;
        const std::size_t nl = k + 1;
        const std::size_t nr = m - nl;
        if (nl < params.min_leaf || nr < params.min_leaf) continue;
        const double t = a + (b - a) / 2.0;
        if (!(t > a && t < b)) continue;  // adjacent doubles
        const double score = left_sq / static_cast<double>(nl) + right_sq / static_cast<double>(nr);
        if (score > best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = t;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> lo, hi;
    for (auto s : samples) {
      (x.at(s, best_feature) <= best_threshold ? lo : hi).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();
    tree.nodes[id].feature = best_feature;
    tree.nodes[id].threshold = best_threshold;
    const int l = grow(lo, depth + 1);
    tree.nodes[id].left = l;
    const int r = grow(hi, depth + 1);
    tree.nodes[id].right = r;
    return id;
  }
};

}  // namespace

ForestModel train_forest(const DesignMatrix& x, std::span<const int> y,
                         std::span<const std::size_t> rows, const ForestParams& params,
                         std::uint64_t seed, unsigned threads) {
  if (y.size() != x.rows) throw Error(Errc::shape_mismatch, "forest: label count differs from rows");
  if (rows.empty()) throw Error(Errc::invalid_argument, "forest: no training rows");
  if (x.cols == 0) throw Error(Errc::invalid_argument, "forest: no features");
  if (params.n_trees == 0 || params.min_leaf == 0) {
    throw Error(Errc::invalid_argument, "forest: n_trees and min_leaf must be > 0");
  }
  for (auto r : rows) {
    for (double v : x.row(r)) {
      if (std::isnan(v)) throw Error(Errc::data, "forest: NaN in training rows");
    }
  }

  ForestModel model;
  model.params = params;
  model.seed = seed;
  model.n_features = x.cols;
  for (auto r : rows) model.classes.push_back(y[r]);
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() == 1) {
    model.degenerate = true;
    return model;
  }

  std::vector<int> cls(x.rows, 0);
  for (auto r : rows) {
    cls[r] = static_cast<int>(std::lower_bound(model.classes.begin(), model.classes.end(), y[r]) -
                              model.classes.begin());
  }

  const std::size_t mtry = params.resolved_mtry(x.cols);
  model.trees.resize(params.n_trees);
  parallel_for(params.n_trees, threads, [&](std::size_t t) {
    Grower g{x, cls, model.classes.size(), params, mtry, Rng::derive(seed, {t}), {}, {}, {}};
    g.feat_order.resize(x.cols);
    std::iota(g.feat_order.begin(), g.feat_order.end(), std::size_t{0});
    std::vector<std::size_t> sample(rows.size());
    for (auto& s : sample) s = rows[g.rng.below(rows.size())];
    g.tree.in_bag = sample;
    std::sort(g.tree.in_bag.begin(), g.tree.in_bag.end());
    g.tree.in_bag.erase(std::unique(g.tree.in_bag.begin(), g.tree.in_bag.end()), g.tree.in_bag.end());
    g.grow(sample, 0);
    for (const auto& n : g.tree.nodes) {
      if (n.feature >= 0) g.tree.features_used.push_back(static_cast<std::size_t>(n.feature));
    }
    auto& fu = g.tree.features_used;
    std::sort(fu.begin(), fu.end());
    fu.erase(std::unique(fu.begin(), fu.end()), fu.end());
    model.trees[t] = std::move(g.tree);
  });
  return model;
}

ForestModel train_forest(const DesignMatrix& x, std::span<const int> y, const ForestParams& params,
                         std::uint64_t seed, unsigned threads) {
  std::vector<std::size_t> rows(x.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return train_forest(x, y, rows, params, seed, threads);
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw Error(Errc::shape_mismatch, "accuracy: size mismatch or empty");
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

namespace {

std::vector<std::size_t> shuffled_positions(std::size_t m, std::uint64_t seed, std::size_t fold,
                                            std::size_t flat_id, std::size_t repeat) {
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto rng = Rng::derive(seed, {fold, flat_id, repeat});
  rng.shuffle(std::span<std::size_t>(perm));
  return perm;
}

void check_importance_args(const ForestModel& model, const DesignMatrix& x, std::span<const int> y,
                           std::span<const std::size_t> rows) {
  if (y.size() != x.rows) throw Error(Errc::shape_mismatch, "importance: label count differs");
  if (x.cols != model.n_features) throw Error(Errc::shape_mismatch, "importance: width differs");
  if (rows.empty()) throw Error(Errc::invalid_argument, "importance: no rows");
}

bool votes_on(const Tree& t, std::size_t row, ImportanceScoring scoring) {
  return scoring == ImportanceScoring::all_trees || !t.saw(row);
}

// Class index per row, -1 for labels the model never saw.
std::vector<int> class_indices(const ForestModel& model, std::span<const int> y,
                               std::span<const std::size_t> rows) {
  std::vector<int> out(rows.size(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto it = std::lower_bound(model.classes.begin(), model.classes.end(), y[rows[i]]);
    if (it != model.classes.end() && *it == y[rows[i]]) {
      out[i] = static_cast<int>(it - model.classes.begin());
    }
  }
  return out;
}

}  // namespace

std::vector<double> permutation_importance(const ForestModel& model, const DesignMatrix& x,
                                           std::span<const int> y,
                                           std::span<const std::size_t> rows, std::size_t repeats,
                                           std::uint64_t seed, std::size_t fold, unsigned threads,
                                           ImportanceScoring scoring) {
  check_importance_args(model, x, y, rows);
  std::vector<double> importance(x.cols, 0.0);
  if (model.degenerate || repeats == 0) return importance;

  const std::size_t m = rows.size();
  const std::size_t nc = model.classes.size();
  const std::size_t nt = model.trees.size();
  const auto truth = class_indices(model, y, rows);

  // base_pred = -1 where the tree does not vote on the row
  std::vector<int> base_pred(nt * m, -1);
  std::vector<std::size_t> base_votes(m * nc, 0);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      if (!votes_on(model.trees[t], rows[i], scoring)) continue;
      const int c = model.trees[t].predict(x.row(rows[i]));
      base_pred[t * m + i] = c;
      ++base_votes[i * nc + c];
    }
  }
  std::size_t base_correct = 0;
  for (std::size_t i = 0; i < m; ++i) {
    base_correct += vote_winner({base_votes.data() + i * nc, nc}) == truth[i];
  }

  std::vector<std::vector<std::size_t>> users(x.cols);
  for (std::size_t t = 0; t < nt; ++t) {
    for (auto f : model.trees[t].features_used) users[f].push_back(t);
  }

  parallel_for(x.cols, threads, [&](std::size_t f) {
    if (users[f].empty()) return;
    const std::size_t flat_id = x.index.columns.empty() ? f : x.index.columns[f];
    double total = 0.0;
    std::vector<std::size_t> votes;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto perm = shuffled_positions(m, seed, fold, flat_id, r);
      votes = base_votes;
      for (auto t : users[f]) {
        const auto& tree = model.trees[t];
        for (std::size_t i = 0; i < m; ++i) {
          const int old = base_pred[t * m + i];
          if (old < 0) continue;
          const int c = tree.predict_override(x.row(rows[i]), f, x.at(rows[perm[i]], f));
          if (c != old) {
            --votes[i * nc + old];
            ++votes[i * nc + c];
          }
        }
      }
      std::size_t correct = 0;
      for (std::size_t i = 0; i < m; ++i) {
        correct += vote_winner({votes.data() + i * nc, nc}) == truth[i];
      }
      total += (static_cast<double>(base_correct) - static_cast<double>(correct)) /
               static_cast<double>(m);
    }
    importance[f] = total / static_cast<double>(repeats);
  });
  return importance;
}

std::vector<double> permutation_importance_naive(const ForestModel& model, const DesignMatrix& x,
                                                 std::span<const int> y,
                                                 std::span<const std::size_t> rows,
                                                 std::size_t repeats, std::uint64_t seed,
                                                 std::size_t fold, ImportanceScoring scoring) {
  check_importance_args(model, x, y, rows);
  std::vector<double> importance(x.cols, 0.0);
  if (model.degenerate || repeats == 0) return importance;
  const std::size_t m = rows.size();
  const auto truth = class_indices(model, y, rows);

  // Forest vote for design row `r`, whose values are `row`.
  auto vote = [&](std::size_t r, std::span<const double> row) {
    std::vector<std::size_t> votes(model.classes.size(), 0);
    for (const auto& t : model.trees) {
      if (votes_on(t, r, scoring)) ++votes[t.predict(row)];
    }
    return vote_winner(votes);
  };

  double base = 0.0;
  for (std::size_t i = 0; i < m; ++i) base += vote(rows[i], x.row(rows[i])) == truth[i];

  for (std::size_t f = 0; f < x.cols; ++f) {
    const std::size_t flat_id = x.index.columns.empty() ? f : x.index.columns[f];
    double total = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto perm = shuffled_positions(m, seed, fold, flat_id, r);
      double hits = 0.0;
      std::vector<double> row;
      for (std::size_t i = 0; i < m; ++i) {
        auto src = x.row(rows[i]);
        row.assign(src.begin(), src.end());
        row[f] = x.at(rows[perm[i]], f);
        hits += vote(rows[i], row) == truth[i];
      }
      total += (base - hits) / static_cast<double>(m);
    }
    importance[f] = total / static_cast<double>(repeats);
  }
  return importance;
}

}  // namespace bispec
