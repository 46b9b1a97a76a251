#include "bispec/stats.hpp"

#include "bispec/error.hpp"
#include "bispec/parallel.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace bispec {

namespace {

double poly(const double* c, int n, double x) {
  double r = c[n - 1];
  for (int i = n - 2; i >= 0; --i) r = r * x + c[i];
  return r;
}

double normal_sf(double z) {
  return boost::math::cdf(boost::math::complement(boost::math::normal(), z));
}

std::vector<double> differences(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::shape_mismatch, "paired test: unequal lengths");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw Error(Errc::data, "paired test: non-finite value");
    }
    d[i] = a[i] - b[i];
  }
  return d;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Average ranks (1-based) of v, plus sum over tie groups of t^3 - t.
std::vector<double> average_ranks(std::span<const double> v, double* tie_term = nullptr) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  double ties = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    const double t = static_cast<double>(j - i + 1);
    ties += t * t * t - t;
    i = j + 1;
  }
  if (tie_term) *tie_term = ties;
  return ranks;
}

}  // namespace

double ppnd7(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(Errc::invalid_argument, "ppnd7: p outside (0,1)");
  constexpr double split1 = 0.425, split2 = 5.0, const1 = 0.180625, const2 = 1.6;
  constexpr double a[] = {3.3871327179e+00, 5.0434271938e+01, 1.5929113202e+02, 5.9109374720e+01};
  constexpr double b[] = {1.0, 1.7895169469e+01, 7.8757757664e+01, 6.7187563600e+01};
  constexpr double c[] = {1.4234372777e+00, 2.7568153900e+00, 1.3067284816e+00, 1.7023821103e-01};
  constexpr double d[] = {1.0, 7.3700164250e-01, 1.2021132975e-01};
  constexpr double e[] = {6.6579051150e+00, 3.0812263860e+00, 4.2868294337e-01, 1.7337203997e-02};
  constexpr double f[] = {1.0, 2.4197894225e-01, 1.2258202635e-02};
  const double q = p - 0.5;
  if (std::abs(q) <= split1) {
    const double r = const1 - q * q;
    return q * poly(a, 4, r) / poly(b, 4, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= split2) {
    r -= const2;
    v = poly(c, 4, r) / poly(d, 3, r);
  } else {
    r -= split2;
    v = poly(e, 4, r) / poly(f, 3, r);
  }
  return q < 0.0 ? -v : v;
}

ShapiroResult shapiro_wilk(std::span<const double> data) {
  const std::size_t n = data.size();
  if (n < 3 || n > 5000) {
    throw Error(Errc::invalid_argument, "shapiro_wilk: need 3 <= n <= 5000, got " + std::to_string(n));
  }
  std::vector<double> x(data.begin(), data.end());
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(Errc::data, "shapiro_wilk: non-finite value");
  }
  std::sort(x.begin(), x.end());
  ShapiroResult res;
  if (x.back() - x.front() < 1e-19) {
    res.w = 1.0;
    res.p = 0.0;
    res.degenerate = true;
    return res;
  }

  constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  constexpr double g[] = {-2.273, 0.459};

  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    const double an25 = an + 0.25;
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = ppnd7((static_cast<double>(i + 1) - 0.375) / an25);
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) - m[0] / ssumm2;
    std::size_t first;
    double fac;
    if (n > 5) {
      first = 2;
      const double a2 = -m[1] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  // W is the squared correlation of the ordered sample with the
  // antisymmetric coefficient vector.
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= an;
  double ssx = 0.0, sax = 0.0, ssa = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double coef = 0.0;
    if (i < half) coef = -a[i];
    else if (n - 1 - i < half) coef = a[n - 1 - i];
    const double dx = x[i] - mean;
    ssx += dx * dx;
    sax += coef * dx;
    ssa += coef * coef;
  }
  double w = sax * sax / (ssa * ssx);
  w = std::min(w, 1.0);
  res.w = w;

  if (n == 3) {
    constexpr double pi6 = 1.90985931710274, stqr = 1.04719755119660;
    res.p = std::max(0.0, pi6 * (std::asin(std::sqrt(w)) - stqr));
    res.p = std::min(res.p, 1.0);
    return res;
  }
  double y = std::log(1.0 - w);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = poly(g, 2, an);
    if (y >= gamma) {
      res.p = 1e-99;
      return res;
    }
    y = -std::log(gamma - y);
    mu = poly(c3, 4, an);
    sigma = std::exp(poly(c4, 4, an));
  } else {
    const double xx = std::log(an);
    mu = poly(c5, 4, xx);
    sigma = std::exp(poly(c6, 3, xx));
  }
  res.p = normal_sf((y - mu) / sigma);
  return res;
}

std::string_view branch_name(Branch b) {
  switch (b) {
    case Branch::t_test: return "t-test";
    case Branch::wilcoxon: return "wilcoxon";
    case Branch::none: break;
  }
  return "none";
}

TestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  const auto d = differences(a, b);
  if (d.size() < 2) throw Error(Errc::invalid_argument, "paired_ttest: need n >= 2");
  TestResult r;
  r.test_name = "paired_t";
  r.effect_name = "cohens_d";
  r.branch = Branch::t_test;
  r.n = d.size();
  r.df = static_cast<double>(d.size() - 1);
  const double mean = mean_of(d);
  const double sd = sample_sd(d, mean);
  if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) {
    r.statistic = 0.0;
    r.p_raw = r.p_fdr = 1.0;
    r.effect_size = r.cohens_d = 0.0;
    r.note = "all differences zero";
    return r;
  }
  if (!(sd > 0.0)) {
    throw Error(Errc::undefined_effect, "paired_ttest: differences have zero variance");
  }
  r.statistic = mean / (sd / std::sqrt(static_cast<double>(d.size())));
  const boost::math::students_t dist(r.df);
  r.p_raw = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic))));
  r.p_fdr = r.p_raw;
  r.effect_size = r.cohens_d = mean / sd;
  return r;
}

std::vector<double> signed_rank_null(std::span<const long> doubled_ranks) {
  long total = 0;
  for (long r : doubled_ranks) total += r;
  std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
  count[0] = 1.0;
  long reach = 0;
  for (long r : doubled_ranks) {
    for (long s = reach; s >= 0; --s) {
      if (count[s] != 0.0) count[s + r] += count[s];
    }
    reach += r;
  }
  const double scale = std::ldexp(1.0, -static_cast<int>(doubled_ranks.size()));
  for (auto& c : count) c *= scale;
  return count;
}

TestResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  const auto d_all = differences(a, b);
  std::vector<double> d;
  for (double v : d_all) {
    if (v != 0.0) d.push_back(v);
  }
  if (d.empty()) throw Error(Errc::no_signal, "wilcoxon: all differences are zero");

  TestResult r;
  r.test_name = "wilcoxon_signed_rank";
  r.effect_name = "rank_biserial";
  r.branch = Branch::wilcoxon;
  r.n = d_all.size();
  const std::size_t m = d.size();
  std::vector<double> mags(m);
  for (std::size_t i = 0; i < m; ++i) mags[i] = std::abs(d[i]);
  double tie_term = 0.0;
  const auto ranks = average_ranks(mags, &tie_term);

  double w_plus = 0.0, w_minus = 0.0;
  std::vector<long> doubled(m);
  long w_plus2 = 0;
  for (std::size_t i = 0; i < m; ++i) {
    doubled[i] = std::lround(2.0 * ranks[i]);
    if (d[i] > 0) {
      w_plus += ranks[i];
      w_plus2 += doubled[i];
    } else {
      w_minus += ranks[i];
    }
  }
  r.statistic = std::min(w_plus, w_minus);
  r.effect_size = (w_plus - w_minus) / (w_plus + w_minus);

  if (m <= kWilcoxonExactMax) {
    const auto null = signed_rank_null(doubled);
    double lower = 0.0, upper = 0.0;
    for (std::size_t s = 0; s < null.size(); ++s) {
      if (static_cast<long>(s) <= w_plus2) lower += null[s];
      if (static_cast<long>(s) >= w_plus2) upper += null[s];
    }
    r.p_raw = std::min(1.0, 2.0 * std::min(lower, upper));
    r.note = "exact";
  } else {
    const double mm = static_cast<double>(m);
    const double mean = mm * (mm + 1.0) / 4.0;
    const double var = mm * (mm + 1.0) * (2.0 * mm + 1.0) / 24.0 - tie_term / 48.0;
    double diff = w_plus - mean;
    if (diff > 0) diff = std::max(0.0, diff - 0.5);
    else if (diff < 0) diff = std::min(0.0, diff + 0.5);
    const double z = var > 0.0 ? diff / std::sqrt(var) : 0.0;
    r.p_raw = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
    r.note = "normal approximation";
  }
  r.p_fdr = r.p_raw;
  return r;
}

TestResult paired_comparison(std::span<const double> a, std::span<const double> b) {
  const auto d = differences(a, b);
  const auto sw = shapiro_wilk(d);
  const bool all_zero = std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; });
  const double mean = mean_of(d);
  const double sd = sample_sd(d, mean);
  const double cohens_d =
      all_zero ? 0.0 : (sd > 0.0 ? mean / sd : std::numeric_limits<double>::quiet_NaN());

  TestResult r;
  if (sw.p > 0.05) {
    r = paired_ttest(a, b);
  } else if (all_zero) {
    r.test_name = "wilcoxon_signed_rank";
    r.effect_name = "rank_biserial";
    r.branch = Branch::wilcoxon;
    r.n = d.size();
    r.statistic = 0.0;
    r.p_raw = r.p_fdr = 1.0;
    r.effect_size = 0.0;
    r.note = "all differences zero";
  } else {
    r = wilcoxon_signed_rank(a, b);
  }
  r.cohens_d = cohens_d;
  r.normality_p = sw.p;
  r.normality_degenerate = sw.degenerate;
  return r;
}

BhResult bh_fdr(std::span<const double> p, double q) {
  const std::size_t m = p.size();
  BhResult out;
  out.adjusted.assign(m, 1.0);
  out.reject.assign(m, false);
  if (m == 0) return out;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::invalid_argument, "bh_fdr: p outside [0,1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return p[i] < p[j]; });
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const double adj = p[order[k]] * static_cast<double>(m) / static_cast<double>(k + 1);
    running = std::min(running, adj);
    out.adjusted[order[k]] = std::min(1.0, running);
  }
  for (std::size_t i = 0; i < m; ++i) out.reject[i] = out.adjusted[i] <= q;
  return out;
}

FriedmanResult friedman(std::span<const double> values, std::size_t n, std::size_t k, double alpha,
                        const std::vector<std::string>& condition_names) {
  if (k < 3) {
    throw Error(Errc::invalid_argument, "friedman: k < 3 conditions; use a paired test instead");
  }
  if (n < 2) throw Error(Errc::invalid_argument, "friedman: need at least 2 subjects");
  if (values.size() != n * k) throw Error(Errc::shape_mismatch, "friedman: matrix size");
  if (!condition_names.empty() && condition_names.size() != k) {
    throw Error(Errc::shape_mismatch, "friedman: condition name count");
  }

  FriedmanResult res;
  res.n = n;
  res.k = k;
  res.df = static_cast<double>(k - 1);
  std::vector<double> rank_sum(k, 0.0);
  double ties = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = 0.0;
    const auto ranks = average_ranks(values.subspan(i * k, k), &t);
    ties += t;
    for (std::size_t j = 0; j < k; ++j) rank_sum[j] += ranks[j];
  }
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  double ss = 0.0;
  for (double rs : rank_sum) {
    const double dev = rs / nn - (kk + 1.0) / 2.0;
    ss += dev * dev;
  }
  double chi2 = 12.0 * nn / (kk * (kk + 1.0)) * ss;
  res.tie_correction = 1.0 - ties / (nn * kk * (kk * kk - 1.0));
  if (res.tie_correction > 0.0) {
    chi2 /= res.tie_correction;
  } else {
    chi2 = 0.0;  // every row fully tied
  }
  res.chi2 = chi2;
  res.p = chi2 > 0.0
              ? boost::math::cdf(boost::math::complement(boost::math::chi_squared(res.df), chi2))
              : 1.0;
  res.kendalls_w = std::clamp(chi2 / (nn * (kk - 1.0)), 0.0, 1.0);

  if (res.p < alpha) {
    std::vector<double> raw;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        std::vector<double> a(n), b(n);
        for (std::size_t s = 0; s < n; ++s) {
          a[s] = values[s * k + i];
          b[s] = values[s * k + j];
        }
        TestResult t;
        try {
          t = wilcoxon_signed_rank(a, b);
        } catch (const Error& e) {
          if (e.code() != Errc::no_signal) throw;
          t.test_name = "wilcoxon_signed_rank";
          t.effect_name = "rank_biserial";
          t.branch = Branch::wilcoxon;
          t.n = n;
          t.note = "all differences zero";
        }
        const std::string ni = condition_names.empty() ? std::to_string(i) : condition_names[i];
        const std::string nj = condition_names.empty() ? std::to_string(j) : condition_names[j];
        t.context = ni + " vs " + nj;
        raw.push_back(t.p_raw);
        res.posthoc.push_back(std::move(t));
      }
    }
    const auto adj = bh_fdr(raw);
    for (std::size_t i = 0; i < raw.size(); ++i) res.posthoc[i].p_fdr = adj.adjusted[i];
  }
  return res;
}

SuiteOutput stage_comparison_suite(const std::vector<AccuracyRecord>& records,
                                   const std::string& first_stage,
                                   const std::string& second_stage) {
  SuiteOutput out;
  std::map<std::tuple<std::string, std::string, std::string, std::size_t>, double> cell;
  std::set<std::size_t> subjects;
  std::vector<std::string> tasks;
  for (const auto& r : records) {
    cell[{r.task, r.stage, r.config, r.subject}] = r.value;
    subjects.insert(r.subject);
    if (std::find(tasks.begin(), tasks.end(), r.task) == tasks.end()) tasks.push_back(r.task);
  }
  std::vector<std::string> bands;
  for (const auto& b : canonical_bands()) bands.emplace_back(b.name);

  for (const auto& task : tasks) {
    std::vector<std::size_t> family;
    for (const auto& band : bands) {
      std::vector<double> first, second;
      for (auto s : subjects) {
        auto a = cell.find({task, first_stage, band, s});
        auto b = cell.find({task, second_stage, band, s});
        if (a == cell.end() || b == cell.end()) {
          out.warnings.push_back("missing " + task + "/" + band + " for subject " +
                                 std::to_string(s) + "; excluded");
          continue;
        }
        first.push_back(a->second);
        second.push_back(b->second);
      }
      if (first.size() < 3) {
        out.warnings.push_back(task + "/" + band + ": fewer than 3 complete subjects; skipped");
        continue;
      }
      TestResult t = paired_comparison(second, first);
      t.context = task + "," + band + "," + second_stage + "-" + first_stage;
      family.push_back(out.tests.size());
      out.tests.push_back(std::move(t));
    }
    std::vector<double> raw;
    for (auto i : family) raw.push_back(out.tests[i].p_raw);
    const auto adj = bh_fdr(raw);
    for (std::size_t i = 0; i < family.size(); ++i) out.tests[family[i]].p_fdr = adj.adjusted[i];

    for (const auto& stage : {first_stage, second_stage}) {
      std::vector<double> matrix;
      std::size_t n = 0;
      for (auto s : subjects) {
        std::vector<double> row;
        for (const auto& band : bands) {
          auto it = cell.find({task, stage, band, s});
          if (it == cell.end()) break;
          row.push_back(it->second);
        }
        if (row.size() != bands.size()) continue;
        matrix.insert(matrix.end(), row.begin(), row.end());
        ++n;
      }
      if (n < 2) {
        out.warnings.push_back(task + "/" + stage + ": fewer than 2 subjects for Friedman");
        continue;
      }
      auto f = friedman(matrix, n, bands.size(), 0.05, bands);
      f.context = task + "," + stage;
      out.friedman.push_back(std::move(f));
    }
  }
  return out;
}

FeatureLevelOutput feature_level_suite(std::span<const double> first_means,
                                       std::span<const double> second_means,
                                       std::size_t n_subjects, std::size_t n_features, double q,
                                       unsigned threads) {
  if (n_subjects < 3) throw Error(Errc::invalid_argument, "feature suite: need >= 3 subjects");
  if (first_means.size() != n_subjects * n_features || second_means.size() != first_means.size()) {
    throw Error(Errc::shape_mismatch, "feature suite: mean matrix size");
  }
  FeatureLevelOutput out;
  out.q = q;
  out.tests.resize(n_features);
  parallel_for(n_features, threads, [&](std::size_t f) {
    std::vector<double> a(n_subjects), b(n_subjects);
    for (std::size_t s = 0; s < n_subjects; ++s) {
      a[s] = first_means[s * n_features + f];
      b[s] = second_means[s * n_features + f];
    }
    out.tests[f] = paired_comparison(b, a);
    out.tests[f].context = std::to_string(f);
  });
  std::vector<double> raw(n_features);
  for (std::size_t f = 0; f < n_features; ++f) raw[f] = out.tests[f].p_raw;
  const auto adj = bh_fdr(raw, q);
  for (std::size_t f = 0; f < n_features; ++f) {
    out.tests[f].p_fdr = adj.adjusted[f];
    if (adj.adjusted[f] < q) out.survivors.push_back(f);
  }
  return out;
}

namespace {

std::vector<double> subject_means(const std::vector<FeatureTensor>& tensors) {
  const std::size_t width = tensors.front().row_width();
  std::vector<double> means(tensors.size() * width, 0.0);
  for (std::size_t s = 0; s < tensors.size(); ++s) {
    const auto& t = tensors[s];
    if (t.row_width() != width || t.n_trials == 0) {
      throw Error(Errc::shape_mismatch, "feature suite: tensor layouts differ");
    }
    for (std::size_t f = 0; f < width; ++f) {
      double sum = 0.0;
      for (std::size_t tr = 0; tr < t.n_trials; ++tr) sum += t.values[tr * width + f];
      means[s * width + f] = sum / static_cast<double>(t.n_trials);
    }
  }
  return means;
}

}  // namespace

FeatureLevelOutput feature_level_suite(const std::vector<FeatureTensor>& first,
                                       const std::vector<FeatureTensor>& second, double q,
                                       unsigned threads) {
  if (first.size() != second.size() || first.empty()) {
    throw Error(Errc::shape_mismatch, "feature suite: subject counts differ");
  }
  const auto a = subject_means(first);
  const auto b = subject_means(second);
  if (a.size() != b.size()) throw Error(Errc::shape_mismatch, "feature suite: layouts differ");
  const std::size_t width = first.front().row_width();
  auto out = feature_level_suite(a, b, first.size(), width, q, threads);
  const auto& names = first.front().channel_names;
  for (std::size_t f = 0; f < width; ++f) {
    const auto c = FeatureIndex::coord(f);
    const std::string ch = c.channel < names.size() ? names[c.channel] : std::to_string(c.channel);
    out.tests[f].context = ch + "," + BandPair::from_index(c.pair).name() + "," +
                           std::string(feature_names()[c.feature]);
  }
  return out;
}

}  // namespace bispec
