// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails.

#include "bispec/bands.hpp"
#include "bispec/bispectrum.hpp"
#include "bispec/classify.hpp"
#include "bispec/config.hpp"
#include "bispec/features.hpp"
#include "bispec/io.hpp"
#include "bispec/pipeline.hpp"
#include "bispec/report.hpp"
#include "bispec/rng.hpp"
#include "bispec/stats.hpp"
#include "bispec/synth.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace bispec;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kSeed = 20240601;

struct Check {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (detail.tellp() > 0) detail << "; ";
    detail << (ok ? "" : "FAILED ") << what;
  }
};

int failures = 0;

void criterion(int id, const char* title, double time_limit_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_limit_s > 0.0) {
    std::ostringstream t;
    t.precision(3);
    t << "runtime " << secs << " s < " << time_limit_s << " s";
    c.require(secs < time_limit_s, t.str());
  }
  if (!c.pass) ++failures;
  std::printf("criterion %2d %s  %s: %s (%.2f s)\n", id, c.pass ? "PASS" : "FAIL", title,
              c.detail.str().c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double wrap(double a) { return std::remainder(a, 2.0 * kPi); }

BispectrumMatrix tone_bispectrum(const TimeSeries& x, std::size_t lo_bin) {
  const WindowSpec spec;
  return estimate_bispectrum(segment_and_fft(x, spec), FreqGrid::square(lo_bin, 40, 1.0));
}

// ---- criterion 1 ----

void peak_structure(Check& c) {
  const auto pure = peak(tone_bispectrum(synth_pure_tone(10.0, 1.0, 0.0, 1.0, 256.0), 1));
  c.require(pure.f1 == 10.0 && pure.f2 == 10.0,
            "pure tone peak at (" + fmt(pure.f1) + "," + fmt(pure.f2) + "), |B| " + fmt(pure.magnitude, 3));

  // The grid starts at 0 Hz here so a (10, 0) peak is representable.
  const auto shifted = peak(tone_bispectrum(synth_pure_tone(10.0, 1.0, kPi / 4.0, 1.0, 256.0), 0));
  c.require(shifted.f1 == 10.0 && shifted.f2 == 0.0 && std::abs(wrap(shifted.phase)) <= 0.05,
            "shifted tone peak at (" + fmt(shifted.f1) + "," + fmt(shifted.f2) + ") phase " +
                fmt(shifted.phase, 4) + ", |B| " + fmt(shifted.magnitude, 3));

  const auto two = tone_bispectrum(synth_two_tone(10.0, 20.0, 1.0, 256.0), 1);
  const double ph = std::arg(two.values.at(9, 9));
  c.require(std::abs(wrap(ph + kPi / 2.0)) <= 0.15, "two-tone phase at (10,10) " + fmt(ph, 6));
}

// ---- criterion 2 ----

void cubic_law(Check& c) {
  struct Signal {
    const char* name;
    std::function<TimeSeries(double)> make;
  };
  const std::vector<Signal> signals{
      {"10 Hz tone", [](double a) { return synth_pure_tone(10.0, a, 0.0, 1.0, 256.0); }},
      {"10.3 Hz tone", [](double a) { return synth_pure_tone(10.3, a, 0.0, 1.0, 256.0); }},
      {"10+20 Hz", [](double a) {
         auto x = synth_two_tone(10.0, 20.0, 1.0, 256.0);
         for (auto& v : x.samples) v *= a;
         return x;
       }}};
  std::size_t total = 0;
  for (const auto& s : signals) {
    const auto b1 = tone_bispectrum(s.make(1.0), 1);
    const auto b2 = tone_bispectrum(s.make(2.0), 1);
    std::size_t cells = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < b1.values.values.size(); ++i) {
      const double m1 = std::abs(b1.values.values[i]);
      if (m1 <= 1e-9) continue;
      ++cells;
      worst = std::max(worst, std::abs(std::abs(b2.values.values[i]) / m1 - 8.0));
    }
    total += cells;
    c.require(worst <= 1e-6, std::string(s.name) + ": " + std::to_string(cells) +
                                 " cells, max |ratio - 8| " + fmt(worst, 3));
  }
  c.require(total > 0, "cells compared " + std::to_string(total));
}

// ---- criterion 3 ----

void qpc_detection(Check& c) {
  WindowSpec spec;
  spec.overlap_fraction = 0.0;
  const auto grid = FreqGrid::square(1, 40, 1.0);
  double weakest = 2.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = synth_qpc_triplet(6.0, 20.0, true, 32, spec, 256.0, kSeed + seed);
    weakest = std::min(weakest, std::abs(estimate_bicoherence(segment_and_fft(x, spec), grid).values.at(5, 19)));
  }
  c.require(weakest >= 0.95, "coupled, 32 segments: min |b(6,20)| over 20 seeds " + fmt(weakest, 4));
  int low = 0;
  double largest = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = synth_qpc_triplet(6.0, 20.0, false, 64, spec, 256.0, kSeed + 100 + seed);
    const double v = std::abs(estimate_bicoherence(segment_and_fft(x, spec), grid).values.at(5, 19));
    low += v < 0.3;
    largest = std::max(largest, v);
  }
  c.require(low >= 19, "uncoupled, 64 segments: " + std::to_string(low) + "/20 below 0.3 (max " +
                           fmt(largest, 3) + ")");
}

// ---- criterion 4 ----

void estimator_invariants(Check& c) {
  std::vector<TimeSeries> corpus{
      synth_pure_tone(10.0, 1.0, 0.0, 1.0, 256.0), synth_pure_tone(10.0, 2.0, 0.0, 1.0, 256.0),
      synth_pure_tone(10.0, 1.0, kPi / 4.0, 1.0, 256.0), synth_two_tone(10.0, 20.0, 1.0, 256.0)};
  WindowSpec no_overlap;
  no_overlap.overlap_fraction = 0.0;
  corpus.push_back({synth_qpc_triplet(6.0, 20.0, true, 32, no_overlap, 256.0, 1).samples, 256.0});
  corpus.push_back({synth_qpc_triplet(6.0, 20.0, false, 64, no_overlap, 256.0, 2).samples, 256.0});
  const auto rec = synth_dataset(paradigm_plan(), kSeed);
  for (std::size_t t = 0; t < rec.n_trials; ++t) {
    for (std::size_t ch = 0; ch < rec.n_channels; ++ch) {
      for (const auto& st : rec.stages) {
        const auto tr = rec.trace(t, ch).subspan(st.begin, st.length());
        corpus.push_back({std::vector<double>(tr.begin(), tr.end()), rec.fs});
      }
    }
  }

  const WindowSpec spec;
  const auto grid = FreqGrid::square(1, 40, 1.0);
  double sym = 0.0, bound = 0.0, parseval = 0.0;
  for (const auto& x : corpus) {
    const auto s = segment_and_fft(x, spec);
    const auto bs = estimate_bispectrum(s, grid);
    const auto bc = estimate_bicoherence(s, grid);
    double scale = 0.0;
    for (const auto& v : bs.values.values) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < grid.f1_bins.size(); ++i) {
      for (std::size_t j = 0; j < grid.f2_bins.size(); ++j) {
        if (scale > 0.0) sym = std::max(sym, std::abs(bs.values.at(i, j) - bs.values.at(j, i)) / scale);
        sym = std::max(sym, std::abs(bc.values.at(i, j) - bc.values.at(j, i)));
        bound = std::max(bound, std::abs(bc.values.at(i, j)));
      }
    }
    for (std::size_t seg = 0; seg < s.n_segments; ++seg) {
      const auto wx = windowed_segment(x.samples, spec, seg);
      double te = 0.0;
      for (double v : wx) te += v * v;
      const std::size_t n = spec.nfft;
      double fe = std::norm(s.at(seg, 0)) + std::norm(s.at(seg, n / 2));
      for (std::size_t k = 1; k < n / 2; ++k) fe += 2.0 * std::norm(s.at(seg, k));
      fe /= static_cast<double>(n);
      if (te > 0.0) parseval = std::max(parseval, std::abs(fe - te) / te);
    }
  }
  c.require(sym <= 1e-12, "symmetry max deviation " + fmt(sym, 3));
  c.require(bound <= 1.0 + 1e-9, "max |bicoherence| " + fmt(bound, 12) + " over " +
                                     std::to_string(corpus.size()) + " traces");
  c.require(parseval <= 1e-9, "Parseval max relative error " + fmt(parseval, 3));
}

// ---- criterion 5 ----

void feature_suite(Check& c) {
  using cd = std::complex<double>;
  bool ok = true;
  auto near = [&](double a, double b, double tol = 1e-12) { ok = ok && std::abs(a - b) <= tol; };

  std::vector<cd> mags;
  for (double m : {0.2, 0.4, 0.6, 0.8}) mags.push_back(std::polar(m, 0.3 * m));
  auto r = compute_raw_features(mags);
  near(r.mean_bicoh, 0.5);
  near(r.max_bicoh, 0.8);
  near(r.sum_bicoh, 2.0);
  const auto e = expand_features(r);
  near(e[2], std::log(2.0 + 1e-12));

  std::vector<cd> equal(12, std::polar(0.4, 1.0));
  for (std::size_t i = 0; i < equal.size(); ++i) equal[i] = std::polar(0.4, 0.5 * static_cast<double>(i));
  near(compute_raw_features(equal).mag_entropy, std::log(12.0));

  std::vector<cd> aligned{std::polar(0.1, 0.7), std::polar(0.5, 0.7), std::polar(0.9, 0.7)};
  r = compute_raw_features(aligned);
  near(r.phase_concentration, 1.0);
  near(r.circ_variance, 0.0);
  near(r.phase_entropy, 0.0);
  near(r.mean_phase, 0.7);

  RawFeatureVector z;
  z.mean_phase = 0.0;
  auto ez = expand_features(z);
  near(ez[4], 0.0);
  near(ez[5], 1.0);
  z.mean_phase = kPi / 2.0;
  ez = expand_features(z);
  near(ez[4], 1.0);
  near(ez[5], 0.0, 1e-15);
  c.require(ok, "worked examples");

  // 1000 random symmetric bicoherence matrices: V + R == 1 exactly per
  // submatrix, and every mirror pair shares its features.
  Rng rng(kSeed);
  const auto grid = FreqGrid::square(1, 40, 1.0);
  std::size_t vr_bad = 0;
  double mirror = 0.0;
  for (int n = 0; n < 1000; ++n) {
    BicoherenceMatrix b;
    b.grid = grid;
    b.values = ComplexMatrix(40, 40);
    for (std::size_t i = 0; i < 40; ++i) {
      for (std::size_t j = i; j < 40; ++j) {
        const cd v = std::polar(rng.uniform(), 2.0 * kPi * rng.uniform() - kPi);
        b.values.at(i, j) = v;
        b.values.at(j, i) = v;
      }
    }
    const auto f = bandpair_features(b);
    for (std::size_t p = 0; p < kBandPairCount; ++p) {
      const auto* row = &f[p * kFeatureCount];
      if (row[7] + row[8] != 1.0) ++vr_bad;
      const auto bp = BandPair::from_index(p);
      const auto q = BandPair{bp.responder, bp.driver}.index();
      for (std::size_t k = 0; k < kFeatureCount; ++k) {
        mirror = std::max(mirror, std::abs(row[k] - f[q * kFeatureCount + k]));
      }
    }
  }
  c.require(vr_bad == 0, "V + R != 1 in " + std::to_string(vr_bad) + " of 25000 submatrices");
  c.require(mirror <= 1e-12, "mirror-pair max difference " + fmt(mirror, 3));
}

// ---- criteria 6 and 7 share one run ----

struct DecodingRun {
  double test_acc = 0.0;
  double shuffled_acc = 0.0;
  std::size_t n = 0;
  Selection selection;
  std::size_t cz = 0;
  std::vector<double> constant_scores;
  double seconds = 0.0;
};

DecodingRun decoding_run() {
  DecodingRun out;
  const auto t0 = std::chrono::steady_clock::now();
  auto plan = two_class_plan(1.0);
  plan.stages = {{"full", 0, 1536}};
  const auto rec = synth_dataset(plan, kSeed);
  RunConfig cfg;
  cfg.stages = {"full"};
  cfg.threads = 1;
  const auto tensors = extract_stage_tensors(rec, cfg);
  LabeledDesign design{flatten(tensors[0]), rec.labels, {}};
  out.n = design.y.size();

  CvParams params;
  params.importance_repeats = 10;
  const auto report = cross_validate(design, params, kSeed);
  out.test_acc = report.mean_test_acc();
  out.selection = select_top(report.importance, report.index);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  auto shuffled = design;
  Rng rng(3);
  rng.shuffle(std::span<int>(shuffled.y));
  CvParams plain;
  out.shuffled_acc = cross_validate(shuffled, plain, kSeed).mean_test_acc();

  out.cz = static_cast<std::size_t>(
      std::find(rec.channel_names.begin(), rec.channel_names.end(), "Cz") - rec.channel_names.begin());

  // Same data with one channel's delta-delta block frozen to a constant.
  auto frozen = design;
  std::vector<std::size_t> cols;
  for (std::size_t f = 0; f < kFeatureCount; ++f) cols.push_back(FeatureIndex::flat(0, 0, f));
  for (std::size_t r = 0; r < frozen.x.rows; ++r)
    for (auto c : cols) frozen.x.at(r, c) = 0.25;
  CvParams short_run;
  short_run.k = 5;
  short_run.forest.n_trees = 50;
  short_run.importance_repeats = 3;
  const auto fr = cross_validate(frozen, short_run, kSeed);
  for (auto c : cols) out.constant_scores.push_back(fr.importance[c]);
  return out;
}

const DecodingRun& shared_run() {
  static const DecodingRun run = decoding_run();
  return run;
}

void end_to_end(Check& c) {
  const auto& r = shared_run();
  c.require(r.test_acc >= 0.90, "5-fold mean held-out accuracy " + fmt(r.test_acc, 4));
  const boost::math::binomial_distribution<> null(static_cast<double>(r.n), 0.5);
  const double lo = boost::math::quantile(null, 0.025) / static_cast<double>(r.n);
  const double hi = boost::math::quantile(boost::math::complement(null, 0.025)) / static_cast<double>(r.n);
  c.require(r.shuffled_acc >= lo && r.shuffled_acc <= hi,
            "shuffled-label accuracy " + fmt(r.shuffled_acc, 4) + " in [" + fmt(lo, 4) + ", " + fmt(hi, 4) + "]");
  c.require(r.seconds < 120.0, "features + CV + importance " + fmt(r.seconds, 3) + " s < 120 s");
}

void selection_validity(Check& c) {
  const auto& r = shared_run();
  const auto tb = BandPair{Band::theta, Band::beta}.index();
  const auto bt = BandPair{Band::beta, Band::theta}.index();
  const std::size_t top = std::min<std::size_t>(20, r.selection.flat_ids.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < top; ++i) {
    const auto co = FeatureIndex::coord(r.selection.flat_ids[i]);
    hits += co.channel == r.cz && (co.pair == tb || co.pair == bt);
  }
  c.require(top == 20 && hits >= 12,
            std::to_string(hits) + "/" + std::to_string(top) + " of the top 20 in Cz theta-beta/beta-theta");
  const bool zero = std::all_of(r.constant_scores.begin(), r.constant_scores.end(),
                                [](double v) { return v == 0.0; });
  c.require(zero, "frozen constant block scores exactly 0");
}

// ---- criterion 8 ----

double brute_force_wilcoxon(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double v : diffs)
    if (v != 0.0) d.push_back(v);
  std::vector<double> rank(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    double less = 0, eq = 0;
    for (double v : d) {
      less += std::abs(v) < std::abs(d[i]);
      eq += std::abs(v) == std::abs(d[i]);
    }
    rank[i] = less + (eq + 1.0) / 2.0;
  }
  double obs = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] > 0) obs += rank[i];
  double le = 0, ge = 0;
  for (std::uint64_t mask = 0; mask < (1ull << d.size()); ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (mask >> i & 1u) w += rank[i];
    le += w <= obs + 1e-9;
    ge += w >= obs - 1e-9;
  }
  return std::min(1.0, 2.0 * std::min(le, ge) / std::ldexp(1.0, static_cast<int>(d.size())));
}

void statistics_oracles(Check& c) {
  Rng rng(kSeed);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    std::vector<double> a(n), b(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = std::round(3.0 * rng.normal());
      b[i] = std::round(3.0 * rng.normal());
      d[i] = a[i] - b[i];
    }
    if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) d[0] = a[0] += 1.0;
    worst = std::max(worst, std::abs(wilcoxon_signed_rank(a, b).p_raw - brute_force_wilcoxon(d)));
  }
  c.require(worst <= 1e-12, "Wilcoxon exact vs sign enumeration, 200 samples, max diff " + fmt(worst, 3));

  const auto bh = bh_fdr(std::vector<double>{0.01, 0.04, 0.03, 0.002});
  const std::vector<double> want{0.02, 0.04, 0.04, 0.008};
  double bh_err = 0.0;
  for (std::size_t i = 0; i < 4; ++i) bh_err = std::max(bh_err, std::abs(bh.adjusted[i] - want[i]));
  c.require(bh_err <= 1e-15, "BH example max error " + fmt(bh_err, 3));

  std::vector<double> concordant;
  for (int s = 0; s < 10; ++s)
    for (int k = 0; k < 5; ++k) concordant.push_back(k + 0.01 * s);
  const double w = friedman(concordant, 10, 5).kendalls_w;
  c.require(std::abs(w - 1.0) <= 1e-12, "Friedman perfect concordance W = " + fmt(w, 15));

  std::ifstream in(BISPEC_REFERENCE_JSON);
  const auto ref = nlohmann::json::parse(in);
  double sw = 0.0;
  std::size_t count = 0;
  for (const auto& k : ref.at("shapiro")) {
    const auto x = k.at("x").get<std::vector<double>>();
    sw = std::max(sw, std::abs(shapiro_wilk(x).w - k.at("w").get<double>()));
    ++count;
  }
  c.require(count == 100 && sw <= 1e-4,
            "Shapiro-Wilk W vs reference on " + std::to_string(count) + " vectors, max diff " + fmt(sw, 3));
}

// ---- criterion 9 ----

std::vector<AccuracyRecord> constructed(bool effect) {
  Rng rng(kSeed + 9);
  std::vector<AccuracyRecord> recs;
  for (const auto& task : default_tasks()) {
    for (const auto& band : canonical_bands()) {
      for (std::size_t s = 0; s < 10; ++s) {
        const double base = 0.55 + 0.1 * rng.uniform();
        const double exec = effect ? base + 0.1 + 0.02 * rng.normal() : base;
        recs.push_back({s, task.name, "planning", std::string(band.name), base});
        recs.push_back({s, task.name, "execution", std::string(band.name), exec});
      }
    }
  }
  return recs;
}

void stage_suite(Check& c) {
  const auto on = stage_comparison_suite(constructed(true));
  std::size_t good = 0;
  double worst_p = 0.0, min_d = 1e9;
  for (const auto& t : on.tests) {
    good += t.p_fdr < 0.05 && t.cohens_d > 0.8;
    worst_p = std::max(worst_p, t.p_fdr);
    min_d = std::min(min_d, t.cohens_d);
  }
  c.require(good == on.tests.size() && on.tests.size() == 20,
            std::to_string(good) + "/" + std::to_string(on.tests.size()) + " cells with p_fdr < 0.05 and d > 0.8 (max p_fdr " +
                fmt(worst_p, 3) + ", min d " + fmt(min_d, 3) + ")");
  const auto off = stage_comparison_suite(constructed(false));
  std::size_t sig = 0;
  for (const auto& t : off.tests) sig += t.p_fdr < 0.05;
  c.require(sig == 0, "identical stages: " + std::to_string(sig) + " significant cells");
}

// ---- criterion 10 ----

void determinism(Check& c) {
  auto plan = paradigm_plan();
  plan.channels = {"C3", "Cz", "C4", "Pz"};
  plan.trials_per_class = 10;
  std::vector<SubjectInput> subjects;
  for (std::size_t s = 0; s < 3; ++s) subjects.push_back({"s" + std::to_string(s), synth_dataset(plan, kSeed + s)});
  RunConfig cfg;
  cfg.forest.n_trees = 40;
  cfg.importance_repeats = 2;
  const auto root = fs::temp_directory_path() / "bispec_acceptance";
  fs::remove_all(root);
  std::vector<std::string> digests;
  for (unsigned threads : {1u, 4u, 8u, 1u}) {
    cfg.threads = threads;
    const auto dir = root / ("run" + std::to_string(digests.size()));
    digests.push_back(write_bundle(run_pipeline(subjects, cfg), dir).digest);
  }
  const bool same = std::all_of(digests.begin(), digests.end(), [&](const auto& d) { return d == digests[0]; });
  c.require(same, "bundle digest for threads 1, 4, 8 and a rerun: " + digests[0].substr(0, 16) +
                      (same ? " (all equal)" : " (differ)"));
  fs::remove_all(root);
}

}  // namespace

int main() {
  criterion(1, "synthetic peak structure", 1.0, peak_structure);
  criterion(2, "cubic amplitude law", 0.0, cubic_law);
  criterion(3, "QPC detection", 5.0, qpc_detection);
  criterion(4, "estimator invariants", 0.0, estimator_invariants);
  criterion(5, "feature formulas", 0.0, feature_suite);
  criterion(6, "end-to-end decoding", 0.0, end_to_end);
  criterion(7, "feature selection validity", 0.0, selection_validity);
  criterion(8, "statistics oracles", 0.0, statistics_oracles);
  criterion(9, "stage-comparison suite", 0.0, stage_suite);
  criterion(10, "determinism", 0.0, determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
