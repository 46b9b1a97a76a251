#include "bispec/bands.hpp"
#include "bispec/bispectrum.hpp"
#include "bispec/classify.hpp"
#include "bispec/dsp.hpp"
#include "bispec/error.hpp"
#include "bispec/features.hpp"
#include "bispec/filter.hpp"
#include "bispec/stats.hpp"
#include "bispec/synth.hpp"

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numeric>

namespace py = pybind11;
using namespace bispec;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const DoubleArray& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

DoubleArray to_array(const std::vector<double>& v) {
  DoubleArray out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

ComplexArray matrix_array(const ComplexMatrix& m) {
  ComplexArray out({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)});
  std::copy(m.values.begin(), m.values.end(), out.mutable_data());
  return out;
}

WindowSpec window(std::size_t nfft, double overlap) {
  WindowSpec w;
  w.nfft = nfft;
  w.overlap_fraction = overlap;
  return w;
}

FreqGrid grid_for(double fs, const WindowSpec& w, double lo_hz, double hi_hz) {
  const double res = fs / static_cast<double>(w.nfft);
  return FreqGrid::square(static_cast<std::size_t>(std::llround(lo_hz / res)),
                          static_cast<std::size_t>(std::llround(hi_hz / res)), res);
}

py::dict result_dict(const TestResult& t) {
  py::dict d;
  d["test"] = t.test_name;
  d["statistic"] = t.statistic;
  d["df"] = t.df;
  d["p"] = t.p_raw;
  d["effect_name"] = t.effect_name;
  d["effect"] = t.effect_size;
  d["cohens_d"] = t.cohens_d;
  d["n"] = t.n;
  d["branch"] = std::string(branch_name(t.branch));
  d["normality_p"] = t.normality_p;
  return d;
}

}  // namespace

PYBIND11_MODULE(pybispec, m) {
  m.doc() = "Bispectral EEG analysis core";

  static py::exception<Error> exc(m, "BispecError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string msg = "[" + std::string(errc_name(e.code())) + "] " + e.what();
      PyErr_SetString(exc.ptr(), msg.c_str());
    }
  });

  m.def("synth_pure_tone",
        [](double f0, double amp, double phase, double dur, double fs) {
          return to_array(synth_pure_tone(f0, amp, phase, dur, fs).samples);
        },
        py::arg("f0"), py::arg("amp") = 1.0, py::arg("phase") = 0.0, py::arg("dur") = 1.0,
        py::arg("fs") = 256.0);

  m.def("synth_two_tone",
        [](double f1, double f2, double dur, double fs) {
          return to_array(synth_two_tone(f1, f2, dur, fs).samples);
        },
        py::arg("f1") = 10.0, py::arg("f2") = 20.0, py::arg("dur") = 1.0, py::arg("fs") = 256.0);

  m.def("synth_qpc_triplet",
        [](double f1, double f2, bool coupled, std::size_t n_segments, std::size_t nfft,
           double overlap, double fs, std::uint64_t seed) {
          return to_array(
              synth_qpc_triplet(f1, f2, coupled, n_segments, window(nfft, overlap), fs, seed).samples);
        },
        py::arg("f1"), py::arg("f2"), py::arg("coupled") = true, py::arg("n_segments") = 32,
        py::arg("nfft") = 256, py::arg("overlap") = 0.0, py::arg("fs") = 256.0, py::arg("seed") = 0);

  m.def("bispectrum",
        [](const DoubleArray& x, double fs, std::size_t nfft, double overlap, double lo_hz, double hi_hz) {
          const auto w = window(nfft, overlap);
          const auto spectra = segment_and_fft(to_vector(x), fs, w);
          return matrix_array(estimate_bispectrum(spectra, grid_for(fs, w, lo_hz, hi_hz)).values);
        },
        py::arg("x"), py::arg("fs") = 256.0, py::arg("nfft") = 256, py::arg("overlap") = 0.5,
        py::arg("lo_hz") = 1.0, py::arg("hi_hz") = 40.0);

  m.def("bicoherence",
        [](const DoubleArray& x, double fs, std::size_t nfft, double overlap, double lo_hz, double hi_hz) {
          const auto w = window(nfft, overlap);
          const auto spectra = segment_and_fft(to_vector(x), fs, w);
          return matrix_array(estimate_bicoherence(spectra, grid_for(fs, w, lo_hz, hi_hz)).values);
        },
        py::arg("x"), py::arg("fs") = 256.0, py::arg("nfft") = 256, py::arg("overlap") = 0.5,
        py::arg("lo_hz") = 1.0, py::arg("hi_hz") = 40.0);

  m.def("band_pair_features",
        [](const DoubleArray& x, double fs, std::size_t nfft, double overlap) {
          const auto w = window(nfft, overlap);
          const auto spectra = segment_and_fft(to_vector(x), fs, w);
          const auto f = bandpair_features(estimate_bicoherence(spectra, grid_for(fs, w, 1.0, 40.0)));
          DoubleArray out({static_cast<py::ssize_t>(kBandPairCount), static_cast<py::ssize_t>(kFeatureCount)});
          std::copy(f.begin(), f.end(), out.mutable_data());
          return out;
        },
        py::arg("x"), py::arg("fs") = 256.0, py::arg("nfft") = 256, py::arg("overlap") = 0.5,
        "25 x 9 features of one trace (1 Hz grid required).");

  m.def("submatrix_features",
        [](const ComplexArray& cells) {
          const auto f = expand_features(compute_raw_features(
              std::span<const std::complex<double>>(cells.data(), static_cast<std::size_t>(cells.size()))));
          return to_array(std::vector<double>(f.begin(), f.end()));
        },
        py::arg("cells"));

  m.def("feature_names", [] {
    return std::vector<std::string>(feature_names().begin(), feature_names().end());
  });
  m.def("band_pair_names", [] {
    std::vector<std::string> out;
    for (std::size_t p = 0; p < kBandPairCount; ++p) out.push_back(BandPair::from_index(p).name());
    return out;
  });

  m.def("bandpass_filtfilt",
        [](const DoubleArray& x, double low, double high, double fs, int order) {
          TimeSeries ts{to_vector(x), fs};
          return to_array(butterworth_bandpass_zero_phase(ts, low, high, order).samples);
        },
        py::arg("x"), py::arg("low"), py::arg("high"), py::arg("fs") = 256.0, py::arg("order") = 4);

  m.def("synth_dataset",
        [](std::size_t trials_per_class, std::uint64_t seed, bool three_class, double strength) {
          SynthPlan plan = three_class ? paradigm_plan() : two_class_plan(strength);
          plan.trials_per_class = trials_per_class;
          const auto rec = synth_dataset(plan, seed);
          DoubleArray data({static_cast<py::ssize_t>(rec.n_trials), static_cast<py::ssize_t>(rec.n_channels),
                            static_cast<py::ssize_t>(rec.n_samples)});
          std::copy(rec.data.begin(), rec.data.end(), data.mutable_data());
          return py::make_tuple(data, rec.labels, rec.channel_names);
        },
        py::arg("trials_per_class") = 75, py::arg("seed") = 0, py::arg("three_class") = true,
        py::arg("strength") = 1.0);

  m.def("stratified_kfold",
        [](const std::vector<int>& y, std::size_t k, std::uint64_t seed) {
          return stratified_kfold(y, k, seed);
        },
        py::arg("y"), py::arg("k") = 5, py::arg("seed") = 0);

  m.def("cross_validate",
        [](const DoubleArray& x, const std::vector<int>& y, std::size_t k, std::size_t n_trees,
           std::uint64_t seed, const std::string& standardize, std::size_t importance_repeats,
           unsigned threads) {
          if (x.ndim() != 2) throw Error(Errc::shape_mismatch, "cross_validate: X must be 2-D");
          LabeledDesign d;
          d.x.rows = static_cast<std::size_t>(x.shape(0));
          d.x.cols = static_cast<std::size_t>(x.shape(1));
          d.x.data = to_vector(x);
          d.x.index.columns.resize(d.x.cols);
          std::iota(d.x.index.columns.begin(), d.x.index.columns.end(), std::size_t{0});
          d.y = y;
          CvParams p;
          p.k = k;
          p.forest.n_trees = n_trees;
          auto mode = standardize_mode_from_name(standardize);
          if (!mode) throw Error(Errc::config, "unknown standardize mode '" + standardize + "'");
          p.mode = *mode;
          p.importance_repeats = importance_repeats;
          p.threads = threads;
          const auto r = cross_validate(d, p, seed);
          py::dict out;
          std::vector<double> train, test;
          for (const auto& f : r.folds) {
            train.push_back(f.train_acc);
            test.push_back(f.test_acc);
          }
          out["train_acc"] = train;
          out["test_acc"] = test;
          out["fold_of"] = r.fold_of;
          out["importance"] = r.importance;
          return out;
        },
        py::arg("X"), py::arg("y"), py::arg("k") = 5, py::arg("n_trees") = 200, py::arg("seed") = 0,
        py::arg("standardize") = "train-only", py::arg("importance_repeats") = 0,
        py::arg("threads") = 1,
        "Columns are taken as flat feature ids; standardization pools columns by id mod 9.");

  m.def("shapiro_wilk",
        [](const DoubleArray& x) {
          const auto r = shapiro_wilk(to_vector(x));
          return py::make_tuple(r.w, r.p);
        },
        py::arg("x"));
  m.def("paired_ttest",
        [](const DoubleArray& a, const DoubleArray& b) { return result_dict(paired_ttest(to_vector(a), to_vector(b))); },
        py::arg("a"), py::arg("b"));
  m.def("wilcoxon",
        [](const DoubleArray& a, const DoubleArray& b) {
          return result_dict(wilcoxon_signed_rank(to_vector(a), to_vector(b)));
        },
        py::arg("a"), py::arg("b"));
  m.def("friedman",
        [](const DoubleArray& values) {
          if (values.ndim() != 2) throw Error(Errc::shape_mismatch, "friedman: expected a 2-D array");
          const auto r = friedman(to_vector(values), static_cast<std::size_t>(values.shape(0)),
                                  static_cast<std::size_t>(values.shape(1)));
          py::dict d;
          d["chi2"] = r.chi2;
          d["df"] = r.df;
          d["p"] = r.p;
          d["kendalls_w"] = r.kendalls_w;
          return d;
        },
        py::arg("values"));
  m.def("bh_fdr",
        [](const DoubleArray& p, double q) {
          const auto r = bh_fdr(to_vector(p), q);
          return py::make_tuple(to_array(r.adjusted), std::vector<bool>(r.reject.begin(), r.reject.end()));
        },
        py::arg("p"), py::arg("q") = 0.05);
}
