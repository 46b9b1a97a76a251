#include "bispec/fft.hpp"

#include "bispec/error.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace bispec {

namespace {

enum class Kind { forward, inverse };

// fftw planning is not thread-safe; execution with new arrays is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, Kind kind) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, kind);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;

    const int len = static_cast<int>(n);
    double* real = fftw_alloc_real(n);
    fftw_complex* cplx = fftw_alloc_complex(n / 2 + 1);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = kind == Kind::forward
                         ? fftw_plan_dft_r2c_1d(len, real, cplx, flags)
                         : fftw_plan_dft_c2r_1d(len, cplx, real, flags);
    fftw_free(real);
    fftw_free(cplx);
    if (plan == nullptr) throw Error(Errc::invalid_argument, "fft: planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, Kind>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

std::vector<std::complex<double>> rfft(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw Error(Errc::invalid_argument, "fft: empty input");
  fftw_plan plan = cache().get(n, Kind::forward);
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_execute_dft_r2c(plan, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n) {
  if (n == 0 || spectrum.size() != n / 2 + 1) {
    throw Error(Errc::invalid_argument, "fft: spectrum length does not match n/2+1");
  }
  fftw_plan plan = cache().get(n, Kind::inverse);
  // c2r destroys its input.
  std::vector<std::complex<double>> in(spectrum.begin(), spectrum.end());
  std::vector<double> out(n);
  fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace bispec
