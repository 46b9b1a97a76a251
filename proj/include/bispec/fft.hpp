#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace bispec {

// Thin FFTW wrappers. Plans are cached per length and executed through the
// new-array interface, so calls are safe from multiple threads.

// Unnormalized forward real-to-complex transform; returns n/2 + 1 bins.
std::vector<std::complex<double>> rfft(std::span<const double> x);

// Inverse of rfft including the 1/n factor. `spectrum` must hold n/2 + 1 bins.
std::vector<double> irfft(std::span<const std::complex<double>> spectrum, std::size_t n);

}  // namespace bispec
