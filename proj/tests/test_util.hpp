#pragma once

#include "bispec/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

// Asserts that `stmt` throws bispec::Error carrying `errc`.
#define EXPECT_ERRC(stmt, errc)                                               \
  do {                                                                        \
    try {                                                                     \
      stmt;                                                                   \
      ADD_FAILURE() << "expected " << bispec::errc_name(errc) << ", nothing thrown"; \
    } catch (const bispec::Error& e) {                                        \
      EXPECT_EQ(e.code(), errc) << e.what();                                  \
    }                                                                         \
  } while (0)

namespace testutil {

inline double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace testutil
