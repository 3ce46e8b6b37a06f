#pragma once

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "orbctl/error.hpp"
#include "orbctl/linalg.hpp"
#include "orbctl/matrix.hpp"
#include "orbctl/orbital.hpp"
#include "orbctl/simulation.hpp"

namespace orbctl::test {

inline const Scenario& default_scenario() {
  static const Scenario s;
  return s;
}

inline double default_r0() { return default_scenario().x0.radius(); }

inline StateSpace default_plant() { return linearize_plant(default_r0()); }

inline void expect_matrix_near(const Matrix& actual, const Matrix& expected, double tol) {
  ASSERT_EQ(actual.rows(), expected.rows());
  ASSERT_EQ(actual.cols(), expected.cols());
  for (std::size_t r = 0; r < actual.rows(); ++r)
    for (std::size_t c = 0; c < actual.cols(); ++c)
      EXPECT_NEAR(actual(r, c), expected(r, c), tol) << "at (" << r << ", " << c << ")";
}

/// Greedy matching distance between two multisets of complex numbers.
inline double multiset_distance(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (const auto& z : a) {
    auto best = std::min_element(b.begin(), b.end(),
                                 [&](const auto& x, const auto& y) { return std::abs(x - z) < std::abs(y - z); });
    worst = std::max(worst, std::abs(*best - z));
    b.erase(best);
  }
  return worst;
}

inline std::vector<std::complex<double>> as_vector(const Spectrum& s) { return {s.begin(), s.end()}; }

}  // namespace orbctl::test
