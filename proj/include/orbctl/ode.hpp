#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>

#include "orbctl/matrix.hpp"

namespace orbctl {

/// dydt = f(t, y)
using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct OdeOptions {
  double rtol = 1e-8;
  double atol = 1e-9;
  double initial_step = 0.0;  // 0 selects automatically
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
};

struct OdeStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

struct OdeSolution {
  Matrix states;  // one row per grid time
  OdeStats stats;
};

/// Adaptive Dormand–Prince 5(4) with Hairer's step control (RMS error norm,
/// scale atol + rtol·max|y|) and fifth-order dense output sampled on `tgrid`.
/// tgrid[0] is the initial time; the grid must be strictly increasing.
OdeSolution integrate_dopri5(const OdeRhs& f, std::span<const double> y0, std::span<const double> tgrid,
                             const OdeOptions& options = {});

}  // namespace orbctl
