#include "orbctl/lti.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "orbctl/error.hpp"

namespace orbctl {

StateSpace::StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
  if (!a_.is_square()) fail(ErrorKind::Dimension, "state-space: A must be square");
  const std::size_t n = a_.rows();
  if (b_.rows() != n) fail(ErrorKind::Dimension, "state-space: B row count must equal state count");
  if (c_.cols() != n) fail(ErrorKind::Dimension, "state-space: C column count must equal state count");
  if (d_.empty()) d_ = Matrix(c_.rows(), b_.cols());
  if (d_.rows() != c_.rows() || d_.cols() != b_.cols())
    fail(ErrorKind::Dimension, "state-space: D must be outputs x inputs");
}

const char* to_string(StabilityClass cls) {
  switch (cls) {
    case StabilityClass::AsymptoticallyStable: return "AsymptoticallyStable";
    case StabilityClass::MarginallyStable: return "MarginallyStable";
    case StabilityClass::Unstable: return "Unstable";
  }
  return "Unknown";
}

Matrix controllability_matrix(const StateSpace& sys) {
  const std::size_t n = sys.states();
  Matrix out;
  Matrix term = sys.b();
  for (std::size_t k = 0; k < n; ++k) {
    out = hstack(out, term);
    if (k + 1 < n) term = sys.a() * term;
  }
  if (out.empty()) out = Matrix(n, 0);
  return out;
}

Matrix observability_matrix(const StateSpace& sys) {
  const std::size_t n = sys.states();
  Matrix out;
  Matrix term = sys.c();
  for (std::size_t k = 0; k < n; ++k) {
    out = vstack(out, term);
    if (k + 1 < n) term = term * sys.a();
  }
  if (out.empty()) out = Matrix(0, n);
  return out;
}

StabilityClass classify_spectrum(const Spectrum& spectrum, double tol) {
  bool on_axis = false;
  for (const auto& lambda : spectrum) {
    if (lambda.real() > tol) return StabilityClass::Unstable;
    if (lambda.real() >= -tol) on_axis = true;
  }
  return on_axis ? StabilityClass::MarginallyStable : StabilityClass::AsymptoticallyStable;
}

StabilityClass stability_class(const Matrix& a) {
  return classify_spectrum(eigenvalues(a), 1e-9 * std::max(1.0, a.norm_inf()));
}

ComplexMatrix transfer_eval(const StateSpace& sys, std::complex<double> s) {
  const std::size_t n = sys.states();
  ComplexMatrix resolvent(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) resolvent(i, j) = (i == j ? s : 0.0) - sys.a()(i, j);
  ComplexMatrix x;
  try {
    x = solve_linear(resolvent, ComplexMatrix(sys.b()));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Singular) throw;
    std::ostringstream os;
    os << "transfer_eval: s = (" << s.real() << ", " << s.imag() << ") is at or near an eigenvalue of A";
    fail(ErrorKind::Singular, os.str());
  }
  ComplexMatrix h = ComplexMatrix(sys.c()) * x;
  for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += sys.d().data()[i];
  return h;
}

std::vector<FrequencyPoint> frequency_response(const StateSpace& sys, std::span<const double> omegas,
                                               bool require_positive) {
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    if (!std::isfinite(omegas[i])) fail(ErrorKind::Input, "frequency grid contains a non-finite value");
    if (require_positive && omegas[i] <= 0.0)
      fail(ErrorKind::Input, "frequency grid must be positive");
    if (i > 0 && omegas[i] <= omegas[i - 1])
      fail(ErrorKind::Input, "frequency grid must be strictly increasing");
  }
  std::vector<FrequencyPoint> out;
  out.reserve(omegas.size());
  for (double w : omegas) {
    FrequencyPoint pt;
    pt.omega = w;
    try {
      pt.response = transfer_eval(sys, {0.0, w});
    } catch (const Error& e) {
      pt.ok = false;
      pt.error = e.what();
      pt.response = ComplexMatrix(sys.outputs(), sys.inputs());
    }
    out.push_back(std::move(pt));
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo)) fail(ErrorKind::Input, "log_grid: need 0 < lo < hi");
  if (count < 2) fail(ErrorKind::Input, "log_grid: need at least two points");
  std::vector<double> grid(count);
  const double a = std::log10(lo), b = std::log10(hi);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

namespace {

void require_increasing(std::span<const double> tgrid) {
  if (tgrid.empty()) fail(ErrorKind::Input, "time grid is empty");
  for (std::size_t i = 1; i < tgrid.size(); ++i)
    if (!(tgrid[i] > tgrid[i - 1])) fail(ErrorKind::Input, "time grid must be strictly increasing");
}

}  // namespace

Matrix zero_input_response(const Matrix& a, std::span<const double> x0, std::span<const double> tgrid) {
  if (!a.is_square() || a.rows() != x0.size())
    fail(ErrorKind::Dimension, "zero_input_response: x0 does not match A");
  require_increasing(tgrid);
  const std::size_t n = a.rows();
  Matrix out(tgrid.size(), n);
  for (std::size_t k = 0; k < tgrid.size(); ++k) {
    const auto x = expm(a, tgrid[k] - tgrid.front()) * x0;
    for (std::size_t i = 0; i < n; ++i) out(k, i) = x[i];
  }
  return out;
}

Matrix zero_state_response(const StateSpace& sys, const Matrix& u, std::span<const double> tgrid) {
  require_increasing(tgrid);
  const std::size_t n = sys.states(), m = sys.inputs();
  if (u.rows() != tgrid.size() || u.cols() != m)
    fail(ErrorKind::Dimension, "zero_state_response: input samples must be grid length x inputs");
  Matrix aug(n + m, n + m);
  aug.set_block(0, 0, sys.a());
  aug.set_block(0, n, sys.b());

  Matrix out(tgrid.size(), n);
  std::vector<double> x(n, 0.0);
  double cached_dt = -1.0;
  Matrix phi, gamma;
  for (std::size_t k = 0; k + 1 < tgrid.size(); ++k) {
    const double dt = tgrid[k + 1] - tgrid[k];
    if (dt != cached_dt) {
      const Matrix e = expm(aug, dt);
      phi = e.block(0, 0, n, n);
      gamma = e.block(0, n, n, m);
      cached_dt = dt;
    }
    std::vector<double> uk(m);
    for (std::size_t j = 0; j < m; ++j) uk[j] = u(k, j);
    auto next = phi * std::span<const double>(x);
    const auto forced = gamma * std::span<const double>(uk);
    for (std::size_t i = 0; i < n; ++i) {
      next[i] += forced[i];
      out(k + 1, i) = next[i];
    }
    x = std::move(next);
  }
  return out;
}

std::vector<double> uniform_grid(double horizon, double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0) || dt > horizon)
    fail(ErrorKind::Input, "uniform_grid: need 0 < dt <= horizon");
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) grid[k] = std::min(static_cast<double>(k) * dt, horizon);
  grid.back() = horizon;
  return grid;
}

StepResponse step_response(const StateSpace& sys, double horizon, double dt) {
  if (!(horizon > 0.0)) fail(ErrorKind::Input, "step_response: horizon must be positive");
  StepResponse out;
  out.times = uniform_grid(horizon, dt);
  const std::size_t m = sys.inputs(), p = sys.outputs();
  for (std::size_t j = 0; j < m; ++j) {
    Matrix u(out.times.size(), m);
    for (std::size_t k = 0; k < out.times.size(); ++k) u(k, j) = 1.0;
    const Matrix x = zero_state_response(sys, u, out.times);
    Matrix y = x * sys.c().transpose();
    for (std::size_t k = 0; k < out.times.size(); ++k)
      for (std::size_t i = 0; i < p; ++i) y(k, i) += sys.d()(i, j);
    out.outputs.push_back(std::move(y));
  }
  return out;
}

StateSpace observer_compensator(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& k,
                                const Matrix& l) {
  return StateSpace(a - b * k - l * c, l, k);
}

StateSpace series(const StateSpace& first, const StateSpace& second) {
  if (first.outputs() != second.inputs())
    fail(ErrorKind::Dimension, "series: output count of the first system must match inputs of the second");
  const std::size_t n1 = first.states(), n2 = second.states();
  Matrix a(n1 + n2, n1 + n2);
  a.set_block(0, 0, first.a());
  a.set_block(n1, 0, second.b() * first.c());
  a.set_block(n1, n1, second.a());
  const Matrix b = vstack(first.b(), second.b() * first.d());
  const Matrix c = hstack(second.d() * first.c(), second.c());
  return StateSpace(a, b, c, second.d() * first.d());
}

std::optional<double> settling_time(std::span<const double> times, std::span<const double> deviation,
                                    double threshold) {
  if (times.size() != deviation.size() || times.empty())
    fail(ErrorKind::Dimension, "settling_time: series lengths differ or are empty");
  if (deviation.back() > threshold) return std::nullopt;
  std::size_t first_inside = 0;
  for (std::size_t k = times.size(); k-- > 0;) {
    if (deviation[k] > threshold) {
      first_inside = k + 1;
      break;
    }
  }
  return times[first_inside] - times.front();
}

}  // namespace orbctl
