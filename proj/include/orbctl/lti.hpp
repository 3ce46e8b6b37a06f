#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orbctl/linalg.hpp"
#include "orbctl/matrix.hpp"

namespace orbctl {

/// Continuous-time LTI system  ẋ = a x + b u,  y = c x + d u.
class StateSpace {
 public:
  StateSpace() = default;
  /// d may be empty, meaning a p×m zero block.
  StateSpace(Matrix a, Matrix b, Matrix c, Matrix d = {});

  const Matrix& a() const noexcept { return a_; }
  const Matrix& b() const noexcept { return b_; }
  const Matrix& c() const noexcept { return c_; }
  const Matrix& d() const noexcept { return d_; }

  std::size_t states() const noexcept { return a_.rows(); }
  std::size_t inputs() const noexcept { return b_.cols(); }
  std::size_t outputs() const noexcept { return c_.rows(); }

 private:
  Matrix a_, b_, c_, d_;
};

enum class StabilityClass { AsymptoticallyStable, MarginallyStable, Unstable };

const char* to_string(StabilityClass cls);

/// [B, AB, ..., A^{n-1}B]
Matrix controllability_matrix(const StateSpace& sys);

/// [C; CA; ...; CA^{n-1}]
Matrix observability_matrix(const StateSpace& sys);

/// Spectral classification with axis tolerance 1e-9·max(1, ‖a‖∞).
/// Multiplicity of axis eigenvalues is not examined.
StabilityClass stability_class(const Matrix& a);
StabilityClass classify_spectrum(const Spectrum& spectrum, double tol);

/// C (sI − A)⁻¹ B + D.
ComplexMatrix transfer_eval(const StateSpace& sys, std::complex<double> s);

struct FrequencyPoint {
  double omega = 0.0;
  ComplexMatrix response;
  bool ok = true;
  std::string error;  // set when the point could not be evaluated
};

/// Evaluates the transfer matrix on s = jω. The grid must be strictly increasing;
/// points that fail to evaluate are flagged instead of aborting the sweep.
std::vector<FrequencyPoint> frequency_response(const StateSpace& sys, std::span<const double> omegas,
                                               bool require_positive = true);

/// Logarithmically spaced grid, inclusive of both ends.
std::vector<double> log_grid(double lo = 1e-5, double hi = 1e1, std::size_t count = 400);

/// Rows are the states expm(a (t_k − t_0)) x0 for each grid time.
Matrix zero_input_response(const Matrix& a, std::span<const double> x0, std::span<const double> tgrid);

/// Forced response from the zero state. Row k of `u` is the input held on
/// [t_k, t_{k+1}); the last row is unused. Each interval is integrated exactly
/// through exp([[A, B], [0, 0]] Δt).
Matrix zero_state_response(const StateSpace& sys, const Matrix& u, std::span<const double> tgrid);

struct StepResponse {
  std::vector<double> times;
  /// One samples×p block per input channel.
  std::vector<Matrix> outputs;
};

/// Unit step applied to each input channel separately.
StepResponse step_response(const StateSpace& sys, double horizon, double dt);

/// Compensator from measured output to control for an observer-based loop:
/// (A − BK − LC, L, K, 0).
StateSpace observer_compensator(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& k,
                                const Matrix& l);

/// Cascade: first then second (y = second(first(u))).
StateSpace series(const StateSpace& first, const StateSpace& second);

/// Earliest time after which `deviation` stays within `threshold`, measured from
/// times.front(). Absent when the last sample is still outside.
std::optional<double> settling_time(std::span<const double> times, std::span<const double> deviation,
                                    double threshold);

/// Uniform grid 0, dt, 2dt, ... with the horizon as the final point.
std::vector<double> uniform_grid(double horizon, double dt);

}  // namespace orbctl
