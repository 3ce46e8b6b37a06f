#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orbctl/linalg.hpp"
#include "orbctl/lti.hpp"
#include "orbctl/matrix.hpp"

namespace orbctl {

/// Quadratic cost weights: q symmetric PSD (n×n), r symmetric PD (m×m).
struct Weights {
  Matrix q;
  Matrix r;

  /// Throws Input if shapes, symmetry or definiteness are violated.
  void validate(std::size_t states, std::size_t inputs) const;
};

struct SynthesisResult {
  Matrix p;  // Riccati solution
  Matrix k;  // state feedback gain, m×n
  Matrix l;  // observer gain, n×p (empty when not synthesized)
  std::optional<double> gamma;
  Spectrum closed_loop_spectrum;
};

/// Stabilizing solution of AᵀP + PA − PBR⁻¹BᵀP + Q = 0 by Newton–Kleinman.
Matrix solve_care(const Matrix& a, const Matrix& b, const Weights& w);

/// ‖AᵀP + PA − PBR⁻¹BᵀP + Q‖∞
double care_residual(const Matrix& a, const Matrix& b, const Weights& w, const Matrix& p);

SynthesisResult lqr_gain(const Matrix& a, const Matrix& b, const Weights& w);

/// A group of states that A couples together, with the inputs that reach it.
struct Channel {
  std::vector<std::size_t> states;
  std::vector<std::size_t> inputs;
};

/// Connected components of the graph joining states through A's sparsity and
/// inputs through B's columns, ordered by lowest state index.
std::vector<Channel> decompose_channels(const Matrix& a, const Matrix& b);

/// Gain K with eig(A − BK) = desired. The system must split into single-input
/// channels; desired poles are handed out to channels in order, keeping
/// conjugate pairs together.
Matrix place_poles(const Matrix& a, const Matrix& b, std::span<const std::complex<double>> desired);

inline constexpr double kDefaultObserverSpeed = 4.0;

/// L = place(Aᵀ, Cᵀ, speed_factor × base_poles)ᵀ. A factor outside [3, 5]
/// appends a warning to `warnings` when provided.
Matrix observer_gain(const Matrix& a, const Matrix& c, double speed_factor,
                     std::span<const std::complex<double>> base_poles,
                     std::vector<std::string>* warnings = nullptr);

struct SeparationLoop {
  Matrix error_form;     // [x; e]:   [[A−BK, BK], [0, A−LC]]
  Matrix estimate_form;  // [x; x̂]:  [[A, −BK], [LC, A−BK−LC]]
};

SeparationLoop assemble_separation_loop(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& k,
                                        const Matrix& l);

struct GammaRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Stabilizing PSD solution of AᵀP + PA − P(BR⁻¹Bᵀ − γ⁻²GGᵀ)P + Q = 0, or
/// nothing when the Newton iteration does not reach one.
std::optional<Matrix> hinf_riccati(const Matrix& a, const Matrix& b, const Matrix& g, const Weights& w,
                                   double gamma, const Matrix* seed = nullptr);

/// Smallest feasible γ in the range (relative gap 1e-3) and K = R⁻¹BᵀP.
SynthesisResult hinf_state_feedback(const Matrix& a, const Matrix& b, const Matrix& g, const Weights& w,
                                    GammaRange range);

/// Closed loop from disturbance to z = [Q^{1/2} x; R^{1/2} u] under u = −Kx.
StateSpace hinf_performance_system(const Matrix& a, const Matrix& b, const Matrix& g, const Weights& w,
                                   const Matrix& k);

/// Default sweep: 2000 log-spaced points over six decades centred on the
/// geometric mean eigenvalue magnitude, plus ω = 0.
std::vector<double> default_hinf_grid(const Matrix& a);

/// Peak largest singular value over the grid (refined locally around the best
/// sample). A lower bound on the true norm.
double hinf_norm(const StateSpace& sys, std::span<const double> grid = {});

namespace reference_gains {
/// 1×4 gain printed for poles at [−1, −1]; kept for side-by-side reporting.
inline constexpr double kPublishedK[4] = {0.293, 0.169, 9.115, 4.998};
/// Initial companion-form gain printed alongside it.
inline constexpr double kPublishedKCcf[4] = {3.721, 5.0, 3.998, 1.0};
}  // namespace reference_gains

}  // namespace orbctl
