#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orbctl/lti.hpp"
#include "orbctl/ode.hpp"
#include "orbctl/orbital.hpp"
#include "orbctl/synthesis.hpp"

namespace orbctl {

enum class Method { Uncontrolled, Lqr, ObserverOnly, ObserverLqr };
enum class ReferenceMode { LambertArc, ConstantSetpoint };
enum class PlantMode { Nonlinear, Linear };
enum class DisturbanceMode { MatchedViaB, Custom };

const char* to_string(Method m);
const char* to_string(ReferenceMode m);
const char* to_string(PlantMode m);
const char* to_string(DisturbanceMode m);

inline constexpr Method kAllMethods[4] = {Method::Uncontrolled, Method::Lqr, Method::ObserverOnly,
                                          Method::ObserverLqr};

inline bool has_observer(Method m) { return m == Method::ObserverOnly || m == Method::ObserverLqr; }

struct DriftSettings {
  double duration = 86400.0;
  double output_dt = 60.0;
  SpacecraftParams craft{500.0, 20.0, 2.0};
  SrpConfig srp{SrpMode::Irradiance, 1361.0, 1e-9, 0.0};
  OrbitState orbit{{4292.87, 8924.17}, {7.8, 0.0}};
};

struct Scenario {
  OrbitState x0{{4292.87, 8924.17}, {7.8, 0.0}};
  OrbitState xf{{-2000.0, 8878.0}, {-2.728, -6.56}};
  double horizon = 4000.0;
  double output_dt = 0.1;
  double rtol = 1e-8;
  double atol = 1e-9;

  PhysicalConstants constants;
  SrpConfig srp;
  SpacecraftParams craft;
  Weights weights{Matrix::identity(4), Matrix::identity(2)};
  double observer_speed_factor = kDefaultObserverSpeed;
  std::optional<std::vector<std::complex<double>>> observer_base_poles;

  Method method = Method::ObserverLqr;
  ReferenceMode reference_mode = ReferenceMode::LambertArc;
  TransferDirection lambert_direction = TransferDirection::Prograde;
  std::optional<double> lambert_transfer_time;  // defaults to the horizon

  std::optional<OrbitState> xhat0;  // defaults to x0
  Vec2 noise_sigma{0.0, 0.0};       // km, per measured position
  std::uint64_t noise_seed = 42;

  DisturbanceMode disturbance_mode = DisturbanceMode::MatchedViaB;
  Matrix disturbance_matrix;  // used when Custom, 4×k with k = disturbance components
  PlantMode plant_mode = PlantMode::Nonlinear;
  double linearization_sign = 1.0;
  std::optional<double> linearization_radius;  // defaults to ‖x0 position‖
  std::optional<Matrix> output_matrix;         // defaults to position outputs

  double settle_band = 0.02;
  GammaRange hinf_range{0.1, 100.0};
  DriftSettings drift;

  double freq_lo = 1e-5;
  double freq_hi = 1e1;
  std::size_t freq_points = 400;
  double step_horizon = 10.0;
  double step_dt = 0.01;

  /// Throws Validation on any invariant violation.
  void validate() const;
  OdeOptions ode_options() const;
};

/// Plant, disturbance channel and gains derived from a scenario.
struct Design {
  StateSpace plant;
  Matrix g;  // disturbance input matrix
  Vec2 srp{};
  double omega_sq = 0.0;
  SynthesisResult lqr;  // empty k when not synthesized
  Matrix l;             // empty when not synthesized
  std::vector<std::string> warnings;
};

/// Builds the linearized plant and, as required by `method`, the LQR and
/// observer gains.
Design design_scenario(const Scenario& s, Method method);

struct SimulationRecord {
  Method method = Method::Uncontrolled;
  std::vector<double> times;
  Matrix true_states;                     // T×4 absolute state
  Matrix deviation;                       // T×4, true state minus reference
  std::optional<Matrix> estimates;        // T×4 absolute estimate
  std::optional<Matrix> estimation_error; // T×4, true minus estimate
  Matrix controls;                        // T×2 (one column per input)
  Matrix reference;                       // T×4
  OdeStats stats;
  std::vector<std::string> warnings;
};

struct Metrics {
  double terminal_error = 0.0;  // km
  double rms_error = 0.0;       // km
  double control_energy = 0.0;  // km²/s³
  std::optional<double> settling_time;
};

SimulationRecord run_scenario(const Scenario& s);

/// Position error to the target: terminal value, trapezoidal RMS over the
/// record and ∫uᵀu dt; settling uses band × initial position error.
Metrics compute_metrics(const SimulationRecord& rec, const OrbitState& xf, double settle_band = 0.02);

/// Per-sample position error norm ‖p(t) − p_f‖.
std::vector<double> position_error_series(const SimulationRecord& rec, const OrbitState& xf);

/// T×2 matrix of (‖e_position‖, ‖e_velocity‖).
Matrix estimation_error_series(const SimulationRecord& rec);

struct MethodReport {
  Method method = Method::Uncontrolled;
  std::optional<Metrics> metrics;
  double initial_error = 0.0;
  std::string error;  // set when the run failed
  Spectrum spectrum;
  std::vector<std::complex<double>> dominant;
  StabilityClass classification = StabilityClass::Unstable;
  bool divergent = false;
};

struct ComparisonReport {
  std::vector<MethodReport> methods;
  Spectrum open_loop;
  Spectrum controller;  // eig(A − BK)
  Spectrum observer;    // eig(A − LC)
  double separation_gap = 0.0;  // distance between loop spectra and the union
  bool separation_holds = false;
  std::vector<std::string> warnings;
};

/// Runs the four methods concurrently on the same scenario.
ComparisonReport compare_methods(const Scenario& s);

struct PublishedRow {
  const char* method;
  const char* eigenvalues;
  const char* assessment;
  const char* settling_time;
  const char* steady_state_error;
  const char* control_energy;
};

/// Table values printed in the source study, for side-by-side display only.
const std::vector<PublishedRow>& published_rows();

struct DriftSeries {
  std::vector<double> times;
  std::vector<double> deviation;       // km
  std::vector<double> relative_error;  // deviation / reference radius
  Vec2 srp_accel{};
};

DriftSeries srp_drift_study(double duration, const SpacecraftParams& craft, const SrpConfig& srp,
                            const OrbitState& orbit, double output_dt = 60.0, const PhysicalConstants& constants = {},
                            const OdeOptions& options = {});

/// Ballistic estimate ½·a·t².
double ballistic_drift(double accel, double duration);

}  // namespace orbctl
