#pragma once

#include <array>
#include <span>
#include <utility>

#include "orbctl/lti.hpp"
#include "orbctl/ode.hpp"

namespace orbctl {

struct PhysicalConstants {
  double mu = 3.986004418e5;       // km³/s²
  double c_light = 2.99792458e5;   // km/s
};

struct SpacecraftParams {
  double mass = 500.0;                  // kg
  double area = 20.0;                   // m²
  double reflectivity_multiplier = 1.0; // 1 absorbing, 2 specular at normal incidence

  void validate() const;
};

enum class SrpMode { Irradiance, DirectMagnitude };

struct SrpConfig {
  SrpMode mode = SrpMode::DirectMagnitude;
  double irradiance = 1361.0;  // W/m²
  double magnitude_w = 1e-9;   // km/s²
  double theta0 = 0.043;       // rad

  void validate() const;
};

using Vec2 = std::array<double, 2>;
using Vec4 = std::array<double, 4>;

/// Planar position (km) and velocity (km/s).
struct OrbitState {
  Vec2 position{};
  Vec2 velocity{};

  Vec4 packed() const { return {position[0], position[1], velocity[0], velocity[1]}; }
  static OrbitState from(std::span<const double> x) { return {{x[0], x[1]}, {x[2], x[3]}}; }
  double radius() const;
  double speed() const;
};

/// Flat-plate direct radiation force (normal, shear) in newtons.
std::pair<double, double> srp_force(double irradiance, double area, double theta,
                                    const PhysicalConstants& constants = {}, double reflectivity_multiplier = 1.0);

/// SRP acceleration (km/s²) along the local axes.
Vec2 srp_accel(const SrpConfig& cfg, const SpacecraftParams& craft, const PhysicalConstants& constants = {});

/// (ṗ, q̇, −μp/r³ + a_x + u_x, −μq/r³ + a_y + u_y)
Vec4 two_body_srp_derivative(const OrbitState& state, const Vec2& a_srp, const Vec2& u,
                             const PhysicalConstants& constants = {});

/// ω² = μ / r0³
double natural_frequency_sq(double r0, const PhysicalConstants& constants = {});

/// Planar plant with states [x_p, y_p, ẋ_p, ẏ_p], accelerations as inputs and
/// positions as outputs. The restoring terms are sign·ω².
StateSpace linearize_plant(double r0, const PhysicalConstants& constants = {}, double sign = 1.0);

/// Guidance velocity v0·(cos(π/2 − φ0 + θ0), sin(π/2 − φ0 + θ0)).
Vec2 lambert_initial_velocity(double v0, double phi0, double theta0);

enum class TransferDirection { Prograde, Retrograde };

struct LambertSolution {
  Vec2 v1{};
  Vec2 v2{};
  int iterations = 0;
};

/// Single-revolution Lambert problem by universal variables.
LambertSolution lambert_solve(const Vec2& r1, const Vec2& r2, double tof, TransferDirection direction,
                              const PhysicalConstants& constants = {});

/// Closed-form two-body propagation by universal variables (f and g series).
OrbitState kepler_propagate(const OrbitState& initial, double dt, const PhysicalConstants& constants = {});

/// Two-body (optionally with constant SRP) propagation sampled on `tgrid`.
OdeSolution propagate_two_body(const OrbitState& initial, std::span<const double> tgrid,
                               const PhysicalConstants& constants = {}, const OdeOptions& options = {},
                               const Vec2& a_srp = {0.0, 0.0});

/// Final state after `duration` seconds.
OrbitState propagate_two_body(const OrbitState& initial, double duration, const PhysicalConstants& constants = {},
                              const OdeOptions& options = {});

double specific_energy(const OrbitState& s, const PhysicalConstants& constants = {});
double angular_momentum(const OrbitState& s);

}  // namespace orbctl
