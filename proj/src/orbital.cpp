#include "orbctl/orbital.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "orbctl/error.hpp"

namespace orbctl {

void SpacecraftParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) fail(ErrorKind::Validation, "spacecraft mass must be positive");
  if (!(area > 0.0) || !std::isfinite(area)) fail(ErrorKind::Validation, "spacecraft area must be positive");
  if (!(reflectivity_multiplier >= 1.0 && reflectivity_multiplier <= 2.0))
    fail(ErrorKind::Validation, "reflectivity multiplier must lie in [1, 2]");
}

void SrpConfig::validate() const {
  if (!(theta0 >= 0.0 && theta0 <= std::numbers::pi / 2))
    fail(ErrorKind::Validation, "srp theta0 must lie in [0, pi/2]");
  if (mode == SrpMode::Irradiance && !(irradiance >= 0.0 && std::isfinite(irradiance)))
    fail(ErrorKind::Validation, "srp irradiance must be non-negative");
  if (mode == SrpMode::DirectMagnitude && !(magnitude_w >= 0.0 && std::isfinite(magnitude_w)))
    fail(ErrorKind::Validation, "srp magnitude must be non-negative");
}

double OrbitState::radius() const { return std::hypot(position[0], position[1]); }
double OrbitState::speed() const { return std::hypot(velocity[0], velocity[1]); }

std::pair<double, double> srp_force(double irradiance, double area, double theta, const PhysicalConstants& constants,
                                    double reflectivity_multiplier) {
  if (!(irradiance >= 0.0)) fail(ErrorKind::Input, "srp_force: irradiance must be non-negative");
  if (!(area > 0.0)) fail(ErrorKind::Input, "srp_force: area must be positive");
  const double pressure = reflectivity_multiplier * irradiance / (constants.c_light * 1000.0);  // Pa
  const double c = std::cos(theta), s = std::sin(theta);
  return {pressure * area * c * c, pressure * area * c * s};
}

Vec2 srp_accel(const SrpConfig& cfg, const SpacecraftParams& craft, const PhysicalConstants& constants) {
  cfg.validate();
  const double c = std::cos(cfg.theta0), s = std::sin(cfg.theta0);
  if (cfg.mode == SrpMode::DirectMagnitude) return {cfg.magnitude_w * c * c, cfg.magnitude_w * s * c};
  craft.validate();
  const auto [fn, fs] = srp_force(cfg.irradiance, craft.area, cfg.theta0, constants, craft.reflectivity_multiplier);
  return {fn / craft.mass / 1000.0, fs / craft.mass / 1000.0};
}

Vec4 two_body_srp_derivative(const OrbitState& state, const Vec2& a_srp, const Vec2& u,
                             const PhysicalConstants& constants) {
  const double r = state.radius();
  if (r < 1.0) {
    std::ostringstream os;
    os << "two-body dynamics: radius " << r << " km is at the gravitational singularity";
    fail(ErrorKind::Numerical, os.str());
  }
  const double k = -constants.mu / (r * r * r);
  return {state.velocity[0], state.velocity[1], k * state.position[0] + a_srp[0] + u[0],
          k * state.position[1] + a_srp[1] + u[1]};
}

double natural_frequency_sq(double r0, const PhysicalConstants& constants) {
  if (!(r0 > 0.0)) fail(ErrorKind::Input, "linearization radius must be positive");
  return constants.mu / (r0 * r0 * r0);
}

StateSpace linearize_plant(double r0, const PhysicalConstants& constants, double sign) {
  const double w2 = sign * natural_frequency_sq(r0, constants);
  Matrix a{{0, 0, 1, 0}, {0, 0, 0, 1}, {w2, 0, 0, 0}, {0, w2, 0, 0}};
  Matrix b{{0, 0}, {0, 0}, {1, 0}, {0, 1}};
  Matrix c{{1, 0, 0, 0}, {0, 1, 0, 0}};
  return StateSpace(a, b, c);
}

Vec2 lambert_initial_velocity(double v0, double phi0, double theta0) {
  if (!(v0 >= 0.0)) fail(ErrorKind::Input, "guidance speed must be non-negative");
  const double angle = std::numbers::pi / 2 - phi0 + theta0;
  return {v0 * std::cos(angle), v0 * std::sin(angle)};
}

OdeSolution propagate_two_body(const OrbitState& initial, std::span<const double> tgrid,
                               const PhysicalConstants& constants, const OdeOptions& options, const Vec2& a_srp) {
  const Vec2 zero{0.0, 0.0};
  auto rhs = [&](double, std::span<const double> y, std::span<double> dy) {
    const Vec4 d = two_body_srp_derivative(OrbitState::from(y), a_srp, zero, constants);
    for (std::size_t i = 0; i < 4; ++i) dy[i] = d[i];
  };
  const Vec4 y0 = initial.packed();
  return integrate_dopri5(rhs, y0, tgrid, options);
}

OrbitState propagate_two_body(const OrbitState& initial, double duration, const PhysicalConstants& constants,
                              const OdeOptions& options) {
  if (!(duration > 0.0)) return initial;
  const double grid[2] = {0.0, duration};
  const auto sol = propagate_two_body(initial, grid, constants, options);
  return OrbitState::from(sol.states.data().subspan(4, 4));
}

double specific_energy(const OrbitState& s, const PhysicalConstants& constants) {
  const double v = s.speed();
  return 0.5 * v * v - constants.mu / s.radius();
}

double angular_momentum(const OrbitState& s) {
  return s.position[0] * s.velocity[1] - s.position[1] * s.velocity[0];
}

}  // namespace orbctl
