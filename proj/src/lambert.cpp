// Universal-variable Lambert solver for planar single-revolution transfers.
// Velocities are recovered in radial/transverse components, which stay finite
// for 180° transfers where the Lagrange g coefficient vanishes.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "orbctl/error.hpp"
#include "orbctl/orbital.hpp"

namespace orbctl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxIterations = 100;
constexpr double kTofTolerance = 1e-9;

double stumpff_c(double z) {
  if (std::abs(z) < 0.1)
    return 1.0 / 2 - z / 24 + z * z / 720 - z * z * z / 40320 + z * z * z * z / 3628800 -
           z * z * z * z * z / 479001600;
  if (z > 0) {
    const double h = std::sin(0.5 * std::sqrt(z));
    return 2.0 * h * h / z;
  }
  return (std::cosh(std::sqrt(-z)) - 1.0) / (-z);
}

double stumpff_s(double z) {
  if (std::abs(z) < 0.1)
    return 1.0 / 6 - z / 120 + z * z / 5040 - z * z * z / 362880 + z * z * z * z / 39916800 -
           z * z * z * z * z / 6227020800;
  if (z > 0) {
    const double sz = std::sqrt(z);
    return (sz - std::sin(sz)) / (sz * sz * sz);
  }
  const double sz = std::sqrt(-z);
  return (std::sinh(sz) - sz) / (sz * sz * sz);
}

struct Geometry {
  double r1, r2, cos_dtheta, sin_dtheta, a;
  double mu;

  double y(double z) const { return r1 + r2 + a * (z * stumpff_s(z) - 1.0) / std::sqrt(stumpff_c(z)); }

  /// Time of flight minus target; a negative y maps to the lower end of the branch.
  double residual(double z, double tof) const {
    const double yz = y(z);
    if (yz < 0.0) return -tof;
    const double chi = std::sqrt(yz / stumpff_c(z));
    return (chi * chi * chi * stumpff_s(z) + a * std::sqrt(yz)) / std::sqrt(mu) - tof;
  }
};

LambertSolution solve_prograde(const Vec2& p1, const Vec2& p2, double tof, const PhysicalConstants& constants) {
  Geometry g{};
  g.mu = constants.mu;
  g.r1 = std::hypot(p1[0], p1[1]);
  g.r2 = std::hypot(p2[0], p2[1]);
  if (g.r1 <= 0.0 || g.r2 <= 0.0) fail(ErrorKind::DegenerateGeometry, "lambert: endpoint at the attractor");
  g.cos_dtheta = (p1[0] * p2[0] + p1[1] * p2[1]) / (g.r1 * g.r2);
  g.sin_dtheta = (p1[0] * p2[1] - p1[1] * p2[0]) / (g.r1 * g.r2);
  g.cos_dtheta = std::clamp(g.cos_dtheta, -1.0, 1.0);
  if (1.0 - g.cos_dtheta <= 1e-14)
    fail(ErrorKind::DegenerateGeometry, "lambert: endpoints are collinear on the same ray (zero transfer angle)");
  g.a = g.sin_dtheta * std::sqrt(g.r1 * g.r2 / (1.0 - g.cos_dtheta));

  // Bracket z: the residual increases monotonically and diverges as z → 4π².
  double z_hi = kTwoPi * kTwoPi * (1.0 - 1e-6);
  double z_lo = 0.0;
  if (g.residual(z_hi, tof) < 0.0) fail(ErrorKind::InfeasibleTransfer, "lambert: time of flight too long for a single revolution");
  double step = 1.0;
  while (g.residual(z_lo, tof) > 0.0) {
    z_hi = z_lo;
    z_lo -= step;
    step *= 2.0;
    if (z_lo < -4.0e5) fail(ErrorKind::InfeasibleTransfer, "lambert: no root bracket for the requested time of flight");
  }

  double z = 0.5 * (z_lo + z_hi);
  int it = 0;
  bool converged = false;
  for (; it < kMaxIterations; ++it) {
    const double f = g.residual(z, tof);
    if (std::abs(f) <= kTofTolerance) {
      converged = true;
      break;
    }
    if (f < 0.0)
      z_lo = z;
    else
      z_hi = z;
    const double dz = 1e-7 * std::max(1.0, std::abs(z));
    const double slope = (g.residual(z + dz, tof) - g.residual(z - dz, tof)) / (2.0 * dz);
    double next = slope > 0.0 ? z - f / slope : 0.5 * (z_lo + z_hi);
    if (!(next > z_lo && next < z_hi)) next = 0.5 * (z_lo + z_hi);
    if (z_hi - z_lo <= 1e-15 * std::max(1.0, std::abs(z))) {
      z = next;
      converged = std::abs(g.residual(z, tof)) <= 1e-6;
      break;
    }
    z = next;
  }
  if (!converged) fail(ErrorKind::Numerical, "lambert: universal-variable iteration did not converge");

  const double yz = g.y(z);
  const double sc = std::sqrt(stumpff_c(z));
  const double zs1 = (z * stumpff_s(z) - 1.0) / sc;
  const double one_minus_cos = 1.0 - g.cos_dtheta;
  const double h = std::sqrt(g.mu * g.r1 * g.r2 * one_minus_cos / yz);
  const double k = std::sqrt(g.mu / yz);
  const double vr1 = k * (g.sin_dtheta * std::sqrt(g.r2 / (g.r1 * one_minus_cos)) + zs1);
  const double vr2 = -k * (g.sin_dtheta * std::sqrt(g.r1 / (g.r2 * one_minus_cos)) + zs1);
  const double vt1 = h / g.r1, vt2 = h / g.r2;

  const Vec2 u1{p1[0] / g.r1, p1[1] / g.r1}, u2{p2[0] / g.r2, p2[1] / g.r2};
  LambertSolution out;
  out.v1 = {vr1 * u1[0] - vt1 * u1[1], vr1 * u1[1] + vt1 * u1[0]};
  out.v2 = {vr2 * u2[0] - vt2 * u2[1], vr2 * u2[1] + vt2 * u2[0]};
  out.iterations = it;
  return out;
}

}  // namespace

OrbitState kepler_propagate(const OrbitState& initial, double dt, const PhysicalConstants& constants) {
  if (dt == 0.0) return initial;
  const double mu = constants.mu, smu = std::sqrt(mu);
  const double r0 = initial.radius();
  if (r0 < 1.0) fail(ErrorKind::Numerical, "kepler_propagate: radius at the gravitational singularity");
  const double vr0 = (initial.position[0] * initial.velocity[0] + initial.position[1] * initial.velocity[1]) / r0;
  const double v0 = initial.speed();
  const double alpha = 2.0 / r0 - v0 * v0 / mu;

  auto kepler = [&](double chi) {
    const double z = alpha * chi * chi;
    return r0 * vr0 / smu * chi * chi * stumpff_c(z) + (1.0 - alpha * r0) * chi * chi * chi * stumpff_s(z) +
           r0 * chi - smu * dt;
  };
  auto radius_at = [&](double chi) {
    const double z = alpha * chi * chi;
    return r0 * vr0 / smu * chi * (1.0 - z * stumpff_s(z)) + (1.0 - alpha * r0) * chi * chi * stumpff_c(z) + r0;
  };
  double chi = smu * std::abs(alpha) * dt;
  if (alpha <= 0.0 || !std::isfinite(chi) || chi == 0.0) chi = smu * dt / r0;
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    const double f = kepler(chi);
    const double df = radius_at(chi);  // dF/dχ equals r(χ)
    const double step = f / df;
    chi -= step;
    if (std::abs(step) <= 1e-13 * std::max(1.0, std::abs(chi))) {
      converged = true;
      break;
    }
  }
  if (!converged) converged = std::abs(kepler(chi)) <= 1e-12 * smu * std::abs(dt);
  if (!converged || !std::isfinite(chi)) fail(ErrorKind::Numerical, "kepler_propagate: universal anomaly did not converge");

  const double z = alpha * chi * chi;
  const double f = 1.0 - chi * chi / r0 * stumpff_c(z);
  const double g = dt - chi * chi * chi * stumpff_s(z) / smu;
  OrbitState out;
  for (int i = 0; i < 2; ++i) out.position[i] = f * initial.position[i] + g * initial.velocity[i];
  const double r = out.radius();
  const double fdot = smu / (r * r0) * (z * chi * stumpff_s(z) - chi);
  const double gdot = 1.0 - chi * chi / r * stumpff_c(z);
  for (int i = 0; i < 2; ++i) out.velocity[i] = fdot * initial.position[i] + gdot * initial.velocity[i];
  return out;
}

LambertSolution lambert_solve(const Vec2& r1, const Vec2& r2, double tof, TransferDirection direction,
                              const PhysicalConstants& constants) {
  for (double v : {r1[0], r1[1], r2[0], r2[1], tof})
    if (!std::isfinite(v)) fail(ErrorKind::Input, "lambert: non-finite input");
  if (!(tof > 0.0)) fail(ErrorKind::Input, "lambert: time of flight must be positive");
  if (std::hypot(r1[0] - r2[0], r1[1] - r2[1]) <= 1e-12 * std::max(1.0, std::hypot(r1[0], r1[1])))
    fail(ErrorKind::DegenerateGeometry, "lambert: identical endpoints");
  if (direction == TransferDirection::Prograde) return solve_prograde(r1, r2, tof, constants);
  // Clockwise motion becomes counter-clockwise after reflecting the second axis.
  auto sol = solve_prograde({r1[0], -r1[1]}, {r2[0], -r2[1]}, tof, constants);
  sol.v1[1] = -sol.v1[1];
  sol.v2[1] = -sol.v2[1];
  return sol;
}

}  // namespace orbctl
