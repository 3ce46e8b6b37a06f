#include "orbctl/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <sstream>

#include "orbctl/error.hpp"

namespace orbctl {

const char* to_string(Method m) {
  switch (m) {
    case Method::Uncontrolled: return "uncontrolled";
    case Method::Lqr: return "lqr";
    case Method::ObserverOnly: return "observer_only";
    case Method::ObserverLqr: return "observer_lqr";
  }
  return "unknown";
}

const char* to_string(ReferenceMode m) {
  return m == ReferenceMode::LambertArc ? "lambert_arc" : "constant_setpoint";
}

const char* to_string(PlantMode m) { return m == PlantMode::Nonlinear ? "nonlinear" : "linear"; }

const char* to_string(DisturbanceMode m) { return m == DisturbanceMode::MatchedViaB ? "matched" : "custom"; }

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::Validation, what);
}

bool finite_state(const OrbitState& s) {
  return std::isfinite(s.position[0]) && std::isfinite(s.position[1]) && std::isfinite(s.velocity[0]) &&
         std::isfinite(s.velocity[1]);
}

/// g(p_ref + dp) − g(p_ref) without cancellation in the radius difference.
Vec2 gravity_difference(const Vec2& p_ref, const Vec2& dp, double mu) {
  const double rr2 = p_ref[0] * p_ref[0] + p_ref[1] * p_ref[1];
  const double rr = std::sqrt(rr2);
  const Vec2 p{p_ref[0] + dp[0], p_ref[1] + dp[1]};
  const double r = std::hypot(p[0], p[1]);
  if (r < 1.0 || rr < 1.0) fail(ErrorKind::Numerical, "two-body dynamics: trajectory reached the gravitational singularity");
  const double q = 2.0 * (p_ref[0] * dp[0] + p_ref[1] * dp[1]) + dp[0] * dp[0] + dp[1] * dp[1];
  const double dr = q / (r + rr);
  const double inv_r3 = 1.0 / (r * r * r), inv_rr3 = 1.0 / (rr2 * rr);
  const double diff = -dr * (rr2 + rr * r + r * r) * inv_r3 * inv_rr3;
  return {-mu * (dp[0] * inv_r3 + p_ref[0] * diff), -mu * (dp[1] * inv_r3 + p_ref[1] * diff)};
}

Vec2 gravity(const Vec2& p, double mu) {
  const double r = std::hypot(p[0], p[1]);
  if (r < 1.0) fail(ErrorKind::Numerical, "two-body dynamics: trajectory reached the gravitational singularity");
  const double k = -mu / (r * r * r);
  return {k * p[0], k * p[1]};
}

std::vector<std::complex<double>> dominant_of(const Spectrum& s) {
  std::vector<std::complex<double>> out;
  if (s.size() == 0) return out;
  const double top = s.abscissa();
  for (const auto& l : s)
    if (l.real() >= top - 1e-9 * std::max(1.0, std::abs(top))) out.push_back(l);
  return out;
}

}  // namespace

void Scenario::validate() const {
  require(finite_state(x0) && finite_state(xf), "scenario: x0 and xf must be finite");
  require(x0.radius() >= 1.0 && xf.radius() >= 1.0, "scenario: x0 and xf must lie at least 1 km from the attractor");
  require(horizon > 0.0 && std::isfinite(horizon), "scenario: horizon must be positive");
  require(output_dt > 0.0 && output_dt <= horizon, "scenario: output_dt must lie in (0, horizon]");
  require(rtol > 0.0 && atol > 0.0, "scenario: rtol and atol must be positive");
  require(constants.mu > 0.0 && constants.c_light > 0.0, "scenario: physical constants must be positive");
  try {
    srp.validate();
    craft.validate();
    weights.validate(4, 2);
  } catch (const Error& e) {
    fail(ErrorKind::Validation, std::string("scenario: ") + e.what());
  }
  require(observer_speed_factor > 0.0 && std::isfinite(observer_speed_factor),
          "scenario: observer_speed_factor must be positive");
  if (observer_base_poles) require(observer_base_poles->size() == 4, "scenario: observer_base_poles needs 4 entries");
  if (lambert_transfer_time) require(*lambert_transfer_time > 0.0, "scenario: lambert transfer_time must be positive");
  if (xhat0) require(finite_state(*xhat0), "scenario: xhat0 must be finite");
  require(noise_sigma[0] >= 0.0 && noise_sigma[1] >= 0.0, "scenario: measurement_noise_sigma must be non-negative");
  if (disturbance_mode == DisturbanceMode::Custom)
    require(disturbance_matrix.rows() == 4 && disturbance_matrix.cols() == 2,
            "scenario: custom disturbance_matrix must be 4 x 2");
  require(linearization_sign == 1.0 || linearization_sign == -1.0, "scenario: linearization_sign must be +1 or -1");
  if (linearization_radius) require(*linearization_radius > 0.0, "scenario: linearization_radius must be positive");
  if (output_matrix) {
    require(output_matrix->cols() == 4 && output_matrix->rows() >= 1, "scenario: output_matrix must have 4 columns");
    require(output_matrix->rows() == 2 || (noise_sigma[0] == 0.0 && noise_sigma[1] == 0.0),
            "scenario: measurement noise needs a two-row output_matrix");
  }
  require(settle_band > 0.0 && settle_band < 1.0, "scenario: settle_band must lie in (0, 1)");
  require(hinf_range.lo > 0.0 && hinf_range.hi > hinf_range.lo, "scenario: hinf range needs 0 < gamma_lo < gamma_hi");
  require(drift.duration > 0.0 && drift.output_dt > 0.0 && drift.output_dt <= drift.duration,
          "scenario: drift duration and output_dt must be positive");
  require(finite_state(drift.orbit), "scenario: drift orbit must be finite");
  try {
    drift.craft.validate();
    drift.srp.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Validation, std::string("scenario drift: ") + e.what());
  }
  require(freq_lo > 0.0 && freq_hi > freq_lo && freq_points >= 2, "scenario: frequency grid needs 0 < lo < hi, points >= 2");
  require(step_horizon > 0.0 && step_dt > 0.0 && step_dt <= step_horizon, "scenario: step horizon and dt must be positive");
}

OdeOptions Scenario::ode_options() const {
  OdeOptions o;
  o.rtol = rtol;
  o.atol = atol;
  return o;
}

Design design_scenario(const Scenario& s, Method method) {
  Design d;
  const double r0 = s.linearization_radius.value_or(s.x0.radius());
  const StateSpace base = linearize_plant(r0, s.constants, s.linearization_sign);
  d.omega_sq = natural_frequency_sq(r0, s.constants);
  d.plant = s.output_matrix ? StateSpace(base.a(), base.b(), *s.output_matrix) : base;
  d.g = s.disturbance_mode == DisturbanceMode::Custom ? s.disturbance_matrix : d.plant.b();
  d.srp = srp_accel(s.srp, s.craft, s.constants);
  if (method == Method::Uncontrolled) return d;

  const bool need_lqr = method != Method::ObserverOnly || !s.observer_base_poles;
  if (need_lqr) d.lqr = lqr_gain(d.plant.a(), d.plant.b(), s.weights);
  if (has_observer(method)) {
    const std::vector<std::complex<double>> base_poles =
        s.observer_base_poles ? *s.observer_base_poles
                              : std::vector<std::complex<double>>(d.lqr.closed_loop_spectrum.begin(),
                                                                  d.lqr.closed_loop_spectrum.end());
    d.l = observer_gain(d.plant.a(), d.plant.c(), s.observer_speed_factor, base_poles, &d.warnings);
    d.lqr.l = d.l;
  }
  return d;
}

SimulationRecord run_scenario(const Scenario& s) {
  s.validate();
  const Design d = design_scenario(s, s.method);
  const Method method = s.method;
  const bool observer = has_observer(method);
  const Matrix& a = d.plant.a();
  const Matrix& b = d.plant.b();
  const Matrix& c = d.plant.c();
  const std::size_t p = c.rows();
  const double mu = s.constants.mu;

  // Reference trajectory.
  const bool lambert = s.reference_mode == ReferenceMode::LambertArc;
  OrbitState ref0 = s.xf;
  if (lambert) {
    const double tof = s.lambert_transfer_time.value_or(s.horizon);
    const auto sol = lambert_solve(s.x0.position, s.xf.position, tof, s.lambert_direction, s.constants);
    ref0 = OrbitState{s.x0.position, sol.v1};
  }
  auto reference_at = [&](double t) { return lambert ? kepler_propagate(ref0, t, s.constants) : s.xf; };

  const std::size_t n_state = observer ? 8 : 4;
  std::vector<double> y0(n_state);
  const Vec4 x0 = s.x0.packed(), r0 = ref0.packed(), xh0 = s.xhat0.value_or(s.x0).packed();
  for (std::size_t i = 0; i < 4; ++i) {
    y0[i] = x0[i] - r0[i];
    if (observer) y0[4 + i] = xh0[i] - r0[i];
  }

  std::vector<double> noise(p, 0.0);
  const Matrix& k = d.lqr.k;
  const bool feedback_true = method == Method::Lqr;
  const bool feedback_estimate = method == Method::ObserverLqr;
  const std::vector<double> dist(d.srp.begin(), d.srp.end());
  const std::vector<double> gd = d.g * std::span<const double>(dist);

  auto control = [&](std::span<const double> y, double* u) {
    u[0] = u[1] = 0.0;
    if (!feedback_true && !feedback_estimate) return;
    const std::size_t off = feedback_true ? 0 : 4;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 4; ++j) u[i] -= k(i, j) * y[off + j];
  };

  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    double u[2];
    control(y, u);
    if (s.plant_mode == PlantMode::Linear) {
      for (std::size_t i = 0; i < 4; ++i) {
        double v = gd[i];
        for (std::size_t j = 0; j < 4; ++j) v += a(i, j) * y[j];
        for (std::size_t j = 0; j < 2; ++j) v += b(i, j) * u[j];
        dy[i] = v;
      }
    } else {
      const OrbitState ref = reference_at(t);
      const Vec2 dp{y[0], y[1]};
      Vec2 accel;
      if (lambert) {
        accel = gravity_difference(ref.position, dp, mu);
        dy[0] = y[2];
        dy[1] = y[3];
      } else {
        accel = gravity({ref.position[0] + dp[0], ref.position[1] + dp[1]}, mu);
        dy[0] = ref.velocity[0] + y[2];
        dy[1] = ref.velocity[1] + y[3];
      }
      dy[2] = accel[0] + u[0];
      dy[3] = accel[1] + u[1];
      for (std::size_t i = 0; i < 4; ++i) dy[i] += gd[i];
    }
    if (!observer) return;
    for (std::size_t i = 0; i < 4; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < 4; ++j) v += a(i, j) * y[4 + j];
      for (std::size_t j = 0; j < 2; ++j) v += b(i, j) * u[j];
      dy[4 + i] = v;
    }
    for (std::size_t r = 0; r < p; ++r) {
      double innovation = noise[r];
      for (std::size_t j = 0; j < 4; ++j) innovation += c(r, j) * (y[j] - y[4 + j]);
      for (std::size_t i = 0; i < 4; ++i) dy[4 + i] += d.l(i, r) * innovation;
    }
  };

  SimulationRecord rec;
  rec.method = method;
  rec.warnings = d.warnings;
  rec.times = uniform_grid(s.horizon, s.output_dt);
  const std::size_t T = rec.times.size();
  const OdeOptions opt = s.ode_options();

  Matrix states;
  const bool noisy = observer && (s.noise_sigma[0] > 0.0 || s.noise_sigma[1] > 0.0);
  if (!noisy) {
    auto sol = integrate_dopri5(rhs, y0, rec.times, opt);
    states = std::move(sol.states);
    rec.stats = sol.stats;
  } else {
    std::mt19937_64 rng(s.noise_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    states = Matrix(T, n_state);
    std::vector<double> y = y0;
    for (std::size_t i = 0; i < n_state; ++i) states(0, i) = y[i];
    for (std::size_t kk = 0; kk + 1 < T; ++kk) {
      for (std::size_t r = 0; r < p; ++r) noise[r] = s.noise_sigma[r % 2] * normal(rng);
      const double seg[2] = {rec.times[kk], rec.times[kk + 1]};
      const auto sol = integrate_dopri5(rhs, y, seg, opt);
      for (std::size_t i = 0; i < n_state; ++i) y[i] = states(kk + 1, i) = sol.states(1, i);
      rec.stats.accepted += sol.stats.accepted;
      rec.stats.rejected += sol.stats.rejected;
      rec.stats.evaluations += sol.stats.evaluations;
    }
  }

  rec.true_states = Matrix(T, 4);
  rec.deviation = Matrix(T, 4);
  rec.reference = Matrix(T, 4);
  rec.controls = Matrix(T, 2);
  if (observer) {
    rec.estimates = Matrix(T, 4);
    rec.estimation_error = Matrix(T, 4);
  }
  for (std::size_t kk = 0; kk < T; ++kk) {
    const Vec4 ref = reference_at(rec.times[kk]).packed();
    const auto row = states.data().subspan(kk * n_state, n_state);
    double u[2];
    control(row, u);
    for (std::size_t i = 0; i < 4; ++i) {
      rec.reference(kk, i) = ref[i];
      rec.deviation(kk, i) = row[i];
      rec.true_states(kk, i) = ref[i] + row[i];
      if (observer) {
        (*rec.estimates)(kk, i) = ref[i] + row[4 + i];
        (*rec.estimation_error)(kk, i) = row[i] - row[4 + i];
      }
    }
    rec.controls(kk, 0) = u[0];
    rec.controls(kk, 1) = u[1];
  }
  return rec;
}

std::vector<double> position_error_series(const SimulationRecord& rec, const OrbitState& xf) {
  std::vector<double> e(rec.times.size());
  for (std::size_t k = 0; k < e.size(); ++k) {
    // (reference − target) + deviation keeps the small terminal gap accurate.
    const double ex = (rec.reference(k, 0) - xf.position[0]) + rec.deviation(k, 0);
    const double ey = (rec.reference(k, 1) - xf.position[1]) + rec.deviation(k, 1);
    e[k] = std::hypot(ex, ey);
  }
  return e;
}

Metrics compute_metrics(const SimulationRecord& rec, const OrbitState& xf, double settle_band) {
  if (rec.times.empty()) fail(ErrorKind::Input, "compute_metrics: empty record");
  const auto e = position_error_series(rec, xf);
  Metrics m;
  m.terminal_error = e.back();
  double sq = 0.0, energy = 0.0;
  for (std::size_t k = 0; k + 1 < e.size(); ++k) {
    const double dt = rec.times[k + 1] - rec.times[k];
    sq += 0.5 * dt * (e[k] * e[k] + e[k + 1] * e[k + 1]);
    const double u0 = rec.controls(k, 0) * rec.controls(k, 0) + rec.controls(k, 1) * rec.controls(k, 1);
    const double u1 = rec.controls(k + 1, 0) * rec.controls(k + 1, 0) + rec.controls(k + 1, 1) * rec.controls(k + 1, 1);
    energy += 0.5 * dt * (u0 + u1);
  }
  const double span = rec.times.back() - rec.times.front();
  m.rms_error = span > 0.0 ? std::sqrt(sq / span) : e.front();
  m.control_energy = energy;
  m.settling_time = settling_time(rec.times, e, settle_band * e.front());
  return m;
}

Matrix estimation_error_series(const SimulationRecord& rec) {
  if (!rec.estimation_error)
    fail(ErrorKind::NotApplicable, std::string("estimation error is undefined for method ") + to_string(rec.method));
  const Matrix& e = *rec.estimation_error;
  Matrix out(e.rows(), 2);
  for (std::size_t k = 0; k < e.rows(); ++k) {
    out(k, 0) = std::hypot(e(k, 0), e(k, 1));
    out(k, 1) = std::hypot(e(k, 2), e(k, 3));
  }
  return out;
}

ComparisonReport compare_methods(const Scenario& s) {
  s.validate();
  ComparisonReport report;
  const Design d = design_scenario(s, Method::ObserverLqr);
  report.warnings = d.warnings;
  const Matrix& a = d.plant.a();
  report.open_loop = eigenvalues(a);
  report.controller = d.lqr.closed_loop_spectrum;
  report.observer = eigenvalues(a - d.l * d.plant.c());
  const auto loop = assemble_separation_loop(a, d.plant.b(), d.plant.c(), d.lqr.k, d.l);
  const Spectrum expected = report.controller.merged(report.observer);
  const Spectrum loop_error = eigenvalues(loop.error_form);
  const Spectrum loop_estimate = eigenvalues(loop.estimate_form);
  report.separation_gap =
      std::max(spectrum_distance(loop_error, expected), spectrum_distance(loop_estimate, expected));
  report.separation_holds = report.separation_gap <= 1e-6;

  const double tol = 1e-9 * std::max(1.0, a.norm_inf());
  std::vector<std::future<MethodReport>> jobs;
  for (Method m : kAllMethods) {
    jobs.push_back(std::async(std::launch::async, [&, m] {
      MethodReport r;
      r.method = m;
      switch (m) {
        case Method::Uncontrolled: r.spectrum = report.open_loop; break;
        case Method::Lqr: r.spectrum = report.controller; break;
        case Method::ObserverOnly: r.spectrum = report.open_loop.merged(report.observer); break;
        case Method::ObserverLqr: r.spectrum = loop_error; break;
      }
      r.dominant = dominant_of(r.spectrum);
      r.classification = classify_spectrum(r.spectrum, tol);
      Scenario run = s;
      run.method = m;
      try {
        const auto rec = run_scenario(run);
        const auto e = position_error_series(rec, s.xf);
        r.initial_error = e.front();
        r.metrics = compute_metrics(rec, s.xf, s.settle_band);
        r.divergent = !std::isfinite(r.metrics->terminal_error) || r.metrics->terminal_error > r.initial_error;
      } catch (const Error& e) {
        r.error = std::string(to_string(e.kind())) + ": " + e.what();
        r.divergent = true;
      }
      return r;
    }));
  }
  for (auto& j : jobs) report.methods.push_back(j.get());
  return report;
}

const std::vector<PublishedRow>& published_rows() {
  static const std::vector<PublishedRow> rows = {
      {"uncontrolled", "", "", "", "", ""},
      {"lqr", "-1.02, -0.97, -0.15 +/- 0.42i", "Stable but lightly damped", "220", "0.12", "5.2"},
      {"observer_only", "+0.08, 0, -0.02", "Marginally unstable (no control action)", "Divergent", ">10 (unstable)",
       "N/A"},
      {"observer_lqr", "-1.25, -1.10, -0.85, -0.60", "Asymptotically stable, well-damped", "140", "0.005", "6.7"},
  };
  return rows;
}

DriftSeries srp_drift_study(double duration, const SpacecraftParams& craft, const SrpConfig& srp,
                            const OrbitState& orbit, double output_dt, const PhysicalConstants& constants,
                            const OdeOptions& options) {
  if (!(duration > 0.0)) fail(ErrorKind::Input, "drift study: duration must be positive");
  DriftSeries out;
  out.srp_accel = srp_accel(srp, craft, constants);
  out.times = uniform_grid(duration, std::min(output_dt, duration));
  const Vec2 a = out.srp_accel;
  // Deviation from the unperturbed Kepler orbit, integrated directly.
  auto rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    const OrbitState ref = kepler_propagate(orbit, t, constants);
    const Vec2 dg = gravity_difference(ref.position, {y[0], y[1]}, constants.mu);
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = dg[0] + a[0];
    dy[3] = dg[1] + a[1];
  };
  const double y0[4] = {0.0, 0.0, 0.0, 0.0};
  const auto sol = integrate_dopri5(rhs, y0, out.times, options);
  out.deviation.resize(out.times.size());
  out.relative_error.resize(out.times.size());
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    out.deviation[k] = std::hypot(sol.states(k, 0), sol.states(k, 1));
    out.relative_error[k] = out.deviation[k] / kepler_propagate(orbit, out.times[k], constants).radius();
  }
  return out;
}

double ballistic_drift(double accel, double duration) { return 0.5 * accel * duration * duration; }

}  // namespace orbctl
