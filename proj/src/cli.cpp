#include "orbctl/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "orbctl/lti.hpp"
#include "orbctl/orbital.hpp"
#include "orbctl/simulation.hpp"
#include "orbctl/synthesis.hpp"

namespace orbctl {

using nlohmann::json;

namespace {

json to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json to_json(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

template <class Range>
json complex_list(const Range& values) {
  json out = json::array();
  for (const auto& z : values) out.push_back(to_json(z));
  return out;
}

json to_json(const Vec2& v) { return json::array({v[0], v[1]}); }

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string output_path(const RunConfig& cfg, const std::string& stem, const char* ext) {
  return (std::filesystem::path(cfg.output_dir) / (stem + ext)).string();
}

void write_report(const RunConfig& cfg, const std::string& stem, const json& report, std::ostream& out) {
  const std::string text = report.dump(2);
  const std::string path = output_path(cfg, stem, ".json");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::Io, "cannot write \"" + path + "\"");
  f << text << '\n';
  f.flush();
  if (!f) fail(ErrorKind::Io, "write failed for \"" + path + "\"");
  out << text << '\n';
}

json metrics_json(const Metrics& m) {
  return {{"terminal_error_km", m.terminal_error},
          {"rms_error_km", m.rms_error},
          {"control_energy", m.control_energy},
          {"settling_time_s", optional_number(m.settling_time)}};
}

json run_analyze(const Scenario& s, const RunConfig& cfg, std::ostream& out) {
  const Design d = design_scenario(s, Method::Uncontrolled);
  const Matrix ctrb = controllability_matrix(d.plant);
  const Matrix obsv = observability_matrix(d.plant);
  const Spectrum open = eigenvalues(d.plant.a());
  json report = {{"command", "analyze"},
                 {"linearization_radius_km", s.linearization_radius.value_or(s.x0.radius())},
                 {"omega_sq", d.omega_sq},
                 {"linearization_sign", s.linearization_sign},
                 {"a", to_json(d.plant.a())},
                 {"b", to_json(d.plant.b())},
                 {"c", to_json(d.plant.c())},
                 {"controllability_matrix", to_json(ctrb)},
                 {"observability_matrix", to_json(obsv)},
                 {"controllability_rank", rank(ctrb)},
                 {"observability_rank", rank(obsv)},
                 {"states", d.plant.states()},
                 {"open_loop_spectrum", complex_list(open)},
                 {"stability_class", to_string(stability_class(d.plant.a()))},
                 {"srp_accel", to_json(d.srp)}};
  write_report(cfg, "analyze", report, out);
  return report;
}

json run_synthesize(const Scenario& s, const RunConfig& cfg, std::ostream& out) {
  const Design d = design_scenario(s, Method::ObserverLqr);
  const Matrix& a = d.plant.a();
  const Matrix& b = d.plant.b();
  const Matrix& c = d.plant.c();
  const auto loop = assemble_separation_loop(a, b, c, d.lqr.k, d.l);
  const Spectrum observer = eigenvalues(a - d.l * c);
  const Spectrum expected = d.lqr.closed_loop_spectrum.merged(observer);
  const Spectrum err_form = eigenvalues(loop.error_form);
  const Spectrum est_form = eigenvalues(loop.estimate_form);
  json report = {{"command", "synthesize"},
                 {"k", to_json(d.lqr.k)},
                 {"p", to_json(d.lqr.p)},
                 {"l", to_json(d.l)},
                 {"care_residual", care_residual(a, b, s.weights, d.lqr.p)},
                 {"controller_spectrum", complex_list(d.lqr.closed_loop_spectrum)},
                 {"observer_spectrum", complex_list(observer)},
                 {"observer_speed_factor", s.observer_speed_factor},
                 {"separation",
                  {{"error_form_spectrum", complex_list(err_form)},
                   {"estimate_form_spectrum", complex_list(est_form)},
                   {"union_spectrum", complex_list(expected)},
                   {"gap", std::max(spectrum_distance(err_form, expected), spectrum_distance(est_form, expected))}}},
                 {"published_k", reference_gains::kPublishedK},
                 {"published_k_ccf", reference_gains::kPublishedKCcf},
                 {"warnings", d.warnings}};
  try {
    const auto h = hinf_state_feedback(a, b, d.g, s.weights, s.hinf_range);
    const double norm = hinf_norm(hinf_performance_system(a, b, d.g, s.weights, h.k));
    report["hinf"] = {{"gamma", *h.gamma},
                      {"k", to_json(h.k)},
                      {"p", to_json(h.p)},
                      {"closed_loop_spectrum", complex_list(h.closed_loop_spectrum)},
                      {"grid_norm", norm}};
  } catch (const Error& e) {
    report["hinf"] = {{"error", std::string(to_string(e.kind())) + ": " + e.what()}};
  }
  write_report(cfg, "synthesize", report, out);
  return report;
}

json run_lambert(const Scenario& s, const RunConfig& cfg, std::ostream& out) {
  const double tof = s.lambert_transfer_time.value_or(s.horizon);
  const auto sol = lambert_solve(s.x0.position, s.xf.position, tof, s.lambert_direction, s.constants);
  const OrbitState start{s.x0.position, sol.v1};
  const OrbitState analytic = kepler_propagate(start, tof, s.constants);
  const OrbitState numeric = propagate_two_body(start, tof, s.constants, s.ode_options());
  auto miss = [&](const OrbitState& st) {
    return std::hypot(st.position[0] - s.xf.position[0], st.position[1] - s.xf.position[1]);
  };
  json report = {{"command", "lambert"},
                 {"r1", to_json(s.x0.position)},
                 {"r2", to_json(s.xf.position)},
                 {"tof_s", tof},
                 {"direction", s.lambert_direction == TransferDirection::Prograde ? "prograde" : "retrograde"},
                 {"v1", to_json(sol.v1)},
                 {"v2", to_json(sol.v2)},
                 {"iterations", sol.iterations},
                 {"closure_km_analytic", miss(analytic)},
                 {"closure_km_integrated", miss(numeric)},
                 {"initial_velocity_change", to_json(Vec2{sol.v1[0] - s.x0.velocity[0], sol.v1[1] - s.x0.velocity[1]})}};
  write_report(cfg, "lambert", report, out);
  return report;
}

json run_simulate(const Scenario& s, const RunConfig& cfg, std::ostream& out) {
  const auto rec = run_scenario(s);
  write_series(rec, output_path(cfg, "trajectory", extension(cfg.format)), cfg.format);
  const Metrics m = compute_metrics(rec, s.xf, s.settle_band);
  json report = {{"command", "simulate"},
                 {"method", to_string(s.method)},
                 {"plant_mode", to_string(s.plant_mode)},
                 {"reference_mode", to_string(s.reference_mode)},
                 {"samples", rec.times.size()},
                 {"metrics", metrics_json(m)},
                 {"integrator", {{"accepted", rec.stats.accepted}, {"rejected", rec.stats.rejected},
                                 {"evaluations", rec.stats.evaluations}}},
                 {"warnings", rec.warnings}};
  if (rec.estimation_error) {
    const Matrix e = estimation_error_series(rec);
    SeriesTable t;
    t.add("t", rec.times);
    t.add("e_position_km", e.col(0));
    t.add("e_velocity_kms", e.col(1));
    write_table(t, output_path(cfg, "estimation_error", extension(cfg.format)), cfg.format);
    report["final_estimation_error"] = {{"position_km", e(e.rows() - 1, 0)}, {"velocity_kms", e(e.rows() - 1, 1)}};
  }
  write_report(cfg, "simulate", report, out);
  return report;
}

json run_compare(const Scenario& s, const RunConfig& cfg, std::ostream& out) {
  const auto r = compare_methods(s);
  json methods = json::array();
  std::map<std::string, double> terminal;
  const auto& published = published_rows();
  for (std::size_t i = 0; i < r.methods.size(); ++i) {
    const auto& m = r.methods[i];
    json row = {{"method", to_string(m.method)},
                {"spectrum", complex_list(m.spectrum)},
                {"dominant_eigenvalues", complex_list(m.dominant)},
                {"classification", to_string(m.classification)},
                {"divergent", m.divergent},
                {"initial_error_km", m.initial_error},
                {"published",
                 {{"eigenvalues", published[i].eigenvalues},
                  {"assessment", published[i].assessment},
                  {"settling_time_s", published[i].settling_time},
                  {"steady_state_error_km", published[i].steady_state_error},
                  {"control_energy", published[i].control_energy}}}};
    if (m.metrics) {
      row["metrics"] = metrics_json(*m.metrics);
      terminal[to_string(m.method)] = m.metrics->terminal_error;
    } else {
      row["metrics"] = nullptr;
      row["error"] = m.error;
    }
    methods.push_back(row);
  }
  auto less = [&](const char* x, const char* y) {
    return terminal.count(x) && terminal.count(y) && terminal[x] < terminal[y];
  };
  json report = {{"command", "compare"},
                 {"methods", methods},
                 {"open_loop_spectrum", complex_list(r.open_loop)},
                 {"controller_spectrum", complex_list(r.controller)},
                 {"observer_spectrum", complex_list(r.observer)},
                 {"separation", {{"gap", r.separation_gap}, {"holds", r.separation_holds}}},
                 {"ordering",
                  {{"observer_lqr_below_lqr", less("observer_lqr", "lqr")},
                   {"lqr_below_uncontrolled", less("lqr", "uncontrolled")}}},
                 {"warnings", r.warnings}};
  write_report(cfg, "compare", report, out);
  return report;
}

json run_drift(const Scenario& s, const RunConfig& cfg, std::ostream& out) {
  const auto& d = s.drift;
  const auto series = srp_drift_study(d.duration, d.craft, d.srp, d.orbit, d.output_dt, s.constants, s.ode_options());
  SeriesTable t;
  t.add("t", series.times);
  t.add("deviation_km", series.deviation);
  t.add("relative_error", series.relative_error);
  write_table(t, output_path(cfg, "drift", extension(cfg.format)), cfg.format);
  const double accel = std::hypot(series.srp_accel[0], series.srp_accel[1]);
  double peak = 0.0;
  for (double v : series.deviation) peak = std::max(peak, v);
  const double ballistic = ballistic_drift(accel, d.duration);
  json report = {{"command", "drift"},
                 {"duration_s", d.duration},
                 {"srp_accel", to_json(series.srp_accel)},
                 {"final_deviation_km", series.deviation.back()},
                 {"max_deviation_km", peak},
                 {"ballistic_estimate_km", ballistic},
                 {"ratio_to_ballistic", ballistic > 0.0 ? json(series.deviation.back() / ballistic) : json(nullptr)}};
  write_report(cfg, "drift", report, out);
  return report;
}

SeriesTable nyquist_table(const StateSpace& loop, std::span<const double> grid) {
  const auto pts = frequency_response(loop, grid);
  SeriesTable t;
  std::vector<double> omega, det_re, det_im;
  const std::size_t p = loop.outputs(), m = loop.inputs();
  std::vector<std::vector<double>> re(p * m), im(p * m);
  for (const auto& pt : pts) {
    if (!pt.ok) continue;
    omega.push_back(pt.omega);
    for (std::size_t i = 0; i < p * m; ++i) {
      re[i].push_back(pt.response.data[i].real());
      im[i].push_back(pt.response.data[i].imag());
    }
    std::complex<double> det = 1.0;
    if (p == m && p == 2) {
      const auto& h = pt.response;
      det = (1.0 + h(0, 0)) * (1.0 + h(1, 1)) - h(0, 1) * h(1, 0);
    } else if (p == m && p == 1) {
      det = 1.0 + pt.response(0, 0);
    }
    det_re.push_back(det.real());
    det_im.push_back(det.imag());
  }
  t.add("omega", omega);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const std::string tag = "l" + std::to_string(i + 1) + std::to_string(j + 1);
      t.add(tag + "_re", re[i * m + j]);
      t.add(tag + "_im", im[i * m + j]);
    }
  t.add("det_re", det_re);
  t.add("det_im", det_im);
  return t;
}

json run_response(const Scenario& s, const RunConfig& cfg, std::ostream& out) {
  const Design d = design_scenario(s, Method::ObserverLqr);
  const Matrix& a = d.plant.a();
  const Matrix& b = d.plant.b();
  const Matrix& c = d.plant.c();
  const auto loop = assemble_separation_loop(a, b, c, d.lqr.k, d.l);
  const StateSpace closed(loop.estimate_form, vstack(b, b), hstack(c, Matrix(c.rows(), a.cols())));
  const auto step = step_response(closed, s.step_horizon, s.step_dt);

  SeriesTable st;
  st.add("t", step.times);
  json channels = json::array();
  for (std::size_t j = 0; j < step.outputs.size(); ++j) {
    for (std::size_t i = 0; i < closed.outputs(); ++i) {
      const auto y = step.outputs[j].col(i);
      st.add("y" + std::to_string(i + 1) + "_u" + std::to_string(j + 1), y);
      std::vector<double> dev(y.size());
      for (std::size_t k = 0; k < y.size(); ++k) dev[k] = std::abs(y[k] - y.back());
      const double threshold = s.settle_band * std::max(std::abs(y.back()), 1e-300);
      channels.push_back({{"output", i + 1},
                          {"input", j + 1},
                          {"final_value", y.back()},
                          {"settling_time_s", optional_number(settling_time(step.times, dev, threshold))}});
    }
  }
  write_table(st, output_path(cfg, "step_response", extension(cfg.format)), cfg.format);

  const auto grid = log_grid(s.freq_lo, s.freq_hi, s.freq_points);
  const StateSpace loop_a(a, b, d.lqr.k);
  const StateSpace loop_c = series(d.plant, observer_compensator(a, b, c, d.lqr.k, d.l));
  write_table(nyquist_table(loop_a, grid), output_path(cfg, "nyquist_lqr", extension(cfg.format)), cfg.format);
  write_table(nyquist_table(loop_c, grid), output_path(cfg, "nyquist_observer_lqr", extension(cfg.format)),
              cfg.format);

  json report = {{"command", "response"},
                 {"step_channels", channels},
                 {"closed_loop_class", to_string(stability_class(closed.a()))},
                 {"frequency_points", grid.size()},
                 {"open_loop_rhp_poles", [&] {
                    int count = 0;
                    for (const auto& z : eigenvalues(a))
                      if (z.real() > 0.0) ++count;
                    return count;
                  }()}};
  write_report(cfg, "response", report, out);
  return report;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::Validation:
    case ErrorKind::Io:
    case ErrorKind::Input:
    case ErrorKind::Dimension: return 2;
    default: return 1;
  }
}

std::string diagnostic_line(const std::string& kind, const std::string& message, int exit_code) {
  return json{{"error", kind}, {"message", message}, {"exit_code", exit_code}}.dump();
}

int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const Scenario s = cfg.scenario_path ? parse_scenario(*cfg.scenario_path, cfg.overrides)
                                         : parse_scenario_text("{}", cfg.overrides, "<defaults>");
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec || !std::filesystem::is_directory(cfg.output_dir))
      fail(ErrorKind::Io, "cannot create output directory \"" + cfg.output_dir + "\"");
    if (cfg.command == "analyze") run_analyze(s, cfg, out);
    else if (cfg.command == "synthesize") run_synthesize(s, cfg, out);
    else if (cfg.command == "lambert") run_lambert(s, cfg, out);
    else if (cfg.command == "simulate") run_simulate(s, cfg, out);
    else if (cfg.command == "compare") run_compare(s, cfg, out);
    else if (cfg.command == "drift") run_drift(s, cfg, out);
    else if (cfg.command == "response") run_response(s, cfg, out);
    else fail(ErrorKind::Input, "unknown command \"" + cfg.command + "\"");
    return 0;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    err << diagnostic_line(to_string(e.kind()), e.what(), code) << std::endl;
    return code;
  } catch (const std::exception& e) {
    err << diagnostic_line("internal", e.what(), 1) << std::endl;
    return 1;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Orbit maneuver control toolkit: plant analysis, synthesis, guidance and closed-loop simulation",
               "orbctl"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string scenario, format = "csv";
  std::vector<std::string> sets;
  const std::pair<const char*, const char*> commands[] = {
      {"analyze", "Rank tests, open-loop spectrum and stability class"},
      {"synthesize", "LQR, observer and H-infinity gains"},
      {"lambert", "Lambert transfer between x0 and xf"},
      {"simulate", "Closed-loop run for the scenario method"},
      {"compare", "All four methods side by side"},
      {"drift", "SRP drift over the drift horizon"},
      {"response", "Step and frequency responses"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", scenario, "Scenario JSON file (defaults when omitted)");
    sub->add_option("--out", cfg.output_dir, "Output directory");
    sub->add_option("--format", format, "Series format: csv or json");
    sub->add_option("--set", sets, "Override key=value (repeatable)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << diagnostic_line("usage", e.what(), 2) << std::endl;
    return 2;
  }
  for (const auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
  try {
    cfg.format = parse_format(format);
    if (!scenario.empty()) cfg.scenario_path = scenario;
    for (const auto& s : sets) cfg.overrides.push_back(split_override(s));
  } catch (const Error& e) {
    err << diagnostic_line(to_string(e.kind()), e.what(), 2) << std::endl;
    return 2;
  }
  return dispatch(cfg, out, err);
}

}  // namespace orbctl
