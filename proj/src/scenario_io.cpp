#include "orbctl/scenario_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "orbctl/error.hpp"

namespace orbctl {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& key, const std::string& what) {
  fail(ErrorKind::Parse, "scenario key \"" + key + "\": " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) {
    if (path.empty()) fail(ErrorKind::Parse, "scenario root must be a JSON object");
    parse_fail(path, "must be an object");
  }
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known) fail(ErrorKind::Parse, "unknown scenario key \"" + join(path, item.key()) + "\"");
  }
}

double number(const json& j, const std::string& key) {
  if (!j.is_number()) parse_fail(key, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) parse_fail(key, "number must be finite");
  return v;
}

std::string text(const json& j, const std::string& key) {
  if (!j.is_string()) parse_fail(key, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& key, std::size_t expected) {
  if (!j.is_array()) parse_fail(key, "expected an array of numbers");
  if (expected != 0 && j.size() != expected)
    parse_fail(key, "expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

OrbitState state(const json& j, const std::string& key) {
  const auto v = numbers(j, key, 4);
  return OrbitState::from(v);
}

Matrix matrix(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) parse_fail(key, "expected a non-empty array of rows");
  std::vector<double> flat;
  std::size_t cols = 0;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = numbers(j[r], key + "[" + std::to_string(r) + "]", 0);
    if (r == 0) cols = row.size();
    if (row.size() != cols || cols == 0) parse_fail(key, "rows must be non-empty and of equal length");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return Matrix(j.size(), cols, std::move(flat));
}

std::vector<std::complex<double>> poles(const json& j, const std::string& key) {
  if (!j.is_array()) parse_fail(key, "expected an array of poles");
  std::vector<std::complex<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string k = key + "[" + std::to_string(i) + "]";
    if (j[i].is_number()) {
      out.emplace_back(number(j[i], k), 0.0);
    } else {
      const auto v = numbers(j[i], k, 2);
      out.emplace_back(v[0], v[1]);
    }
  }
  return out;
}

template <class E>
E choice(const json& j, const std::string& key, std::initializer_list<std::pair<const char*, E>> options) {
  const std::string s = text(j, key);
  for (const auto& [name, value] : options)
    if (s == name) return value;
  std::string allowed;
  for (const auto& o : options) allowed += (allowed.empty() ? "" : ", ") + std::string(o.first);
  parse_fail(key, "unknown value \"" + s + "\" (expected one of: " + allowed + ")");
}

#define OPT(obj, name) if (auto it_ = (obj).find(name); it_ != (obj).end())

void read_srp(const json& j, const std::string& path, SrpConfig& srp, const char* theta_key) {
  OPT(j, "mode")
  srp.mode = choice<SrpMode>(*it_, join(path, "mode"),
                             {{"direct_magnitude", SrpMode::DirectMagnitude}, {"irradiance", SrpMode::Irradiance}});
  OPT(j, "irradiance") srp.irradiance = number(*it_, join(path, "irradiance"));
  OPT(j, "magnitude_w") srp.magnitude_w = number(*it_, join(path, "magnitude_w"));
  OPT(j, theta_key) srp.theta0 = number(*it_, join(path, theta_key));
}

void read_craft(const json& j, const std::string& path, SpacecraftParams& craft) {
  OPT(j, "mass") craft.mass = number(*it_, join(path, "mass"));
  OPT(j, "area") craft.area = number(*it_, join(path, "area"));
  OPT(j, "reflectivity_multiplier") craft.reflectivity_multiplier = number(*it_, join(path, "reflectivity_multiplier"));
}

Scenario from_json(const json& root) {
  check_keys(root, "",
             {"x0", "xf", "horizon", "output_dt", "rtol", "atol", "constants", "srp", "spacecraft", "weights",
              "observer_speed_factor", "observer_base_poles", "method", "reference_mode", "lambert", "xhat0",
              "measurement_noise_sigma", "noise_seed", "disturbance_matrix_mode", "disturbance_matrix", "plant_mode",
              "linearization_sign", "linearization_radius", "output_matrix", "settle_band", "hinf", "drift",
              "frequency", "step"});
  Scenario s;
  OPT(root, "x0") s.x0 = state(*it_, "x0");
  OPT(root, "xf") s.xf = state(*it_, "xf");
  OPT(root, "horizon") s.horizon = number(*it_, "horizon");
  OPT(root, "output_dt") s.output_dt = number(*it_, "output_dt");
  OPT(root, "rtol") s.rtol = number(*it_, "rtol");
  OPT(root, "atol") s.atol = number(*it_, "atol");
  OPT(root, "constants") {
    check_keys(*it_, "constants", {"mu", "c_light"});
    const json& c = *it_;
    OPT(c, "mu") s.constants.mu = number(*it_, "constants.mu");
    OPT(c, "c_light") s.constants.c_light = number(*it_, "constants.c_light");
  }
  OPT(root, "srp") {
    check_keys(*it_, "srp", {"mode", "irradiance", "magnitude_w", "theta0"});
    read_srp(*it_, "srp", s.srp, "theta0");
  }
  OPT(root, "spacecraft") {
    check_keys(*it_, "spacecraft", {"mass", "area", "reflectivity_multiplier"});
    read_craft(*it_, "spacecraft", s.craft);
  }
  OPT(root, "weights") {
    check_keys(*it_, "weights", {"q", "r"});
    const json& w = *it_;
    OPT(w, "q") s.weights.q = matrix(*it_, "weights.q");
    OPT(w, "r") s.weights.r = matrix(*it_, "weights.r");
  }
  OPT(root, "observer_speed_factor") s.observer_speed_factor = number(*it_, "observer_speed_factor");
  OPT(root, "observer_base_poles") {
    if (!it_->is_null()) s.observer_base_poles = poles(*it_, "observer_base_poles");
  }
  OPT(root, "method")
  s.method = choice<Method>(*it_, "method",
                            {{"uncontrolled", Method::Uncontrolled},
                             {"lqr", Method::Lqr},
                             {"observer_only", Method::ObserverOnly},
                             {"observer_lqr", Method::ObserverLqr}});
  OPT(root, "reference_mode")
  s.reference_mode = choice<ReferenceMode>(
      *it_, "reference_mode",
      {{"lambert_arc", ReferenceMode::LambertArc}, {"constant_setpoint", ReferenceMode::ConstantSetpoint}});
  OPT(root, "lambert") {
    check_keys(*it_, "lambert", {"direction", "transfer_time"});
    const json& l = *it_;
    OPT(l, "direction")
    s.lambert_direction = choice<TransferDirection>(
        *it_, "lambert.direction",
        {{"prograde", TransferDirection::Prograde}, {"retrograde", TransferDirection::Retrograde}});
    OPT(l, "transfer_time") {
      if (!it_->is_null()) s.lambert_transfer_time = number(*it_, "lambert.transfer_time");
    }
  }
  OPT(root, "xhat0") {
    if (!it_->is_null()) s.xhat0 = state(*it_, "xhat0");
  }
  OPT(root, "measurement_noise_sigma") {
    const auto v = numbers(*it_, "measurement_noise_sigma", 2);
    s.noise_sigma = {v[0], v[1]};
  }
  OPT(root, "noise_seed") {
    if (!it_->is_number_unsigned()) parse_fail("noise_seed", "expected a non-negative integer");
    s.noise_seed = it_->get<std::uint64_t>();
  }
  OPT(root, "disturbance_matrix_mode")
  s.disturbance_mode = choice<DisturbanceMode>(
      *it_, "disturbance_matrix_mode", {{"matched", DisturbanceMode::MatchedViaB}, {"custom", DisturbanceMode::Custom}});
  OPT(root, "disturbance_matrix") s.disturbance_matrix = matrix(*it_, "disturbance_matrix");
  OPT(root, "plant_mode")
  s.plant_mode = choice<PlantMode>(*it_, "plant_mode", {{"nonlinear", PlantMode::Nonlinear}, {"linear", PlantMode::Linear}});
  OPT(root, "linearization_sign") s.linearization_sign = number(*it_, "linearization_sign");
  OPT(root, "linearization_radius") {
    if (!it_->is_null()) s.linearization_radius = number(*it_, "linearization_radius");
  }
  OPT(root, "output_matrix") {
    if (!it_->is_null()) s.output_matrix = matrix(*it_, "output_matrix");
  }
  OPT(root, "settle_band") s.settle_band = number(*it_, "settle_band");
  OPT(root, "hinf") {
    check_keys(*it_, "hinf", {"gamma_lo", "gamma_hi"});
    const json& h = *it_;
    OPT(h, "gamma_lo") s.hinf_range.lo = number(*it_, "hinf.gamma_lo");
    OPT(h, "gamma_hi") s.hinf_range.hi = number(*it_, "hinf.gamma_hi");
  }
  OPT(root, "drift") {
    check_keys(*it_, "drift",
               {"duration", "output_dt", "mass", "area", "reflectivity_multiplier", "mode", "irradiance",
                "magnitude_w", "theta", "orbit"});
    const json& d = *it_;
    OPT(d, "duration") s.drift.duration = number(*it_, "drift.duration");
    OPT(d, "output_dt") s.drift.output_dt = number(*it_, "drift.output_dt");
    read_craft(d, "drift", s.drift.craft);
    read_srp(d, "drift", s.drift.srp, "theta");
    OPT(d, "orbit") s.drift.orbit = state(*it_, "drift.orbit");
  }
  OPT(root, "frequency") {
    check_keys(*it_, "frequency", {"lo", "hi", "points"});
    const json& f = *it_;
    OPT(f, "lo") s.freq_lo = number(*it_, "frequency.lo");
    OPT(f, "hi") s.freq_hi = number(*it_, "frequency.hi");
    OPT(f, "points") {
      if (!it_->is_number_unsigned()) parse_fail("frequency.points", "expected a non-negative integer");
      s.freq_points = it_->get<std::size_t>();
    }
  }
  OPT(root, "step") {
    check_keys(*it_, "step", {"horizon", "dt"});
    const json& st = *it_;
    OPT(st, "horizon") s.step_horizon = number(*it_, "step.horizon");
    OPT(st, "dt") s.step_dt = number(*it_, "step.dt");
  }
  return s;
}

#undef OPT

void apply_override(json& root, const std::string& key, const std::string& value) {
  if (key.empty()) fail(ErrorKind::Input, "override key is empty");
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorKind::Input, "override key \"" + key + "\" has an empty component");
    if (!node->is_object()) fail(ErrorKind::Parse, "override key \"" + key + "\" descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = parsed;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

json to_json(const OrbitState& s) { return json::array({s.position[0], s.position[1], s.velocity[0], s.velocity[1]}); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

Scenario parse_scenario_text(std::string_view text, const Overrides& overrides, const std::string& source) {
  json root;
  try {
    root = json::parse(text.begin(), text.end(), nullptr, true, false);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Parse, source + ": " + e.what());
  }
  if (root.is_null()) root = json::object();
  if (!root.is_object()) fail(ErrorKind::Parse, source + ": scenario root must be a JSON object");
  for (const auto& [key, value] : overrides) apply_override(root, key, value);
  Scenario s;
  try {
    s = from_json(root);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) fail(ErrorKind::Parse, source + ": " + e.what());
    if (e.kind() == ErrorKind::Dimension || e.kind() == ErrorKind::Input)
      fail(ErrorKind::Parse, source + ": " + e.what());
    throw;
  }
  s.validate();
  return s;
}

Scenario parse_scenario(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read scenario file \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), overrides, path);
}

std::pair<std::string, std::string> split_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    fail(ErrorKind::Input, "override \"" + assignment + "\" must have the form key=value");
  return {assignment.substr(0, eq), assignment.substr(eq + 1)};
}

std::string scenario_to_json_text(const Scenario& s) {
  json j;
  j["x0"] = to_json(s.x0);
  j["xf"] = to_json(s.xf);
  j["horizon"] = s.horizon;
  j["output_dt"] = s.output_dt;
  j["rtol"] = s.rtol;
  j["atol"] = s.atol;
  j["constants"] = {{"mu", s.constants.mu}, {"c_light", s.constants.c_light}};
  j["srp"] = {{"mode", s.srp.mode == SrpMode::Irradiance ? "irradiance" : "direct_magnitude"},
              {"irradiance", s.srp.irradiance},
              {"magnitude_w", s.srp.magnitude_w},
              {"theta0", s.srp.theta0}};
  j["spacecraft"] = {{"mass", s.craft.mass}, {"area", s.craft.area},
                     {"reflectivity_multiplier", s.craft.reflectivity_multiplier}};
  j["weights"] = {{"q", to_json(s.weights.q)}, {"r", to_json(s.weights.r)}};
  j["observer_speed_factor"] = s.observer_speed_factor;
  if (s.observer_base_poles) {
    json p = json::array();
    for (const auto& z : *s.observer_base_poles) p.push_back(json::array({z.real(), z.imag()}));
    j["observer_base_poles"] = p;
  } else {
    j["observer_base_poles"] = nullptr;
  }
  j["method"] = to_string(s.method);
  j["reference_mode"] = to_string(s.reference_mode);
  j["lambert"] = {{"direction", s.lambert_direction == TransferDirection::Prograde ? "prograde" : "retrograde"},
                  {"transfer_time", s.lambert_transfer_time ? json(*s.lambert_transfer_time) : json(nullptr)}};
  j["xhat0"] = s.xhat0 ? to_json(*s.xhat0) : json(nullptr);
  j["measurement_noise_sigma"] = json::array({s.noise_sigma[0], s.noise_sigma[1]});
  j["noise_seed"] = s.noise_seed;
  j["disturbance_matrix_mode"] = to_string(s.disturbance_mode);
  if (!s.disturbance_matrix.empty()) j["disturbance_matrix"] = to_json(s.disturbance_matrix);
  j["plant_mode"] = to_string(s.plant_mode);
  j["linearization_sign"] = s.linearization_sign;
  j["linearization_radius"] = s.linearization_radius ? json(*s.linearization_radius) : json(nullptr);
  j["output_matrix"] = s.output_matrix ? to_json(*s.output_matrix) : json(nullptr);
  j["settle_band"] = s.settle_band;
  j["hinf"] = {{"gamma_lo", s.hinf_range.lo}, {"gamma_hi", s.hinf_range.hi}};
  j["drift"] = {{"duration", s.drift.duration},
                {"output_dt", s.drift.output_dt},
                {"mass", s.drift.craft.mass},
                {"area", s.drift.craft.area},
                {"reflectivity_multiplier", s.drift.craft.reflectivity_multiplier},
                {"mode", s.drift.srp.mode == SrpMode::Irradiance ? "irradiance" : "direct_magnitude"},
                {"irradiance", s.drift.srp.irradiance},
                {"magnitude_w", s.drift.srp.magnitude_w},
                {"theta", s.drift.srp.theta0},
                {"orbit", to_json(s.drift.orbit)}};
  j["frequency"] = {{"lo", s.freq_lo}, {"hi", s.freq_hi}, {"points", s.freq_points}};
  j["step"] = {{"horizon", s.step_horizon}, {"dt", s.step_dt}};
  return j.dump(2);
}

SeriesFormat parse_format(const std::string& name) {
  if (name == "csv") return SeriesFormat::Csv;
  if (name == "json") return SeriesFormat::Json;
  fail(ErrorKind::Input, "unknown format \"" + name + "\" (expected csv or json)");
}

const char* extension(SeriesFormat f) { return f == SeriesFormat::Csv ? ".csv" : ".json"; }

void SeriesTable::add(std::string name, std::vector<double> values) {
  columns.push_back(std::move(name));
  data.push_back(std::move(values));
  present.push_back(true);
}

void SeriesTable::add_absent(std::string name) {
  columns.push_back(std::move(name));
  data.emplace_back();
  present.push_back(false);
}

std::size_t SeriesTable::rows() const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (present[i]) return data[i].size();
  return 0;
}

SeriesTable record_table(const SimulationRecord& rec) {
  SeriesTable t;
  auto column = [](const Matrix& m, std::size_t c) { return m.col(c); };
  t.add("t", rec.times);
  const char* state_names[4] = {"x_p", "y_p", "vx", "vy"};
  for (std::size_t i = 0; i < 4; ++i) t.add(state_names[i], column(rec.true_states, i));
  const char* est_names[4] = {"xhat_p", "yhat_q", "vxhat", "vyhat"};
  for (std::size_t i = 0; i < 4; ++i) {
    if (rec.estimates)
      t.add(est_names[i], column(*rec.estimates, i));
    else
      t.add_absent(est_names[i]);
  }
  t.add("ux", column(rec.controls, 0));
  t.add("uy", column(rec.controls, 1));
  t.add("ref_x", column(rec.reference, 0));
  t.add("ref_y", column(rec.reference, 1));
  return t;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_table(const SeriesTable& table, const std::string& path, SeriesFormat format) {
  const std::size_t n = table.rows();
  if (n == 0) fail(ErrorKind::Input, "write_table: series is empty");
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    if (table.present[c] && table.data[c].size() != n) fail(ErrorKind::Dimension, "write_table: ragged columns");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write \"" + path + "\"");
  if (format == SeriesFormat::Csv) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
    out << '\n';
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out << ',';
        if (table.present[c]) out << format_number(table.data[c][r]);
      }
      out << '\n';
    }
  } else {
    out << "{\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      out << "  \"" << table.columns[c] << "\": ";
      if (!table.present[c]) {
        out << "null";
      } else {
        out << '[';
        for (std::size_t r = 0; r < n; ++r) out << (r ? "," : "") << format_number(table.data[c][r]);
        out << ']';
      }
      out << (c + 1 < table.columns.size() ? ",\n" : "\n");
    }
    out << "}\n";
  }
  out.flush();
  if (!out) fail(ErrorKind::Io, "write failed for \"" + path + "\"");
}

void write_series(const SimulationRecord& rec, const std::string& path, SeriesFormat format) {
  write_table(record_table(rec), path, format);
}

SeriesTable read_table_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read \"" + path + "\"");
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) return out;
      start = comma + 1;
    }
  };
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Parse, "\"" + path + "\" has no header");
  SeriesTable t;
  for (auto& name : split(line)) {
    t.columns.push_back(name);
    t.data.emplace_back();
    t.present.push_back(false);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != t.columns.size())
      fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": field count differs from header");
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c].empty()) continue;
      char* end = nullptr;
      const double v = std::strtod(fields[c].c_str(), &end);
      if (end != fields[c].c_str() + fields[c].size())
        fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": bad number \"" + fields[c] + "\"");
      t.data[c].push_back(v);
      t.present[c] = true;
    }
  }
  return t;
}

}  // namespace orbctl
