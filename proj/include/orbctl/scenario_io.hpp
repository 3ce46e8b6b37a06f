#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "orbctl/simulation.hpp"

namespace orbctl {

/// "key=value" assignments; dotted keys address nested objects. Values are
/// parsed as JSON, falling back to a plain string.
using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Strict scenario parse: unknown keys are rejected by name, missing keys take
/// the defaults of Scenario. Parse errors carry line/column context.
Scenario parse_scenario_text(std::string_view text, const Overrides& overrides = {},
                             const std::string& source = "<scenario>");
Scenario parse_scenario(const std::string& path, const Overrides& overrides = {});

/// Splits "key=value"; throws Input when '=' is missing.
std::pair<std::string, std::string> split_override(const std::string& assignment);

/// JSON text of the fully resolved scenario (round-trips through the parser).
std::string scenario_to_json_text(const Scenario& s);

enum class SeriesFormat { Csv, Json };

SeriesFormat parse_format(const std::string& name);
const char* extension(SeriesFormat f);

/// Column-oriented numeric table. An absent column is written as empty CSV
/// fields or a JSON null.
struct SeriesTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // one vector per column
  std::vector<bool> present;

  void add(std::string name, std::vector<double> values);
  void add_absent(std::string name);
  std::size_t rows() const;
};

inline constexpr const char* kSeriesColumns[13] = {"t",      "x_p",    "y_p",    "vx",    "vy", "xhat_p", "yhat_q",
                                                   "vxhat",  "vyhat",  "ux",     "uy",    "ref_x", "ref_y"};

SeriesTable record_table(const SimulationRecord& rec);

/// Writes the table; numbers use 17 significant digits. Io error on failure.
void write_table(const SeriesTable& table, const std::string& path, SeriesFormat format);
void write_series(const SimulationRecord& rec, const std::string& path, SeriesFormat format);

/// Reads a CSV written by write_table.
SeriesTable read_table_csv(const std::string& path);

/// Formats a double with 17 significant digits.
std::string format_number(double v);

}  // namespace orbctl
