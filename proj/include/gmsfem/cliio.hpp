#pragma once

#include <map>
#include <string>

#include "gmsfem/adapt.hpp"
#include "gmsfem/field.hpp"

namespace gmsfem {

/// Everything a run needs: grid sizes, the field specification, the
/// adaptive configuration and output placement.
struct RunConfig {
  int nx_coarse = 10, ny_coarse = 10;
  int nx_sub = 5, ny_sub = 5;
  FieldSpec field;
  AdaptConfig adapt;
  std::string out_dir = "out";
};

/// Ordered key=value pairs; later entries override earlier ones.
using KeyValues = std::map<std::string, std::string>;

/// Line-oriented `key = value` file; '#' starts a comment.
KeyValues read_config_file(const std::string& path);

/// Build a validated RunConfig from key=value pairs (defaults applied for
/// missing keys). Errors name the offending key.
RunConfig parse_config(const KeyValues& kv);

/// Convenience: file then flag overrides.
RunConfig parse_config(const std::string& file_path, const KeyValues& overrides);

/// Canonical key=value text for a config; parse(emit(c)) round-trips.
std::string emit_config(const RunConfig& config);

/// Write history.csv, basis_counts.csv, energy_error_grid.csv and
/// run_summary.txt into the output directory (created if needed).
void emit_outputs(const ConvergenceHistory& history, const StructuredGrids& grids,
                  const RunConfig& config);

/// Full-precision number formatting shared by all emitted files.
std::string format_number(double v);

}  // namespace gmsfem
