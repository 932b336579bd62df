#pragma once

#include <string>

#include "qbatt/scenario.hpp"

namespace qbatt {

// Trajectory CSV: '#' comment lines carrying the resolved config and engine
// version, one header row, one row per sample with 17 significant digits,
// '.' decimal separator, LF line endings. Byte-identical across repeated runs.
void emit_csv(const TrajectoryRecord& rec, const std::string& path,
              const std::string& config_echo);

// Sweep CSV: columns axis, E_s, P_max, t_steady.
void emit_csv(const SweepTable& table, const std::string& path);

std::string format_double(double v);  // shortest-faithful 17-digit form

}  // namespace qbatt
