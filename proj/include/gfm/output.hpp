#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include <json.hpp>

#include "gfm/scenario.hpp"
#include "gfm/simulation.hpp"

namespace gfm {

/// Column names of the trajectory CSV for the given controller, in order.
std::vector<std::string> trajectory_columns(ControllerKind kind);

/// One row per record; doubles printed with 17 significant digits.
void write_trajectory_csv(std::ostream& os, const SimulationResult& result);
void write_trajectory_csv(const std::filesystem::path& path, const SimulationResult& result);

/// Final state, N_eta, T_eta, ON episodes, max |i_t| and integrator counters.
nlohmann::json run_summary(const SimulationResult& result);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace gfm
