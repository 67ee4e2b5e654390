#pragma once

#include <json.hpp>

#include "mimoee/cli/scenario.hpp"
#include "mimoee/cli/table.hpp"

namespace mimoee::cli {

struct CommandResult {
  Table table;
  nlohmann::json summary;
  int status = 0;  ///< 0 on success, 1 when a validation row failed
};

/**
 * Optimal operating points along the sweep axis, one row per (precoder, value).
 *
 * Columns: precoder, <axis>, P_star_exact, P_star_approx, EE_star_exact,
 * EE_star_approx, R_star, R_max, rate_gap, then rate and EE at the grid power
 * for a P sweep, then mc_rate and mc_ci when Monte Carlo is configured (taken
 * at P_star_exact, or at the grid power for a P sweep). Points where the
 * closed forms do not apply are listed under "skipped" in the summary.
 */
CommandResult run_sweep(const Scenario& sc);

/// EE against rate over a power grid, with optimum, P_max and comparison-preset markers.
CommandResult run_ee_curve(const Scenario& sc);

/// Closed-form against Monte Carlo rate for each (M, precoder, L_P).
CommandResult run_validate(const Scenario& sc);

CommandResult list_presets();

}  // namespace mimoee::cli
