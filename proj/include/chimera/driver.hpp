#pragma once

#include "chimera/io.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>

namespace chimera {

/// Directory holding bundled reference data: CHIMERA_DATA_DIR when set, else the source tree's data/.
std::filesystem::path data_dir();

/// Runs one scenario and writes, under cfg.output_dir: config.cfg (resolved config), snapshots with
/// manifest.csv, steps.csv, forces.csv (bodies only), errors.csv (exact solutions only), run.log and
/// summary.json. Step lines are echoed to `log`. Returns the summary.
nlohmann::json execute_run(const RunConfig& cfg, std::ostream& log);

/// Mesh-refinement study over params.levels for every Reynolds number of params.re_study (or re alone).
/// Writes errors_re<Re>.csv, per-level step logs, config.cfg and summary.json.
nlohmann::json execute_convergence(const RunConfig& cfg, std::ostream& log);

} // namespace chimera
