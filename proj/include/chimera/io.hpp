#pragma once

#include "chimera/bench.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace chimera {

/// Everything a single invocation needs: scenario parameters plus output plumbing.
struct RunConfig {
    ScenarioParams params;
    std::string output_dir = "output";
    int output_every = 0; ///< snapshot cadence in steps; 0 writes the initial and final states only
};

/// Keys accepted in config files and as command-line flags, in canonical order.
const std::vector<std::string>& config_keys();

/// Applies one `key = value` assignment; throws a usage error on unknown keys or unparsable values.
void apply_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines. Top-level keys apply to every scenario; a `[tag]` section applies
/// only when it names the selected scenario. The scenario comes from the top-level `scenario` key,
/// or from the only section present.
RunConfig parse_config(std::istream& in, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Throws a usage error when an invariant of the configuration fails.
void validate_config(const RunConfig& cfg);

/// Fully resolved configuration in the same syntax parse_config reads.
std::string echo_config(const RunConfig& cfg);

/// Value of CHIMERA_OUTPUT_DIR when set and non-empty.
std::optional<std::string> output_dir_from_env();

// ============================================================================
// Snapshots
// ============================================================================

/// One token per cell class: F field, R fringe (receptor), H hole.
char class_token(CellClass c);
CellClass class_from_token(char t);

/// Writes block b: header lines `block`, `dims`, `time`, then `i j x_c y_c u v p class` per cell.
/// Hole values are the literal NA; numbers carry 17 significant digits.
void write_block_snapshot(std::ostream& os, const Frame& f, const FlowField& q, int block);

struct SnapshotBlock {
    int block = 0;
    std::string name;
    int ni = 0, nj = 0;
    double t = 0.0;
    struct Row {
        int i = 0, j = 0;
        double x = 0.0, y = 0.0;
        double u = 0.0, v = 0.0, p = 0.0; ///< NaN on holes
        CellClass cls = CellClass::Field;
    };
    std::vector<Row> rows;
};

SnapshotBlock read_block_snapshot(std::istream& is);

struct ManifestEntry {
    int step = 0;
    double t = 0.0;
    int block = 0;
    std::string file;
};

/// Writes every block of the current state under dir and returns the manifest entries.
std::vector<ManifestEntry> write_snapshot(const std::filesystem::path& dir, const Frame& f, const FlowField& q,
                                          int step);

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

// ============================================================================
// Tables
// ============================================================================

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

void write_force_csv(std::ostream& os, const std::vector<ForceRecord>& rows);
void write_error_csv(std::ostream& os, const std::vector<ErrorRow>& rows);
void write_step_csv(std::ostream& os, const std::vector<StepReport>& rows);

std::vector<ForceRecord> read_force_csv(std::istream& is);
std::vector<ErrorRow> read_error_csv(std::istream& is);

struct StepLogRow {
    int step = 0;
    double t = 0.0, dt = 0.0;
    double div = 0.0;
};

std::vector<StepLogRow> read_step_csv(std::istream& is);

/// Creates the directory (and parents); throws an io error on failure.
void ensure_directory(const std::filesystem::path& dir);

/// Opens a file for writing or throws an io error naming it.
std::ofstream open_output(const std::filesystem::path& path);

} // namespace chimera
