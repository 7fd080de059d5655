#pragma once

#include "chimera/timeintegrator.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace chimera {

using ExactSolution = std::function<std::array<double, 3>(Vec2, double)>;

std::array<double, 3> exact_taylor_green(Vec2 x, double t, double re);
std::array<double, 3> exact_poiseuille(Vec2 x, double re);

/// Tunable parameters of a benchmark case; defaults come from scenario_defaults.
struct ScenarioParams {
    std::string tag;
    double re = 100.0;
    double t_f = 1.0;
    std::string tableau = "ars222";
    double cfl = 0.9;
    double dt_max = 0.1;
    int layers = 5;
    int resolution = 0;          ///< case-specific cell count (see README)
    std::vector<int> levels;     ///< resolutions of a convergence study
    std::vector<double> re_study; ///< Reynolds numbers swept by a convergence study (empty: re only)
    std::string motion;          ///< free-stream motion: translation or rotation
    std::uint64_t seed = 20240611;
    double rtol = 1e-10;
    int max_iter = 2000;
    std::string precond = "ilu0";
    double dt_fixed = 0.0;       ///< positive: constant step instead of the CFL rule
    double wake_perturbation = 0.0; ///< peak cross-flow of the initial bump behind a cylinder
    double pressure_damping = 1.0;  ///< decay rate of the pressure modes the central gradient cannot see
    std::string foreground;      ///< block description replacing the built-in foreground (non-cylinder cases)
};

ScenarioParams scenario_defaults(const std::string& tag);
std::vector<std::string> scenario_tags();

struct Scenario {
    ScenarioParams params;
    std::shared_ptr<const Grid> grid;
    InitialState initial;
    ExactSolution exact;          ///< empty when no closed form exists
    std::string body_tag;         ///< boundary tag for force integration, empty if none
    double diameter = 1.0;
    double u_ref = 1.0;
};

Scenario build_scenario(const ScenarioParams& p);

IntegratorOptions integrator_options(const ScenarioParams& p);

/// Cartesian foreground of spacing h covering the core box, grown outward by `layers` rings.
Block make_foreground_block(double x0, double x1, double y0, double y1, double h, int layers);

// ============================================================================
// Measurements
// ============================================================================

/// sqrt(sum over field cells of |omega| (phi - exact)^2)
double l2_error(const Frame& f, const std::vector<double>& phi, const std::function<double(Vec2)>& exact);

/// As l2_error after removing the area-weighted mean difference (gauged pressure).
double l2_error_zero_mean(const Frame& f, const std::vector<double>& phi, const std::function<double(Vec2)>& exact);

double max_error(const Frame& f, const std::vector<double>& phi, const std::function<double(Vec2)>& exact);

/// Cell field at x from the quadratic of a Field cell containing x, foreground blocks first;
/// nullopt when no Field cell contains x.
std::optional<double> sample_field(const Frame& f, const std::vector<P2Poly>& polys, Vec2 x);

/// Benchmark centerline value: `u` profiles run along the vertical centerline (coord = y),
/// `v` profiles along the horizontal one (coord = x), both in unit-square coordinates.
struct ProfilePoint {
    char component = 'u';
    double coord = 0.0;
    double value = 0.0;
};

/// Reads `component,coord,value` rows after a header line; lines starting with # are comments.
std::vector<ProfilePoint> read_profile_csv(std::istream& is);

struct CenterlineReport {
    double max_dev_u = 0.0, max_dev_v = 0.0;
    int points_u = 0, points_v = 0;
};

/// Largest deviation from the reference at interior points of the unit cavity centred at the origin.
CenterlineReport cavity_centerline_deviation(const Frame& f, const FlowField& q, const std::vector<ProfilePoint>& ref);

/// Largest edge length over all cells of the configuration.
double max_edge_length(const Frame& f);

struct ForceRecord {
    double t = 0.0;
    double cd = 0.0;
    double cl = 0.0;
};

/// Integrates the stress on edges tagged `body_tag`; the normal points from the body into the fluid.
ForceRecord compute_forces(const Frame& f, const FlowField& q, const std::string& body_tag, double re, double diameter,
                           double u_ref);

/// Shedding frequency from same-direction zero crossings of the lift over the trailing half of the record.
double strouhal(const std::vector<ForceRecord>& history, double diameter, double u_ref);

struct ErrorRow {
    double mesh_h = 0.0;
    double err_u = 0.0, err_v = 0.0, err_p = 0.0;
    std::optional<double> order_u, order_p;
};

/// log(e_coarse/e_fine) / log(h_coarse/h_fine) between consecutive rows.
void fill_orders(std::vector<ErrorRow>& rows);

struct RunResult {
    Scenario scenario;
    std::unique_ptr<Simulation> sim;
    std::vector<StepReport> steps;
    std::vector<ForceRecord> forces;
};

/// Mean drag coefficient over the trailing half of the record.
double mean_drag(const std::vector<ForceRecord>& history);

/// Builds and runs one scenario to t_f. The callback sees the initial state as step 0, then each step
/// after its forces are recorded.
RunResult run_scenario(const ScenarioParams& p, const std::function<void(const Simulation&, const StepReport&)>& cb = {});

/// Errors of a finished run against the scenario's exact solution.
ErrorRow measure_errors(const RunResult& r);

} // namespace chimera
