#pragma once

#include "chimera/linsys.hpp"
#include "chimera/operators.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace chimera {

/// IMEX pair written with an explicit first stage at t^n: rows 0..s, row 0 identically zero.
struct ButcherTableau {
    std::string name;
    int stages = 0; ///< implicit stages solved per step
    std::vector<std::vector<double>> ae, ai;
    std::vector<double> be, bi;

    double ce(int i) const;
    double ci(int i) const;

    /// Throws a configuration error when a structural property fails.
    void validate() const;

    static ButcherTableau euler();
    static ButcherTableau ars222();
    static ButcherTableau by_name(const std::string& name);
};

struct FlowField {
    std::vector<double> u, v, p;
};

struct IntegratorOptions {
    double re = 100.0;
    double cfl = 0.9;
    double dt_max = 0.1;
    int layers = 5;
    double dt_fixed = 0.0; ///< positive: run() uses this step instead of the CFL rule
    int initial_projection = 1; ///< projection sweeps applied to the initial velocity
    double pressure_damping = 1.0; ///< decay rate per unit time of pressure modes the central gradient cannot see
    ButcherTableau tableau = ButcherTableau::ars222();
    SolverOptions solver;
    NewtonOptions newton;
    LSThresholds thresholds;
};

struct StepReport {
    int step = 0;
    double t = 0.0;
    double dt = 0.0;
    int iter_u = 0, iter_v = 0, iter_p = 0;
    double div_max = 0.0;  ///< largest scaled projection residual over stages
    double div_raw = 0.0;  ///< largest scaled central divergence of the corrected velocity
    int active = 0;
    int born = 0, dead = 0;

    std::string line() const;
};

using InitialState = std::function<std::array<double, 3>(Vec2)>;

class Simulation {
public:
    Simulation(std::shared_ptr<const Grid> grid, IntegratorOptions opt, double t0, const InitialState& init);

    const Grid& grid() const { return *grid_; }
    const Frame& frame() const { return *frame_; }
    FramePtr frame_ptr() const { return frame_; }
    const FlowField& field() const { return field_; }
    FlowField& field() { return field_; }
    double time() const { return t_; }
    int steps() const { return step_; }
    const IntegratorOptions& options() const { return opt_; }
    bool static_mesh() const { return static_; }
    bool gauged() const { return gauge_; }

    /// CFL time step for the current state (fallback rule when every signal speed vanishes).
    double compute_dt() const;

    StepReport step(double dt);

    /// Removes the discrete divergence of the current velocity with a homogeneous potential; pressure untouched.
    void project_velocity();

    /// Steps until t_f, clipping the last step; the callback sees every completed step.
    void run(double t_final, const std::function<void(const StepReport&)>& on_step = {});

private:
    std::shared_ptr<const Grid> grid_;
    IntegratorOptions opt_;
    double t_ = 0.0;
    int step_ = 0;
    bool static_ = true;
    bool gauge_ = false;
    FramePtr frame_;
    FlowField field_;

    FramePtr stage_frame(const std::vector<Vec2>& xv, double t) const;
};

/// Carries an area-integrated cell quantity defined on `defined` cells to every field cell of `dst`;
/// missing cells receive a local least-squares extrapolation of the density times their area.
std::vector<double> carry_integrated(const Frame& dst, const std::vector<double>& val,
                                     const std::vector<char>& defined, const std::vector<double>& src_area);

bool has_pressure_dirichlet(const Grid& g);

} // namespace chimera
