#include "chimera/bench.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>

namespace chimera {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::array<double, 3> exact_taylor_green(Vec2 x, double t, double re) {
    const double eu = std::exp(-2.0 * t / re), ep = std::exp(-4.0 * t / re);
    return {std::sin(x.x) * std::cos(x.y) * eu, -std::cos(x.x) * std::sin(x.y) * eu,
            0.25 * ep * (std::cos(2.0 * x.x) + std::cos(2.0 * x.y))};
}

std::array<double, 3> exact_poiseuille(Vec2 x, double re) { return {-x.y * (x.y - 1.0), 0.0, -2.0 * x.x / re}; }

std::vector<std::string> scenario_tags() {
    return {"taylor_green", "free_stream", "poiseuille", "lid_cavity", "cylinder_steady", "cylinder_moving",
            "cylinder_rotating"};
}

ScenarioParams scenario_defaults(const std::string& tag) {
    ScenarioParams p;
    p.tag = tag;
    if (tag == "taylor_green") {
        p.re = 1000.0;
        p.t_f = 0.2;
        p.resolution = 12;
        p.levels = {6, 12, 18};
        p.re_study = {10.0, 1000.0, 1.0e6};
    } else if (tag == "free_stream") {
        p.re = 200.0;
        p.t_f = 1.0;
        p.resolution = 20;
        p.layers = 2;
        p.motion = "translation";
    } else if (tag == "poiseuille") {
        p.re = 200.0;
        p.t_f = 1.0;
        p.resolution = 50;
    } else if (tag == "lid_cavity") {
        p.re = 100.0;
        p.t_f = 25.0;
        p.tableau = "euler";
        p.resolution = 60;
    } else if (tag == "cylinder_steady") {
        p.re = 200.0;
        p.t_f = 90.0;
        p.resolution = 40;
        p.wake_perturbation = 0.1;
    } else if (tag == "cylinder_moving") {
        p.re = 200.0;
        p.t_f = 0.25;
        p.resolution = 40;
    } else if (tag == "cylinder_rotating") {
        p.re = 200.0;
        p.t_f = 20.0 * kPi;
        p.resolution = 210;
    } else {
        throw Error(ErrorKind::Usage, "unknown scenario '" + tag + "'");
    }
    return p;
}

IntegratorOptions integrator_options(const ScenarioParams& p) {
    IntegratorOptions o;
    o.re = p.re;
    o.cfl = p.cfl;
    o.dt_max = p.dt_max;
    o.layers = p.layers;
    o.dt_fixed = p.dt_fixed;
    o.pressure_damping = p.pressure_damping;
    o.tableau = ButcherTableau::by_name(p.tableau);
    o.solver.rtol = p.rtol;
    o.solver.max_iter = p.max_iter;
    if (p.precond == "jacobi") o.solver.precond = Precond::Jacobi;
    else if (p.precond == "ilu0") o.solver.precond = Precond::Ilu0;
    else throw Error(ErrorKind::Usage, "unknown preconditioner '" + p.precond + "'");
    return o;
}

Block make_foreground_block(double x0, double x1, double y0, double y1, double h, int layers) {
    const int nx = std::max(1, static_cast<int>(std::lround((x1 - x0) / h)));
    const int ny = std::max(1, static_cast<int>(std::lround((y1 - y0) / h)));
    const double hx = (x1 - x0) / nx, hy = (y1 - y0) / ny;
    Block b = make_cartesian_block(x0 - layers * hx, x1 + layers * hx, y0 - layers * hy, y1 + layers * hy,
                                   nx + 2 * layers, ny + 2 * layers);
    b.background = false;
    b.name = "foreground";
    return b;
}

namespace {

Block background_box(double x0, double x1, double y0, double y1, int ni, int nj) {
    Block b = make_cartesian_block(x0, x1, y0, y1, ni, nj);
    b.background = true;
    b.name = "background";
    return b;
}

void set_side(Block& b, Side s, SideBc bc) { b.sides[static_cast<int>(s)] = std::move(bc); }

/// O-grid radii: square cells growing geometrically until the tangential size reaches h_out,
/// then `rings` further rings of spacing h_out.
std::vector<double> cylinder_radii(double r0, int ntheta, double h_out, int rings) {
    std::vector<double> r{r0};
    const double q = 2.0 * kPi / ntheta;
    while (r.back() * q < h_out) r.push_back(r.back() * (1.0 + q));
    for (int k = 0; k < rings; ++k) r.push_back(r.back() + h_out);
    return r;
}

Scenario cylinder_case(const ScenarioParams& p, Vec2 center0, MotionLaw motion, Vec2 inflow, double x0, double x1,
                       double y0, double y1, double h_bg, double radius, double h_out) {
    Scenario s;
    s.params = p;
    const int ni = static_cast<int>(std::lround((x1 - x0) / h_bg));
    const int nj = static_cast<int>(std::lround((y1 - y0) / h_bg));
    Block bg = background_box(x0, x1, y0, y1, ni, nj);
    set_side(bg, Side::Left, SideBc::inlet([inflow](Vec2, double) { return inflow; }));
    set_side(bg, Side::Right, SideBc::outlet());
    set_side(bg, Side::Bottom, SideBc::slip());
    set_side(bg, Side::Top, SideBc::slip());
    Block fg = make_polar_block(center0, cylinder_radii(radius, p.resolution, h_out, p.layers + 1), p.resolution);
    // Half-cell twist keeps vertex rays off the diagonals, where the four dual centroids are mirror
    // symmetric and the bilinear vertex fit is singular.
    rotate_block(fg, center0, kPi / p.resolution);
    fg.background = false;
    fg.name = "cylinder";
    fg.motion = std::move(motion);
    s.grid = std::make_shared<const Grid>(std::vector<Block>{bg, fg});
    // A cross-flow bump one and a half diameters downstream, even in y, breaks the mirror symmetry of
    // mesh and inflow so that shedding does not wait on round-off.
    const double kick = p.wake_perturbation, d = 2.0 * radius;
    const Vec2 bump = center0 + Vec2{1.5 * d, 0.0};
    s.initial = [inflow, kick, d, bump](Vec2 x) {
        const Vec2 r = x - bump;
        const double g = kick * std::exp(-dot(r, r) / (d * d));
        return std::array<double, 3>{inflow.x, inflow.y + g, 0.0};
    };
    s.body_tag = "body";
    s.diameter = 2.0 * radius;
    s.u_ref = 1.0;
    return s;
}

} // namespace

Scenario build_scenario(const ScenarioParams& p) {
    if (p.layers < 1) throw Error(ErrorKind::Configuration, "layers must be at least 1");
    if (p.resolution < 1) throw Error(ErrorKind::Configuration, "resolution must be positive");
    Scenario s;
    s.params = p;
    const double re = p.re;
    const int n = p.resolution;
    if (p.tag == "taylor_green") {
        // Foreground core [-1,1]^2 with n cells; background with the same spacing over [-pi,pi]^2.
        const double h = 2.0 / n;
        const int nb = static_cast<int>(std::lround(2.0 * kPi / h));
        Block bg = background_box(-kPi, kPi, -kPi, kPi, nb, nb);
        bg.wrap_i = bg.wrap_j = true;
        bg.shift_i = {2.0 * kPi, 0.0};
        bg.shift_j = {0.0, 2.0 * kPi};
        for (auto& sd : bg.sides) sd = SideBc::periodic();
        Block fg = make_foreground_block(-1.0, 1.0, -1.0, 1.0, h, p.layers);
        const double tf = p.t_f;
        fg.motion = MotionLaw::analytic(
            [tf](Vec2 x, double t) {
                const double a = 0.2 * std::exp(t - tf);
                return Vec2{a * std::sin(x.x) * std::cos(x.y), a * std::cos(x.x) * std::sin(x.y)};
            },
            true);
        s.grid = std::make_shared<const Grid>(std::vector<Block>{bg, fg});
        s.initial = [re](Vec2 x) { return exact_taylor_green(x, 0.0, re); };
        s.exact = [re](Vec2 x, double t) { return exact_taylor_green(x, t, re); };
    } else if (p.tag == "free_stream") {
        // Background h = 4/n on [-2,2]^2; foreground [-1,1]^2 (rings included) at the same spacing.
        Block bg = background_box(-2.0, 2.0, -2.0, 2.0, n, n);
        for (auto& sd : bg.sides) sd = SideBc::wall();
        Block fg = make_cartesian_block(-1.0, 1.0, -1.0, 1.0, n / 2, n / 2);
        fg.background = false;
        fg.name = "foreground";
        if (p.motion == "translation" || p.motion.empty())
            fg.motion = MotionLaw::translation([](double) { return Vec2{0.3, 0.3}; });
        else if (p.motion == "rotation")
            fg.motion = MotionLaw::rotation({0.0, 0.0}, -0.5);
        else
            throw Error(ErrorKind::Usage, "free_stream motion must be translation or rotation");
        s.grid = std::make_shared<const Grid>(std::vector<Block>{bg, fg});
        s.initial = [](Vec2) { return std::array<double, 3>{0.0, 0.0, 1.0}; };
        s.exact = [](Vec2, double) { return std::array<double, 3>{0.0, 0.0, 1.0}; };
    } else if (p.tag == "poiseuille") {
        const double h = 3.0 / n;
        const int nj = std::max(1, static_cast<int>(std::lround(1.0 / h)));
        Block bg = background_box(0.0, 3.0, 0.0, 1.0, n, nj);
        set_side(bg, Side::Left, SideBc::inlet([re](Vec2 x, double) {
            const auto e = exact_poiseuille(x, re);
            return Vec2{e[0], e[1]};
        }));
        set_side(bg, Side::Right, SideBc::outlet([re](Vec2 x, double) { return exact_poiseuille(x, re)[2]; }));
        set_side(bg, Side::Bottom, SideBc::wall());
        set_side(bg, Side::Top, SideBc::wall());
        Block fg = make_foreground_block(0.5, 0.75, 0.375, 0.625, 0.0625, p.layers);
        fg.motion = MotionLaw::translation([](double t) { return Vec2{-t * (t - 1.0), 0.0}; });
        s.grid = std::make_shared<const Grid>(std::vector<Block>{bg, fg});
        s.initial = [re](Vec2 x) { return exact_poiseuille(x, re); };
        s.exact = [re](Vec2 x, double) { return exact_poiseuille(x, re); };
    } else if (p.tag == "lid_cavity") {
        const double h = 1.0 / n;
        Block bg = background_box(-0.5, 0.5, -0.5, 0.5, n, n);
        set_side(bg, Side::Left, SideBc::wall());
        set_side(bg, Side::Right, SideBc::wall());
        set_side(bg, Side::Bottom, SideBc::wall());
        set_side(bg, Side::Top, SideBc::wall([](Vec2, double) { return Vec2{1.0, 0.0}; }, "lid"));
        Block fg = make_foreground_block(-0.1, 0.1, -0.1, 0.1, h, p.layers);
        rotate_block(fg, {0.0, 0.0}, kPi / 8.0);
        perturb_interior(fg, 0.4 * h, p.seed);
        s.grid = std::make_shared<const Grid>(std::vector<Block>{bg, fg});
        s.initial = [](Vec2) { return std::array<double, 3>{0.0, 0.0, 0.0}; };
    } else if (p.tag == "cylinder_steady") {
        s = cylinder_case(p, {0.0, 0.0}, MotionLaw::none(), {1.0, 0.0}, -8.0, 16.0, -8.0, 8.0, 0.3, 0.5, 0.3);
    } else if (p.tag == "cylinder_moving") {
        // The body ends at the origin at t_f.
        s = cylinder_case(p, {p.t_f, 0.0}, MotionLaw::translation([](double) { return Vec2{-1.0, 0.0}; }),
                          {0.0, 0.0}, -8.0, 16.0, -8.0, 8.0, 0.3, 0.5, 0.3);
    } else if (p.tag == "cylinder_rotating") {
        s = cylinder_case(p, {0.0, 1.0}, MotionLaw::rotation({0.0, 0.0}, -1.0), {0.0, 0.0}, -20.0, 20.0, -10.0,
                          10.0, 0.5, 0.5, 0.4875);
    } else {
        throw Error(ErrorKind::Usage, "unknown scenario '" + p.tag + "'");
    }
    if (!p.foreground.empty()) {
        if (p.tag.rfind("cylinder", 0) == 0)
            throw Error(ErrorKind::Usage, "the cylinder foreground is body-fitted and cannot be replaced");
        s.grid = std::make_shared<const Grid>(std::vector<Block>{s.grid->block(0), parse_block_description(p.foreground)});
    }
    s.params = p;
    return s;
}

// ============================================================================
// Measurements
// ============================================================================

double l2_error(const Frame& f, const std::vector<double>& phi, const std::function<double(Vec2)>& exact) {
    double s = 0.0;
    for (int c = 0; c < f.grid->ncells(); ++c) {
        if (!f.st.field(c)) continue;
        const double d = phi[c] - exact(f.geo.xc[c]);
        s += f.geo.area[c] * d * d;
    }
    return std::sqrt(s);
}

double l2_error_zero_mean(const Frame& f, const std::vector<double>& phi, const std::function<double(Vec2)>& exact) {
    double num = 0.0, den = 0.0;
    for (int c = 0; c < f.grid->ncells(); ++c) {
        if (!f.st.field(c)) continue;
        num += f.geo.area[c] * (phi[c] - exact(f.geo.xc[c]));
        den += f.geo.area[c];
    }
    const double shift = den > 0.0 ? num / den : 0.0;
    double s = 0.0;
    for (int c = 0; c < f.grid->ncells(); ++c) {
        if (!f.st.field(c)) continue;
        const double d = phi[c] - shift - exact(f.geo.xc[c]);
        s += f.geo.area[c] * d * d;
    }
    return std::sqrt(s);
}

double max_error(const Frame& f, const std::vector<double>& phi, const std::function<double(Vec2)>& exact) {
    double m = 0.0;
    for (int c = 0; c < f.grid->ncells(); ++c)
        if (f.st.field(c)) m = std::max(m, std::abs(phi[c] - exact(f.geo.xc[c])));
    return m;
}

std::optional<double> sample_field(const Frame& f, const std::vector<P2Poly>& polys, Vec2 x) {
    const Grid& g = *f.grid;
    for (int pass = 0; pass < 2; ++pass) {
        for (int c = 0; c < g.ncells(); ++c) {
            if (!f.st.field(c) || g.is_background(c) != (pass == 1)) continue;
            const auto q = f.geo.corners(g, c);
            if (point_in_polygon({q.begin(), q.end()}, x)) return polys[c].eval(x);
        }
    }
    return std::nullopt;
}

std::vector<ProfilePoint> read_profile_csv(std::istream& is) {
    std::vector<ProfilePoint> out;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            header = true;
            continue;
        }
        std::istringstream ls(line);
        std::string comp, coord, value;
        if (!std::getline(ls, comp, ',') || !std::getline(ls, coord, ',') || !std::getline(ls, value))
            throw Error(ErrorKind::Io, "profile CSV: malformed line '" + line + "'");
        if (comp != "u" && comp != "v") throw Error(ErrorKind::Io, "profile CSV: unknown component '" + comp + "'");
        try {
            out.push_back({comp[0], std::stod(coord), std::stod(value)});
        } catch (const std::exception&) {
            throw Error(ErrorKind::Io, "profile CSV: malformed number in '" + line + "'");
        }
    }
    return out;
}

CenterlineReport cavity_centerline_deviation(const Frame& f, const FlowField& q, const std::vector<ProfilePoint>& ref) {
    const auto pu = reconstruct_all(f, q.u), pv = reconstruct_all(f, q.v);
    CenterlineReport r;
    for (const auto& pt : ref) {
        // Wall points carry imposed values only.
        if (pt.coord <= 0.0 || pt.coord >= 1.0) continue;
        const double s = pt.coord - 0.5;
        const Vec2 x = pt.component == 'u' ? Vec2{0.0, s} : Vec2{s, 0.0};
        const auto val = sample_field(f, pt.component == 'u' ? pu : pv, x);
        if (!val) throw Error(ErrorKind::Internal, "centerline point outside every field cell");
        const double d = std::abs(*val - pt.value);
        if (pt.component == 'u') {
            r.max_dev_u = std::max(r.max_dev_u, d);
            ++r.points_u;
        } else {
            r.max_dev_v = std::max(r.max_dev_v, d);
            ++r.points_v;
        }
    }
    return r;
}

double max_edge_length(const Frame& f) {
    double m = 0.0;
    for (const auto& e : f.geo.edge) m = std::max(m, e.length);
    return m;
}

ForceRecord compute_forces(const Frame& f, const FlowField& q, const std::string& body_tag, double re,
                           double diameter, double u_ref) {
    const Grid& g = *f.grid;
    ForceRecord r;
    r.t = f.t;
    Vec2 force{};
    bool found = false;
    for (int e = 0; e < g.nedges(); ++e) {
        const Edge& ed = g.edge(e);
        if (ed.right >= 0) continue;
        const SideBc& bc = g.block(ed.block).sides[static_cast<int>(ed.side)];
        if (bc.kind != SideKind::Physical || bc.tag != body_tag) continue;
        found = true;
        const int c = ed.left;
        const EdgeGeom& eg = f.geo.edge[e];
        const LSFactor& fac = f.st.factor[c];
        const P2Poly pu = reconstruct_p2(fac, q.u), pv = reconstruct_p2(fac, q.v), pp = reconstruct_p2(fac, q.p);
        const Vec2 gu = pu.grad(eg.mid), gv = pv.grad(eg.mid);
        const double p = pp.eval(eg.mid);
        const Vec2 n = -eg.normal;
        // T = -p I + (grad u + grad u^T) / Re
        const double txx = -p + 2.0 * gu.x / re;
        const double tyy = -p + 2.0 * gv.y / re;
        const double txy = (gu.y + gv.x) / re;
        force += Vec2{txx * n.x + txy * n.y, txy * n.x + tyy * n.y} * eg.length;
    }
    if (!found) throw Error(ErrorKind::Configuration, "no boundary edge tagged '" + body_tag + "'");
    const Vec2 coef = force * (2.0 / (std::abs(u_ref) * diameter));
    r.cd = coef.x;
    r.cl = coef.y;
    return r;
}

double strouhal(const std::vector<ForceRecord>& history, double diameter, double u_ref) {
    if (history.size() < 4) throw Error(ErrorKind::Configuration, "insufficient force history for a Strouhal number");
    const double t0 = history.front().t, t1 = history.back().t;
    const double tmid = 0.5 * (t0 + t1);
    // Remove the mean of the trailing half so an offset lift still crosses.
    double mean = 0.0;
    int cnt = 0;
    for (const auto& h : history)
        if (h.t >= tmid) {
            mean += h.cl;
            ++cnt;
        }
    mean /= std::max(cnt, 1);
    std::vector<double> up;
    for (size_t k = 1; k < history.size(); ++k) {
        const auto& a = history[k - 1];
        const auto& b = history[k];
        if (a.t < tmid) continue;
        const double fa = a.cl - mean, fb = b.cl - mean;
        if (fa < 0.0 && fb >= 0.0) up.push_back(a.t + (b.t - a.t) * (-fa) / (fb - fa));
    }
    if (up.size() < 3) throw Error(ErrorKind::Configuration, "insufficient force history for a Strouhal number");
    const double period = (up.back() - up.front()) / static_cast<double>(up.size() - 1);
    return diameter / (period * std::abs(u_ref));
}

double mean_drag(const std::vector<ForceRecord>& history) {
    if (history.empty()) throw Error(ErrorKind::Configuration, "empty force history");
    const double tmid = 0.5 * (history.front().t + history.back().t);
    double s = 0.0;
    int n = 0;
    for (const auto& h : history)
        if (h.t >= tmid) {
            s += h.cd;
            ++n;
        }
    return s / n;
}

void fill_orders(std::vector<ErrorRow>& rows) {
    for (size_t k = 0; k < rows.size(); ++k) {
        rows[k].order_u.reset();
        rows[k].order_p.reset();
        if (k == 0) continue;
        const double lh = std::log(rows[k - 1].mesh_h / rows[k].mesh_h);
        rows[k].order_u = std::log(rows[k - 1].err_u / rows[k].err_u) / lh;
        rows[k].order_p = std::log(rows[k - 1].err_p / rows[k].err_p) / lh;
    }
}

RunResult run_scenario(const ScenarioParams& p, const std::function<void(const Simulation&, const StepReport&)>& cb) {
    RunResult r;
    r.scenario = build_scenario(p);
    r.sim = std::make_unique<Simulation>(r.scenario.grid, integrator_options(p), 0.0, r.scenario.initial);
    const bool forces = !r.scenario.body_tag.empty();
    if (forces)
        r.forces.push_back(compute_forces(r.sim->frame(), r.sim->field(), r.scenario.body_tag, p.re,
                                          r.scenario.diameter, r.scenario.u_ref));
    if (cb) {
        StepReport start;
        start.t = r.sim->time();
        start.active = r.sim->grid().ncells() - r.sim->frame().st.count(CellClass::Hole);
        cb(*r.sim, start);
    }
    r.sim->run(p.t_f, [&](const StepReport& rep) {
        r.steps.push_back(rep);
        if (forces) {
            ForceRecord fr = compute_forces(r.sim->frame(), r.sim->field(), r.scenario.body_tag, p.re,
                                            r.scenario.diameter, r.scenario.u_ref);
            fr.t = rep.t;
            r.forces.push_back(fr);
        }
        if (cb) cb(*r.sim, rep);
    });
    return r;
}

ErrorRow measure_errors(const RunResult& r) {
    if (!r.scenario.exact) throw Error(ErrorKind::Usage, "scenario " + r.scenario.params.tag + " has no exact solution");
    const Frame& f = r.sim->frame();
    const double t = r.sim->time();
    const auto& ex = r.scenario.exact;
    ErrorRow row;
    row.mesh_h = max_edge_length(f);
    row.err_u = l2_error(f, r.sim->field().u, [&](Vec2 x) { return ex(x, t)[0]; });
    row.err_v = l2_error(f, r.sim->field().v, [&](Vec2 x) { return ex(x, t)[1]; });
    auto pe = [&](Vec2 x) { return ex(x, t)[2]; };
    row.err_p = r.sim->gauged() ? l2_error_zero_mean(f, r.sim->field().p, pe) : l2_error(f, r.sim->field().p, pe);
    return row;
}

} // namespace chimera
