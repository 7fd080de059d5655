#include "chimera/timeintegrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace chimera {

// ============================================================================
// Tableaux
// ============================================================================

double ButcherTableau::ce(int i) const {
    double s = 0.0;
    for (double a : ae[i]) s += a;
    return s;
}

double ButcherTableau::ci(int i) const {
    double s = 0.0;
    for (double a : ai[i]) s += a;
    return s;
}

void ButcherTableau::validate() const {
    auto fail = [&](const std::string& what) {
        throw Error(ErrorKind::Configuration, "tableau " + name + ": " + what);
    };
    const size_t n = static_cast<size_t>(stages) + 1;
    if (stages < 1) fail("needs at least one implicit stage");
    if (ae.size() != n || ai.size() != n || be.size() != n || bi.size() != n) fail("inconsistent sizes");
    for (size_t i = 0; i < n; ++i) {
        if (ae[i].size() != n || ai[i].size() != n) fail("inconsistent row sizes");
        for (size_t j = i; j < n; ++j)
            if (ae[i][j] != 0.0) fail("explicit part is not strictly lower triangular");
        for (size_t j = i + 1; j < n; ++j)
            if (ai[i][j] != 0.0) fail("implicit part is not lower triangular");
        if (i == 0) {
            for (double a : ai[0])
                if (a != 0.0) fail("first stage must be explicit");
        } else if (!(ai[i][i] > 0.0)) {
            fail("implicit diagonal must be positive");
        }
        if (std::abs(ce(static_cast<int>(i)) - ci(static_cast<int>(i))) > 1e-14) fail("explicit and implicit abscissae differ");
    }
    double sb = 0.0, sbi = 0.0;
    for (size_t j = 0; j < n; ++j) {
        sb += be[j];
        sbi += bi[j];
    }
    if (std::abs(sb - 1.0) > 1e-14 || std::abs(sbi - 1.0) > 1e-14) fail("weights do not sum to one");
    for (size_t j = 0; j < n; ++j) {
        if (std::abs(ai[n - 1][j] - bi[j]) > 1e-14) fail("implicit part is not stiffly accurate");
        if (std::abs(ae[n - 1][j] - be[j]) > 1e-14) fail("explicit part is not stiffly accurate");
    }
}

ButcherTableau ButcherTableau::euler() {
    ButcherTableau t;
    t.name = "euler";
    t.stages = 1;
    t.ae = {{0.0, 0.0}, {1.0, 0.0}};
    t.ai = {{0.0, 0.0}, {0.0, 1.0}};
    t.be = {1.0, 0.0};
    t.bi = {0.0, 1.0};
    return t;
}

ButcherTableau ButcherTableau::ars222() {
    const double g = 1.0 - std::sqrt(2.0) / 2.0;
    const double d = 1.0 - 1.0 / (2.0 * g);
    ButcherTableau t;
    t.name = "ars222";
    t.stages = 2;
    t.ae = {{0.0, 0.0, 0.0}, {g, 0.0, 0.0}, {d, 1.0 - d, 0.0}};
    t.ai = {{0.0, 0.0, 0.0}, {0.0, g, 0.0}, {0.0, 1.0 - g, g}};
    t.be = {d, 1.0 - d, 0.0};
    t.bi = {0.0, 1.0 - g, g};
    return t;
}

ButcherTableau ButcherTableau::by_name(const std::string& name) {
    if (name == "euler" || name == "euler111") return euler();
    if (name == "ars222" || name == "ars") return ars222();
    throw Error(ErrorKind::Configuration, "unknown tableau '" + name + "'");
}

std::string StepReport::line() const {
    std::ostringstream os;
    os.precision(6);
    os << "step " << step << " t=" << t << " dt=" << dt << " iter_u=" << iter_u << " iter_v=" << iter_v
       << " iter_p=" << iter_p << " div=" << div_max << " div_raw=" << div_raw << " active=" << active
       << " born=" << born << " dead=" << dead;
    return os.str();
}

// ============================================================================
// Helpers
// ============================================================================

bool has_pressure_dirichlet(const Grid& g) {
    for (const auto& b : g.blocks())
        for (const auto& s : b.sides)
            if (s.kind == SideKind::Physical && s.p_dirichlet) return true;
    return false;
}

namespace {

/// Value at the origin of a least-squares fit through (offset, value) samples.
double extrapolate_to_center(const std::vector<Vec2>& off, const std::vector<double>& val, double h) {
    const auto n = static_cast<Eigen::Index>(off.size());
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    auto fit = [&](int nb) {
        Eigen::MatrixXd a(n, nb);
        Eigen::VectorXd b(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            const Vec2 d = off[static_cast<size_t>(r)] / h;
            const double row[6] = {1.0, d.x, d.y, d.x * d.y, 0.5 * d.x * d.x, 0.5 * d.y * d.y};
            for (int k = 0; k < nb; ++k) a(r, k) = row[k];
            b(r) = val[static_cast<size_t>(r)];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        if (qr.rank() < nb) return std::numeric_limits<double>::quiet_NaN();
        return static_cast<double>(qr.solve(b)(0));
    };
    double v = std::numeric_limits<double>::quiet_NaN();
    if (n >= 6) v = fit(6);
    if (std::isnan(v) && n >= 3) v = fit(3);
    if (std::isnan(v)) {
        v = 0.0;
        for (double x : val) v += x;
        v /= static_cast<double>(n);
    }
    return v;
}

std::vector<char> field_mask(const Frame& f) {
    std::vector<char> m(f.st.cls.size());
    for (size_t c = 0; c < m.size(); ++c) m[c] = f.st.field(static_cast<int>(c));
    return m;
}

/// Solves for fringe values given field values: identity rows on field cells, fringe rows elsewhere.
int extrapolate_fringe(const Frame& f, const std::vector<RowStencil>& fringe, std::vector<double>& x,
                       const SolverOptions& opt, const std::string& label) {
    const int nc = f.grid->ncells();
    SparseSystem s;
    s.a = csr_from_rows(fringe, nc);
    s.rhs.assign(nc, 0.0);
    for (int c = 0; c < nc; ++c)
        if (f.st.field(c)) s.rhs[c] = x[c];
    if (f.st.count(CellClass::Fringe) == 0) {
        x = s.rhs;
        return 0;
    }
    return solve(s, x, opt, label).iterations;
}

} // namespace

std::vector<double> carry_integrated(const Frame& dst, const std::vector<double>& val,
                                     const std::vector<char>& defined, const std::vector<double>& src_area) {
    const Grid& g = *dst.grid;
    const int nc = g.ncells();
    std::vector<double> out(nc, 0.0);
    std::vector<std::string> err(nc);
#pragma omp parallel for schedule(dynamic, 64)
    for (int c = 0; c < nc; ++c) {
        if (!dst.st.field(c)) continue;
        if (defined[c]) {
            out[c] = val[c];
            continue;
        }
        std::vector<Vec2> off;
        std::vector<double> dens;
        for (const auto* ring : {&g.moore(c), &g.ring2(c)}) {
            for (const auto& r : *ring) {
                if (!defined[r.cell]) continue;
                off.push_back(dst.geo.xc[r.cell] + r.shift - dst.geo.xc[c]);
                dens.push_back(val[r.cell] / src_area[r.cell]);
            }
        }
        if (off.empty()) {
            err[c] = "no defined neighbour to carry stage data into cell " + std::to_string(c);
            continue;
        }
        out[c] = extrapolate_to_center(off, dens, dst.geo.h[c]) * dst.geo.area[c];
    }
    for (int c = 0; c < nc; ++c)
        if (!err[c].empty()) throw Error(ErrorKind::Internal, err[c]);
    return out;
}

// ============================================================================
// Simulation
// ============================================================================

Simulation::Simulation(std::shared_ptr<const Grid> grid, IntegratorOptions opt, double t0, const InitialState& init)
    : grid_(std::move(grid)), opt_(std::move(opt)), t_(t0) {
    opt_.tableau.validate();
    if (!(opt_.cfl > 0.0 && opt_.cfl <= 1.0)) throw Error(ErrorKind::Configuration, "cfl must lie in (0, 1]");
    if (opt_.layers < 1) throw Error(ErrorKind::Configuration, "overset layer count must be at least 1");
    if (!(opt_.re > 0.0)) throw Error(ErrorKind::Configuration, "Reynolds number must be positive");
    for (const auto& b : grid_->blocks())
        if (b.motion.kind != MotionKind::None) static_ = false;
    gauge_ = !has_pressure_dirichlet(*grid_);
    frame_ = make_frame(*grid_, grid_->initial_vertices(), t_, opt_.layers, opt_.thresholds);
    const int nc = grid_->ncells();
    field_.u.assign(nc, 0.0);
    field_.v.assign(nc, 0.0);
    field_.p.assign(nc, 0.0);
    for (int c = 0; c < nc; ++c) {
        if (!frame_->st.active(c)) continue;
        const auto s = init(frame_->geo.xc[c]);
        field_.u[c] = s[0];
        field_.v[c] = s[1];
        field_.p[c] = s[2];
    }
    for (int k = 0; k < opt_.initial_projection; ++k) project_velocity();
}

void Simulation::project_velocity() {
    const Frame& f = *frame_;
    const int nc = grid_->ncells();
    const auto fringe = fringe_rows(f);
    auto rows = laplacian_rows(f, Var::P);
    for (auto& r : rows) r.constant = 0.0;
    const auto d = divergence(f, field_.u, field_.v);
    std::vector<double> rhs(nc, 0.0);
    for (int c = 0; c < nc; ++c)
        if (f.st.field(c)) rhs[c] = d[c];
    int gauge_cell = -1;
    if (gauge_) {
        for (int c = 0; c < nc && gauge_cell < 0; ++c)
            if (f.st.field(c)) gauge_cell = c;
    }
    std::vector<double> phi(nc, 0.0);
    solve(assemble_pressure(f, rows, fringe, 1.0, rhs, gauge_cell, 0.0), phi, opt_.solver, "initial projection");
    // Gradient of the potential with homogeneous boundary data.
    const auto g1 = gradient(f, phi, Var::P);
    const auto g0 = gradient(f, std::vector<double>(nc, 0.0), Var::P);
    for (int c = 0; c < nc; ++c) {
        if (!f.st.field(c)) continue;
        field_.u[c] -= (g1[c].x - g0[c].x) / f.geo.area[c];
        field_.v[c] -= (g1[c].y - g0[c].y) / f.geo.area[c];
    }
    extrapolate_fringe(f, fringe, field_.u, opt_.solver, "fringe u");
    extrapolate_fringe(f, fringe, field_.v, opt_.solver, "fringe v");
}

FramePtr Simulation::stage_frame(const std::vector<Vec2>& xv, double t) const {
    if (static_) return retime_frame(*frame_, t);
    return make_frame(*grid_, xv, t, opt_.layers, opt_.thresholds);
}

double Simulation::compute_dt() const {
    const Frame& f = *frame_;
    const Grid& g = *grid_;
    const int nc = g.ncells();
    double dt = std::numeric_limits<double>::infinity();
    bool any = false;
    for (int c = 0; c < nc; ++c) {
        if (!f.st.active(c)) continue;
        double lam = 0.0;
        for (int e : g.cell_edges(c)) {
            const Edge& ed = g.edge(e);
            const Vec2 n = f.geo.edge[e].normal;
            const Vec2 w = edge_velocity(f.wv[ed.v1], f.wv[ed.v2]);
            lam = std::max(lam, signal_speed({field_.u[c], field_.v[c]}, w, n));
            const int o = ed.left == c ? ed.right : ed.left;
            if (o >= 0 && f.st.active(o)) lam = std::max(lam, signal_speed({field_.u[o], field_.v[o]}, w, n));
        }
        if (lam > 0.0) {
            any = true;
            dt = std::min(dt, f.geo.h[c] / lam);
        }
    }
    if (any) {
        dt *= opt_.cfl;
    } else {
        dt = std::numeric_limits<double>::infinity();
        for (int c = 0; c < nc; ++c) {
            if (!f.st.active(c)) continue;
            const double h = f.geo.h[c];
            dt = std::min(dt, 1.0 / (2.0 / h + 4.0 / (opt_.re * h * h)));
        }
        dt = std::min(opt_.cfl * dt, opt_.dt_max);
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        std::ostringstream os;
        os << "invalid time step " << dt;
        throw Error(ErrorKind::Solver, os.str());
    }
    return dt;
}

StepReport Simulation::step(double dt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::Internal, "time step must be positive");
    const ButcherTableau& tab = opt_.tableau;
    const int s = tab.stages;
    const Grid& g = *grid_;
    const int nc = g.ncells();
    const Frame& f0 = *frame_;

    StepReport rep;
    rep.step = step_ + 1;
    rep.dt = dt;

    std::vector<FramePtr> fr(static_cast<size_t>(s) + 1);
    fr[0] = frame_;
    std::vector<std::vector<Vec2>> wv(static_cast<size_t>(s) + 1);
    wv[0] = f0.wv;

    // Stage data, area-integrated, with the frame each lives on.
    struct StageFlux {
        std::vector<double> u, v;
        std::vector<char> defined;
        std::vector<double> area;
    };
    std::vector<StageFlux> ex(static_cast<size_t>(s) + 1), im(static_cast<size_t>(s) + 1);
    {
        const auto conv = convective_residual(f0, field_.u, field_.v);
        StageFlux& e = ex[0];
        e.u.assign(nc, 0.0);
        e.v.assign(nc, 0.0);
        for (int c = 0; c < nc; ++c) {
            e.u[c] = -conv[c].x;
            e.v[c] = -conv[c].y;
        }
        e.defined = field_mask(f0);
        e.area = f0.geo.area;
    }
    StageFlux mass;
    mass.u.assign(nc, 0.0);
    mass.v.assign(nc, 0.0);
    for (int c = 0; c < nc; ++c) {
        mass.u[c] = f0.geo.area[c] * field_.u[c];
        mass.v[c] = f0.geo.area[c] * field_.v[c];
    }
    mass.defined = f0.st.active_mask();
    mass.area = f0.geo.area;

    FlowField cur = field_;
    for (int i = 1; i <= s; ++i) {
        const double a = tab.ai[i][i];
        const double adt = a * dt;
        const double ti = t_ + tab.ci(i) * dt;

        // Mesh stage.
        FramePtr fi_ptr;
        if (static_) {
            fi_ptr = retime_frame(f0, ti);
        } else {
            std::vector<Vec2> base = f0.geo.xv;
            for (int j = 0; j < i; ++j) {
                if (tab.ai[i][j] == 0.0) continue;
                for (size_t v = 0; v < base.size(); ++v) base[v] += wv[j][v] * (dt * tab.ai[i][j]);
            }
            fi_ptr = stage_frame(advance_vertices(g, base, ti, adt, opt_.newton), ti);
        }
        const Frame& fi = *fi_ptr;
        const Frame& fo = *fr[i - 1];
        fr[i] = fi_ptr;
        wv[i] = fi.wv;

        // Carry the previous stage state onto the new configuration as solver guesses.
        FlowField guess = cur;
        if (!static_) {
            const auto rc = reconcile(g, fo.geo, fo.st, fi.geo, fi.st, {&guess.u, &guess.v, &guess.p});
            rep.born += static_cast<int>(rc.born.size());
            rep.dead += static_cast<int>(rc.dead.size());
        }

        // Explicit base of the stage.
        std::vector<double> bu = carry_integrated(fi, mass.u, mass.defined, mass.area);
        std::vector<double> bv = carry_integrated(fi, mass.v, mass.defined, mass.area);
        auto accumulate = [&](const StageFlux& sf, double w) {
            if (w == 0.0) return;
            const auto cu = carry_integrated(fi, sf.u, sf.defined, sf.area);
            const auto cv = carry_integrated(fi, sf.v, sf.defined, sf.area);
            for (int c = 0; c < nc; ++c) {
                bu[c] += w * cu[c];
                bv[c] += w * cv[c];
            }
        };
        for (int j = 0; j < i; ++j) accumulate(ex[j], dt * tab.ae[i][j]);
        for (int j = 1; j < i; ++j) accumulate(im[j], dt * tab.ai[i][j]);

        // Old-configuration pressure terms.
        const auto fo_field = field_mask(fo);
        const auto gold = gradient(fo, cur.p, Var::P);
        std::vector<double> gx(nc), gy(nc);
        for (int c = 0; c < nc; ++c) {
            gx[c] = gold[c].x;
            gy[c] = gold[c].y;
        }
        gx = carry_integrated(fi, gx, fo_field, fo.geo.area);
        gy = carry_integrated(fi, gy, fo_field, fo.geo.area);
        const auto kold = apply_rows(laplacian_rows(fo, Var::P), cur.p);
        const auto kold_c = carry_integrated(fi, kold, fo_field, fo.geo.area);

        // Momentum predictor.
        const auto fringe = fringe_rows(fi);
        const double coef = adt / opt_.re;
        std::vector<double> ru(nc, 0.0), rv(nc, 0.0);
        for (int c = 0; c < nc; ++c) {
            if (!fi.st.field(c)) continue;
            ru[c] = bu[c] - adt * gx[c];
            rv[c] = bv[c] - adt * gy[c];
        }
        std::vector<double> us = guess.u, vs = guess.v;
        {
            const auto sys = assemble_momentum(fi, laplacian_rows(fi, Var::U), fringe, coef, ru);
            rep.iter_u += solve(sys, us, opt_.solver, "momentum u").iterations;
        }
        {
            const auto sys = assemble_momentum(fi, laplacian_rows(fi, Var::V), fringe, coef, rv);
            rep.iter_v += solve(sys, vs, opt_.solver, "momentum v").iterations;
        }

        // Pressure. The incremental source D(u*) + a dt K p_old feeds the part of p_old that the
        // central gradient cannot see back into p with unit gain, and at slip walls that mode grows.
        // A weight w = damping * dt moves the source towards D(u* + a dt G p_old), which has no such
        // memory, so the mode decays at a fixed rate per unit time and the order in dt is kept.
        const double w = std::min(1.0, opt_.pressure_damping * dt);
        std::vector<double> uh = us, vh = vs;
        for (int c = 0; c < nc; ++c) {
            if (!fi.st.field(c)) continue;
            uh[c] = us[c] + adt * gx[c] / fi.geo.area[c];
            vh[c] = vs[c] + adt * gy[c] / fi.geo.area[c];
        }
        extrapolate_fringe(fi, fringe, uh, opt_.solver, "fringe u");
        extrapolate_fringe(fi, fringe, vh, opt_.solver, "fringe v");
        std::vector<double> rp = divergence(fi, uh, vh);
        {
            const auto div_star = divergence(fi, us, vs);
            for (int c = 0; c < nc; ++c)
                if (fi.st.field(c)) rp[c] = w * rp[c] + (1.0 - w) * (div_star[c] + adt * kold_c[c]);
        }
        const auto kp_rows = laplacian_rows(fi, Var::P);
        int gauge_cell = -1;
        if (gauge_) {
            for (int c = 0; c < nc && gauge_cell < 0; ++c)
                if (fi.st.field(c)) gauge_cell = c;
        }
        std::vector<double> p = guess.p;
        {
            const auto sys = assemble_pressure(fi, kp_rows, fringe, adt, rp, gauge_cell,
                                               gauge_cell >= 0 ? guess.p[gauge_cell] : 0.0);
            rep.iter_p += solve(sys, p, opt_.solver, "pressure").iterations;
        }
        {
            const auto kp = apply_rows(kp_rows, p);
            for (int c = 0; c < nc; ++c) {
                if (!fi.st.field(c) || c == gauge_cell) continue;
                const double r = rp[c] - adt * kp[c];
                rep.div_max = std::max(rep.div_max, std::abs(r) / fi.geo.area[c]);
            }
        }

        // Velocity correction with the pressure increment.
        const auto gnew = gradient(fi, p, Var::P);
        std::vector<double> un(nc, 0.0), vn(nc, 0.0);
        for (int c = 0; c < nc; ++c) {
            if (!fi.st.field(c)) continue;
            un[c] = us[c] - adt * (gnew[c].x - gx[c]) / fi.geo.area[c];
            vn[c] = vs[c] - adt * (gnew[c].y - gy[c]) / fi.geo.area[c];
        }
        std::vector<double> ux = us, vx = vs;
        for (int c = 0; c < nc; ++c) {
            if (fi.st.field(c)) {
                ux[c] = un[c];
                vx[c] = vn[c];
            }
        }
        extrapolate_fringe(fi, fringe, ux, opt_.solver, "fringe u");
        extrapolate_fringe(fi, fringe, vx, opt_.solver, "fringe v");
        for (int c = 0; c < nc; ++c) {
            if (!fi.st.field(c)) continue;
            ux[c] = un[c];
            vx[c] = vn[c];
        }
        {
            const auto d = divergence(fi, ux, vx);
            for (int c = 0; c < nc; ++c)
                if (fi.st.field(c)) rep.div_raw = std::max(rep.div_raw, std::abs(d[c]) / fi.geo.area[c]);
        }

        // Stage fluxes.
        StageFlux& is = im[i];
        is.u.assign(nc, 0.0);
        is.v.assign(nc, 0.0);
        for (int c = 0; c < nc; ++c) {
            if (!fi.st.field(c)) continue;
            is.u[c] = (fi.geo.area[c] * ux[c] - bu[c]) / adt;
            is.v[c] = (fi.geo.area[c] * vx[c] - bv[c]) / adt;
        }
        is.defined = field_mask(fi);
        is.area = fi.geo.area;
        if (i < s) {
            const auto conv = convective_residual(fi, ux, vx);
            StageFlux& e = ex[i];
            e.u.assign(nc, 0.0);
            e.v.assign(nc, 0.0);
            for (int c = 0; c < nc; ++c) {
                e.u[c] = -conv[c].x;
                e.v[c] = -conv[c].y;
            }
            e.defined = is.defined;
            e.area = is.area;
        }

        for (int c = 0; c < nc; ++c) {
            if (!fi.st.active(c)) {
                ux[c] = vx[c] = p[c] = 0.0;
            }
        }
        cur.u = std::move(ux);
        cur.v = std::move(vx);
        cur.p = std::move(p);
    }

    frame_ = fr[static_cast<size_t>(s)];
    field_ = std::move(cur);
    t_ += dt;
    ++step_;
    rep.t = t_;
    rep.active = nc - frame_->st.count(CellClass::Hole);
    return rep;
}

void Simulation::run(double t_final, const std::function<void(const StepReport&)>& on_step) {
    const double eps = 1e-12 * std::max(1.0, std::abs(t_final));
    while (t_ < t_final - eps) {
        double dt = opt_.dt_fixed > 0.0 ? opt_.dt_fixed : compute_dt();
        const double rem = t_final - t_;
        const bool last = dt >= rem - eps;
        if (last) dt = rem;
        StepReport rep = step(dt);
        if (last) {
            t_ = t_final;
            rep.t = t_;
        }
        if (on_step) on_step(rep);
    }
}

} // namespace chimera
