#include "chimera/operators.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace chimera {

Frame::Frame(const Grid& g, double time, std::shared_ptr<const Layout> lay, std::vector<Vec2> vertex_velocity)
    : grid(&g), t(time), layout(std::move(lay)), geo(layout->geo), st(layout->st), vcells(layout->vcells),
      vweights(layout->vweights), wv(std::move(vertex_velocity)) {}

FramePtr make_frame(const Grid& g, const std::vector<Vec2>& xv, double t, int layers, const LSThresholds& th) {
    auto lay = std::make_shared<Layout>();
    lay->geo = compute_geometry(g, xv);
    lay->st = build_overset(g, lay->geo, layers, th);
    const int nv = g.nverts();
    lay->vcells.resize(nv);
    lay->vweights.resize(nv);
    const auto mask = lay->st.active_mask();
    std::vector<std::string> errors(nv);
#pragma omp parallel for schedule(static)
    for (int v = 0; v < nv; ++v) {
        try {
            const DualCell d = dual_cell(g, lay->geo, v, mask);
            if (d.cells.empty()) continue;
            for (const auto& r : d.cells) lay->vcells[v].push_back(r.cell);
            lay->vweights[v] = vertex_weights(d, xv[v]);
        } catch (const std::exception& e) {
            errors[v] = e.what();
        }
    }
    for (int v = 0; v < nv; ++v)
        if (!errors[v].empty()) throw Error(ErrorKind::Reconstruction, errors[v] + " at vertex " + std::to_string(v));
    return std::make_shared<const Frame>(g, t, lay, vertex_velocities(g, xv, t));
}

FramePtr retime_frame(const Frame& f, double t) {
    return std::make_shared<const Frame>(*f.grid, t, f.layout, vertex_velocities(*f.grid, f.geo.xv, t));
}

// ============================================================================
// Boundary data
// ============================================================================

bool is_dirichlet(const SideBc& s, Var v) {
    if (s.kind != SideKind::Physical) return false;
    switch (v) {
    case Var::U: return s.u_dirichlet;
    case Var::V: return s.v_dirichlet;
    case Var::P: return s.p_dirichlet;
    }
    return false;
}

double boundary_value(const SideBc& s, Var v, Vec2 x, double t, Vec2 wmesh) {
    if (v == Var::P) return s.pressure_at(x, t);
    const Vec2 u = s.follows_mesh ? wmesh : s.velocity_at(x, t);
    return v == Var::U ? u.x : u.y;
}

VertexForm vertex_form(const Frame& f, int v, Var var) {
    const Grid& g = *f.grid;
    VertexForm out;
    const Block& b = g.block(g.vert_block(v));
    for (Side s : g.vert_sides(v)) {
        const SideBc& bc = b.sides[static_cast<int>(s)];
        if (is_dirichlet(bc, var)) {
            out.constant = boundary_value(bc, var, f.geo.xv[v], f.t, f.wv[v]);
            out.boundary_weight = 1.0;
            return out;
        }
    }
    out.cells = f.vcells[v];
    out.weights = f.vweights[v];
    if (out.cells.empty()) {
        std::ostringstream os;
        os << "vertex " << v << " has no active neighbour for extrapolation";
        throw Error(ErrorKind::Internal, os.str());
    }
    return out;
}

// ============================================================================
// Rows
// ============================================================================

double RowStencil::apply(const std::vector<double>& x) const {
    double s = constant;
    for (size_t k = 0; k < cols.size(); ++k) s += vals[k] * x[cols[k]];
    return s;
}

double RowStencil::coefficient(int col) const {
    for (size_t k = 0; k < cols.size(); ++k)
        if (cols[k] == col) return vals[k];
    return 0.0;
}

std::vector<double> apply_rows(const std::vector<RowStencil>& rows, const std::vector<double>& x) {
    std::vector<double> y(rows.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < static_cast<int>(rows.size()); ++c)
        if (rows[c].row >= 0) y[c] = rows[c].apply(x);
    return y;
}

namespace {

struct RowAccumulator {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;
    double boundary_weight = 0.0;

    void add(int c, double w) { terms.emplace_back(c, w); }
    void add_form(const VertexForm& vf, double s) {
        for (size_t k = 0; k < vf.cells.size(); ++k) add(vf.cells[k], s * vf.weights[k]);
        constant += s * vf.constant;
        boundary_weight += s * vf.boundary_weight;
    }

    /// Merges duplicates and sets the diagonal so that constants are annihilated exactly.
    RowStencil finish(int row) {
        std::sort(terms.begin(), terms.end(), [](auto& a, auto& b) { return a.first < b.first; });
        RowStencil r;
        r.row = row;
        r.constant = constant;
        double off = 0.0;
        for (size_t k = 0; k < terms.size();) {
            const int c = terms[k].first;
            double s = 0.0;
            while (k < terms.size() && terms[k].first == c) s += terms[k++].second;
            if (c == row) continue;
            r.cols.push_back(c);
            r.vals.push_back(s);
            off += s;
        }
        r.cols.insert(r.cols.begin(), row);
        r.vals.insert(r.vals.begin(), -(off + boundary_weight));
        return r;
    }
};

/// Quadratic fit around a cell that passes through its Dirichlet boundary midpoints exactly.
struct BoundaryFit {
    std::vector<int> cells;
    Eigen::MatrixXd mr; ///< 5 x cells, applied to (phi_j - phi_c)
    Eigen::MatrixXd mq; ///< 5 x boundary points, applied to (g_k - phi_c)
    std::vector<double> bvals;
};

BoundaryFit boundary_fit(const Frame& f, int c, Var var) {
    const Grid& g = *f.grid;
    const LSFactor& fac = f.st.factor[c];
    const Block& b = g.block(g.cell_block(c));
    std::vector<Vec2> bpts;
    BoundaryFit fit;
    for (int e : g.cell_edges(c)) {
        const Edge& ed = g.edge(e);
        if (ed.right >= 0) continue;
        const SideBc& bc = b.sides[static_cast<int>(ed.side)];
        if (!is_dirichlet(bc, var)) continue;
        const EdgeGeom& eg = f.geo.edge[e];
        bpts.push_back(eg.mid - fac.center);
        fit.bvals.push_back(boundary_value(bc, var, eg.mid, f.t, edge_velocity(f.wv[ed.v1], f.wv[ed.v2])));
    }
    const auto nm = static_cast<Eigen::Index>(fac.members.size());
    const auto nb = static_cast<Eigen::Index>(bpts.size());
    if (nb > 5) throw Error(ErrorKind::Reconstruction, "too many boundary constraints for cell " + std::to_string(c));
    Eigen::MatrixXd z(nm, 5), bm(nb, 5);
    for (Eigen::Index r = 0; r < nm; ++r) {
        const auto q = p2_basis(fac.offsets[static_cast<size_t>(r)], fac.h);
        for (int k = 0; k < 5; ++k) z(r, k) = q[k];
    }
    for (Eigen::Index r = 0; r < nb; ++r) {
        const auto q = p2_basis(bpts[static_cast<size_t>(r)], fac.h);
        for (int k = 0; k < 5; ++k) bm(r, k) = q[k];
    }
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(5 + nb, 5 + nb);
    kkt.topLeftCorner(5, 5) = z.transpose() * z;
    kkt.topRightCorner(5, nb) = bm.transpose();
    kkt.bottomLeftCorner(nb, 5) = bm;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(5 + nb, nm + nb);
    rhs.topLeftCorner(5, nm) = z.transpose();
    rhs.bottomRightCorner(nb, nb) = Eigen::MatrixXd::Identity(nb, nb);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible())
        throw Error(ErrorKind::Reconstruction, "singular boundary fit at cell " + std::to_string(c));
    const Eigen::MatrixXd sol = lu.solve(rhs);
    fit.mr = sol.topLeftCorner(5, nm);
    fit.mq = sol.topRightCorner(5, nb);
    for (const auto& m : fac.members) fit.cells.push_back(m.cell);
    return fit;
}

RowStencil laplacian_row(const Frame& f, int c, Var var) {
    const Grid& g = *f.grid;
    const Geometry& geo = f.geo;
    RowAccumulator acc;
    std::optional<BoundaryFit> fit;
    for (int e : g.cell_edges(c)) {
        const Edge& ed = g.edge(e);
        const EdgeGeom& eg = geo.edge[e];
        const double sign = ed.left == c ? 1.0 : -1.0;
        if (ed.right >= 0) {
            const double cn = dot(eg.c, eg.normal);
            if (cn <= 0.05) {
                std::ostringstream os;
                os << "near-degenerate diamond at edge " << e << " (c.n = " << cn << ")";
                throw Error(ErrorKind::Geometry, os.str());
            }
            // |edge| * [(phi_R - phi_L)/d - (tau.c)(V2 - V1)/|edge|] / (c.n)
            const double a = sign * eg.length / (eg.dist * cn);
            acc.add(ed.right, a);
            acc.add(ed.left, -a);
            const double tc = sign * dot(eg.tangent, eg.c) / cn;
            if (tc != 0.0) {
                acc.add_form(vertex_form(f, ed.v2, var), -tc);
                acc.add_form(vertex_form(f, ed.v1, var), tc);
            }
            continue;
        }
        const SideBc& bc = g.block(ed.block).sides[static_cast<int>(ed.side)];
        if (bc.kind != SideKind::Physical) {
            std::ostringstream os;
            os << "field cell " << c << " touches a non-physical block boundary at edge " << e;
            throw Error(ErrorKind::Internal, os.str());
        }
        if (!is_dirichlet(bc, var)) continue;
        if (!fit) fit = boundary_fit(f, c, var);
        const LSFactor& fac = f.st.factor[c];
        const auto gb = p2_basis_grad(eg.mid - fac.center, fac.h);
        Eigen::Matrix<double, 1, 5> gn;
        for (int k = 0; k < 5; ++k) gn(k) = dot(gb[k], eg.normal) * eg.length;
        const Eigen::RowVectorXd wr = gn * fit->mr;
        const Eigen::RowVectorXd wq = gn * fit->mq;
        for (Eigen::Index j = 0; j < wr.size(); ++j) acc.add(fit->cells[static_cast<size_t>(j)], wr(j));
        for (Eigen::Index k = 0; k < wq.size(); ++k) {
            acc.constant += wq(k) * fit->bvals[static_cast<size_t>(k)];
            acc.boundary_weight += wq(k);
        }
    }
    return acc.finish(c);
}

} // namespace

std::vector<RowStencil> laplacian_rows(const Frame& f, Var var) {
    const int nc = f.grid->ncells();
    std::vector<RowStencil> rows(nc);
    std::vector<std::string> err(nc);
    std::vector<int> kind(nc, 0);
#pragma omp parallel for schedule(dynamic, 64)
    for (int c = 0; c < nc; ++c) {
        if (!f.st.field(c)) continue;
        try {
            rows[c] = laplacian_row(f, c, var);
        } catch (const Error& e) {
            err[c] = e.what();
            kind[c] = static_cast<int>(e.kind());
        }
    }
    for (int c = 0; c < nc; ++c)
        if (!err[c].empty()) throw Error(static_cast<ErrorKind>(kind[c]), err[c]);
    return rows;
}

RowStencil fringe_row(const Frame& f, int k) {
    const int d = f.st.donor[k];
    if (d < 0) throw Error(ErrorKind::Internal, "fringe cell " + std::to_string(k) + " has no donor");
    const LSFactor& fac = f.st.factor[d];
    const auto w = p2_eval_weights(fac, f.geo.xc[k]);
    RowStencil r;
    r.row = k;
    double sw = 0.0;
    for (double x : w) sw += x;
    r.cols.push_back(k);
    r.vals.push_back(1.0);
    r.cols.push_back(d);
    r.vals.push_back(-(1.0 - sw));
    for (size_t j = 0; j < w.size(); ++j) {
        const int m = fac.members[j].cell;
        const auto it = std::find(r.cols.begin(), r.cols.end(), m);
        if (it != r.cols.end()) {
            r.vals[static_cast<size_t>(it - r.cols.begin())] -= w[j];
        } else {
            r.cols.push_back(m);
            r.vals.push_back(-w[j]);
        }
    }
    return r;
}

std::vector<RowStencil> fringe_rows(const Frame& f) {
    const int nc = f.grid->ncells();
    std::vector<RowStencil> rows(nc);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < nc; ++c)
        if (f.st.cls[c] == CellClass::Fringe) rows[c] = fringe_row(f, c);
    return rows;
}

// ============================================================================
// Explicit operators
// ============================================================================

std::vector<P2Poly> reconstruct_all(const Frame& f, const std::vector<double>& phi) {
    const int nc = f.grid->ncells();
    std::vector<P2Poly> p(nc);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < nc; ++c)
        if (f.st.active(c)) p[c] = reconstruct_p2(f.st.factor[c], phi);
    return p;
}

Vec2 physical_flux(Vec2 q, Vec2 w, Vec2 n) { return q * dot(q - w, n); }

double signal_speed(Vec2 q, Vec2 w, Vec2 n) { return std::abs(2.0 * dot(q - w, n)); }

Vec2 rusanov_flux(Vec2 um, Vec2 up, Vec2 w, Vec2 n) {
    const double s = std::max(signal_speed(um, w, n), signal_speed(up, w, n));
    return (physical_flux(um, w, n) + physical_flux(up, w, n)) * 0.5 - (up - um) * (0.5 * s);
}

namespace {

bool edge_needed(const Frame& f, const Edge& ed) {
    return f.st.field(ed.left) || (ed.right >= 0 && f.st.field(ed.right));
}

Vec2 edge_flux(const Frame& f, const std::vector<P2Poly>& pu, const std::vector<P2Poly>& pv, int e) {
    const Grid& g = *f.grid;
    const Edge& ed = g.edge(e);
    const EdgeGeom& eg = f.geo.edge[e];
    const Vec2 w = edge_velocity(f.wv[ed.v1], f.wv[ed.v2]);
    const Vec2 um{pu[ed.left].eval(eg.mid), pv[ed.left].eval(eg.mid)};
    Vec2 up;
    if (ed.right >= 0) {
        const Vec2 m = eg.mid - ed.shift;
        up = {pu[ed.right].eval(m), pv[ed.right].eval(m)};
    } else {
        const SideBc& bc = g.block(ed.block).sides[static_cast<int>(ed.side)];
        up = um;
        if (is_dirichlet(bc, Var::U)) up.x = boundary_value(bc, Var::U, eg.mid, f.t, w);
        if (is_dirichlet(bc, Var::V)) up.y = boundary_value(bc, Var::V, eg.mid, f.t, w);
    }
    return rusanov_flux(um, up, w, eg.normal) * eg.length;
}

} // namespace

std::vector<Vec2> convective_residual(const Frame& f, const std::vector<double>& u, const std::vector<double>& v,
                                      Kernel k) {
    const Grid& g = *f.grid;
    const auto pu = reconstruct_all(f, u);
    const auto pv = reconstruct_all(f, v);
    const int nc = g.ncells(), ne = g.nedges();
    std::vector<Vec2> r(nc);
    if (k == Kernel::Serial) {
        for (int e = 0; e < ne; ++e) {
            const Edge& ed = g.edge(e);
            if (!edge_needed(f, ed)) continue;
            const Vec2 fl = edge_flux(f, pu, pv, e);
            if (f.st.field(ed.left)) r[ed.left] += fl;
            if (ed.right >= 0 && f.st.field(ed.right)) r[ed.right] -= fl;
        }
        return r;
    }
    std::vector<Vec2> fl(ne);
#pragma omp parallel for schedule(static)
    for (int e = 0; e < ne; ++e)
        if (edge_needed(f, g.edge(e))) fl[e] = edge_flux(f, pu, pv, e);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < nc; ++c) {
        if (!f.st.field(c)) continue;
        Vec2 s{};
        for (int e : g.cell_edges(c)) s += g.edge(e).left == c ? fl[e] : -fl[e];
        r[c] = s;
    }
    return r;
}

double edge_average_value(const Frame& f, const std::vector<P2Poly>& polys, int e, Var var) {
    const Grid& g = *f.grid;
    const Edge& ed = g.edge(e);
    const EdgeGeom& eg = f.geo.edge[e];
    if (ed.right >= 0) return 0.5 * (polys[ed.left].eval(eg.mid) + polys[ed.right].eval(eg.mid - ed.shift));
    const SideBc& bc = g.block(ed.block).sides[static_cast<int>(ed.side)];
    if (is_dirichlet(bc, var))
        return boundary_value(bc, var, eg.mid, f.t, edge_velocity(f.wv[ed.v1], f.wv[ed.v2]));
    return polys[ed.left].eval(eg.mid);
}

std::vector<Vec2> gradient(const Frame& f, const std::vector<double>& phi, Var var, Kernel k) {
    const Grid& g = *f.grid;
    const auto p = reconstruct_all(f, phi);
    const int nc = g.ncells(), ne = g.nedges();
    std::vector<Vec2> r(nc);
    if (k == Kernel::Serial) {
        for (int e = 0; e < ne; ++e) {
            const Edge& ed = g.edge(e);
            if (!edge_needed(f, ed)) continue;
            const Vec2 fl = f.geo.edge[e].normal * (edge_average_value(f, p, e, var) * f.geo.edge[e].length);
            if (f.st.field(ed.left)) r[ed.left] += fl;
            if (ed.right >= 0 && f.st.field(ed.right)) r[ed.right] -= fl;
        }
        return r;
    }
    std::vector<Vec2> fl(ne);
#pragma omp parallel for schedule(static)
    for (int e = 0; e < ne; ++e)
        if (edge_needed(f, g.edge(e)))
            fl[e] = f.geo.edge[e].normal * (edge_average_value(f, p, e, var) * f.geo.edge[e].length);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < nc; ++c) {
        if (!f.st.field(c)) continue;
        Vec2 s{};
        for (int e : g.cell_edges(c)) s += g.edge(e).left == c ? fl[e] : -fl[e];
        r[c] = s;
    }
    return r;
}

std::vector<double> divergence(const Frame& f, const std::vector<double>& u, const std::vector<double>& v) {
    const auto gu = gradient(f, u, Var::U);
    const auto gv = gradient(f, v, Var::V);
    std::vector<double> d(gu.size());
    for (size_t c = 0; c < d.size(); ++c) d[c] = gu[c].x + gv[c].y;
    return d;
}

} // namespace chimera
