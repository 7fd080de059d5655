#include "chimera/mesh.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace chimera {

// ============================================================================
// Boundary conditions and motion laws
// ============================================================================

SideBc SideBc::periodic() {
    SideBc s;
    s.kind = SideKind::Periodic;
    s.tag = "periodic";
    return s;
}

SideBc SideBc::overset() {
    SideBc s;
    s.kind = SideKind::Overset;
    s.tag = "overset";
    return s;
}

SideBc SideBc::wall(std::function<Vec2(Vec2, double)> vel, std::string tag) {
    SideBc s;
    s.kind = SideKind::Physical;
    s.tag = std::move(tag);
    s.velocity = std::move(vel);
    return s;
}

SideBc SideBc::moving_wall(std::string tag) {
    SideBc s;
    s.kind = SideKind::Physical;
    s.tag = std::move(tag);
    s.follows_mesh = true;
    return s;
}

SideBc SideBc::inlet(std::function<Vec2(Vec2, double)> vel) {
    SideBc s = wall(std::move(vel), "inlet");
    return s;
}

SideBc SideBc::outlet(std::function<double(Vec2, double)> p) {
    SideBc s;
    s.kind = SideKind::Physical;
    s.tag = "outlet";
    s.u_dirichlet = false;
    s.v_dirichlet = false;
    s.p_dirichlet = true;
    s.pressure = std::move(p);
    return s;
}

SideBc SideBc::slip() {
    SideBc s;
    s.kind = SideKind::Physical;
    s.tag = "slip";
    s.u_dirichlet = false;
    s.v_dirichlet = true;
    return s;
}

MotionLaw MotionLaw::none() { return {}; }

MotionLaw MotionLaw::translation(std::function<Vec2(double)> velocity_of_time) {
    MotionLaw m;
    m.kind = MotionKind::Translation;
    m.depends_on_position = false;
    m.fn = [v = std::move(velocity_of_time)](Vec2, double t) { return v(t); };
    return m;
}

MotionLaw MotionLaw::rotation(Vec2 center, double omega) {
    MotionLaw m;
    m.kind = MotionKind::Rotation;
    m.depends_on_position = true;
    m.fn = [center, omega](Vec2 x, double) {
        const Vec2 r = x - center;
        return Vec2{-omega * r.y, omega * r.x};
    };
    return m;
}

MotionLaw MotionLaw::analytic(std::function<Vec2(Vec2, double)> fn, bool depends_on_position) {
    MotionLaw m;
    m.kind = MotionKind::Analytic;
    m.depends_on_position = depends_on_position;
    m.fn = std::move(fn);
    return m;
}

// ============================================================================
// Block builders
// ============================================================================

Block make_cartesian_block(double x0, double x1, double y0, double y1, int ni, int nj) {
    if (ni < 1 || nj < 1) throw Error(ErrorKind::Configuration, "block needs at least one cell per direction");
    Block b;
    b.ni = ni;
    b.nj = nj;
    b.x0.resize(static_cast<size_t>(b.nverts()));
    for (int j = 0; j <= nj; ++j) {
        for (int i = 0; i <= ni; ++i) {
            const double x = (i == ni) ? x1 : x0 + (x1 - x0) * i / ni;
            const double y = (j == nj) ? y1 : y0 + (y1 - y0) * j / nj;
            b.x0[b.vid(i, j)] = {x, y};
        }
    }
    for (auto& s : b.sides) s = SideBc::overset();
    return b;
}

Block make_polar_block(Vec2 center, const std::vector<double>& radii, int ntheta) {
    if (radii.size() < 2 || ntheta < 3) throw Error(ErrorKind::Configuration, "polar block too small");
    Block b;
    b.ni = ntheta;
    b.nj = static_cast<int>(radii.size()) - 1;
    b.wrap_i = true;
    b.shift_i = {0.0, 0.0};
    b.x0.resize(static_cast<size_t>(b.nverts()));
    for (int j = 0; j <= b.nj; ++j) {
        for (int i = 0; i <= b.ni; ++i) {
            const int ii = (i == b.ni) ? 0 : i;
            const double th = -2.0 * std::numbers::pi * ii / ntheta;
            b.x0[b.vid(i, j)] = center + Vec2{std::cos(th), std::sin(th)} * radii[j];
        }
    }
    b.sides[static_cast<int>(Side::Left)] = SideBc::periodic();
    b.sides[static_cast<int>(Side::Right)] = SideBc::periodic();
    b.sides[static_cast<int>(Side::Bottom)] = SideBc::moving_wall("body");
    b.sides[static_cast<int>(Side::Top)] = SideBc::overset();
    return b;
}

void rotate_block(Block& b, Vec2 center, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    for (auto& p : b.x0) {
        const Vec2 r = p - center;
        p = center + Vec2{c * r.x - s * r.y, s * r.x + c * r.y};
    }
}

void perturb_interior(Block& b, double amplitude, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (int j = 1; j < b.nj; ++j) {
        for (int i = 1; i < b.ni; ++i) {
            const double a = angle(rng);
            b.x0[b.vid(i, j)] += Vec2{std::cos(a), std::sin(a)} * amplitude;
        }
    }
}

Block parse_block_description(const std::string& text) {
    auto fail = [&](const std::string& why) {
        throw Error(ErrorKind::Usage, "block description '" + text + "': " + why);
    };
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            fail("bad number '" + s + "'");
        }
        if (used != s.size() || !std::isfinite(v)) fail("bad number '" + s + "'");
        return v;
    };
    std::istringstream is(text);
    std::vector<std::string> tok;
    for (std::string t; is >> t;) tok.push_back(t);
    if (tok.size() < 6) fail("expected x0 x1 y0 y1 ni nj");
    const double x0 = number(tok[0]), x1 = number(tok[1]), y0 = number(tok[2]), y1 = number(tok[3]);
    const double ni = number(tok[4]), nj = number(tok[5]);
    if (!(x1 > x0) || !(y1 > y0)) fail("empty extent");
    if (ni < 1 || nj < 1 || ni != std::floor(ni) || nj != std::floor(nj)) fail("cell counts must be positive integers");
    Block b = make_cartesian_block(x0, x1, y0, y1, static_cast<int>(ni), static_cast<int>(nj));
    b.background = false;
    b.name = "foreground";
    double angle = 0.0, perturb = 0.0;
    std::uint64_t seed = 0;
    for (std::size_t k = 6; k < tok.size(); ++k) {
        const auto eq = tok[k].find('=');
        if (eq == std::string::npos) fail("expected key=value, got '" + tok[k] + "'");
        const std::string key = tok[k].substr(0, eq), val = tok[k].substr(eq + 1);
        if (key == "rotate") {
            angle = number(val);
        } else if (key == "perturb") {
            perturb = number(val);
            if (perturb < 0.0 || perturb >= 0.5) fail("perturb must lie in [0, 0.5)");
        } else if (key == "seed") {
            const double s = number(val);
            if (s < 0 || s != std::floor(s)) fail("seed must be a non-negative integer");
            seed = static_cast<std::uint64_t>(s);
        } else if (key == "motion") {
            std::vector<std::string> part;
            std::istringstream ms(val);
            for (std::string p; std::getline(ms, p, ':');) part.push_back(p);
            if (part.empty()) fail("empty motion");
            if (part[0] == "none" && part.size() == 1) {
                b.motion = MotionLaw::none();
            } else if (part[0] == "translation" && part.size() == 3) {
                const Vec2 v{number(part[1]), number(part[2])};
                b.motion = MotionLaw::translation([v](double) { return v; });
            } else if (part[0] == "rotation" && part.size() == 4) {
                b.motion = MotionLaw::rotation({number(part[1]), number(part[2])}, number(part[3]));
            } else {
                fail("unknown motion '" + val + "'");
            }
        } else {
            fail("unknown key '" + key + "'");
        }
    }
    if (angle != 0.0) rotate_block(b, {0.5 * (x0 + x1), 0.5 * (y0 + y1)}, angle);
    if (perturb > 0.0) perturb_interior(b, perturb * std::min((x1 - x0) / ni, (y1 - y0) / nj), seed);
    return b;
}

// ============================================================================
// Grid topology
// ============================================================================

namespace {

// Wraps index k into [0, n) for a periodic direction and returns the image count.
bool wrap_index(int& k, int n, bool periodic, int& images) {
    images = 0;
    if (k >= 0 && k < n) return true;
    if (!periodic) return false;
    while (k < 0) { k += n; --images; }
    while (k >= n) { k -= n; ++images; }
    return true;
}

} // namespace

Grid::Grid(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw Error(ErrorKind::Configuration, "grid needs at least one block");
    for (const auto& b : blocks_) {
        cell_offset_.push_back(ncells_);
        vert_offset_.push_back(nverts_);
        if (static_cast<int>(b.x0.size()) != b.nverts())
            throw Error(ErrorKind::Configuration, "block vertex array has wrong size");
        ncells_ += b.ncells();
        nverts_ += b.nverts();
    }
    cell_block_.resize(ncells_);
    vert_block_.resize(nverts_);
    cell_verts_.resize(ncells_);
    cell_edges_.assign(ncells_, {-1, -1, -1, -1});
    moore_.resize(ncells_);
    ring2_.resize(ncells_);
    overset_depth_.assign(ncells_, INT_MAX / 2);
    vert_cells_.resize(nverts_);
    vert_sides_.resize(nverts_);

    for (int bi = 0; bi < nblocks(); ++bi) {
        const Block& b = blocks_[bi];
        for (int v = 0; v < b.nverts(); ++v) vert_block_[vert_offset_[bi] + v] = bi;
        for (int j = 0; j < b.nj; ++j) {
            for (int i = 0; i < b.ni; ++i) {
                const int c = cell_id(bi, i, j);
                cell_block_[c] = bi;
                cell_verts_[c] = {vert_id(bi, i, j), vert_id(bi, i + 1, j), vert_id(bi, i + 1, j + 1),
                                  vert_id(bi, i, j + 1)};
                int depth = INT_MAX / 2;
                const auto side_kind = [&](Side s) { return b.sides[static_cast<int>(s)].kind; };
                if (side_kind(Side::Left) == SideKind::Overset) depth = std::min(depth, i);
                if (side_kind(Side::Right) == SideKind::Overset) depth = std::min(depth, b.ni - 1 - i);
                if (side_kind(Side::Bottom) == SideKind::Overset) depth = std::min(depth, j);
                if (side_kind(Side::Top) == SideKind::Overset) depth = std::min(depth, b.nj - 1 - j);
                overset_depth_[c] = depth;
            }
        }
    }

    // Edges: each cell owns its right and top faces, plus left/bottom faces on a non-wrapping boundary.
    for (int bi = 0; bi < nblocks(); ++bi) {
        const Block& b = blocks_[bi];
        for (int j = 0; j < b.nj; ++j) {
            for (int i = 0; i < b.ni; ++i) {
                const int c = cell_id(bi, i, j);
                const auto& cv = cell_verts_[c];
                auto add_edge = [&](int face, int right, Vec2 shift, Side side) {
                    Edge e;
                    e.left = c;
                    e.right = right;
                    e.shift = shift;
                    e.v1 = cv[face];
                    e.v2 = cv[(face + 1) % 4];
                    e.block = bi;
                    e.side = side;
                    const int id = static_cast<int>(edges_.size());
                    edges_.push_back(e);
                    cell_edges_[c][face] = id;
                    return id;
                };
                if (j == 0 && !b.wrap_j) add_edge(0, -1, {}, Side::Bottom);
                if (i == 0 && !b.wrap_i) add_edge(3, -1, {}, Side::Left);
                if (i + 1 < b.ni) {
                    const int id = add_edge(1, cell_id(bi, i + 1, j), {}, Side::Right);
                    cell_edges_[cell_id(bi, i + 1, j)][3] = id;
                } else if (b.wrap_i) {
                    const int id = add_edge(1, cell_id(bi, 0, j), b.shift_i, Side::Right);
                    cell_edges_[cell_id(bi, 0, j)][3] = id;
                } else {
                    add_edge(1, -1, {}, Side::Right);
                }
                if (j + 1 < b.nj) {
                    const int id = add_edge(2, cell_id(bi, i, j + 1), {}, Side::Top);
                    cell_edges_[cell_id(bi, i, j + 1)][0] = id;
                } else if (b.wrap_j) {
                    const int id = add_edge(2, cell_id(bi, i, 0), b.shift_j, Side::Top);
                    cell_edges_[cell_id(bi, i, 0)][0] = id;
                } else {
                    add_edge(2, -1, {}, Side::Top);
                }
            }
        }
    }

    for (int c = 0; c < ncells_; ++c) {
        for (int dj = -2; dj <= 2; ++dj) {
            for (int di = -2; di <= 2; ++di) {
                if (di == 0 && dj == 0) continue;
                auto r = offset_cell(c, di, dj);
                if (!r) continue;
                if (std::max(std::abs(di), std::abs(dj)) == 1) moore_[c].push_back(*r);
                else ring2_[c].push_back(*r);
            }
        }
    }

    for (int bi = 0; bi < nblocks(); ++bi) {
        const Block& b = blocks_[bi];
        for (int vj = 0; vj <= b.nj; ++vj) {
            for (int vi = 0; vi <= b.ni; ++vi) {
                const int v = vert_id(bi, vi, vj);
                const int di[4] = {-1, 0, 0, -1};
                const int dj[4] = {-1, -1, 0, 0};
                for (int k = 0; k < 4; ++k) {
                    int ci = vi + di[k], cj = vj + dj[k];
                    int ii = 0, jj = 0;
                    if (!wrap_index(ci, b.ni, b.wrap_i, ii)) continue;
                    if (!wrap_index(cj, b.nj, b.wrap_j, jj)) continue;
                    vert_cells_[v].push_back({cell_id(bi, ci, cj), b.shift_i * ii + b.shift_j * jj});
                }
                auto on_side = [&](Side s, bool cond) {
                    if (cond && b.sides[static_cast<int>(s)].kind == SideKind::Physical) vert_sides_[v].push_back(s);
                };
                on_side(Side::Top, vj == b.nj && !b.wrap_j);
                on_side(Side::Bottom, vj == 0 && !b.wrap_j);
                on_side(Side::Left, vi == 0 && !b.wrap_i);
                on_side(Side::Right, vi == b.ni && !b.wrap_i);
            }
        }
    }
}

std::array<int, 2> Grid::cell_ij(int c) const {
    const int bi = cell_block_[c];
    const int local = c - cell_offset_[bi];
    return {local % blocks_[bi].ni, local / blocks_[bi].ni};
}

std::array<int, 2> Grid::vert_ij(int v) const {
    const int bi = vert_block_[v];
    const int local = v - vert_offset_[bi];
    return {local % (blocks_[bi].ni + 1), local / (blocks_[bi].ni + 1)};
}

std::optional<CellRef> Grid::offset_cell(int c, int di, int dj) const {
    const int bi = cell_block_[c];
    const Block& b = blocks_[bi];
    auto [i, j] = cell_ij(c);
    int ci = i + di, cj = j + dj, ii = 0, jj = 0;
    if (!wrap_index(ci, b.ni, b.wrap_i, ii)) return std::nullopt;
    if (!wrap_index(cj, b.nj, b.wrap_j, jj)) return std::nullopt;
    const int id = cell_id(bi, ci, cj);
    if (id == c) return std::nullopt;
    return CellRef{id, b.shift_i * ii + b.shift_j * jj};
}

std::vector<Vec2> Grid::initial_vertices() const {
    std::vector<Vec2> xv(nverts_);
    for (int bi = 0; bi < nblocks(); ++bi)
        std::copy(blocks_[bi].x0.begin(), blocks_[bi].x0.end(), xv.begin() + vert_offset_[bi]);
    return xv;
}

// ============================================================================
// Geometry
// ============================================================================

QuadMetrics quad_metrics(const std::array<Vec2, 4>& p) {
    // Triangles (p0, p1, p2) and (p0, p2, p3); signed areas make the split exact for convex
    // and non-convex simple quadrilaterals alike.
    const double a1 = 0.5 * cross(p[1] - p[0], p[2] - p[0]);
    const double a2 = 0.5 * cross(p[2] - p[0], p[3] - p[0]);
    const Vec2 c1 = (p[0] + p[1] + p[2]) / 3.0;
    const Vec2 c2 = (p[0] + p[2] + p[3]) / 3.0;
    QuadMetrics m;
    m.area = a1 + a2;
    m.centroid = m.area != 0.0 ? (c1 * a1 + c2 * a2) / m.area : (p[0] + p[1] + p[2] + p[3]) / 4.0;
    return m;
}

double polygon_area(const std::vector<Vec2>& p) {
    double s = 0.0;
    const size_t n = p.size();
    for (size_t k = 0; k < n; ++k) s += cross(p[k], p[(k + 1) % n]);
    return 0.5 * s;
}

Vec2 polygon_centroid(const std::vector<Vec2>& p) {
    const size_t n = p.size();
    const Vec2 o = p[0];
    double a = 0.0;
    Vec2 c{};
    for (size_t k = 0; k < n; ++k) {
        const Vec2 p0 = p[k] - o, p1 = p[(k + 1) % n] - o;
        const double w = cross(p0, p1);
        a += w;
        c += (p0 + p1) * w;
    }
    if (a == 0.0) {
        Vec2 m{};
        for (const auto& q : p) m += q;
        return m / static_cast<double>(n);
    }
    return o + c / (3.0 * a);
}

std::array<Vec2, 4> Geometry::corners(const Grid& g, int c) const {
    const auto& v = g.cell_verts(c);
    return {xv[v[0]], xv[v[1]], xv[v[2]], xv[v[3]]};
}

Geometry compute_geometry(const Grid& g, const std::vector<Vec2>& xv) {
    Geometry geo;
    geo.xv = xv;
    const int nc = g.ncells();
    geo.area.resize(nc);
    geo.h.resize(nc);
    geo.xc.resize(nc);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < nc; ++c) {
        const auto m = quad_metrics(geo.corners(g, c));
        geo.area[c] = m.area;
        geo.xc[c] = m.centroid;
        geo.h[c] = m.area > 0.0 ? std::sqrt(m.area) : 0.0;
    }
    for (int c = 0; c < nc; ++c) {
        if (!(geo.area[c] > 0.0)) {
            const auto ij = g.cell_ij(c);
            std::ostringstream os;
            os << "degenerate cell " << c << " (block " << g.cell_block(c) << ", i=" << ij[0] << ", j=" << ij[1]
               << ") with area " << geo.area[c];
            throw Error(ErrorKind::Geometry, os.str());
        }
    }
    const int ne = g.nedges();
    geo.edge.resize(ne);
#pragma omp parallel for schedule(static)
    for (int e = 0; e < ne; ++e) {
        const Edge& ed = g.edge(e);
        EdgeGeom& eg = geo.edge[e];
        const Vec2 a = xv[ed.v1], b = xv[ed.v2];
        const Vec2 d = b - a;
        eg.length = norm(d);
        eg.mid = (a + b) * 0.5;
        eg.tangent = d / eg.length;
        eg.normal = {eg.tangent.y, -eg.tangent.x};
        const Vec2 target = ed.right >= 0 ? geo.xc[ed.right] + ed.shift : eg.mid;
        const Vec2 cc = target - geo.xc[ed.left];
        eg.dist = norm(cc);
        eg.c = cc / eg.dist;
    }
    return geo;
}

// ============================================================================
// Motion
// ============================================================================

Vec2 implicit_vertex_step(const MotionLaw& law, Vec2 base, double t, double dt, const NewtonOptions& opt,
                          int vertex_id) {
    if (law.kind == MotionKind::None) return base;
    if (!law.depends_on_position) return base + law(base, t) * dt;
    Vec2 x = base + law(base, t) * dt;
    double res = 0.0;
    for (int it = 0; it < opt.max_iter; ++it) {
        const Vec2 w = law(x, t);
        const Vec2 f = x - base - w * dt;
        res = norm(f);
        if (res <= opt.tol) return x;
        const double hx = 1e-7 * std::max(1.0, std::abs(x.x));
        const double hy = 1e-7 * std::max(1.0, std::abs(x.y));
        const Vec2 dwx = (law({x.x + hx, x.y}, t) - law({x.x - hx, x.y}, t)) / (2.0 * hx);
        const Vec2 dwy = (law({x.x, x.y + hy}, t) - law({x.x, x.y - hy}, t)) / (2.0 * hy);
        const double j11 = 1.0 - dt * dwx.x, j12 = -dt * dwy.x;
        const double j21 = -dt * dwx.y, j22 = 1.0 - dt * dwy.y;
        const double det = j11 * j22 - j12 * j21;
        if (det == 0.0) break;
        x -= Vec2{(j22 * f.x - j12 * f.y) / det, (-j21 * f.x + j11 * f.y) / det};
    }
    const Vec2 f = x - base - law(x, t) * dt;
    res = norm(f);
    if (res <= opt.tol) return x;
    std::ostringstream os;
    os << "vertex trajectory Newton did not converge for vertex " << vertex_id << ", residual " << res;
    throw Error(ErrorKind::Geometry, os.str());
}

std::vector<Vec2> advance_vertices(const Grid& g, const std::vector<Vec2>& base, double t, double dt,
                                   const NewtonOptions& opt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::Internal, "advance_vertices needs dt > 0");
    std::vector<Vec2> out(base.size());
    for (int bi = 0; bi < g.nblocks(); ++bi) {
        const MotionLaw& law = g.block(bi).motion;
        const int v0 = g.vert_offset(bi), v1 = v0 + g.block(bi).nverts();
        for (int v = v0; v < v1; ++v) out[v] = implicit_vertex_step(law, base[v], t, dt, opt, v);
    }
    return out;
}

Vec2 edge_velocity(Vec2 w1, Vec2 w2) { return (w1 + w2) * 0.5; }

std::vector<Vec2> vertex_velocities(const Grid& g, const std::vector<Vec2>& xv, double t) {
    std::vector<Vec2> w(xv.size());
    for (int bi = 0; bi < g.nblocks(); ++bi) {
        const MotionLaw& law = g.block(bi).motion;
        const int v0 = g.vert_offset(bi), v1 = v0 + g.block(bi).nverts();
        for (int v = v0; v < v1; ++v) w[v] = law.kind == MotionKind::None ? Vec2{} : law(xv[v], t);
    }
    return w;
}

// ============================================================================
// Dual cells
// ============================================================================

DualCell dual_cell(const Grid& g, const Geometry& geo, int v, const std::vector<char>& active) {
    DualCell d;
    for (const auto& r : g.vert_cells(v))
        if (active.empty() || active[r.cell]) d.cells.push_back(r);
    for (const auto& r : d.cells) d.poly.push_back(geo.xc[r.cell] + r.shift);
    d.interior = d.cells.size() == 4;
    if (d.cells.size() >= 3) {
        d.centroid = polygon_centroid(d.poly);
        d.h = std::sqrt(std::abs(polygon_area(d.poly)));
    } else if (!d.cells.empty()) {
        Vec2 m{};
        for (const auto& p : d.poly) m += p;
        d.centroid = m / static_cast<double>(d.poly.size());
    }
    return d;
}

} // namespace chimera
