#include "chimera/overset.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <sstream>

namespace chimera {

const char* to_string(CellClass c) {
    switch (c) {
    case CellClass::Field: return "field";
    case CellClass::Fringe: return "fringe";
    case CellClass::Hole: return "hole";
    }
    return "?";
}

std::vector<char> OversetState::active_mask() const {
    std::vector<char> m(cls.size());
    for (size_t c = 0; c < cls.size(); ++c) m[c] = cls[c] != CellClass::Hole;
    return m;
}

int OversetState::count(CellClass k) const {
    return static_cast<int>(std::count(cls.begin(), cls.end(), k));
}

// ============================================================================
// Polygons
// ============================================================================

std::vector<Vec2> coverage_polygon(const Grid& g, const std::vector<Vec2>& xv, int block) {
    const Block& b = g.block(block);
    std::vector<Vec2> poly;
    if (b.wrap_i && b.wrap_j) return poly;
    if (b.wrap_i) {
        for (int i = 0; i < b.ni; ++i) poly.push_back(xv[g.vert_id(block, i, b.nj)]);
        return poly;
    }
    if (b.wrap_j) {
        for (int j = 0; j < b.nj; ++j) poly.push_back(xv[g.vert_id(block, b.ni, j)]);
        return poly;
    }
    for (int i = 0; i < b.ni; ++i) poly.push_back(xv[g.vert_id(block, i, 0)]);
    for (int j = 0; j < b.nj; ++j) poly.push_back(xv[g.vert_id(block, b.ni, j)]);
    for (int i = b.ni; i > 0; --i) poly.push_back(xv[g.vert_id(block, i, b.nj)]);
    for (int j = b.nj; j > 0; --j) poly.push_back(xv[g.vert_id(block, 0, j)]);
    return poly;
}

namespace {

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 d = b - a;
    const double l2 = dot(d, d);
    double t = l2 > 0.0 ? dot(p - a, d) / l2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (a + d * t));
}

struct Box {
    Vec2 lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    Vec2 hi{-std::numeric_limits<double>::max(), -std::numeric_limits<double>::max()};
    void add(Vec2 p) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    bool contains(Vec2 p, double tol) const {
        return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol;
    }
};

} // namespace

bool point_in_polygon(const std::vector<Vec2>& poly, Vec2 p, double tol) {
    const size_t n = poly.size();
    if (n < 3) return false;
    bool inside = false;
    for (size_t k = 0, l = n - 1; k < n; l = k++) {
        const Vec2 a = poly[k], b = poly[l];
        if (segment_distance(p, a, b) <= tol) return true;
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

// ============================================================================
// Classification
// ============================================================================

std::vector<CellClass> classify(const Grid& g, const Geometry& geo, int layers) {
    const int nc = g.ncells();
    std::vector<CellClass> cls(nc, CellClass::Field);
    if (layers < 1) throw Error(ErrorKind::Configuration, "overset layer count must be at least 1");

    struct Cover {
        std::vector<Vec2> poly;
        Box box;
    };
    std::vector<Cover> covers;
    for (int b = 0; b < g.nblocks(); ++b) {
        if (g.block(b).background) continue;
        Cover cv;
        cv.poly = coverage_polygon(g, geo.xv, b);
        for (const auto& p : cv.poly) cv.box.add(p);
        if (!cv.poly.empty()) covers.push_back(std::move(cv));
    }
    if (covers.empty()) return cls;

    for (int c = 0; c < nc; ++c)
        if (!g.is_background(c) && g.overset_depth(c) < layers) cls[c] = CellClass::Fringe;

    // Foreground blocks must overlap the background domain.
    for (int b = 0; b < g.nblocks(); ++b) {
        const Block& blk = g.block(b);
        if (!blk.background) continue;
        const auto outer = coverage_polygon(g, geo.xv, b);
        if (outer.empty()) continue;
        for (int f = 0; f < g.nblocks(); ++f) {
            if (g.block(f).background) continue;
            bool any = false;
            const int c0 = g.cell_offset(f), c1 = c0 + g.block(f).ncells();
            for (int c = c0; c < c1 && !any; ++c) any = point_in_polygon(outer, geo.xc[c], 0.0);
            if (!any) {
                std::ostringstream os;
                os << "foreground block " << f << " lies entirely outside background block " << b;
                throw Error(ErrorKind::Configuration, os.str());
            }
        }
    }

    auto covered_point = [&](Vec2 p) {
        for (const auto& cv : covers)
            if (cv.box.contains(p, 1e-12) && point_in_polygon(cv.poly, p, 1e-12)) return true;
        return false;
    };
    std::vector<char> covered(nc, 0);
#pragma omp parallel for schedule(dynamic, 64)
    for (int c = 0; c < nc; ++c) {
        if (!g.is_background(c)) continue;
        bool all = covered_point(geo.xc[c]);
        for (int k = 0; k < 4 && all; ++k) all = covered_point(geo.xv[g.cell_verts(c)[k]]);
        covered[c] = all;
    }

    // Ring distance from the uncovered region, Moore connectivity within each block.
    constexpr int kFar = std::numeric_limits<int>::max();
    std::vector<int> dist(nc, kFar);
    std::deque<int> queue;
    for (int c = 0; c < nc; ++c) {
        if (g.is_background(c) && !covered[c]) {
            dist[c] = 0;
            queue.push_back(c);
        }
    }
    while (!queue.empty()) {
        const int c = queue.front();
        queue.pop_front();
        if (dist[c] >= 2 * layers) continue;
        for (const auto& r : g.moore(c)) {
            if (covered[r.cell] && dist[r.cell] == kFar) {
                dist[r.cell] = dist[c] + 1;
                queue.push_back(r.cell);
            }
        }
    }
    for (int c = 0; c < nc; ++c) {
        if (!g.is_background(c) || !covered[c]) continue;
        // Overlap rim stays field, the next rings receive from the foreground, the rest is cut.
        cls[c] = dist[c] <= layers ? CellClass::Field : dist[c] <= 2 * layers ? CellClass::Fringe : CellClass::Hole;
        if (cls[c] == CellClass::Hole) {
            const Block& b = g.block(g.cell_block(c));
            const auto ij = g.cell_ij(c);
            const bool edge_i = !b.wrap_i && (ij[0] == 0 || ij[0] == b.ni - 1);
            const bool edge_j = !b.wrap_j && (ij[1] == 0 || ij[1] == b.nj - 1);
            if (edge_i || edge_j) {
                std::ostringstream os;
                os << "hole cell " << c << " touches the outer boundary of background block " << g.cell_block(c);
                throw Error(ErrorKind::Configuration, os.str());
            }
        }
    }
    return cls;
}

Circle stencil_circle(const Geometry& geo, const Grid& g, int c) {
    double r = 0.0;
    for (int v : g.cell_verts(c)) r = std::max(r, norm(geo.xv[v] - geo.xc[c]));
    return {geo.xc[c], 2.0 * r};
}

// ============================================================================
// Bins
// ============================================================================

CentroidBins::CentroidBins(const std::vector<Vec2>& points, const std::vector<int>& ids, double bin_size)
    : pts_(points), ids_(ids), size_(bin_size > 0.0 ? bin_size : 1.0) {
    if (pts_.empty()) return;
    Box box;
    for (const auto& p : pts_) box.add(p);
    lo_ = box.lo;
    nx_ = std::max(1, static_cast<int>((box.hi.x - box.lo.x) / size_) + 1);
    ny_ = std::max(1, static_cast<int>((box.hi.y - box.lo.y) / size_) + 1);
    // Guard against a huge table when the bin size is tiny relative to the extent.
    while (static_cast<double>(nx_) * ny_ > 4.0 * static_cast<double>(pts_.size()) + 64.0) {
        size_ *= 2.0;
        nx_ = std::max(1, static_cast<int>((box.hi.x - box.lo.x) / size_) + 1);
        ny_ = std::max(1, static_cast<int>((box.hi.y - box.lo.y) / size_) + 1);
    }
    bins_.assign(static_cast<size_t>(nx_) * ny_, {});
    for (size_t k = 0; k < pts_.size(); ++k)
        bins_[static_cast<size_t>(by(pts_[k].y)) * nx_ + bx(pts_[k].x)].push_back(static_cast<int>(k));
}

int CentroidBins::bx(double x) const {
    return std::clamp(static_cast<int>(std::floor((x - lo_.x) / size_)), 0, nx_ - 1);
}

int CentroidBins::by(double y) const {
    return std::clamp(static_cast<int>(std::floor((y - lo_.y) / size_)), 0, ny_ - 1);
}

std::vector<int> CentroidBins::within(Vec2 p, double r) const {
    std::vector<int> out;
    if (pts_.empty()) return out;
    const int i0 = bx(p.x - r), i1 = bx(p.x + r), j0 = by(p.y - r), j1 = by(p.y + r);
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i)
            for (int k : bins_[static_cast<size_t>(j) * nx_ + i])
                if (norm(pts_[k] - p) < r) out.push_back(ids_[k]);
    std::sort(out.begin(), out.end());
    return out;
}

int CentroidBins::nearest(Vec2 p) const {
    if (pts_.empty()) return -1;
    const int ci = bx(p.x), cj = by(p.y);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    const int max_ring = std::max(nx_, ny_);
    for (int ring = 0; ring <= max_ring; ++ring) {
        for (int j = cj - ring; j <= cj + ring; ++j) {
            if (j < 0 || j >= ny_) continue;
            for (int i = ci - ring; i <= ci + ring; ++i) {
                if (i < 0 || i >= nx_) continue;
                if (std::max(std::abs(i - ci), std::abs(j - cj)) != ring) continue;
                for (int k : bins_[static_cast<size_t>(j) * nx_ + i]) {
                    const double d = norm(pts_[k] - p);
                    if (d < best_d || (d == best_d && ids_[k] < ids_[best])) {
                        best_d = d;
                        best = k;
                    }
                }
            }
        }
        // Any point in ring+1 or beyond is at least ring*size away from p (p's own bin may be clamped,
        // so measure from the clamped bin box).
        const double lox = lo_.x + ci * size_, loy = lo_.y + cj * size_;
        const double gap = std::min({p.x - (lox - ring * size_), (lox + (ring + 1) * size_) - p.x,
                                     p.y - (loy - ring * size_), (loy + (ring + 1) * size_) - p.y});
        if (best >= 0 && best_d < gap) break;
    }
    return best < 0 ? -1 : ids_[best];
}

// ============================================================================
// Stencils and donors
// ============================================================================

namespace {

bool point_in_quad(const std::array<Vec2, 4>& q, Vec2 p) {
    return point_in_polygon(std::vector<Vec2>(q.begin(), q.end()), p, 1e-12);
}

} // namespace

std::vector<CellRef> overset_stencil(const Grid& g, const Geometry& geo, const std::vector<CellClass>& cls, int c,
                                     const CentroidBins* other_bins) {
    std::vector<CellRef> s;
    if (cls[c] == CellClass::Hole) return s;
    for (const auto& r : g.moore(c))
        if (cls[r.cell] != CellClass::Hole) s.push_back(r);
    if (cls[c] != CellClass::Fringe) return s;

    const Circle circ = stencil_circle(geo, g, c);
    std::vector<int> cand;
    if (other_bins) {
        cand = other_bins->within(circ.center, circ.radius);
    } else {
        for (int k = 0; k < g.ncells(); ++k)
            if (g.is_background(k) != g.is_background(c) && cls[k] != CellClass::Hole &&
                norm(geo.xc[k] - circ.center) < circ.radius)
                cand.push_back(k);
    }
    std::vector<std::array<Vec2, 4>> quads;
    for (const auto& r : s) {
        auto q = geo.corners(g, r.cell);
        for (auto& p : q) p += r.shift;
        quads.push_back(q);
    }
    for (int k : cand) {
        bool inside = false;
        for (const auto& q : quads) {
            if (point_in_quad(q, geo.xc[k])) {
                inside = true;
                break;
            }
        }
        if (!inside) s.push_back({k, {}});
    }
    if (static_cast<int>(s.size()) < 6) {
        // Too few constraints for a quadratic: grow by the active same-partition ring at index distance 2.
        for (const auto& r : g.ring2(c))
            if (cls[r.cell] != CellClass::Hole) s.push_back(r);
    }
    if (static_cast<int>(s.size()) < 6) {
        const auto ij = g.cell_ij(c);
        std::ostringstream os;
        os << "overset stencil of fringe cell " << c << " (block " << g.cell_block(c) << ", i=" << ij[0]
           << ", j=" << ij[1] << ") has only " << s.size() << " members";
        throw Error(ErrorKind::Configuration, os.str());
    }
    return s;
}

int nearest_donor_linear(const Grid& g, const Geometry& geo, const std::vector<CellClass>& cls, Vec2 p,
                         bool donor_in_background) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < g.ncells(); ++k) {
        if (g.is_background(k) != donor_in_background || cls[k] != CellClass::Field) continue;
        const double d = norm(geo.xc[k] - p);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

LSFactor build_factor(const Grid& g, const Geometry& geo, const OversetState& st, int c, const LSThresholds& th,
                      std::vector<std::string>* warnings) {
    std::vector<CellRef> members = st.stencil[c];
    auto offsets_of = [&](const std::vector<CellRef>& m) {
        std::vector<Vec2> off(m.size());
        for (size_t k = 0; k < m.size(); ++k) off[k] = geo.xc[m[k].cell] + m[k].shift - geo.xc[c];
        return off;
    };
    std::vector<Vec2> offsets = offsets_of(members);
    bool extended = false;
    if (members.size() < 6 || ls_condition(geo.h[c], offsets) > th.warn) {
        for (const auto& r : g.ring2(c)) {
            if (!st.active(r.cell)) continue;
            const bool dup = std::any_of(members.begin(), members.end(), [&](const CellRef& m) {
                return m.cell == r.cell && m.shift == r.shift;
            });
            if (!dup) members.push_back(r);
        }
        offsets = offsets_of(members);
        extended = true;
    }
    LSFactor f = ls_factor(c, geo.xc[c], geo.h[c], members, offsets, th);
    f.extended = extended;
    if (f.cond > th.warn && warnings) {
        std::ostringstream os;
        os << "ill-conditioned reconstruction at cell " << c << " (condition " << f.cond << ")";
        warnings->push_back(os.str());
    }
    return f;
}

namespace {

double typical_h(const Geometry& geo, const std::vector<int>& ids) {
    if (ids.empty()) return 1.0;
    std::vector<double> hs;
    hs.reserve(ids.size());
    for (int c : ids) hs.push_back(geo.h[c]);
    std::nth_element(hs.begin(), hs.begin() + static_cast<long>(hs.size() / 2), hs.end());
    return hs[hs.size() / 2];
}

CentroidBins make_bins(const Geometry& geo, const std::vector<int>& ids) {
    std::vector<Vec2> pts(ids.size());
    for (size_t k = 0; k < ids.size(); ++k) pts[k] = geo.xc[ids[k]];
    return CentroidBins(pts, ids, typical_h(geo, ids));
}

struct PartitionBins {
    CentroidBins active[2];
    CentroidBins field[2];
};

PartitionBins partition_bins(const Grid& g, const Geometry& geo, const std::vector<CellClass>& cls) {
    std::vector<int> act[2], fld[2];
    for (int c = 0; c < g.ncells(); ++c) {
        const int p = g.is_background(c) ? 1 : 0;
        if (cls[c] != CellClass::Hole) act[p].push_back(c);
        if (cls[c] == CellClass::Field) fld[p].push_back(c);
    }
    return {{make_bins(geo, act[0]), make_bins(geo, act[1])}, {make_bins(geo, fld[0]), make_bins(geo, fld[1])}};
}

} // namespace

OversetState build_overset(const Grid& g, const Geometry& geo, int layers, const LSThresholds& th) {
    OversetState st;
    st.layers = layers;
    st.cls = classify(g, geo, layers);
    const int nc = g.ncells();
    st.stencil.resize(nc);
    st.donor.assign(nc, -1);
    st.factor.resize(nc);
    const PartitionBins bins = partition_bins(g, geo, st.cls);

    std::vector<std::string> errors(nc);
    std::vector<std::vector<std::string>> warns(nc);
#pragma omp parallel for schedule(dynamic, 64)
    for (int c = 0; c < nc; ++c) {
        try {
            const int other = g.is_background(c) ? 0 : 1;
            st.stencil[c] = overset_stencil(g, geo, st.cls, c, &bins.active[other]);
            if (st.cls[c] == CellClass::Fringe) {
                st.donor[c] = bins.field[other].nearest(geo.xc[c]);
                if (st.donor[c] < 0) {
                    std::ostringstream os;
                    os << "no donor available for fringe cell " << c;
                    throw Error(ErrorKind::Configuration, os.str());
                }
            }
        } catch (const std::exception& e) {
            errors[c] = e.what();
        }
    }
    for (int c = 0; c < nc; ++c)
        if (!errors[c].empty()) throw Error(ErrorKind::Configuration, errors[c]);

    std::vector<int> kinds(nc, -1);
#pragma omp parallel for schedule(dynamic, 64)
    for (int c = 0; c < nc; ++c) {
        if (!st.active(c)) continue;
        try {
            st.factor[c] = build_factor(g, geo, st, c, th, &warns[c]);
        } catch (const Error& e) {
            errors[c] = e.what();
            kinds[c] = static_cast<int>(e.kind());
        }
    }
    for (int c = 0; c < nc; ++c)
        if (!errors[c].empty()) throw Error(static_cast<ErrorKind>(kinds[c]), errors[c]);
    for (auto& w : warns)
        for (auto& s : w) st.warnings.push_back(std::move(s));
    return st;
}

// ============================================================================
// Reconciliation
// ============================================================================

ReconcileReport reconcile(const Grid& g, const Geometry& geo_old, const OversetState& st_old,
                          const Geometry& geo_new, const OversetState& st_new,
                          std::vector<std::vector<double>*> fields) {
    ReconcileReport rep;
    const int nc = g.ncells();
    for (int c = 0; c < nc; ++c) {
        const bool was = st_old.active(c), is = st_new.active(c);
        if (is && !was) rep.born.push_back(c);
        if (was && !is) rep.dead.push_back(c);
    }
    if (!rep.born.empty()) {
        const PartitionBins bins = partition_bins(g, geo_old, st_old.cls);
        for (int c : rep.born) {
            const int other = g.is_background(c) ? 0 : 1;
            const int d = bins.field[other].nearest(geo_new.xc[c]);
            if (d < 0) {
                std::ostringstream os;
                os << "no donor to initialise reactivated cell " << c;
                throw Error(ErrorKind::Configuration, os.str());
            }
            const LSFactor& f = st_old.factor[d];
            for (auto* fld : fields) {
                const P2Poly p = reconstruct_p2(f, *fld);
                (*fld)[c] = p.eval(geo_new.xc[c]);
            }
        }
    }
    for (int c : rep.dead)
        for (auto* fld : fields) (*fld)[c] = 0.0;
    return rep;
}

void write_overset_dump(std::ostream& os, const Grid& g, const Geometry& geo, const OversetState& st) {
    os << "cell,block,i,j,xc,yc,class,donor,stencil_size,condition\n";
    os.precision(17);
    for (int c = 0; c < g.ncells(); ++c) {
        const auto ij = g.cell_ij(c);
        os << c << ',' << g.cell_block(c) << ',' << ij[0] << ',' << ij[1] << ',' << geo.xc[c].x << ','
           << geo.xc[c].y << ',' << to_string(st.cls[c]) << ',' << st.donor[c] << ',' << st.stencil[c].size()
           << ',' << (st.active(c) ? st.factor[c].cond : 0.0) << '\n';
    }
}

} // namespace chimera
