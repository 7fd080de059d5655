#pragma once

#include "chimera/core.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace chimera {

// ============================================================================
// Block description
// ============================================================================

enum class Side : int { Bottom = 0, Right = 1, Top = 2, Left = 3 };

enum class SideKind { Periodic, Overset, Physical };

/// Boundary condition attached to one side of a block.
/// Velocity components and pressure are each either Dirichlet or zero normal gradient.
struct SideBc {
    SideKind kind = SideKind::Overset;
    std::string tag;
    bool u_dirichlet = true;
    bool v_dirichlet = true;
    bool p_dirichlet = false;
    bool follows_mesh = false; ///< velocity equals the local mesh velocity (moving no-slip wall)
    std::function<Vec2(Vec2, double)> velocity;
    std::function<double(Vec2, double)> pressure;

    Vec2 velocity_at(Vec2 x, double t) const { return velocity ? velocity(x, t) : Vec2{}; }
    double pressure_at(Vec2 x, double t) const { return pressure ? pressure(x, t) : 0.0; }

    static SideBc periodic();
    static SideBc overset();
    static SideBc wall(std::function<Vec2(Vec2, double)> vel = {}, std::string tag = "wall");
    static SideBc moving_wall(std::string tag = "body");
    static SideBc inlet(std::function<Vec2(Vec2, double)> vel);
    static SideBc outlet(std::function<double(Vec2, double)> p = {});
    static SideBc slip();
};

enum class MotionKind { None, Translation, Rotation, Analytic };

/// Prescribed mesh velocity w(x, t).
struct MotionLaw {
    MotionKind kind = MotionKind::None;
    bool depends_on_position = false;
    std::function<Vec2(Vec2, double)> fn;

    Vec2 operator()(Vec2 x, double t) const { return fn ? fn(x, t) : Vec2{}; }

    static MotionLaw none();
    static MotionLaw translation(std::function<Vec2(double)> velocity_of_time);
    static MotionLaw rotation(Vec2 center, double omega);
    static MotionLaw analytic(std::function<Vec2(Vec2, double)> fn, bool depends_on_position);
};

/// Structured quadrilateral block with (ni x nj) cells and (ni+1) x (nj+1) vertices.
/// Cell (i, j) has counterclockwise vertices (i,j), (i+1,j), (i+1,j+1), (i,j+1).
struct Block {
    int ni = 0;
    int nj = 0;
    bool background = true;
    bool wrap_i = false;
    bool wrap_j = false;
    Vec2 shift_i{}; ///< image of cell index ni is cell 0 translated by shift_i
    Vec2 shift_j{};
    std::array<SideBc, 4> sides;
    MotionLaw motion;
    std::vector<Vec2> x0;
    std::string name;

    int vid(int i, int j) const { return j * (ni + 1) + i; }
    int cid(int i, int j) const { return j * ni + i; }
    int ncells() const { return ni * nj; }
    int nverts() const { return (ni + 1) * (nj + 1); }
};

Block make_cartesian_block(double x0, double x1, double y0, double y1, int ni, int nj);
/// O-grid around a circle: i runs clockwise around (wrapping), j runs outward through radii.
Block make_polar_block(Vec2 center, const std::vector<double>& radii, int ntheta);
void rotate_block(Block& b, Vec2 center, double angle);
/// Displaces every vertex not on the block boundary by `amplitude` in a random direction.
void perturb_interior(Block& b, double amplitude, std::uint64_t seed);

/// Foreground block from one line of text:
///   x0 x1 y0 y1 ni nj [rotate=<radians>] [perturb=<fraction of spacing>] [seed=<n>]
///   [motion=none | translation:<vx>:<vy> | rotation:<cx>:<cy>:<omega>]
/// Rotation is about the block center; all sides are overset.
Block parse_block_description(const std::string& text);

// ============================================================================
// Composite topology
// ============================================================================

/// A cell seen from a reference frame: its image centroid is xc[cell] + shift.
struct CellRef {
    int cell = -1;
    Vec2 shift{};
};

struct Edge {
    int left = -1;   ///< owner; the normal points out of this cell
    int right = -1;  ///< neighbor, or -1 on a physical/overset block boundary
    Vec2 shift{};    ///< image of right = xc[right] + shift
    int v1 = -1;     ///< tangent runs v1 -> v2 in the owner's counterclockwise order
    int v2 = -1;
    int block = -1;
    Side side = Side::Bottom; ///< meaningful when right < 0
};

class Grid {
public:
    explicit Grid(std::vector<Block> blocks);

    const std::vector<Block>& blocks() const { return blocks_; }
    const Block& block(int b) const { return blocks_[b]; }
    int nblocks() const { return static_cast<int>(blocks_.size()); }
    int ncells() const { return ncells_; }
    int nverts() const { return nverts_; }
    int nedges() const { return static_cast<int>(edges_.size()); }

    int cell_offset(int b) const { return cell_offset_[b]; }
    int vert_offset(int b) const { return vert_offset_[b]; }
    int cell_block(int c) const { return cell_block_[c]; }
    int vert_block(int v) const { return vert_block_[v]; }
    std::array<int, 2> cell_ij(int c) const;
    std::array<int, 2> vert_ij(int v) const;
    int cell_id(int b, int i, int j) const { return cell_offset_[b] + blocks_[b].cid(i, j); }
    int vert_id(int b, int i, int j) const { return vert_offset_[b] + blocks_[b].vid(i, j); }
    bool is_background(int c) const { return blocks_[cell_block_[c]].background; }

    const std::array<int, 4>& cell_verts(int c) const { return cell_verts_[c]; }
    const std::array<int, 4>& cell_edges(int c) const { return cell_edges_[c]; }
    const Edge& edge(int e) const { return edges_[e]; }
    const std::vector<Edge>& edges() const { return edges_; }

    /// Cell at index offset (di, dj) from c within its block, honoring wrap-around.
    std::optional<CellRef> offset_cell(int c, int di, int dj) const;
    /// Vertex-sharing neighbors within the same block (up to 8).
    const std::vector<CellRef>& moore(int c) const { return moore_[c]; }
    /// Cells at Chebyshev index distance exactly 2 within the same block.
    const std::vector<CellRef>& ring2(int c) const { return ring2_[c]; }
    /// Cells sharing vertex v, counterclockwise, shifts relative to the vertex position.
    const std::vector<CellRef>& vert_cells(int v) const { return vert_cells_[v]; }
    /// Physical sides of the block that vertex v lies on.
    const std::vector<Side>& vert_sides(int v) const { return vert_sides_[v]; }
    /// Index distance from the block's overset sides (large when the block has none).
    int overset_depth(int c) const { return overset_depth_[c]; }

    std::vector<Vec2> initial_vertices() const;

private:
    std::vector<Block> blocks_;
    int ncells_ = 0;
    int nverts_ = 0;
    std::vector<int> cell_offset_, vert_offset_;
    std::vector<int> cell_block_, vert_block_;
    std::vector<std::array<int, 4>> cell_verts_;
    std::vector<std::array<int, 4>> cell_edges_;
    std::vector<Edge> edges_;
    std::vector<std::vector<CellRef>> moore_, ring2_, vert_cells_;
    std::vector<std::vector<Side>> vert_sides_;
    std::vector<int> overset_depth_;
};

// ============================================================================
// Geometry of one configuration
// ============================================================================

struct EdgeGeom {
    double length = 0.0;
    Vec2 mid{};
    Vec2 normal{};  ///< unit, from left to right
    Vec2 tangent{}; ///< unit, v1 -> v2
    Vec2 c{};       ///< unit, from left centroid to the right image centroid (or to mid on a boundary)
    double dist = 0.0;
};

struct Geometry {
    std::vector<Vec2> xv;
    std::vector<double> area;
    std::vector<double> h;
    std::vector<Vec2> xc;
    std::vector<EdgeGeom> edge;

    /// Corners of cell c in counterclockwise order.
    std::array<Vec2, 4> corners(const Grid& g, int c) const;
};

struct QuadMetrics {
    double area = 0.0;
    Vec2 centroid{};
};

/// Shoelace area and exact centroid (two-triangle split) of a straight-sided quadrilateral.
QuadMetrics quad_metrics(const std::array<Vec2, 4>& p);
double polygon_area(const std::vector<Vec2>& p);
Vec2 polygon_centroid(const std::vector<Vec2>& p);

Geometry compute_geometry(const Grid& g, const std::vector<Vec2>& xv);

// ============================================================================
// Motion
// ============================================================================

struct NewtonOptions {
    double tol = 1e-12;
    int max_iter = 50;
};

/// Solves x = base + dt * w(x, t) for one point.
Vec2 implicit_vertex_step(const MotionLaw& law, Vec2 base, double t, double dt,
                          const NewtonOptions& opt = {}, int vertex_id = -1);

/// Applies implicit_vertex_step to every vertex of every block, each block with its own law.
std::vector<Vec2> advance_vertices(const Grid& g, const std::vector<Vec2>& base, double t, double dt,
                                   const NewtonOptions& opt = {});

Vec2 edge_velocity(Vec2 w1, Vec2 w2);

/// Mesh velocity at each vertex for the given positions.
std::vector<Vec2> vertex_velocities(const Grid& g, const std::vector<Vec2>& xv, double t);

// ============================================================================
// Dual cells
// ============================================================================

struct DualCell {
    bool interior = false; ///< four active cells around the vertex
    std::vector<CellRef> cells;
    std::vector<Vec2> poly;
    Vec2 centroid{};
    double h = 0.0;
};

/// Dual cell of vertex v built from the centroids of its active neighbors.
DualCell dual_cell(const Grid& g, const Geometry& geo, int v, const std::vector<char>& active);

} // namespace chimera
