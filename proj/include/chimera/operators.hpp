#pragma once

#include "chimera/mesh.hpp"
#include "chimera/overset.hpp"
#include "chimera/reconstruction.hpp"

#include <array>
#include <memory>
#include <vector>

namespace chimera {

enum class Var : int { U = 0, V = 1, P = 2 };

enum class Kernel { Serial, Parallel };

/// Geometry-dependent data of one mesh configuration, shared by frames that differ only in time.
struct Layout {
    Geometry geo;
    OversetState st;
    std::vector<std::vector<int>> vcells;      ///< active cells around each vertex
    std::vector<std::vector<double>> vweights; ///< extrapolation weights on vcells
};

/// One mesh configuration at one time.
struct Frame {
    Frame(const Grid& g, double time, std::shared_ptr<const Layout> lay, std::vector<Vec2> vertex_velocity);
    Frame(const Frame&) = delete;
    Frame& operator=(const Frame&) = delete;

    const Grid* grid;
    double t;
    std::shared_ptr<const Layout> layout;
    const Geometry& geo;
    const OversetState& st;
    const std::vector<std::vector<int>>& vcells;
    const std::vector<std::vector<double>>& vweights;
    std::vector<Vec2> wv;
};

using FramePtr = std::shared_ptr<const Frame>;

FramePtr make_frame(const Grid& g, const std::vector<Vec2>& xv, double t, int layers,
                    const LSThresholds& th = {});

/// Same configuration at another time (static meshes).
FramePtr retime_frame(const Frame& f, double t);

// ============================================================================
// Boundary data
// ============================================================================

bool is_dirichlet(const SideBc& s, Var v);
/// Boundary value of variable v at x; `wmesh` is used by walls that follow the mesh.
double boundary_value(const SideBc& s, Var v, Vec2 x, double t, Vec2 wmesh);

/// Value at a vertex as a linear form in cell values: sum(w * phi) + constant.
/// `boundary_weight` is the total weight carried by boundary data (1 for a Dirichlet vertex).
struct VertexForm {
    std::vector<int> cells;
    std::vector<double> weights;
    double constant = 0.0;
    double boundary_weight = 0.0;
};

VertexForm vertex_form(const Frame& f, int v, Var var);

// ============================================================================
// Rows
// ============================================================================

struct RowStencil {
    int row = -1;
    std::vector<int> cols;
    std::vector<double> vals;
    double constant = 0.0;

    double apply(const std::vector<double>& x) const;
    double coefficient(int col) const;
};

/// Area-integrated Laplacian of variable `var` for every Field cell (row = -1 elsewhere).
std::vector<RowStencil> laplacian_rows(const Frame& f, Var var);

/// Row enforcing that the fringe value equals the donor's quadratic at its centroid.
RowStencil fringe_row(const Frame& f, int k);
std::vector<RowStencil> fringe_rows(const Frame& f);

/// Applies a row set to a field; non-Field entries are zero.
std::vector<double> apply_rows(const std::vector<RowStencil>& rows, const std::vector<double>& x);

// ============================================================================
// Explicit operators
// ============================================================================

/// Quadratic reconstructions of a cell field on all active cells.
std::vector<P2Poly> reconstruct_all(const Frame& f, const std::vector<double>& phi);

struct EdgeFluxState {
    Vec2 um{}, up{};
    Vec2 w{};
    double smax = 0.0;
};

/// F^w(q) . n = q ((q - w) . n)
Vec2 physical_flux(Vec2 q, Vec2 w, Vec2 n);
double signal_speed(Vec2 q, Vec2 w, Vec2 n);
Vec2 rusanov_flux(Vec2 um, Vec2 up, Vec2 w, Vec2 n);

/// Outward-summed convective flux per Field cell, F_h(u, w) (zero elsewhere).
std::vector<Vec2> convective_residual(const Frame& f, const std::vector<double>& u, const std::vector<double>& v,
                                      Kernel k = Kernel::Parallel);

/// Central-flux gradient, area-integrated, per Field cell.
std::vector<Vec2> gradient(const Frame& f, const std::vector<double>& phi, Var var, Kernel k = Kernel::Parallel);

/// Central-flux divergence of (u, v), area-integrated, per Field cell.
std::vector<double> divergence(const Frame& f, const std::vector<double>& u, const std::vector<double>& v);

/// Central trace at an edge midpoint: mean of both reconstructions, or boundary data on a Dirichlet edge.
double edge_average_value(const Frame& f, const std::vector<P2Poly>& polys, int e, Var var);

} // namespace chimera
