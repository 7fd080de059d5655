#pragma once

#include "chimera/mesh.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace chimera {

// ============================================================================
// Quadratic Taylor reconstruction on cell stencils
// ============================================================================

/// Scaled Taylor basis without the constant: dx/h, dy/h, dx*dy/h^2, dx^2/(2h^2), dy^2/(2h^2).
std::array<double, 5> p2_basis(Vec2 d, double h);
std::array<Vec2, 5> p2_basis_grad(Vec2 d, double h);

/// Pseudoinverse of the scaled least-squares matrix of one stencil.
struct LSFactor {
    int owner = -1;
    Vec2 center{};
    double h = 1.0;
    std::vector<CellRef> members;
    std::vector<Vec2> offsets;   ///< member image centroid minus center
    Eigen::MatrixXd pinv;        ///< 5 x members
    double cond = 1.0;           ///< condition number of the normal matrix
    bool extended = false;       ///< second ring was added to reach full rank
};

struct LSThresholds {
    double warn = 1e12;
    double fail = 1e14;
};

/// Builds the factor; throws a reconstruction error on fewer than 5 points or a singular fit.
LSFactor ls_factor(int owner, Vec2 center, double h, const std::vector<CellRef>& members,
                   const std::vector<Vec2>& offsets, const LSThresholds& th = {});

/// Condition number of the normal matrix for given offsets (infinite when rank deficient).
double ls_condition(double h, const std::vector<Vec2>& offsets);

/// Weights w such that P(x) = owner + sum_j w_j (member_j - owner).
std::vector<double> p2_eval_weights(const LSFactor& f, Vec2 x);
std::vector<Vec2> p2_grad_weights(const LSFactor& f, Vec2 x);

struct P2Poly {
    int owner = -1;
    Vec2 center{};
    double h = 1.0;
    std::array<double, 6> beta{};

    double eval(Vec2 x) const;
    Vec2 grad(Vec2 x) const;
};

/// member_values are ordered as f.members.
P2Poly reconstruct_p2(const LSFactor& f, double owner_value, const std::vector<double>& member_values);
P2Poly reconstruct_p2(const LSFactor& f, const std::vector<double>& cell_values);

// ============================================================================
// Bilinear extrapolation on vertex dual cells
// ============================================================================

struct Q1Poly {
    Vec2 center{};
    double h = 1.0;
    std::array<double, 4> alpha{};

    double eval(Vec2 x) const;
};

std::array<double, 4> q1_basis(Vec2 d, double h);

/// Interpolating bilinear polynomial through the four dual-cell centroids.
Q1Poly vertex_q1(const DualCell& d, const std::array<double, 4>& values);

/// Weights on the dual cell's cells reproducing the vertex value at x.
/// Four cells: bilinear interpolation; three: linear fit; two: average; one: copy.
std::vector<double> vertex_weights(const DualCell& d, Vec2 x);

} // namespace chimera
