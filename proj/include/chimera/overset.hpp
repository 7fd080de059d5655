#pragma once

#include "chimera/mesh.hpp"
#include "chimera/reconstruction.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace chimera {

enum class CellClass : std::uint8_t { Field = 0, Fringe = 1, Hole = 2 };

const char* to_string(CellClass c);

/// Classification, stencils, donors and reconstruction factors of one mesh configuration.
struct OversetState {
    int layers = 5;
    std::vector<CellClass> cls;
    std::vector<std::vector<CellRef>> stencil; ///< empty for holes
    std::vector<int> donor;                    ///< fringe cells only, -1 elsewhere
    std::vector<LSFactor> factor;              ///< active cells only
    std::vector<std::string> warnings;

    bool active(int c) const { return cls[c] != CellClass::Hole; }
    bool field(int c) const { return cls[c] == CellClass::Field; }
    std::vector<char> active_mask() const;
    int count(CellClass k) const;
};

/// Outer boundary polygon of a foreground block (the loop of its overset sides).
std::vector<Vec2> coverage_polygon(const Grid& g, const std::vector<Vec2>& xv, int block);

/// Inside or within tol of the boundary; works for either orientation.
bool point_in_polygon(const std::vector<Vec2>& poly, Vec2 p, double tol = 1e-12);

/// Cell classes only. Covered background cells within `layers` rings of the uncovered region stay
/// field, the following `layers` rings are fringe and the rest are holes; the outermost `layers`
/// rings of each foreground block are fringe.
std::vector<CellClass> classify(const Grid& g, const Geometry& geo, int layers);

struct Circle {
    Vec2 center{};
    double radius = 0.0;
};

/// Circle centered at the cell centroid, radius twice the largest centroid-to-vertex distance.
Circle stencil_circle(const Geometry& geo, const Grid& g, int c);

/// Uniform bin hash of cell centroids for neighbour and nearest queries.
class CentroidBins {
public:
    CentroidBins(const std::vector<Vec2>& points, const std::vector<int>& ids, double bin_size);

    /// ids with |x - p| < r
    std::vector<int> within(Vec2 p, double r) const;
    /// nearest id, ties broken toward the lower id; -1 when empty
    int nearest(Vec2 p) const;

private:
    std::vector<Vec2> pts_;
    std::vector<int> ids_;
    Vec2 lo_{};
    double size_ = 1.0;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> bins_;

    int bx(double x) const;
    int by(double y) const;
};

/// Overset stencil of cell c given the classes (same-block Moore neighbours, plus
/// other-partition cells for fringe cells). A fringe stencil left with fewer than six members
/// is grown by the active same-block cells at index distance 2.
std::vector<CellRef> overset_stencil(const Grid& g, const Geometry& geo, const std::vector<CellClass>& cls, int c,
                                     const CentroidBins* other_bins = nullptr);

/// Nearest field cell of the other partition by a linear scan (ties toward the lower id).
int nearest_donor_linear(const Grid& g, const Geometry& geo, const std::vector<CellClass>& cls, Vec2 p,
                         bool donor_in_background);

/// Full overset assembly for one configuration.
OversetState build_overset(const Grid& g, const Geometry& geo, int layers, const LSThresholds& th = {});

/// Reconstruction stencil and factor for cell c (overset stencil, extended by the second ring when needed).
LSFactor build_factor(const Grid& g, const Geometry& geo, const OversetState& st, int c, const LSThresholds& th,
                      std::vector<std::string>* warnings = nullptr);

struct ReconcileReport {
    std::vector<int> born;
    std::vector<int> dead;
};

/// Carries cell values across a reclassification: cells active in both states keep their values,
/// cells that became active take the value of the nearest old field donor's quadratic at their centroid,
/// holes are set to zero.
ReconcileReport reconcile(const Grid& g, const Geometry& geo_old, const OversetState& st_old,
                          const Geometry& geo_new, const OversetState& st_new,
                          std::vector<std::vector<double>*> fields);

void write_overset_dump(std::ostream& os, const Grid& g, const Geometry& geo, const OversetState& st);

} // namespace chimera
