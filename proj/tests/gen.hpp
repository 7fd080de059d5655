#pragma once

// Small generators shared by the property tests.

#include "chimera/mesh.hpp"

#include <random>
#include <vector>

namespace testgen {

struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng); }
    int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(eng); }
    std::uint64_t bits() { return eng(); }
};

inline chimera::Block walled_box(int ni, int nj, double x0 = 0.0, double x1 = 1.0, double y0 = 0.0, double y1 = 1.0) {
    chimera::Block b = chimera::make_cartesian_block(x0, x1, y0, y1, ni, nj);
    for (auto& s : b.sides) s = chimera::SideBc::wall();
    return b;
}

inline chimera::Block periodic_box(int ni, int nj) {
    chimera::Block b = chimera::make_cartesian_block(0.0, 1.0, 0.0, 1.0, ni, nj);
    for (auto& s : b.sides) s = chimera::SideBc::periodic();
    b.wrap_i = b.wrap_j = true;
    b.shift_i = {1.0, 0.0};
    b.shift_j = {0.0, 1.0};
    return b;
}

/// Box with interior vertices displaced by up to `frac` of the spacing.
inline chimera::Block distorted_box(Rng& r, int ni, int nj, double frac, bool periodic = false) {
    chimera::Block b = periodic ? periodic_box(ni, nj) : walled_box(ni, nj);
    chimera::perturb_interior(b, frac / std::max(ni, nj), r.bits());
    return b;
}

} // namespace testgen
