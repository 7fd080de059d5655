#pragma once

#include "chimera/operators.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace chimera {

struct CsrMatrix {
    int n = 0;
    std::vector<int> rowptr{0};
    std::vector<int> col;
    std::vector<double> val;

    void multiply(const std::vector<double>& x, std::vector<double>& y, Kernel k = Kernel::Parallel) const;
    double at(int r, int c) const;
    int row_size(int r) const { return rowptr[r + 1] - rowptr[r]; }
};

/// Builds a CSR matrix from per-row stencils; rows with row < 0 become identity rows.
/// Columns are sorted and duplicates summed.
CsrMatrix csr_from_rows(const std::vector<RowStencil>& rows, int n);

struct SparseSystem {
    CsrMatrix a;
    std::vector<double> rhs;
};

enum class Precond { Jacobi, Ilu0 };

struct SolverOptions {
    double rtol = 1e-10;
    int max_iter = 2000;
    Precond precond = Precond::Ilu0;
    Kernel kernel = Kernel::Parallel;
};

struct SolverReport {
    int iterations = 0;
    double residual = 0.0; ///< final relative residual ||b - Ax|| / ||b||
    bool converged = false;
};

/// Preconditioned BiCGSTAB from the guess in x; returns the report without throwing.
SolverReport bicgstab(const SparseSystem& s, std::vector<double>& x, const SolverOptions& opt);

/// As bicgstab, but a non-converged solve raises a solver error carrying the report.
SolverReport solve(const SparseSystem& s, std::vector<double>& x, const SolverOptions& opt,
                   const std::string& label = "system");

double relative_residual(const SparseSystem& s, const std::vector<double>& x);

/// |omega| u - coef K(u) = rhs on field rows, fringe rows substituted, holes pinned to zero.
SparseSystem assemble_momentum(const Frame& f, const std::vector<RowStencil>& k_rows,
                               const std::vector<RowStencil>& fringe, double coef, const std::vector<double>& rhs);

/// coef K(p) = rhs on field rows, fringe rows substituted, holes pinned to zero.
/// When gauge_cell >= 0 its row is replaced by p = gauge_value.
SparseSystem assemble_pressure(const Frame& f, const std::vector<RowStencil>& k_rows,
                               const std::vector<RowStencil>& fringe, double coef, const std::vector<double>& rhs,
                               int gauge_cell, double gauge_value);

/// Line-oriented "row col value" dump followed by "rhs row value" lines.
void write_coo(std::ostream& os, const SparseSystem& s);

} // namespace chimera
