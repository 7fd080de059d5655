#include "chimera/linsys.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace chimera {

void CsrMatrix::multiply(const std::vector<double>& x, std::vector<double>& y, Kernel k) const {
    y.resize(static_cast<size_t>(n));
    if (k == Kernel::Serial) {
        for (int r = 0; r < n; ++r) {
            double s = 0.0;
            for (int p = rowptr[r]; p < rowptr[r + 1]; ++p) s += val[p] * x[col[p]];
            y[r] = s;
        }
        return;
    }
#pragma omp parallel for schedule(static)
    for (int r = 0; r < n; ++r) {
        double s = 0.0;
        for (int p = rowptr[r]; p < rowptr[r + 1]; ++p) s += val[p] * x[col[p]];
        y[r] = s;
    }
}

double CsrMatrix::at(int r, int c) const {
    for (int p = rowptr[r]; p < rowptr[r + 1]; ++p)
        if (col[p] == c) return val[p];
    return 0.0;
}

CsrMatrix csr_from_rows(const std::vector<RowStencil>& rows, int n) {
    CsrMatrix m;
    m.n = n;
    m.rowptr.assign(static_cast<size_t>(n) + 1, 0);
    std::vector<std::pair<int, double>> buf;
    for (int r = 0; r < n; ++r) {
        buf.clear();
        if (r < static_cast<int>(rows.size()) && rows[r].row >= 0) {
            for (size_t k = 0; k < rows[r].cols.size(); ++k) buf.emplace_back(rows[r].cols[k], rows[r].vals[k]);
        } else {
            buf.emplace_back(r, 1.0);
        }
        std::stable_sort(buf.begin(), buf.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (size_t k = 0; k < buf.size();) {
            const int c = buf[k].first;
            double s = 0.0;
            while (k < buf.size() && buf[k].first == c) s += buf[k++].second;
            m.col.push_back(c);
            m.val.push_back(s);
        }
        m.rowptr[r + 1] = static_cast<int>(m.col.size());
    }
    return m;
}

// ============================================================================
// Preconditioners
// ============================================================================

namespace {

class Preconditioner {
public:
    Preconditioner(const CsrMatrix& a, Precond kind) : a_(a), kind_(kind) {
        const int n = a.n;
        diag_pos_.assign(n, -1);
        for (int r = 0; r < n; ++r)
            for (int p = a.rowptr[r]; p < a.rowptr[r + 1]; ++p)
                if (a.col[p] == r) diag_pos_[r] = p;
        if (kind_ == Precond::Jacobi) {
            inv_diag_.resize(n);
            for (int r = 0; r < n; ++r) {
                const double d = diag_pos_[r] >= 0 ? a.val[diag_pos_[r]] : 0.0;
                inv_diag_[r] = d != 0.0 ? 1.0 / d : 1.0;
            }
        } else {
            lu_ = a.val;
            for (int r = 0; r < n; ++r) {
                if (diag_pos_[r] < 0) throw Error(ErrorKind::Solver, "ILU(0) needs a stored diagonal");
                for (int p = a.rowptr[r]; p < a.rowptr[r + 1] && a.col[p] < r; ++p) {
                    const int k = a.col[p];
                    const double piv = lu_[diag_pos_[k]];
                    if (piv == 0.0) throw Error(ErrorKind::Solver, "zero pivot in ILU(0)");
                    lu_[p] /= piv;
                    const double lik = lu_[p];
                    // Row r minus lik * (upper part of row k), restricted to the pattern of row r.
                    int q = p + 1;
                    for (int s = diag_pos_[k] + 1; s < a.rowptr[k + 1]; ++s) {
                        const int cj = a.col[s];
                        while (q < a.rowptr[r + 1] && a.col[q] < cj) ++q;
                        if (q < a.rowptr[r + 1] && a.col[q] == cj) lu_[q] -= lik * lu_[s];
                    }
                }
                if (lu_[diag_pos_[r]] == 0.0) throw Error(ErrorKind::Solver, "zero pivot in ILU(0)");
            }
        }
    }

    void apply(const std::vector<double>& r, std::vector<double>& z) const {
        const int n = a_.n;
        z.resize(static_cast<size_t>(n));
        if (kind_ == Precond::Jacobi) {
#pragma omp parallel for schedule(static)
            for (int i = 0; i < n; ++i) z[i] = inv_diag_[i] * r[i];
            return;
        }
        for (int i = 0; i < n; ++i) {
            double s = r[i];
            for (int p = a_.rowptr[i]; p < diag_pos_[i]; ++p) s -= lu_[p] * z[a_.col[p]];
            z[i] = s;
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = z[i];
            for (int p = diag_pos_[i] + 1; p < a_.rowptr[i + 1]; ++p) s -= lu_[p] * z[a_.col[p]];
            z[i] = s / lu_[diag_pos_[i]];
        }
    }

private:
    const CsrMatrix& a_;
    Precond kind_;
    std::vector<int> diag_pos_;
    std::vector<double> inv_diag_;
    std::vector<double> lu_;
};

double dotp(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    const int n = static_cast<int>(a.size());
#pragma omp parallel for reduction(+ : s) schedule(static)
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dotp(a, a)); }

} // namespace

double relative_residual(const SparseSystem& s, const std::vector<double>& x) {
    std::vector<double> ax;
    s.a.multiply(x, ax);
    double rn = 0.0;
    for (int i = 0; i < s.a.n; ++i) rn += (s.rhs[i] - ax[i]) * (s.rhs[i] - ax[i]);
    const double bn = norm2(s.rhs);
    return bn > 0.0 ? std::sqrt(rn) / bn : std::sqrt(rn);
}

SolverReport bicgstab(const SparseSystem& s, std::vector<double>& x, const SolverOptions& opt) {
    const CsrMatrix& a = s.a;
    const int n = a.n;
    SolverReport rep;
    x.resize(static_cast<size_t>(n), 0.0);
    const double bn = norm2(s.rhs);
    if (bn == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        rep.converged = true;
        return rep;
    }
    const Preconditioner m(a, opt.precond);
    std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), ph(n), sv(n), sh(n), t(n), ax(n);

    auto true_residual = [&]() {
        a.multiply(x, ax, opt.kernel);
        for (int i = 0; i < n; ++i) r[i] = s.rhs[i] - ax[i];
        return norm2(r) / bn;
    };

    rep.residual = true_residual();
    while (rep.residual > opt.rtol && rep.iterations < opt.max_iter) {
        // (Re)start from the current iterate.
        rhat = r;
        double rho = 1.0, alpha = 1.0, omega = 1.0;
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
        bool breakdown = false;
        while (rep.iterations < opt.max_iter) {
            ++rep.iterations;
            const double rho1 = dotp(rhat, r);
            if (rho1 == 0.0) {
                breakdown = true;
                break;
            }
            const double beta = (rho1 / rho) * (alpha / omega);
            rho = rho1;
            for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
            m.apply(p, ph);
            a.multiply(ph, v, opt.kernel);
            const double rv = dotp(rhat, v);
            if (rv == 0.0) {
                breakdown = true;
                break;
            }
            alpha = rho / rv;
            for (int i = 0; i < n; ++i) sv[i] = r[i] - alpha * v[i];
            if (norm2(sv) / bn <= opt.rtol) {
                for (int i = 0; i < n; ++i) x[i] += alpha * ph[i];
                break;
            }
            m.apply(sv, sh);
            a.multiply(sh, t, opt.kernel);
            const double tt = dotp(t, t);
            omega = tt > 0.0 ? dotp(t, sv) / tt : 0.0;
            for (int i = 0; i < n; ++i) {
                x[i] += alpha * ph[i] + omega * sh[i];
                r[i] = sv[i] - omega * t[i];
            }
            if (norm2(r) / bn <= opt.rtol) break;
            if (omega == 0.0) {
                breakdown = true;
                break;
            }
        }
        const double prev = rep.residual;
        rep.residual = true_residual();
        if (breakdown && rep.residual >= prev) break;
    }
    rep.converged = rep.residual <= opt.rtol;
    return rep;
}

SolverReport solve(const SparseSystem& s, std::vector<double>& x, const SolverOptions& opt, const std::string& label) {
    const SolverReport rep = bicgstab(s, x, opt);
    if (!rep.converged) {
        std::ostringstream os;
        os << label << " solve did not converge: " << rep.iterations << " iterations, relative residual "
           << rep.residual;
        throw Error(ErrorKind::Solver, os.str());
    }
    return rep;
}

// ============================================================================
// Assembly
// ============================================================================

SparseSystem assemble_momentum(const Frame& f, const std::vector<RowStencil>& k_rows,
                               const std::vector<RowStencil>& fringe, double coef, const std::vector<double>& rhs) {
    const int nc = f.grid->ncells();
    std::vector<RowStencil> rows(nc);
    SparseSystem s;
    s.rhs.assign(nc, 0.0);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < nc; ++c) {
        if (f.st.field(c)) {
            const RowStencil& k = k_rows[c];
            RowStencil r;
            r.row = c;
            r.cols = k.cols;
            r.vals.resize(k.vals.size());
            for (size_t j = 0; j < k.vals.size(); ++j) r.vals[j] = -coef * k.vals[j];
            r.cols.push_back(c);
            r.vals.push_back(f.geo.area[c]);
            rows[c] = std::move(r);
            s.rhs[c] = rhs[c] + coef * k.constant;
        } else if (f.st.cls[c] == CellClass::Fringe) {
            rows[c] = fringe[c];
        }
    }
    s.a = csr_from_rows(rows, nc);
    return s;
}

SparseSystem assemble_pressure(const Frame& f, const std::vector<RowStencil>& k_rows,
                               const std::vector<RowStencil>& fringe, double coef, const std::vector<double>& rhs,
                               int gauge_cell, double gauge_value) {
    const int nc = f.grid->ncells();
    std::vector<RowStencil> rows(nc);
    SparseSystem s;
    s.rhs.assign(nc, 0.0);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < nc; ++c) {
        if (c == gauge_cell) {
            s.rhs[c] = gauge_value;
        } else if (f.st.field(c)) {
            const RowStencil& k = k_rows[c];
            RowStencil r;
            r.row = c;
            r.cols = k.cols;
            r.vals.resize(k.vals.size());
            for (size_t j = 0; j < k.vals.size(); ++j) r.vals[j] = coef * k.vals[j];
            rows[c] = std::move(r);
            s.rhs[c] = rhs[c] - coef * k.constant;
        } else if (f.st.cls[c] == CellClass::Fringe) {
            rows[c] = fringe[c];
        }
    }
    s.a = csr_from_rows(rows, nc);
    return s;
}

void write_coo(std::ostream& os, const SparseSystem& s) {
    os.precision(17);
    for (int r = 0; r < s.a.n; ++r)
        for (int p = s.a.rowptr[r]; p < s.a.rowptr[r + 1]; ++p) os << r << ' ' << s.a.col[p] << ' ' << s.a.val[p] << '\n';
    for (int r = 0; r < s.a.n; ++r) os << "rhs " << r << ' ' << s.rhs[r] << '\n';
}

} // namespace chimera
