#include "chimera/reconstruction.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace chimera {

std::array<double, 5> p2_basis(Vec2 d, double h) {
    const double x = d.x / h, y = d.y / h;
    return {x, y, x * y, 0.5 * x * x, 0.5 * y * y};
}

std::array<Vec2, 5> p2_basis_grad(Vec2 d, double h) {
    const double x = d.x / h, y = d.y / h;
    return {Vec2{1.0 / h, 0.0}, Vec2{0.0, 1.0 / h}, Vec2{y / h, x / h}, Vec2{x / h, 0.0}, Vec2{0.0, y / h}};
}

double ls_condition(double h, const std::vector<Vec2>& offsets) {
    if (offsets.size() < 5) return std::numeric_limits<double>::infinity();
    Eigen::MatrixXd z(static_cast<Eigen::Index>(offsets.size()), 5);
    for (size_t r = 0; r < offsets.size(); ++r) {
        const auto b = p2_basis(offsets[r], h);
        for (int k = 0; k < 5; ++k) z(static_cast<Eigen::Index>(r), k) = b[k];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(z);
    const auto& s = svd.singularValues();
    if (s(4) <= 0.0) return std::numeric_limits<double>::infinity();
    const double r = s(0) / s(4);
    return r * r;
}

LSFactor ls_factor(int owner, Vec2 center, double h, const std::vector<CellRef>& members,
                   const std::vector<Vec2>& offsets, const LSThresholds& th) {
    LSFactor f;
    f.owner = owner;
    f.center = center;
    f.h = h;
    f.members = members;
    f.offsets = offsets;
    const auto n = static_cast<Eigen::Index>(offsets.size());
    if (n < 5) {
        std::ostringstream os;
        os << "reconstruction stencil of cell " << owner << " has " << n << " members, at least 5 needed";
        throw Error(ErrorKind::Reconstruction, os.str());
    }
    Eigen::MatrixXd z(n, 5);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto b = p2_basis(offsets[static_cast<size_t>(r)], h);
        for (int k = 0; k < 5; ++k) z(r, k) = b[k];
    }
    f.cond = ls_condition(h, offsets);
    if (!(f.cond <= th.fail)) {
        std::ostringstream os;
        os << "degenerate reconstruction stencil for cell " << owner << " (condition " << f.cond << ")";
        throw Error(ErrorKind::Reconstruction, os.str());
    }
    const Eigen::MatrixXd ztz = z.transpose() * z;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ztz);
    f.pinv = qr.solve(z.transpose());
    return f;
}

std::vector<double> p2_eval_weights(const LSFactor& f, Vec2 x) {
    const auto b = p2_basis(x - f.center, f.h);
    std::vector<double> w(f.members.size(), 0.0);
    for (size_t j = 0; j < w.size(); ++j) {
        double s = 0.0;
        for (int k = 0; k < 5; ++k) s += b[k] * f.pinv(k, static_cast<Eigen::Index>(j));
        w[j] = s;
    }
    return w;
}

std::vector<Vec2> p2_grad_weights(const LSFactor& f, Vec2 x) {
    const auto g = p2_basis_grad(x - f.center, f.h);
    std::vector<Vec2> w(f.members.size());
    for (size_t j = 0; j < w.size(); ++j) {
        Vec2 s{};
        for (int k = 0; k < 5; ++k) s += g[k] * f.pinv(k, static_cast<Eigen::Index>(j));
        w[j] = s;
    }
    return w;
}

double P2Poly::eval(Vec2 x) const {
    const auto b = p2_basis(x - center, h);
    double s = beta[0];
    for (int k = 0; k < 5; ++k) s += beta[k + 1] * b[k];
    return s;
}

Vec2 P2Poly::grad(Vec2 x) const {
    const auto g = p2_basis_grad(x - center, h);
    Vec2 s{};
    for (int k = 0; k < 5; ++k) s += g[k] * beta[k + 1];
    return s;
}

P2Poly reconstruct_p2(const LSFactor& f, double owner_value, const std::vector<double>& member_values) {
    P2Poly p;
    p.owner = f.owner;
    p.center = f.center;
    p.h = f.h;
    p.beta[0] = owner_value;
    for (int k = 0; k < 5; ++k) {
        double s = 0.0;
        for (size_t j = 0; j < member_values.size(); ++j)
            s += f.pinv(k, static_cast<Eigen::Index>(j)) * (member_values[j] - owner_value);
        p.beta[k + 1] = s;
    }
    return p;
}

P2Poly reconstruct_p2(const LSFactor& f, const std::vector<double>& cell_values) {
    std::vector<double> mv(f.members.size());
    for (size_t j = 0; j < mv.size(); ++j) mv[j] = cell_values[f.members[j].cell];
    return reconstruct_p2(f, cell_values[f.owner], mv);
}

// ============================================================================
// Q1
// ============================================================================

std::array<double, 4> q1_basis(Vec2 d, double h) {
    const double x = d.x / h, y = d.y / h;
    return {1.0, x, y, x * y};
}

double Q1Poly::eval(Vec2 x) const {
    const auto b = q1_basis(x - center, h);
    return alpha[0] * b[0] + alpha[1] * b[1] + alpha[2] * b[2] + alpha[3] * b[3];
}

namespace {

Eigen::Matrix4d q1_matrix(const DualCell& d) {
    Eigen::Matrix4d a;
    for (int r = 0; r < 4; ++r) {
        const auto b = q1_basis(d.poly[r] - d.centroid, d.h);
        for (int k = 0; k < 4; ++k) a(r, k) = b[k];
    }
    return a;
}

void check_q1(const Eigen::FullPivLU<Eigen::Matrix4d>& lu, const DualCell& d) {
    if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-14) {
        std::ostringstream os;
        os << "degenerate dual cell around cell " << (d.cells.empty() ? -1 : d.cells[0].cell);
        throw Error(ErrorKind::Reconstruction, os.str());
    }
}

} // namespace

Q1Poly vertex_q1(const DualCell& d, const std::array<double, 4>& values) {
    if (d.poly.size() != 4) throw Error(ErrorKind::Reconstruction, "bilinear extrapolation needs four cells");
    Q1Poly q;
    q.center = d.centroid;
    q.h = d.h;
    const Eigen::Matrix4d a = q1_matrix(d);
    Eigen::FullPivLU<Eigen::Matrix4d> lu(a);
    check_q1(lu, d);
    const Eigen::Vector4d rhs(values[0], values[1], values[2], values[3]);
    const Eigen::Vector4d alpha = lu.solve(rhs);
    for (int k = 0; k < 4; ++k) q.alpha[k] = alpha(k);
    return q;
}

std::vector<double> vertex_weights(const DualCell& d, Vec2 x) {
    const size_t n = d.poly.size();
    std::vector<double> w(n, 0.0);
    if (n == 4) {
        // Weights are b(x)^T A^{-1}, i.e. the solution of A^T w = b(x).
        const Eigen::Matrix4d a = q1_matrix(d);
        Eigen::FullPivLU<Eigen::Matrix4d> lu(a.transpose());
        check_q1(lu, d);
        const auto b = q1_basis(x - d.centroid, d.h);
        const Eigen::Vector4d wv = lu.solve(Eigen::Vector4d(b[0], b[1], b[2], b[3]));
        for (int k = 0; k < 4; ++k) w[k] = wv(k);
    } else if (n == 3) {
        Eigen::Matrix3d a;
        const double h = std::max(d.h, 1e-300);
        for (int r = 0; r < 3; ++r) {
            const Vec2 dd = (d.poly[r] - d.centroid) / h;
            a(r, 0) = 1.0;
            a(r, 1) = dd.x;
            a(r, 2) = dd.y;
        }
        Eigen::FullPivLU<Eigen::Matrix3d> lu(a.transpose());
        if (!lu.isInvertible()) throw Error(ErrorKind::Reconstruction, "collinear three-cell dual stencil");
        const Vec2 dx = (x - d.centroid) / h;
        const Eigen::Vector3d wv = lu.solve(Eigen::Vector3d(1.0, dx.x, dx.y));
        for (int k = 0; k < 3; ++k) w[k] = wv(k);
    } else if (n > 0) {
        for (auto& v : w) v = 1.0 / static_cast<double>(n);
    }
    if (n > 0) {
        // Make the weights sum to one exactly so that constants are reproduced bitwise.
        double s = 0.0;
        size_t kmax = 0;
        for (size_t k = 0; k < n; ++k) {
            s += w[k];
            if (std::abs(w[k]) > std::abs(w[kmax])) kmax = k;
        }
        w[kmax] += 1.0 - s;
    }
    return w;
}

} // namespace chimera
