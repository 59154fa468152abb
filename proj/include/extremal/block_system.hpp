#pragma once

// Linear algebra for the coupled radial system: the 2x2 block operator
//
//   [ -L + d_u      c_uv ]
//   [   c_vu     -L + d_v ]
//
// with -L tridiagonal and diagonal couplings. Ordering the unknowns node by node
// (u_0, v_0, u_1, v_1, ...) makes it block tridiagonal with 2x2 blocks, which
// is factored by block Thomas elimination in O(m).

#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "extremal/radial_grid.hpp"

namespace extremal {

namespace detail {

struct Mat2 {
    double a00, a01, a10, a11;

    double det() const { return a00 * a11 - a01 * a10; }
    Mat2 inverse() const {
        const double d = det();
        return {a11 / d, -a01 / d, -a10 / d, a00 / d};
    }
    std::array<double, 2> operator*(const std::array<double, 2>& x) const {
        return {a00 * x[0] + a01 * x[1], a10 * x[0] + a11 * x[1]};
    }
    Mat2 scaled(double s) const { return {a00 * s, a01 * s, a10 * s, a11 * s}; }
};

}  // namespace detail

class BlockLU;

/// Coupled operator with shared tridiagonal -L blocks. diag_u / diag_v are
/// extra diagonal terms on each block, couple_uv multiplies v in the u rows and
/// couple_vu multiplies u in the v rows.
struct BlockSystem {
    const RadialGrid* grid = nullptr;
    std::vector<double> diag_u, diag_v;
    std::vector<double> couple_uv, couple_vu;

    explicit BlockSystem(const RadialGrid& g)
        : grid(&g), diag_u(g.cells(), 0.0), diag_v(g.cells(), 0.0), couple_uv(g.cells(), 0.0),
          couple_vu(g.cells(), 0.0) {}

    int size() const { return grid->cells(); }

    /// (out_u, out_v) = A (x_u, x_v).
    void apply(std::span<const double> xu, std::span<const double> xv, std::span<double> out_u,
               std::span<double> out_v) const {
        apply_neg_laplacian(*grid, xu, out_u);
        apply_neg_laplacian(*grid, xv, out_v);
        for (int i = 0; i < size(); ++i) {
            const double ou = out_u[i] + diag_u[i] * xu[i] + couple_uv[i] * xv[i];
            const double ov = out_v[i] + diag_v[i] * xv[i] + couple_vu[i] * xu[i];
            out_u[i] = ou;
            out_v[i] = ov;
        }
    }

    /// Factor A - shift I.
    BlockLU factor(double shift = 0.0) const;
};

/// Block Thomas factorization of a BlockSystem (no pivoting).
///
/// For a Z-matrix (nonpositive off-diagonals, which is the case for the
/// Jacobians and stability operators here) all elimination pivots are positive
/// exactly when the matrix is a nonsingular M-matrix, i.e. when the shift lies
/// below the principal eigenvalue.
class BlockLU {
public:
    bool singular() const { return singular_; }
    bool all_pivots_positive() const { return positive_; }

    /// Solves A x = b; returns false if the factorization was singular.
    bool solve(std::span<const double> bu, std::span<const double> bv, std::span<double> xu,
               std::span<double> xv) const {
        if (singular_) return false;
        const int m = static_cast<int>(minv_.size());
        std::vector<std::array<double, 2>> y(m);
        for (int i = 0; i < m; ++i) {
            std::array<double, 2> rhs{bu[i], bv[i]};
            if (i > 0) {
                rhs[0] -= lower_[i] * y[i - 1][0];
                rhs[1] -= lower_[i] * y[i - 1][1];
            }
            y[i] = minv_[i] * rhs;
        }
        std::array<double, 2> next{0.0, 0.0};
        for (int i = m - 1; i >= 0; --i) {
            std::array<double, 2> x = y[i];
            if (i + 1 < m) {
                const auto gx = g_[i] * next;
                x[0] -= gx[0];
                x[1] -= gx[1];
            }
            xu[i] = x[0];
            xv[i] = x[1];
            next = x;
        }
        for (int i = 0; i < m; ++i)
            if (!std::isfinite(xu[i]) || !std::isfinite(xv[i])) return false;
        return true;
    }

private:
    friend struct BlockSystem;

    std::vector<detail::Mat2> minv_;  // inverse of the eliminated diagonal block
    std::vector<detail::Mat2> g_;     // M_i^{-1} * upper_i
    std::vector<double> lower_;
    bool singular_ = false;
    bool positive_ = true;
};

inline BlockLU BlockSystem::factor(double shift) const {
    const int m = size();
    const auto lo = grid->lower();
    const auto d = grid->diag();
    const auto up = grid->upper();
    BlockLU lu;
    lu.minv_.resize(m);
    lu.g_.resize(m);
    lu.lower_.assign(lo.begin(), lo.end());
    detail::Mat2 gprev{0, 0, 0, 0};
    for (int i = 0; i < m; ++i) {
        detail::Mat2 mi{d[i] + diag_u[i] - shift, couple_uv[i], couple_vu[i], d[i] + diag_v[i] - shift};
        if (i > 0) {
            // M_i = D_i - lower_i * G_{i-1}
            mi.a00 -= lo[i] * gprev.a00;
            mi.a01 -= lo[i] * gprev.a01;
            mi.a10 -= lo[i] * gprev.a10;
            mi.a11 -= lo[i] * gprev.a11;
        }
        const double det = mi.det();
        if (!(mi.a00 > 0.0) || !(det > 0.0)) lu.positive_ = false;
        const double scale = std::abs(mi.a00 * mi.a11) + std::abs(mi.a01 * mi.a10);
        if (!std::isfinite(det) || std::abs(det) <= 1e-300 || std::abs(det) <= 1e-15 * scale) {
            lu.singular_ = true;
            lu.positive_ = false;
            return lu;
        }
        lu.minv_[i] = mi.inverse();
        lu.g_[i] = lu.minv_[i].scaled(i + 1 < m ? up[i] : 0.0);
        gprev = lu.g_[i];
    }
    return lu;
}

/// Number of eigenvalues below `shift` of the tridiagonal operator -L + diag_extra
/// (self-adjoint in the V-weighted inner product), by the sign of the pivots
/// of its LDL^T-equivalent elimination.
inline int count_eigenvalues_below(const RadialGrid& g, std::span<const double> diag_extra, double shift) {
    const int m = g.cells();
    const auto lo = g.lower();
    const auto d = g.diag();
    const auto up = g.upper();
    int count = 0;
    double piv = 1.0;
    for (int i = 0; i < m; ++i) {
        double di = d[i] + diag_extra[i] - shift;
        if (i > 0) di -= lo[i] * up[i - 1] / piv;
        if (di == 0.0) di = -1e-300;
        if (di < 0.0) ++count;
        piv = di;
    }
    return count;
}

/// Solves the tridiagonal system (-L + diag_extra - shift) x = b (Thomas).
/// Returns false on a zero pivot.
inline bool solve_tridiagonal(const RadialGrid& g, std::span<const double> diag_extra, double shift,
                              std::span<const double> b, std::span<double> x) {
    const int m = g.cells();
    const auto lo = g.lower();
    const auto d = g.diag();
    const auto up = g.upper();
    std::vector<double> cp(m), dp(m);
    double piv = d[0] + diag_extra[0] - shift;
    if (piv == 0.0) return false;
    cp[0] = up[0] / piv;
    dp[0] = b[0] / piv;
    for (int i = 1; i < m; ++i) {
        piv = d[i] + diag_extra[i] - shift - lo[i] * cp[i - 1];
        if (piv == 0.0) return false;
        cp[i] = i + 1 < m ? up[i] / piv : 0.0;
        dp[i] = (b[i] - lo[i] * dp[i - 1]) / piv;
    }
    x[m - 1] = dp[m - 1];
    for (int i = m - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
    for (int i = 0; i < m; ++i)
        if (!std::isfinite(x[i])) return false;
    return true;
}

}  // namespace extremal
