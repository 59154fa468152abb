#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace extremal {

/// Cell-centered mesh on [0, 1] for radial functions in dimension N (any real
/// N >= 1). Node i sits at r_i = (i + 1/2) h; cell i spans [i h, (i + 1) h].
///
/// The discrete Laplacian is the conservative flux form
///
///   (L w)_i = [ F_{i+1} (w_{i+1} - w_i) - F_i (w_i - w_{i-1}) ] / (h^2 r_i^{N-1})
///
/// with face weights F_i = (i h)^{N-1}. The inner flux of cell 0 is zero
/// (u'(0) = 0) and the outer ghost value is w_m = -w_{m-1} (u(1) = 0).
/// The matching quadrature weights are W_i = r_i^{N-1} h (midpoint rule for
/// the radial measure), and -L is self-adjoint in the W-weighted inner product.
///
/// The scheme is exact on r^2 for N <= 2. For N > 2 its local error on smooth
/// functions is O(h^2 / r^2), i.e. O(1) in the first few cells, while the
/// solution error stays second order; the nodal weights are what keep the
/// discrete Hardy inequality intact near the origin.
class RadialGrid {
public:
    RadialGrid(double n_dim, int cells) : n_dim_(n_dim), m_(cells), h_(1.0 / cells) {
        if (!(n_dim >= 1.0) || !std::isfinite(n_dim)) throw std::invalid_argument("RadialGrid: dimension must be >= 1");
        if (cells < 16) throw std::invalid_argument("RadialGrid: need at least 16 cells");
        nodes_.resize(m_);
        weights_.resize(m_);
        lower_.assign(m_, 0.0);
        diag_.assign(m_, 0.0);
        upper_.assign(m_, 0.0);
        const double e = n_dim - 1.0;
        const double h2 = h_ * h_;
        for (int i = 0; i < m_; ++i) {
            const double in = i;
            const double out = i + 1.0;
            const double mid = in + 0.5;
            nodes_[i] = mid * h_;
            weights_[i] = std::pow(nodes_[i], e) * h_;
            // F / (h^2 r_i^{N-1}) with the h^{N-1} factors cancelled.
            const double c_out = std::pow(out / mid, e) / h2;
            const double c_in = i == 0 ? 0.0 : std::pow(in / mid, e) / h2;
            if (i + 1 < m_) {
                diag_[i] = c_out + c_in;
                upper_[i] = -c_out;
            } else {
                diag_[i] = 2.0 * c_out + c_in;  // reflective ghost
            }
            if (i > 0) lower_[i] = -c_in;
        }
    }

    double dim() const { return n_dim_; }
    int cells() const { return m_; }
    double h() const { return h_; }

    std::span<const double> nodes() const { return nodes_; }
    /// Quadrature weights W_i = r_i^{N-1} h.
    std::span<const double> weights() const { return weights_; }

    /// Tridiagonal coefficients of -L (lower[0] and upper[m-1] are zero).
    std::span<const double> lower() const { return lower_; }
    std::span<const double> diag() const { return diag_; }
    std::span<const double> upper() const { return upper_; }

    /// Largest diagonal entry of -L, the operator's floating-point scale.
    double operator_scale() const {
        double s = 0.0;
        for (double d : diag_) s = d > s ? d : s;
        return s;
    }

private:
    double n_dim_;
    int m_;
    double h_;
    std::vector<double> nodes_, weights_;
    std::vector<double> lower_, diag_, upper_;
};

namespace detail {
inline void require_length(const RadialGrid& g, std::size_t n, const char* what) {
    if (n != static_cast<std::size_t>(g.cells()))
        throw std::invalid_argument(std::string(what) + ": vector length " + std::to_string(n) +
                                    " does not match grid size " + std::to_string(g.cells()));
}
}  // namespace detail

/// out = -L w.
inline void apply_neg_laplacian(const RadialGrid& g, std::span<const double> w, std::span<double> out) {
    const int m = g.cells();
    const auto lo = g.lower();
    const auto d = g.diag();
    const auto up = g.upper();
    for (int i = 0; i < m; ++i) {
        double s = d[i] * w[i];
        if (i > 0) s += lo[i] * w[i - 1];
        if (i + 1 < m) s += up[i] * w[i + 1];
        out[i] = s;
    }
}

/// Discrete radial Laplacian L w.
inline std::vector<double> apply_laplacian(const RadialGrid& g, std::span<const double> w) {
    detail::require_length(g, w.size(), "apply_laplacian");
    std::vector<double> out(w.size());
    apply_neg_laplacian(g, w, out);
    for (double& x : out) x = -x;
    return out;
}

/// Sum_i W_i a_i b_i, the radial integral of a*b (per unit solid angle).
inline double weighted_dot(const RadialGrid& g, std::span<const double> a, std::span<const double> b) {
    const auto wt = g.weights();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += wt[i] * a[i] * b[i];
    return s;
}

/// Quadratic form w^T W (-L) w: the discrete Dirichlet energy of w, including
/// the boundary half-cell.
/// Summed face by face, so it is a sum of nonnegative terms.
inline double dirichlet_energy(const RadialGrid& g, std::span<const double> w) {
    const int m = g.cells();
    const auto wt = g.weights();
    const auto up = g.upper();
    double s = 0.0;
    for (int i = 0; i + 1 < m; ++i) {
        const double dw = w[i + 1] - w[i];
        s += -wt[i] * up[i] * dw * dw;
    }
    // Boundary half-cell: 2 W c_out w^2 with c_out = (diag + lower) / 2.
    const double c_out = 0.5 * (g.diag()[m - 1] + g.lower()[m - 1]);
    s += 2.0 * wt[m - 1] * c_out * w[m - 1] * w[m - 1];
    return s;
}

/// Value at r = 0 by even quadratic extrapolation from the two innermost nodes.
inline double center_value(std::span<const double> w) { return (9.0 * w[0] - w[1]) / 8.0; }

}  // namespace extremal
