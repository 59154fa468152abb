#pragma once

// Radial discretization of the coupled system
//
//   -Lap u = lambda f(v),  -Lap v = gamma f(u)  in the unit ball,  u = v = 0 on the sphere,
//
// and its damped Newton solver.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "extremal/block_system.hpp"
#include "extremal/nonlinearity.hpp"
#include "extremal/radial_grid.hpp"

namespace extremal {

struct SolutionPair {
    std::vector<double> u, v;
    double lambda = 0.0;
    double gamma = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
    int newton_iters = 0;

    static SolutionPair zero(const RadialGrid& g) {
        SolutionPair s;
        s.u.assign(g.cells(), 0.0);
        s.v.assign(g.cells(), 0.0);
        s.converged = true;
        return s;
    }
};

/// Newton failed: beyond the fold, or a bad initial guess. Carries the last
/// iterate and its residual.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, SolutionPair last) : std::runtime_error(what), last_(std::move(last)) {}
    const SolutionPair& last_iterate() const { return last_; }
    double residual_norm() const { return last_.residual_norm; }

private:
    SolutionPair last_;
};

inline double sup_norm(std::span<const double> x) {
    double s = 0.0;
    for (double xi : x) s = std::max(s, std::abs(xi));
    return s;
}

/// (-L u - lambda f(v), -L v - gamma f(u)), nodewise.
inline std::pair<std::vector<double>, std::vector<double>> residual(const RadialGrid& g, const Nonlinearity& f,
                                                                    double lambda, double gamma,
                                                                    std::span<const double> u,
                                                                    std::span<const double> v) {
    detail::require_length(g, u.size(), "residual");
    detail::require_length(g, v.size(), "residual");
    std::vector<double> ru(u.size()), rv(v.size());
    apply_neg_laplacian(g, u, ru);
    apply_neg_laplacian(g, v, rv);
    for (std::size_t i = 0; i < u.size(); ++i) {
        ru[i] -= lambda * f.f(v[i]);
        rv[i] -= gamma * f.f(u[i]);
    }
    return {std::move(ru), std::move(rv)};
}

/// Exact derivative of `residual` with respect to (u, v):
/// [ -L, -lambda f'(v) ; -gamma f'(u), -L ].
inline BlockSystem jacobian(const RadialGrid& g, const Nonlinearity& f, double lambda, double gamma,
                            std::span<const double> u, std::span<const double> v) {
    detail::require_length(g, u.size(), "jacobian");
    detail::require_length(g, v.size(), "jacobian");
    BlockSystem j(g);
    for (std::size_t i = 0; i < u.size(); ++i) {
        j.couple_uv[i] = -lambda * f.df(v[i]);
        j.couple_vu[i] = -gamma * f.df(u[i]);
    }
    return j;
}

struct NewtonOptions {
    double tol = 1e-10;
    int max_iters = 50;
    double min_damping = 0x1p-20;
};

namespace detail {

// Convergence threshold for the sup-norm residual: tol relative to the forcing
// magnitude, plus the rounding floor of evaluating -L on a state of size |u|.
inline double residual_threshold(const RadialGrid& g, const Nonlinearity& f, double lambda, double gamma,
                                 std::span<const double> u, std::span<const double> v, double tol) {
    double fu = 0.0, fv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        fu = std::max(fu, std::abs(f.f(u[i])));
        fv = std::max(fv, std::abs(f.f(v[i])));
    }
    const double forcing = lambda * fv + gamma * fu;
    const double state = std::max(sup_norm(u), sup_norm(v));
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() * g.operator_scale() * state;
    return tol * (1.0 + forcing) + floor;
}

inline double pair_sup_norm(const std::pair<std::vector<double>, std::vector<double>>& r) {
    return std::max(sup_norm(r.first), sup_norm(r.second));
}

inline bool all_finite(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double t) { return std::isfinite(t); });
}

inline SolutionPair newton_canonical(const RadialGrid& g, const Nonlinearity& f, double lambda, double gamma,
                                     std::vector<double> u, std::vector<double> v, const NewtonOptions& opt) {
    const int m = g.cells();
    auto res = residual(g, f, lambda, gamma, u, v);
    double rnorm = pair_sup_norm(res);

    auto snapshot = [&](bool converged, int iters) {
        SolutionPair s;
        s.u = u;
        s.v = v;
        s.lambda = lambda;
        s.gamma = gamma;
        s.residual_norm = rnorm;
        s.converged = converged;
        s.newton_iters = iters;
        return s;
    };

    std::vector<double> du(m), dv(m), ut(m), vt(m), bu(m), bv(m);
    for (int iter = 1; iter <= opt.max_iters; ++iter) {
        const double thresh = residual_threshold(g, f, lambda, gamma, u, v, opt.tol);
        const BlockLU lu = jacobian(g, f, lambda, gamma, u, v).factor();
        for (int i = 0; i < m; ++i) {
            bu[i] = -res.first[i];
            bv[i] = -res.second[i];
        }
        if (!lu.solve(bu, bv, du, dv)) {
            if (rnorm <= thresh) return snapshot(true, iter - 1);
            throw NonConvergence("newton: singular Jacobian", snapshot(false, iter));
        }
        bool accepted = false;
        for (double t = 1.0; t >= opt.min_damping; t *= 0.5) {
            for (int i = 0; i < m; ++i) {
                ut[i] = u[i] + t * du[i];
                vt[i] = v[i] + t * dv[i];
            }
            if (!all_finite(ut) || !all_finite(vt)) continue;
            auto rt = residual(g, f, lambda, gamma, ut, vt);
            const double rt_norm = pair_sup_norm(rt);
            if (!std::isfinite(rt_norm)) continue;
            const double thresh_t = residual_threshold(g, f, lambda, gamma, ut, vt, opt.tol);
            if (rt_norm < rnorm || rt_norm <= thresh_t) {
                std::swap(u, ut);
                std::swap(v, vt);
                res = std::move(rt);
                rnorm = rt_norm;
                accepted = true;
                if (rnorm <= thresh_t) return snapshot(true, iter);
                break;
            }
        }
        if (!accepted) {
            if (rnorm <= thresh) return snapshot(true, iter - 1);
            throw NonConvergence("newton: no residual decrease at minimum damping", snapshot(false, iter));
        }
    }
    throw NonConvergence("newton: iteration limit reached", snapshot(false, opt.max_iters));
}

}  // namespace detail

/// Damped Newton iteration for the discrete system from `init`.
///
/// Steps are halved while the sup-norm residual does not decrease, down to
/// opt.min_damping. Converged when the residual falls below
/// tol * (1 + lambda |f(v)| + gamma |f(u)|) plus the rounding floor of the
/// discrete operator. The problem is solved with lambda >= gamma and mirrored
/// back otherwise, so swapping (lambda, gamma) swaps (u, v) exactly.
///
/// Throws NonConvergence.
inline SolutionPair newton_solve(const RadialGrid& g, const Nonlinearity& f, double lambda, double gamma,
                                 const std::pair<std::vector<double>, std::vector<double>>& init,
                                 const NewtonOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw std::invalid_argument("newton_solve requires tol > 0");
    if (!(lambda >= 0.0) || !(gamma >= 0.0)) throw std::invalid_argument("newton_solve requires lambda, gamma >= 0");
    detail::require_length(g, init.first.size(), "newton_solve");
    detail::require_length(g, init.second.size(), "newton_solve");
    if (lambda >= gamma) return detail::newton_canonical(g, f, lambda, gamma, init.first, init.second, opt);
    try {
        SolutionPair s = detail::newton_canonical(g, f, gamma, lambda, init.second, init.first, opt);
        std::swap(s.u, s.v);
        std::swap(s.lambda, s.gamma);
        return s;
    } catch (const NonConvergence& e) {
        SolutionPair s = e.last_iterate();
        std::swap(s.u, s.v);
        std::swap(s.lambda, s.gamma);
        throw NonConvergence(e.what(), std::move(s));
    }
}

inline SolutionPair newton_solve(const RadialGrid& g, const Nonlinearity& f, double lambda, double gamma,
                                 const std::pair<std::vector<double>, std::vector<double>>& init, double tol,
                                 int max_iters) {
    NewtonOptions opt;
    opt.tol = tol;
    opt.max_iters = max_iters;
    return newton_solve(g, f, lambda, gamma, init, opt);
}

inline SolutionPair newton_solve(const RadialGrid& g, const Nonlinearity& f, double lambda, double gamma,
                                 const SolutionPair& init, const NewtonOptions& opt = {}) {
    return newton_solve(g, f, lambda, gamma, std::pair{init.u, init.v}, opt);
}

}  // namespace extremal
