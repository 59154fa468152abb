#pragma once

// Stability of computed solutions and the integral probes evaluated on them:
// the semistability eigenvalue, the coupled linearized eigenvalue, the
// comparison check, the quadratic-form inequality, theta(t), and the
// Hoelder-type integrals I and J.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "extremal/block_system.hpp"
#include "extremal/comparison.hpp"
#include "extremal/continuation.hpp"
#include "extremal/errors.hpp"
#include "extremal/nonlinearity.hpp"
#include "extremal/radial_grid.hpp"
#include "extremal/radial_solver.hpp"
#include "extremal/regularity.hpp"

namespace extremal {

struct Eigenpair {
    double value = 0.0;
    std::vector<double> vector;  // W-normalized, positive sum
    double residual = 0.0;       // relative eigen-residual
};

/// Smallest eigenvalue of -L - q (self-adjoint in the W-weighted inner product).
///
/// A Sturm-count bisection brackets the eigenvalue, inverse iteration with the
/// shift at the lower end of the bracket yields the eigenfunction, and the
/// reported value is its Rayleigh quotient, computed with the same discrete
/// energy that check_inequality5 uses.
inline Eigenpair principal_eigenpair(const RadialGrid& g, std::span<const double> q) {
    const int m = g.cells();
    std::vector<double> extra(m);
    for (int i = 0; i < m; ++i) extra[i] = -q[i];

    const auto lo_c = g.lower();
    const auto d = g.diag();
    const auto up_c = g.upper();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < m; ++i) {
        const double radius = std::abs(lo_c[i]) + std::abs(up_c[i]);
        lo = std::min(lo, d[i] + extra[i] - radius);
        hi = std::max(hi, d[i] + extra[i] + radius);
    }
    const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
    lo -= 1e-12 * scale;
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * scale; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (count_eigenvalues_below(g, extra, mid) >= 1)
            hi = mid;
        else
            lo = mid;
    }

    // Inverse iteration just below the bracket.
    const double shift = lo - 8.0 * std::numeric_limits<double>::epsilon() * scale;
    std::vector<double> x(m, 1.0), y(m);
    auto normalize = [&](std::vector<double>& w) {
        const double sum = std::accumulate(w.begin(), w.end(), 0.0);
        const double nrm = std::sqrt(weighted_dot(g, w, w));
        const double s = (sum < 0.0 ? -1.0 : 1.0) / nrm;
        for (double& wi : w) wi *= s;
    };
    normalize(x);
    for (int it = 0; it < 8; ++it) {
        if (!solve_tridiagonal(g, extra, shift, x, y))
            throw EigenSolverError("principal_eigenpair: singular shifted system", 0.0);
        normalize(y);
        std::swap(x, y);
    }

    Eigenpair ep;
    double qform = 0.0;
    const auto wt = g.weights();
    for (int i = 0; i < m; ++i) qform += wt[i] * q[i] * x[i] * x[i];
    ep.value = (dirichlet_energy(g, x) - qform) / weighted_dot(g, x, x);

    std::vector<double> ax(m);
    apply_neg_laplacian(g, x, ax);
    double rn = 0.0;
    for (int i = 0; i < m; ++i) {
        const double r = ax[i] - q[i] * x[i] - ep.value * x[i];
        rn += wt[i] * r * r;
    }
    ep.residual = std::sqrt(rn / weighted_dot(g, x, x)) / scale;
    if (!(ep.residual < 1e-8) || !std::isfinite(ep.value))
        throw EigenSolverError("principal_eigenpair: inverse iteration stagnated", ep.residual);
    ep.vector = std::move(x);
    return ep;
}

/// sqrt(lambda gamma f'(u) f'(v)), the potential of the symmetrized stability operator.
inline std::vector<double> semistability_potential(const SolutionPair& sol, const Nonlinearity& f) {
    std::vector<double> q(sol.u.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::sqrt(sol.lambda * sol.gamma * f.df(sol.u[i]) * f.df(sol.v[i]));
    return q;
}

/// Smallest eigenvalue mu1 of -L - sqrt(lambda gamma f'(u) f'(v)) and its
/// eigenfunction. mu1 >= 0 is the discrete form of the semistability inequality.
inline Eigenpair mu1_semistability(const RadialGrid& g, const SolutionPair& sol, const Nonlinearity& f) {
    if (!sol.converged) throw std::invalid_argument("mu1_semistability requires a converged solution");
    detail::require_length(g, sol.u.size(), "mu1_semistability");
    return principal_eigenpair(g, semistability_potential(sol, f));
}

struct CoupledEigen {
    double eta = 0.0;
    std::vector<double> zeta, chi;
};

/// Smallest real eigenvalue of the linearized coupled system
///   -L zeta - lambda f'(v) chi = eta zeta,  -L chi - gamma f'(u) zeta = eta chi.
///
/// The operator is a Z-matrix, so A - s is a nonsingular M-matrix exactly for
/// s below the principal eigenvalue; bisection on the sign of the block LU
/// pivots brackets eta, and shifted inverse power iteration refines it.
inline CoupledEigen coupled_eta(const RadialGrid& g, const SolutionPair& sol, const Nonlinearity& f) {
    if (!sol.converged) throw std::invalid_argument("coupled_eta requires a converged solution");
    const int m = g.cells();
    BlockSystem a = jacobian(g, f, sol.lambda, sol.gamma, sol.u, sol.v);

    const auto lo_c = g.lower();
    const auto d = g.diag();
    const auto up_c = g.upper();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < m; ++i) {
        const double radius = std::abs(lo_c[i]) + std::abs(up_c[i]);
        const double couple = std::max(std::abs(a.couple_uv[i]), std::abs(a.couple_vu[i]));
        lo = std::min(lo, d[i] - radius - couple);
        hi = std::max(hi, d[i] + radius + couple);
    }
    const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
    lo -= 1e-12 * scale;
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * scale; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (a.factor(mid).all_pivots_positive())
            lo = mid;
        else
            hi = mid;
    }

    const double shift = lo - 8.0 * std::numeric_limits<double>::epsilon() * scale;
    const BlockLU lu = a.factor(shift);
    std::vector<double> xu(m, 1.0), xv(m, 1.0), yu(m), yv(m);
    double estimate = shift;
    for (int it = 0; it < 12; ++it) {
        if (!lu.solve(xu, xv, yu, yv)) throw EigenSolverError("coupled_eta: singular shifted system", 0.0);
        double xy = 0.0, yy = 0.0;
        for (int i = 0; i < m; ++i) {
            xy += xu[i] * yu[i] + xv[i] * yv[i];
            yy += yu[i] * yu[i] + yv[i] * yv[i];
        }
        estimate = shift + xy / yy;
        const double nrm = std::sqrt(yy);
        for (int i = 0; i < m; ++i) {
            xu[i] = yu[i] / nrm;
            xv[i] = yv[i] / nrm;
        }
    }
    std::vector<double> au(m), av(m);
    a.apply(xu, xv, au, av);
    double rn = 0.0;
    for (int i = 0; i < m; ++i) {
        rn += (au[i] - estimate * xu[i]) * (au[i] - estimate * xu[i]);
        rn += (av[i] - estimate * xv[i]) * (av[i] - estimate * xv[i]);
    }
    if (!(std::sqrt(rn) / scale < 1e-8) || !std::isfinite(estimate))
        throw EigenSolverError("coupled_eta: power iteration did not converge", std::sqrt(rn) / scale);
    return {estimate, std::move(xu), std::move(xv)};
}

/// Margins  int |grad phi|^2 - sqrt(lambda gamma) int sqrt(f'(u) f'(v)) phi^2
/// (radial integrals with weight r^{N-1}) for nodal test functions. The
/// Dirichlet condition at r = 1 is built into the discrete energy.
inline std::vector<double> check_inequality5(const RadialGrid& g, const SolutionPair& sol, const Nonlinearity& f,
                                             const std::vector<std::vector<double>>& test_functions) {
    const auto q = semistability_potential(sol, f);
    const auto wt = g.weights();
    std::vector<double> margins;
    margins.reserve(test_functions.size());
    for (const auto& phi : test_functions) {
        detail::require_length(g, phi.size(), "check_inequality5");
        double pot = 0.0;
        for (std::size_t i = 0; i < phi.size(); ++i) pot += wt[i] * q[i] * phi[i] * phi[i];
        margins.push_back(dirichlet_energy(g, phi) - pot);
    }
    return margins;
}

/// Same, for test functions given as callables of r; each must vanish at r = 1.
inline std::vector<double> check_inequality5(const RadialGrid& g, const SolutionPair& sol, const Nonlinearity& f,
                                             const std::vector<std::function<double(double)>>& test_functions) {
    std::vector<std::vector<double>> sampled;
    for (const auto& phi : test_functions) {
        if (std::abs(phi(1.0)) > 1e-12) throw std::invalid_argument("check_inequality5: test function must vanish at r = 1");
        std::vector<double> w(g.cells());
        for (int i = 0; i < g.cells(); ++i) w[i] = phi(g.nodes()[i]);
        sampled.push_back(std::move(w));
    }
    return check_inequality5(g, sol, f, sampled);
}

/// Random even test functions sum_k c_k cos((k - 1/2) pi r), which satisfy
/// phi'(0) = 0 and phi(1) = 0, sampled at the nodes. Coefficients are normal
/// with standard deviation 1/k. Deterministic for a given seed.
inline std::vector<std::vector<double>> random_test_functions(const RadialGrid& g, int count, std::uint64_t seed,
                                                              int modes = 6) {
    if (count < 0 || modes < 1) throw std::invalid_argument("random_test_functions: bad count or mode number");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double pi = std::acos(-1.0);
    std::vector<std::vector<double>> out;
    out.reserve(count);
    for (int n = 0; n < count; ++n) {
        std::vector<double> c(modes);
        for (int k = 0; k < modes; ++k) c[k] = normal(rng) / (k + 1.0);
        std::vector<double> phi(g.cells(), 0.0);
        for (int i = 0; i < g.cells(); ++i) {
            const double r = g.nodes()[i];
            for (int k = 0; k < modes; ++k) phi[i] += c[k] * std::cos((k + 0.5) * pi * r);
        }
        out.push_back(std::move(phi));
    }
    return out;
}

namespace detail {

// exponent * log_value, with 0 * (-inf) = 0 (x^0 = 1 even at x = 0).
inline double scaled_log(double exponent, double log_value) { return exponent == 0.0 ? 0.0 : exponent * log_value; }

// Accumulates sum_i w_i exp(l_i) as (max, scaled sum) to avoid overflow.
class LogSum {
public:
    void add(double weight, double log_term) {
        if (weight <= 0.0 || log_term == -std::numeric_limits<double>::infinity()) return;
        if (!std::isfinite(log_term)) throw DomainError("non-finite integrand in log-space quadrature");
        const double lt = log_term + std::log(weight);
        if (lt > max_) {
            sum_ = sum_ * std::exp(max_ - lt) + 1.0;
            max_ = lt;
        } else {
            sum_ += std::exp(lt - max_);
        }
    }
    double log_value() const { return sum_ > 0.0 ? max_ + std::log(sum_) : -std::numeric_limits<double>::infinity(); }
    double value() const { return std::exp(log_value()); }

private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

// log of the theta integrand alpha^2 f~^{2a-2} f'^{2-a} (1 - f~ f''/(2 f'^2))^2.
inline double theta_log_integrand(const Nonlinearity& f, double alpha, double s) {
    const double lt = f.log_ftilde(s);
    const double ld = f.log_df(s);
    double ratio = f.ftilde(s) * f.ddf(s) / (2.0 * f.df(s) * f.df(s));
    if (!std::isfinite(ratio)) ratio = 0.5 * std::exp(lt + f.log_ddf(s) - 2.0 * ld);
    const double factor = 1.0 - ratio;
    if (factor == 0.0) return -std::numeric_limits<double>::infinity();
    const double l = 2.0 * std::log(alpha) + scaled_log(2.0 * alpha - 2.0, lt) + scaled_log(2.0 - alpha, ld) +
                     2.0 * std::log(std::abs(factor));
    return l;
}

inline double theta_segment(const Nonlinearity& f, double alpha, double a, double b) {
    if (!(b > a)) return 0.0;
    auto integrand = [&](double s) {
        const double l = theta_log_integrand(f, alpha, s);
        if (std::isnan(l) || l == std::numeric_limits<double>::infinity())
            throw DomainError("theta integrand is singular at s = " + std::to_string(s));
        return std::exp(l);
    };
    // The Kronrod error estimate has a rounding floor near 1e-12 relative; a
    // tolerance below it forces refinement to the depth limit on every call.
    double err = 0.0;
    const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, a, b, 10, 1e-10, &err);
    if (!std::isfinite(val)) throw DomainError("theta integral overflowed");
    return val;
}

inline void require_alpha(double alpha, const char* what) {
    if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw std::invalid_argument(std::string(what) + " requires alpha >= 1");
}

}  // namespace detail

/// theta(t) = alpha^2 int_0^t f~(s)^{2 alpha - 2} f'(s)^{2 - alpha} (1 - f~(s) f''(s) / (2 f'(s)^2))^2 ds
/// by adaptive Gauss-Kronrod quadrature. Throws DomainError if the integrand is
/// not finite on (0, t].
inline double theta_integral(const Nonlinearity& f, double alpha, double t) {
    detail::require_alpha(alpha, "theta_integral");
    if (!(t >= 0.0)) throw std::invalid_argument("theta_integral requires t >= 0");
    return detail::theta_segment(f, alpha, 0.0, t);
}

/// theta at every value of `ts` (any order), integrating once along the sorted values.
inline std::vector<double> theta_table(const Nonlinearity& f, double alpha, std::span<const double> ts) {
    detail::require_alpha(alpha, "theta_table");
    std::vector<std::size_t> order(ts.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ts[a] < ts[b]; });
    std::vector<double> out(ts.size());
    double acc = 0.0, at = 0.0;
    for (std::size_t k : order) {
        if (ts[k] < 0.0) throw std::invalid_argument("theta_table requires t >= 0");
        acc += detail::theta_segment(f, alpha, at, ts[k]);
        at = std::max(at, ts[k]);
        out[k] = acc;
    }
    return out;
}

struct Inequality8 {
    double lhs = 0.0;
    double rhs = 0.0;
    double log_lhs = 0.0;
    double log_rhs = 0.0;
    bool holds(double rel_tol) const { return log_lhs <= log_rhs + std::log1p(rel_tol); }
};

struct Inequality8Options {
    double semistability_tol = 1e-6;
    double horizon = 1e3;
};

/// Both sides of
///   sqrt(lambda gamma) int f'(u)^{1/2 - alpha} f'(v)^{1/2} f~(u)^{2 alpha}  <=  lambda int theta(u) f(v)
/// on a semistable solution. Requires P_f(alpha, tau-, tau+) <= 0, i.e.
/// 1 <= alpha <= alpha*.
inline Inequality8 check_inequality8(const RadialGrid& g, const SolutionPair& sol, const Nonlinearity& f, double alpha,
                                     const Inequality8Options& opt = {}) {
    detail::require_alpha(alpha, "check_inequality8");
    const auto rep = regularity_report(f, opt.horizon);
    if (!rep.admissible) throw DomainError("check_inequality8: nonlinearity has inadmissible tau bounds");
    if (pf_eval(alpha, rep.tau_minus, rep.tau_plus) > 1e-12 * (1.0 + alpha * alpha))
        throw std::invalid_argument("check_inequality8: alpha lies outside the window P_f(alpha) <= 0");
    if (sol.lambda > 0.0 || sol.gamma > 0.0) {
        const double mu1 = mu1_semistability(g, sol, f).value;
        if (mu1 < -opt.semistability_tol)
            throw std::invalid_argument("check_inequality8: solution is not semistable (mu1 = " + std::to_string(mu1) + ")");
    }
    const auto wt = g.weights();
    const auto theta = theta_table(f, alpha, sol.u);
    detail::LogSum left, right;
    for (std::size_t i = 0; i < sol.u.size(); ++i) {
        const double u = sol.u[i], v = sol.v[i];
        if (u > 0.0) {
            left.add(wt[i], detail::scaled_log(0.5 - alpha, f.log_df(u)) + 0.5 * f.log_df(v) +
                                 2.0 * alpha * f.log_ftilde(u));
        }
        if (theta[i] > 0.0) right.add(wt[i], std::log(theta[i]) + f.log_f(v));
    }
    Inequality8 r;
    const double scale_l = 0.5 * std::log(sol.lambda * sol.gamma);
    const double scale_r = std::log(sol.lambda);
    r.log_lhs = left.log_value() + (sol.lambda * sol.gamma > 0.0 ? scale_l : 0.0);
    r.log_rhs = right.log_value() + (sol.lambda > 0.0 ? scale_r : 0.0);
    if (sol.lambda * sol.gamma == 0.0) r.log_lhs = -std::numeric_limits<double>::infinity();
    if (sol.lambda == 0.0) r.log_rhs = -std::numeric_limits<double>::infinity();
    r.lhs = std::exp(r.log_lhs);
    r.rhs = std::exp(r.log_rhs);
    return r;
}

/// Margins C1 f~(t)^{tau2} - f'(t) with C1 = f'(T) / f~(T)^{tau2}. Requires
/// tau(t) <= tau2 on [T, max ts], checked on a geometric sample.
inline std::vector<double> check_bound12(const Nonlinearity& f, double tau2, double T, const std::vector<double>& ts) {
    if (!(T > 0.0)) throw std::invalid_argument("check_bound12 requires T > 0");
    double t_max = T;
    for (double t : ts) {
        if (t < T) throw std::invalid_argument("check_bound12: sample below T");
        t_max = std::max(t_max, t);
    }
    const int samples = 256;
    for (int k = 0; k < samples; ++k) {
        const double t = t_max > T ? T * std::pow(t_max / T, static_cast<double>(k) / (samples - 1)) : T;
        if (tau_at(f, t) > tau2 * (1.0 + 1e-12))
            throw std::invalid_argument("check_bound12: tau(t) exceeds tau2 at t = " + std::to_string(t));
    }
    const double d_T = f.df(T);
    const double ft_T = f.ftilde(T);
    std::vector<double> margins;
    margins.reserve(ts.size());
    for (double t : ts) margins.push_back(d_T * std::pow(f.ftilde(t) / ft_T, tau2) - f.df(t));
    return margins;
}

struct HoelderProbe {
    double lhs = 0.0, I = 0.0, J = 0.0, rhs = 0.0;
    double log_lhs = 0.0, log_I = 0.0, log_J = 0.0, log_rhs = 0.0;
    bool holds(double rel_tol) const { return log_lhs <= log_rhs + std::log1p(rel_tol); }
};

/// int f~(u)^{2a-1} f'(u)^{1-a} f~(v)  <=  I^{(2a-1)/(2a)} J^{1/(2a)} with
///   I = int f'(u)^{1/2-a} f'(v)^{1/2} f~(u)^{2a},  J = int f'(v)^{1/2-a} f'(u)^{1/2} f~(v)^{2a}.
/// Integrands are accumulated in log space so large alpha cannot overflow.
inline HoelderProbe hoelder_probe(const RadialGrid& g, const SolutionPair& sol, const Nonlinearity& f, double alpha) {
    if (!(alpha > 1.0)) throw std::invalid_argument("hoelder_probe requires alpha > 1");
    detail::require_length(g, sol.u.size(), "hoelder_probe");
    const auto wt = g.weights();
    detail::LogSum lhs, isum, jsum;
    for (std::size_t i = 0; i < sol.u.size(); ++i) {
        const double u = sol.u[i], v = sol.v[i];
        const double ltu = u > 0.0 ? f.log_ftilde(u) : 0.0;
        const double ltv = v > 0.0 ? f.log_ftilde(v) : 0.0;
        const double ldu = f.log_df(u), ldv = f.log_df(v);
        if (u > 0.0 && v > 0.0) lhs.add(wt[i], (2.0 * alpha - 1.0) * ltu + (1.0 - alpha) * ldu + ltv);
        if (u > 0.0) isum.add(wt[i], (0.5 - alpha) * ldu + 0.5 * ldv + 2.0 * alpha * ltu);
        if (v > 0.0) jsum.add(wt[i], (0.5 - alpha) * ldv + 0.5 * ldu + 2.0 * alpha * ltv);
    }
    HoelderProbe p;
    p.log_lhs = lhs.log_value();
    p.log_I = isum.log_value();
    p.log_J = jsum.log_value();
    p.log_rhs = p.log_I == -std::numeric_limits<double>::infinity() || p.log_J == -std::numeric_limits<double>::infinity()
                    ? -std::numeric_limits<double>::infinity()
                    : (2.0 * alpha - 1.0) / (2.0 * alpha) * p.log_I + 1.0 / (2.0 * alpha) * p.log_J;
    p.lhs = std::exp(p.log_lhs);
    p.I = std::exp(p.log_I);
    p.J = std::exp(p.log_J);
    p.rhs = std::exp(p.log_rhs);
    return p;
}

/// Everything evaluated for one alpha on one solution.
struct ProofProbe {
    double alpha = 0.0;
    std::vector<std::pair<double, double>> theta_values;  // (t, theta(t)) at nodal u
    Inequality8 ineq8;
    HoelderProbe hoelder;
};

inline ProofProbe proof_probe(const RadialGrid& g, const SolutionPair& sol, const Nonlinearity& f, double alpha,
                              const Inequality8Options& opt = {}) {
    ProofProbe p;
    p.alpha = alpha;
    const auto th = theta_table(f, alpha, sol.u);
    for (std::size_t i = 0; i < th.size(); ++i) p.theta_values.emplace_back(sol.u[i], th[i]);
    p.ineq8 = check_inequality8(g, sol, f, alpha, opt);
    p.hoelder = hoelder_probe(g, sol, f, alpha);
    return p;
}

struct StabilityReport {
    double mu1 = 0.0;
    double eta = 0.0;
    std::vector<double> eigenfunction;
    bool comparison_ok = true;
    double max_comparison_violation = 0.0;
};

inline StabilityReport stability_report(const RadialGrid& g, const SolutionPair& sol, const Nonlinearity& f,
                                        double comparison_tol = 0.0) {
    StabilityReport rep;
    auto ep = mu1_semistability(g, sol, f);
    rep.mu1 = ep.value;
    rep.eigenfunction = std::move(ep.vector);
    rep.eta = coupled_eta(g, sol, f).eta;
    if (sol.gamma > 0.0 && sol.lambda >= sol.gamma) {
        const auto c = check_comparison(sol, comparison_tol);
        rep.comparison_ok = c.ok;
        rep.max_comparison_violation = c.max_violation;
    }
    return rep;
}

/// Fills mu1 and eta on every branch point that carries a snapshot.
inline void annotate_stability(const RadialGrid& g, const Nonlinearity& f, Branch& branch) {
    for (auto& p : branch.points) {
        if (!p.snapshot) continue;
        p.mu1 = mu1_semistability(g, *p.snapshot, f).value;
        p.eta = coupled_eta(g, *p.snapshot, f).eta;
    }
}

struct SingularScanRow {
    double n_dim = 0.0;
    double mu1 = 0.0;
    double residual_norm = 0.0;
};

/// Residual of u = v = -2 log r, lambda = gamma = 2(N - 2) for f = exp, as a
/// sup norm over the nodes with r in [0.1, 0.9] (the scheme is only
/// consistent to first order in the boundary cell, and the pair is singular
/// at the origin).
inline double singular_pair_residual(const RadialGrid& g) {
    const int m = g.cells();
    const double lambda = 2.0 * (g.dim() - 2.0);
    std::vector<double> u(m), lu(m);
    for (int i = 0; i < m; ++i) u[i] = -2.0 * std::log(g.nodes()[i]);
    apply_neg_laplacian(g, u, lu);
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
        const double r = g.nodes()[i];
        if (r < 0.1 || r > 0.9) continue;
        worst = std::max(worst, std::abs(lu[i] - lambda * std::exp(u[i])));
    }
    return worst;
}

/// mu1 of -L - 2(N - 2)/r^2, the semistability operator at the singular pair.
/// Nonnegative exactly when the discrete Hardy inequality dominates 2(N - 2).
inline double singular_mu1(double n_dim, int cells) {
    const RadialGrid g(n_dim, cells);
    std::vector<double> q(cells);
    for (int i = 0; i < cells; ++i) {
        const double r = g.nodes()[i];
        q[i] = 2.0 * (n_dim - 2.0) / (r * r);
    }
    return principal_eigenpair(g, q).value;
}

inline std::vector<SingularScanRow> singular_threshold_scan(const std::vector<double>& n_values, int cells) {
    std::vector<SingularScanRow> rows;
    for (double n : n_values) {
        if (!(n > 2.0)) throw std::invalid_argument("singular_threshold_scan requires N > 2");
        const RadialGrid g(n, cells);
        rows.push_back({n, singular_mu1(n, cells), singular_pair_residual(g)});
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.n_dim < b.n_dim; });
    return rows;
}

struct SignBracket {
    double lo = 0.0;  // mu1 < 0
    double hi = 0.0;  // mu1 >= 0
};

/// Bisects the dimension at which singular_mu1 changes sign, starting from a
/// bracket [lo, hi] with mu1(lo) < 0 <= mu1(hi).
inline SignBracket singular_sign_change(int cells, double lo, double hi, double width = 1e-3) {
    if (!(singular_mu1(lo, cells) < 0.0) || !(singular_mu1(hi, cells) >= 0.0))
        throw std::invalid_argument("singular_sign_change: endpoints do not bracket a sign change");
    while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        if (singular_mu1(mid, cells) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return {lo, hi};
}

}  // namespace extremal
