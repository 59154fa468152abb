#pragma once

// Dimension threshold calculus: the quadratic P_f, its largest root alpha*, and
// the bound N(f) below which the extremal solution stays bounded.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "extremal/errors.hpp"
#include "extremal/nonlinearity.hpp"

namespace extremal {

/// P_f(alpha, tau1, tau2) = (2 - tau1)^2 alpha^2 - 4 (2 - tau2) alpha + 4 (1 - tau2).
inline double pf_eval(double alpha, double tau1, double tau2) {
    const double a = (2.0 - tau1) * (2.0 - tau1);
    return a * alpha * alpha - 4.0 * (2.0 - tau2) * alpha + 4.0 * (1.0 - tau2);
}

inline bool tau_admissible(double tau_minus, double tau_plus) {
    return tau_minus > 0.0 && tau_minus <= tau_plus && tau_plus < 2.0;
}

namespace detail {
inline void require_admissible(double tau_minus, double tau_plus) {
    if (!tau_admissible(tau_minus, tau_plus))
        throw DomainError("inadmissible tau bounds: need 0 < tau- <= tau+ < 2, got (" + std::to_string(tau_minus) +
                          ", " + std::to_string(tau_plus) + ")");
}
}  // namespace detail

/// Both real roots of P_f, smaller first. The larger root has no cancellation
/// (both terms of the numerator are positive); the smaller one is recovered from
/// the product of roots c/a, which stays accurate when tau+ -> 1.
inline std::pair<double, double> pf_roots(double tau_minus, double tau_plus) {
    detail::require_admissible(tau_minus, tau_plus);
    const double a = (2.0 - tau_minus) * (2.0 - tau_minus);
    const double b_half = 2.0 - tau_plus;  // -b / 4
    const double c = 4.0 * (1.0 - tau_plus);
    // P_f(1) = a - 4 < 0 on the admissible set, so the discriminant is positive.
    const double disc = std::max(0.0, b_half * b_half - a * (1.0 - tau_plus));
    const double large = 2.0 * (b_half + std::sqrt(disc)) / a;
    const double small = c / (a * large);
    return {small, large};
}

inline double alpha_star(double tau_minus, double tau_plus) { return pf_roots(tau_minus, tau_plus).second; }

/// N(f) = [2 alpha* (2 - tau+) + 2 tau+] / tau+ * max{1, tau+}.
inline double nf_threshold(double tau_minus, double tau_plus) {
    const double alpha = alpha_star(tau_minus, tau_plus);
    return (2.0 * alpha * (2.0 - tau_plus) + 2.0 * tau_plus) / tau_plus * std::max(1.0, tau_plus);
}

/// Largest integer dimension strictly below a real threshold.
inline int max_integer_dim_below(double n_threshold) { return static_cast<int>(std::ceil(n_threshold)) - 1; }

struct RegularityReport {
    double tau_minus = 0.0;
    double tau_plus = 0.0;
    std::optional<double> alpha_star;
    std::optional<double> n_threshold;
    bool admissible = false;
    TauSource tau_source = TauSource::closed_form;
    double horizon = 0.0;
    std::vector<std::string> reasons;  // why admissible is false

    std::optional<int> max_integer_dim() const {
        if (!n_threshold) return std::nullopt;
        return max_integer_dim_below(*n_threshold);
    }
};

/// Chains tau_bounds -> alpha* -> N(f). An inadmissible tau window is reported,
/// not thrown, so sweeps can continue past a bad sample.
inline RegularityReport regularity_report(const Nonlinearity& f, double horizon = 1e3, int samples = 256,
                                          bool force_sampled = false) {
    RegularityReport rep;
    rep.horizon = horizon;
    TauEstimate est;
    try {
        est = tau_bounds(f, horizon, samples, force_sampled);
    } catch (const std::exception& e) {
        rep.reasons.emplace_back(std::string("tau estimation failed: ") + e.what());
        return rep;
    }
    rep.tau_minus = est.tau_minus;
    rep.tau_plus = est.tau_plus;
    rep.tau_source = est.source;
    if (!(est.tau_minus > 0.0)) rep.reasons.emplace_back("tau- must be positive");
    if (!(est.tau_plus < 2.0)) rep.reasons.emplace_back("tau+ must be below 2");
    if (!(est.tau_minus <= est.tau_plus)) rep.reasons.emplace_back("tau- exceeds tau+");
    if (!rep.reasons.empty()) return rep;
    rep.admissible = true;
    rep.alpha_star = alpha_star(est.tau_minus, est.tau_plus);
    rep.n_threshold = nf_threshold(est.tau_minus, est.tau_plus);
    return rep;
}

}  // namespace extremal
