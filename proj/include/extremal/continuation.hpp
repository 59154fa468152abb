#pragma once

// Natural continuation of the minimal branch along the ray gamma = sigma * lambda,
// fold location by step halving, the extremal curve and near-extremal profiles.

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "extremal/comparison.hpp"
#include "extremal/radial_solver.hpp"

namespace extremal {

struct BranchPoint {
    double lambda = 0.0;
    double gamma = 0.0;
    double sup_u = 0.0;
    double sup_v = 0.0;
    double mu1 = std::numeric_limits<double>::quiet_NaN();  // filled by annotate_stability
    double eta = std::numeric_limits<double>::quiet_NaN();
    double comparison_violation = 0.0;
    std::optional<SolutionPair> snapshot;
};

struct Branch {
    double sigma = 1.0;
    std::vector<BranchPoint> points;
    double lambda_star = 0.0;
    double lambda_star_bracket = 0.0;
    SolutionPair last;  // last converged solution, always kept
};

struct ContinuationOptions {
    double step0 = 0.05;
    double min_step = 1e-8;
    NewtonOptions newton;
    bool keep_snapshots = true;
    bool secant_predictor = false;
    std::size_t max_points = 200000;
};

inline double sup_value(std::span<const double> w) {
    double s = center_value(w);
    for (double x : w) s = std::max(s, x);
    return s;
}

inline double branch_tolerance(const NewtonOptions& opt) { return 1e-8 + 10.0 * opt.tol; }

namespace detail {

// Minimal-branch step acceptance: the new state must dominate the previous one
// nodewise. A Newton jump onto the upper branch shows up as a violation here.
inline bool dominates(const SolutionPair& next, const SolutionPair& prev, double tol) {
    for (std::size_t i = 0; i < next.u.size(); ++i) {
        if (next.u[i] < prev.u[i] - tol || next.v[i] < prev.v[i] - tol) return false;
    }
    return true;
}

// The Jacobian at a minimal solution is a nonsingular M-matrix (its principal
// eigenvalue is positive); past the fold Newton can land on the upper branch,
// which also dominates the previous state but fails this test.
inline bool linearly_stable(const RadialGrid& g, const Nonlinearity& f, const SolutionPair& s) {
    return jacobian(g, f, s.lambda, s.gamma, s.u, s.v).factor().all_pivots_positive();
}

inline BranchPoint make_point(const SolutionPair& s, bool keep, double tol) {
    BranchPoint p;
    p.lambda = s.lambda;
    p.gamma = s.gamma;
    p.sup_u = sup_value(s.u);
    p.sup_v = sup_value(s.v);
    if (s.gamma > 0.0) {
        const auto cmp = check_comparison(s, tol);
        p.comparison_violation = cmp.max_violation;
        if (!cmp.ok)
            throw std::runtime_error("comparison v <= u <= (lambda/gamma) v violated by " +
                                     std::to_string(cmp.max_violation) + " at lambda = " + std::to_string(s.lambda));
    }
    if (keep) p.snapshot = s;
    return p;
}

// One continuation attempt from `prev` to lambda_next; nullopt on failure.
inline std::optional<SolutionPair> try_step(const RadialGrid& g, const Nonlinearity& f, double sigma,
                                            const SolutionPair& prev, const SolutionPair* before_prev,
                                            double lambda_next, const ContinuationOptions& opt) {
    std::pair<std::vector<double>, std::vector<double>> init{prev.u, prev.v};
    if (opt.secant_predictor && before_prev != nullptr && prev.lambda > before_prev->lambda) {
        const double w = (lambda_next - prev.lambda) / (prev.lambda - before_prev->lambda);
        for (std::size_t i = 0; i < prev.u.size(); ++i) {
            init.first[i] += w * (prev.u[i] - before_prev->u[i]);
            init.second[i] += w * (prev.v[i] - before_prev->v[i]);
        }
    }
    try {
        SolutionPair s = newton_solve(g, f, lambda_next, sigma * lambda_next, init, opt.newton);
        if (!dominates(s, prev, branch_tolerance(opt.newton))) return std::nullopt;
        if (!linearly_stable(g, f, s)) return std::nullopt;
        return s;
    } catch (const NonConvergence&) {
        return std::nullopt;
    }
}

inline void require_sigma(double sigma) {
    if (!(sigma > 0.0 && sigma <= 1.0))
        throw std::invalid_argument("sigma must lie in (0, 1]; exchange the roles of lambda and gamma for sigma > 1");
}

}  // namespace detail

/// Traces the minimal branch of the system on the ray gamma = sigma * lambda,
/// starting from the zero solution at lambda = 0.
///
/// Each step warm-starts Newton from the previous point; a failed step (no
/// convergence, or a jump off the minimal branch) halves the step size, and
/// the trace stops once a step of at most opt.min_step fails. A step that lands
/// on a state whose Jacobian is not an M-matrix (the upper branch) counts as
/// failed. The fold estimate
/// is lambda_star = last converged lambda + bracket, where bracket is the last
/// step that failed.
inline Branch trace_branch(const RadialGrid& g, const Nonlinearity& f, double sigma, const ContinuationOptions& opt) {
    detail::require_sigma(sigma);
    if (!(opt.step0 > opt.min_step && opt.min_step > 0.0))
        throw std::invalid_argument("trace_branch requires step0 > min_step > 0");
    const double tol = branch_tolerance(opt.newton);

    Branch br;
    br.sigma = sigma;
    SolutionPair current = newton_solve(g, f, 0.0, 0.0, SolutionPair::zero(g), opt.newton);
    br.points.push_back(detail::make_point(current, opt.keep_snapshots, tol));
    std::optional<SolutionPair> previous;

    double step = opt.step0;
    double failed_step = opt.step0;
    while (br.points.size() < opt.max_points) {
        const double target = current.lambda + step;
        auto next = detail::try_step(g, f, sigma, current, previous ? &*previous : nullptr, target, opt);
        if (!next) {
            failed_step = step;
            if (step <= opt.min_step) break;
            step *= 0.5;
            continue;
        }
        if (opt.secant_predictor) previous = std::move(current);
        current = std::move(*next);
        br.points.push_back(detail::make_point(current, opt.keep_snapshots, tol));
    }
    br.lambda_star_bracket = failed_step;
    br.lambda_star = current.lambda + failed_step;
    br.last = std::move(current);
    return br;
}

inline Branch trace_branch(const RadialGrid& g, const Nonlinearity& f, double sigma, double step0,
                           double lambda_min_step, double tol) {
    ContinuationOptions opt;
    opt.step0 = step0;
    opt.min_step = lambda_min_step;
    opt.newton.tol = tol;
    return trace_branch(g, f, sigma, opt);
}

/// Continues along the ray from `start` up to lambda = target with the same
/// step-halving rule. Throws NonConvergence if the target lies beyond the fold.
inline SolutionPair continue_to(const RadialGrid& g, const Nonlinearity& f, double sigma, const SolutionPair& start,
                                double target, const ContinuationOptions& opt) {
    detail::require_sigma(sigma);
    if (target < start.lambda) throw std::invalid_argument("continue_to: target below the starting lambda");
    SolutionPair current = start;
    double step = std::min(opt.step0, target - start.lambda);
    while (current.lambda < target) {
        const double next_lambda = std::min(target, current.lambda + step);
        auto next = detail::try_step(g, f, sigma, current, nullptr, next_lambda, opt);
        if (!next) {
            step *= 0.5;
            if (step < opt.min_step) throw NonConvergence("continue_to: target beyond reachable branch", current);
            continue;
        }
        current = std::move(*next);
    }
    return current;
}

struct ExtremalEntry {
    double sigma = 0.0;
    double lambda_star = 0.0;
    double gamma_star = 0.0;
    double bracket = 0.0;
    bool ok = false;
    std::string error;
};

namespace detail {

inline ExtremalEntry extremal_entry(const RadialGrid& g, const Nonlinearity& f, double sigma,
                                    const ContinuationOptions& opt) {
    ExtremalEntry e;
    e.sigma = sigma;
    try {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be positive");
        // sigma > 1 is the mirror image of 1/sigma with lambda and gamma exchanged.
        const bool swapped = sigma > 1.0;
        const double canonical = swapped ? 1.0 / sigma : sigma;
        ContinuationOptions local = opt;
        local.keep_snapshots = false;
        const Branch br = trace_branch(g, f, canonical, local);
        if (swapped) {
            e.gamma_star = br.lambda_star;
            e.lambda_star = canonical * br.lambda_star;
            e.bracket = canonical * br.lambda_star_bracket;
        } else {
            e.lambda_star = br.lambda_star;
            e.gamma_star = canonical * br.lambda_star;
            e.bracket = br.lambda_star_bracket;
        }
        e.ok = true;
    } catch (const std::exception& ex) {
        e.ok = false;
        e.error = ex.what();
    }
    return e;
}

}  // namespace detail

/// Fold parameters (lambda*, gamma*) along each ray, ordered by sigma. Rays are
/// independent and run concurrently on up to `threads` workers (0 = hardware
/// concurrency); the result does not depend on the thread count. A failing ray
/// is recorded in its entry and does not abort the sweep.
inline std::vector<ExtremalEntry> extremal_curve(const RadialGrid& g, const Nonlinearity& f, std::vector<double> sigmas,
                                                 const ContinuationOptions& opt = {}, unsigned threads = 0) {
    std::sort(sigmas.begin(), sigmas.end());
    std::vector<ExtremalEntry> out(sigmas.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::size_t next = 0;
    while (next < sigmas.size()) {
        std::vector<std::future<ExtremalEntry>> batch;
        const std::size_t first = next;
        for (unsigned k = 0; k < threads && next < sigmas.size(); ++k, ++next) {
            batch.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred,
                                       [&, s = sigmas[next]] { return detail::extremal_entry(g, f, s, opt); }));
        }
        for (std::size_t k = 0; k < batch.size(); ++k) out[first + k] = batch[k].get();
    }
    return out;
}

struct ProfileEntry {
    double epsilon = 0.0;
    double lambda = 0.0;
    double sup_u = std::numeric_limits<double>::quiet_NaN();
    double sup_v = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
};

struct ProfileOptions {
    ContinuationOptions continuation;
    double epsilon_floor = 1e-4;
    bool allow_below_floor = false;
};

/// Sup norms of minimal solutions at lambda = (1 - eps) lambda* for decreasing
/// eps, warm-started from the traced branch. These approach the extremal
/// sup norm from below.
inline std::vector<ProfileEntry> near_extremal_profile(const RadialGrid& g, const Nonlinearity& f, const Branch& branch,
                                                       const std::vector<double>& epsilons,
                                                       const ProfileOptions& opt = {}) {
    for (std::size_t k = 0; k < epsilons.size(); ++k) {
        const double e = epsilons[k];
        if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("epsilons must lie in (0, 1)");
        if (k > 0 && !(e < epsilons[k - 1])) throw std::invalid_argument("epsilons must be strictly decreasing");
        if (e < opt.epsilon_floor && !opt.allow_below_floor)
            throw std::invalid_argument("epsilon below the near-fold floor " + std::to_string(opt.epsilon_floor) +
                                        " requires an explicit override");
    }
    std::vector<ProfileEntry> out;
    std::optional<SolutionPair> warm;
    for (double eps : epsilons) {
        ProfileEntry e;
        e.epsilon = eps;
        e.lambda = (1.0 - eps) * branch.lambda_star;
        // Latest stored state at or below the target.
        const SolutionPair* start = warm && warm->lambda <= e.lambda ? &*warm : nullptr;
        for (const auto& p : branch.points) {
            if (p.lambda > e.lambda) break;
            if (p.snapshot && (start == nullptr || p.lambda > start->lambda)) start = &*p.snapshot;
        }
        if (branch.last.lambda <= e.lambda && (start == nullptr || branch.last.lambda > start->lambda))
            start = &branch.last;
        if (start == nullptr) throw std::invalid_argument("near_extremal_profile: branch carries no usable snapshot");
        try {
            SolutionPair s = continue_to(g, f, branch.sigma, *start, e.lambda, opt.continuation);
            e.sup_u = sup_value(s.u);
            e.sup_v = sup_value(s.v);
            e.converged = true;
            warm = std::move(s);
        } catch (const NonConvergence&) {
            e.converged = false;
        }
        out.push_back(e);
    }
    return out;
}

inline std::vector<ProfileEntry> near_extremal_profile(const RadialGrid& g, const Nonlinearity& f, double sigma,
                                                       const std::vector<double>& epsilons,
                                                       const ProfileOptions& opt = {}) {
    const Branch br = trace_branch(g, f, sigma, opt.continuation);
    return near_extremal_profile(g, f, br, epsilons, opt);
}

enum class GrowthTrend { bounded_trend, unbounded_trend, inconclusive };

inline const char* to_string(GrowthTrend t) {
    switch (t) {
    case GrowthTrend::bounded_trend: return "bounded_trend";
    case GrowthTrend::unbounded_trend: return "unbounded_trend";
    case GrowthTrend::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

/// Cuts on the terminal/initial slope ratio. Frozen from profiles with
/// eps = 10^{-1} ... 10^{-4} in half decades, f = exp, sigma = 1, m in
/// {256, 512, 1024}: N = 9 sits at 0.46-0.47 (the slowest bounded case) and
/// N = 10.5 at 0.85-0.89.
struct GrowthThresholds {
    double bounded = 0.6;
    double unbounded = 0.75;
};

/// Ratio of the terminal slope of sup_u against log(1/eps) to the initial slope.
inline double growth_slope_ratio(const std::vector<ProfileEntry>& profile) {
    if (profile.size() < 4) throw std::invalid_argument("growth classification needs at least 4 profile entries");
    auto slope = [&](std::size_t a, std::size_t b) {
        const double dx = std::log(1.0 / profile[b].epsilon) - std::log(1.0 / profile[a].epsilon);
        return (profile[b].sup_u - profile[a].sup_u) / dx;
    };
    const std::size_t n = profile.size();
    const double first = slope(0, 1);
    const double last = slope(n - 2, n - 1);
    if (!(std::abs(first) > 0.0)) return std::abs(last) > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return last / first;
}

inline GrowthTrend growth_classification(const std::vector<ProfileEntry>& profile, const GrowthThresholds& th = {}) {
    for (const auto& e : profile)
        if (!e.converged) return GrowthTrend::inconclusive;
    const double ratio = growth_slope_ratio(profile);
    if (ratio < th.bounded) return GrowthTrend::bounded_trend;
    if (ratio > th.unbounded) return GrowthTrend::unbounded_trend;
    return GrowthTrend::inconclusive;
}

}  // namespace extremal
