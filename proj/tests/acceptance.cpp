// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "extremal/continuation.hpp"
#include "extremal/regularity.hpp"
#include "extremal/stability.hpp"
#include "oracles.hpp"

#ifndef EXTREMAL_CLI
#error "EXTREMAL_CLI must name the CLI binary"
#endif

using namespace extremal;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void criterion(const char* id, const char* title, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s %s %s (%s; %.2fs)\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str(), secs);
    std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Branches shared by the comparison, semistability and probe criteria.
struct Sample {
    double n_dim, sigma;
    Branch branch;
};

std::vector<Sample>& branch_samples() {
    static std::vector<Sample> samples = [] {
        std::vector<Sample> out;
        const auto f = Nonlinearity::exponential();
        for (double n : {2.0, 3.0, 5.0}) {
            const RadialGrid g(n, 256);
            for (double sigma : {0.25, 0.5, 1.0}) {
                ContinuationOptions opt;
                Branch br = trace_branch(g, f, sigma, opt);
                annotate_stability(g, f, br);
                out.push_back({n, sigma, std::move(br)});
            }
        }
        return out;
    }();
    return samples;
}

double richardson_order(double a, double b, double c) { return std::log2(std::abs((a - b) / (b - c))); }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string capture(const std::string& cmd, int& code) {
    std::string out;
    FILE* p = popen((cmd + " 2>/dev/null").c_str(), "r");
    if (!p) {
        code = -1;
        return out;
    }
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    const int status = pclose(p);
    code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

}  // namespace

int main() {
    criterion("AC1", "regularity calculus, exact", [] {
        const auto t0 = Clock::now();
        const auto e = regularity_report(Nonlinearity::exponential());
        const auto p = regularity_report(Nonlinearity::power(2.0));
        const double n_pow = 2.0 + 4.0 * (2.0 + std::sqrt(2.0));
        const bool ok = e.admissible && std::abs(e.tau_minus - 1.0) <= 1e-12 && std::abs(e.tau_plus - 1.0) <= 1e-12 &&
                        std::abs(*e.alpha_star - 4.0) <= 1e-12 && std::abs(*e.n_threshold - 10.0) <= 1e-12 &&
                        p.admissible && std::abs(*p.n_threshold - n_pow) <= 1e-9;
        const double secs = seconds_since(t0);
        return Outcome{ok && secs < 1.0, fmt("exp: alpha*=%.15g N=%.15g; pow:2: N=%.12f", *e.alpha_star,
                                             *e.n_threshold, *p.n_threshold)};
    });

    criterion("AC2", "root/threshold properties", [] {
        const auto t0 = Clock::now();
        std::mt19937_64 rng(2718);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double worst_root = 0.0, min_alpha = 1e300, min_n = 1e300;
        for (int k = 0; k < 1000; ++k) {
            double a = 1e-3 + (2.0 - 2e-3) * u(rng), b = 1e-3 + (2.0 - 2e-3) * u(rng);
            if (a > b) std::swap(a, b);
            const double al = alpha_star(a, b);
            worst_root = std::max(worst_root, std::abs(pf_eval(al, a, b)) / (1.0 + al * al));
            min_alpha = std::min(min_alpha, al);
            min_n = std::min(min_n, nf_threshold(a, b));
        }
        double diag_min = 1e300, diag_at = 0.0;
        for (int k = 1; k < 4000; ++k) {
            const double t = 2.0 * k / 4000.0;
            const double n = nf_threshold(t, t);
            if (n < diag_min) {
                diag_min = n;
                diag_at = t;
            }
        }
        const double secs = seconds_since(t0);
        const bool ok = worst_root < 1e-9 && min_alpha > 1.0 && min_n > 4.0 && diag_min >= 10.0 - 1e-12 &&
                        std::abs(diag_at - 1.0) <= 1e-3 && secs < 1.0;
        return Outcome{ok, fmt("max |P_f|/(1+a^2)=%.2e, min alpha*=%.4f, min N=%.4f, diagonal min %.12g at tau=%.4f",
                               worst_root, min_alpha, min_n, diag_min, diag_at)};
    });

    criterion("AC3", "fold benchmarks", [] {
        const auto f = Nonlinearity::exponential();
        auto t0 = Clock::now();
        const auto b2 = trace_branch(RadialGrid(2.0, 1024), f, 1.0, ContinuationOptions{});
        const double s2 = seconds_since(t0);
        const double oracle1 = oracle::gelfand_fold(1.0).first;
        t0 = Clock::now();
        const auto b1 = trace_branch(RadialGrid(1.0, 1024), f, 1.0, ContinuationOptions{});
        const double s1 = seconds_since(t0);
        const bool ok = std::abs(b2.lambda_star - 2.0) <= 0.02 && std::abs(b1.lambda_star - oracle1) <= 0.01 &&
                        std::abs(b1.lambda_star - 0.878) <= 0.01 && s2 < 30.0 && s1 < 30.0;
        return Outcome{ok, fmt("N=2: %.9f (oracle 2, %.1fs); N=1: %.9f (shooting %.9f, %.1fs)", b2.lambda_star, s2,
                               b1.lambda_star, oracle1, s1)};
    });

    criterion("AC4", "discretization order", [] {
        const auto f = Nonlinearity::exponential();
        double ls[3], uc[3];
        int k = 0;
        for (int m : {256, 512, 1024}) {
            ls[k] = trace_branch(RadialGrid(2.0, m), f, 1.0, ContinuationOptions{}).lambda_star;
            const RadialGrid g(3.0, m);
            uc[k] = center_value(continue_to(g, f, 0.5, SolutionPair::zero(g), 2.0, ContinuationOptions{}).u);
            ++k;
        }
        const double pl = richardson_order(ls[0], ls[1], ls[2]);
        const double pu = richardson_order(uc[0], uc[1], uc[2]);
        const bool ok = std::abs(pl - 2.0) <= 0.5 && std::abs(pu - 2.0) <= 0.5;
        return Outcome{ok, fmt("lambda* (N=2, sigma=1) order %.3f; u(0) (N=3, lambda=2, gamma=1) order %.3f", pl, pu)};
    });

    criterion("AC5", "comparison v <= u <= (lambda/gamma) v", [] {
        const double tol = 1e-8 + 10.0 * NewtonOptions{}.tol;
        int count = 0;
        double worst = 0.0;
        for (const auto& s : branch_samples()) {
            for (const auto& p : s.branch.points) {
                if (p.gamma == 0.0) continue;
                worst = std::max(worst, check_comparison(*p.snapshot).max_violation);
                ++count;
            }
        }
        return Outcome{count >= 20 && worst <= tol, fmt("%d samples over N in {2,3,5}, sigma in {0.25,0.5,1}; max "
                                                        "violation %.2e (limit %.2e)",
                                                        count, worst, tol)};
    });

    criterion("AC6", "semistability", [] {
        const auto f = Nonlinearity::exponential();
        double min_mu1 = 1e300, worst_ratio = 0.0, min5 = 1e300;
        int points = 0;
        for (const auto& s : branch_samples()) {
            const RadialGrid g(s.n_dim, 256);
            for (const auto& p : s.branch.points) {
                min_mu1 = std::min(min_mu1, p.mu1);
                ++points;
                const auto tests = random_test_functions(g, 100, 1000 + points);
                for (double m : check_inequality5(g, *p.snapshot, f, tests)) min5 = std::min(min5, m);
            }
            const double half = 0.5 * s.branch.lambda_star;
            const auto mid = continue_to(g, f, s.sigma, SolutionPair::zero(g), half, ContinuationOptions{});
            const double mu_half = mu1_semistability(g, mid, f).value;
            worst_ratio = std::max(worst_ratio, s.branch.points.back().mu1 / mu_half);
        }
        const bool ok = min_mu1 >= -1e-6 && worst_ratio <= 0.1 && min5 >= -1e-8;
        return Outcome{ok, fmt("%d points: min mu1 %.3e, max mu1(last)/mu1(lambda*/2) %.3e, min ineq-5 margin %.3e",
                               points, min_mu1, worst_ratio, min5)};
    });

    criterion("AC7", "coupled/symmetrized agreement", [] {
        double worst = 0.0;
        int sign_mismatch = 0, diag = 0, all = 0;
        for (const auto& s : branch_samples()) {
            for (const auto& p : s.branch.points) {
                ++all;
                if (s.sigma == 1.0) {
                    ++diag;
                    worst = std::max(worst, std::abs(p.eta - p.mu1) / (1.0 + std::abs(p.mu1)));
                }
                if (std::abs(p.mu1) > 1e-6 && (p.mu1 > 0.0) != (p.eta > 0.0)) ++sign_mismatch;
            }
        }
        return Outcome{worst <= 1e-6 && sign_mismatch == 0,
                       fmt("sigma=1: max |eta-mu1|/(1+|mu1|) %.2e over %d points; sign mismatches %d of %d", worst,
                           diag, sign_mismatch, all)};
    });

    criterion("AC8", "proof probes", [] {
        int n8 = 0, nh = 0, fail8 = 0, failh = 0, faileq = 0;
        double worst8 = -1e300, worsth = -1e300, worsteq = 0.0;
        for (const char* spec : {"exp", "pow:2"}) {
            const auto f = parse_nonlinearity(spec);
            const double astar = *regularity_report(f).alpha_star;
            for (double n : {2.0, 3.0}) {
                const RadialGrid g(n, 256);
                for (double sigma : {0.25, 0.5, 1.0}) {
                    auto br = trace_branch(g, f, sigma, ContinuationOptions{});
                    const std::size_t np = br.points.size();
                    for (std::size_t k : {np / 4, np / 2, (3 * np) / 4, np - 1}) {
                        const auto& s = *br.points[k].snapshot;
                        if (s.lambda == 0.0) continue;
                        const bool semistable = mu1_semistability(g, s, f).value >= -1e-6;
                        for (double alpha : {2.0, 3.0, 4.0}) {
                            if (semistable && alpha <= astar) {
                                const auto r = check_inequality8(g, s, f, alpha);
                                ++n8;
                                worst8 = std::max(worst8, r.log_lhs - r.log_rhs);
                                if (!r.holds(1e-6)) ++fail8;
                            }
                            const auto h = hoelder_probe(g, s, f, alpha);
                            ++nh;
                            worsth = std::max(worsth, h.log_lhs - h.log_rhs);
                            if (!h.holds(1e-10)) ++failh;
                            if (sigma == 1.0) {
                                const double d = std::abs(h.log_lhs - h.log_rhs);
                                worsteq = std::max(worsteq, d);
                                if (d > 1e-10) ++faileq;
                            }
                        }
                    }
                }
            }
        }
        std::vector<double> ts;
        for (int k = 0; k < 64; ++k) ts.push_back(std::pow(1e3, k / 63.0));
        double min12 = 1e300;
        for (const char* spec : {"exp", "pow:2"}) {
            const auto f = parse_nonlinearity(spec);
            for (double m : check_bound12(f, f.closed_form_tau()->tau_plus, 1.0, ts)) min12 = std::min(min12, m);
        }
        const bool ok = fail8 == 0 && failh == 0 && faileq == 0 && min12 >= 0.0 && n8 > 0;
        return Outcome{ok, fmt("ineq8 %d checks, max log(lhs/rhs) %.3f; hoelder %d checks, max log(lhs/rhs) %.2e, "
                               "sigma=1 max |log ratio| %.2e; bound12 min margin %.3e",
                               n8, worst8, nh, worsth, worsteq, min12)};
    });

    criterion("AC9", "singular pair and N=10 threshold", [] {
        const auto t0 = Clock::now();
        const double r1 = singular_pair_residual(RadialGrid(10.0, 1024));
        const double r2 = singular_pair_residual(RadialGrid(10.0, 2048));
        const double r3 = singular_pair_residual(RadialGrid(10.0, 4096));
        const double p1 = std::log2(r1 / r2), p2 = std::log2(r2 / r3);
        const auto rows = singular_threshold_scan({9.0, 9.5, 10.5, 11.0}, 4096);
        double lo = 0.0, hi = 0.0;
        for (std::size_t k = 0; k + 1 < rows.size(); ++k)
            if (rows[k].mu1 < 0.0 && rows[k + 1].mu1 >= 0.0) {
                const auto b = singular_sign_change(4096, rows[k].n_dim, rows[k + 1].n_dim, 1e-3);
                lo = b.lo;
                hi = b.hi;
            }
        const double secs = seconds_since(t0);
        const bool ok = std::abs(p1 - 2.0) <= 0.5 && std::abs(p2 - 2.0) <= 0.5 && r3 < r2 && lo >= 9.8 &&
                        hi <= 10.2 && hi > lo && secs < 120.0;
        return Outcome{ok, fmt("residual %.2e -> %.2e -> %.2e (orders %.2f, %.2f); sign change in [%.4f, %.4f]", r1,
                               r2, r3, p1, p2, lo, hi)};
    });

    criterion("AC10", "growth classification", [] {
        const auto t0 = Clock::now();
        const auto f = Nonlinearity::exponential();
        std::vector<double> eps;
        for (int k = 2; k <= 8; ++k) eps.push_back(std::pow(10.0, -k / 2.0));
        std::string detail;
        bool ok = true;
        for (double n : {3.0, 5.0, 9.0, 10.5, 11.0}) {
            const RadialGrid g(n, 512);
            const auto br = trace_branch(g, f, 1.0, ContinuationOptions{});
            const auto prof = near_extremal_profile(g, f, br, eps);
            const auto cls = growth_classification(prof);
            const auto want = n < 10.0 ? GrowthTrend::bounded_trend : GrowthTrend::unbounded_trend;
            ok = ok && cls == want;
            detail += fmt("%sN=%g %s (%.3f)", detail.empty() ? "" : ", ", n, to_string(cls), growth_slope_ratio(prof));
        }
        const double secs = seconds_since(t0);
        return Outcome{ok && secs < 300.0, detail};
    });

    criterion("AC11", "Jacobian directional derivative", [] {
        std::mt19937_64 rng(161803);
        std::uniform_real_distribution<double> ud(0.0, 1.0);
        double worst = 0.0;
        int trials = 0;
        for (const char* spec : {"exp", "pow:2", "pow:3.5", "exppow:1.5", "exppow:2"}) {
            const auto f = parse_nonlinearity(spec);
            for (double n : {1.0, 2.0, 3.0, 7.5}) {
                const int m = 96;
                const RadialGrid g(n, m);
                std::vector<double> u(m), v(m), du(m), dv(m), ju(m), jv(m);
                for (int i = 0; i < m; ++i) {
                    u[i] = 2.0 * ud(rng);
                    v[i] = 2.0 * ud(rng);
                    du[i] = ud(rng) - 0.5;
                    dv[i] = ud(rng) - 0.5;
                }
                const double lambda = 3.0 * ud(rng), gamma = 3.0 * ud(rng);
                jacobian(g, f, lambda, gamma, u, v).apply(du, dv, ju, jv);
                const double h = 1e-6;
                std::vector<double> up(u), um(u), vp(v), vm(v);
                for (int i = 0; i < m; ++i) {
                    up[i] += h * du[i];
                    um[i] -= h * du[i];
                    vp[i] += h * dv[i];
                    vm[i] -= h * dv[i];
                }
                const auto rp = residual(g, f, lambda, gamma, up, vp);
                const auto rm = residual(g, f, lambda, gamma, um, vm);
                double err = 0.0, scale = 0.0;
                for (int i = 0; i < m; ++i) {
                    err = std::max({err, std::abs((rp.first[i] - rm.first[i]) / (2.0 * h) - ju[i]),
                                    std::abs((rp.second[i] - rm.second[i]) / (2.0 * h) - jv[i])});
                    scale = std::max({scale, std::abs(ju[i]), std::abs(jv[i])});
                }
                worst = std::max(worst, err / scale);
                ++trials;
            }
        }
        return Outcome{worst < 1e-6, fmt("%d random states, max relative error %.2e", trials, worst)};
    });

    criterion("AC12", "CLI determinism", [] {
        namespace fs = std::filesystem;
        const fs::path dir = fs::temp_directory_path() / "extremal_acceptance_ac12";
        fs::create_directories(dir);
        const std::string cli = EXTREMAL_CLI;
        const std::vector<std::pair<std::string, std::string>> runs{
            {"regularity --nonlinearity pow:2", "reg.json"},
            {"trace --dim 3 --cells 128 --sigma 0.5 --epsilons 0.1,0.01,0.001,0.0001", "trace.csv"},
            {"extremal-curve --dim 2 --cells 128 --sigma 0.25,0.5,1,2 --threads 2", "curve.csv"},
            {"probe --dim 2 --cells 128 --lambda 1.2 --gamma 0.6 --alphas 2,3,4", "probe.json"},
            {"singular-scan --cells 1024", "scan.csv"}};
        int identical = 0;
        for (const auto& [args, file] : runs) {
            const std::string out = (dir / file).string();
            int c1 = 0, c2 = 0;
            const std::string a = capture(cli + " " + args + " --out " + out, c1);
            const std::string fa = slurp(out);
            const std::string b = capture(cli + " " + args + " --out " + out, c2);
            const std::string fb = slurp(out);
            if (c1 == 0 && c2 == 0 && a == b && fa == fb && !fa.empty()) ++identical;
        }
        fs::remove_all(dir);
        return Outcome{identical == static_cast<int>(runs.size()),
                       fmt("%d of %zu commands byte-identical across two runs", identical, runs.size())};
    });

    std::printf("%d of 12 criteria failed\n", failures);
    return failures;
}
