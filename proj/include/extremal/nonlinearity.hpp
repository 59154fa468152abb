#pragma once

// Nonlinearities f of the coupled Gelfand-type system: evaluators for f, f', f''
// plus the convexity ratio tau(t) = f f'' / f'^2 and its limiting bounds.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "extremal/errors.hpp"

namespace extremal {

enum class PresetKind { exponential, power, exp_power, custom };

struct TauPair {
    double tau_minus;
    double tau_plus;
};

enum class TauSource { closed_form, sampled };

inline const char* to_string(TauSource s) { return s == TauSource::closed_form ? "closed_form" : "sampled"; }

struct TauEstimate {
    double tau_minus = 0.0;
    double tau_plus = 0.0;
    double horizon = 0.0;
    int sample_count = 0;
    TauSource source = TauSource::closed_form;
};

/// An increasing convex nonlinearity with f(0) = 1.
///
/// Besides f, f', f'' every instance carries f~(t) = f(t) - 1 and the logarithms
/// of f, f', f'' and f~ so that large powers of them can be formed without
/// overflow. Presets supply these in closed form; custom nonlinearities derive
/// them from the three value evaluators.
///
/// Immutable after construction, safe to share between threads.
class Nonlinearity {
public:
    using Fn = std::function<double(double)>;

    static Nonlinearity exponential() {
        Nonlinearity n;
        n.name_ = "exp";
        n.kind_ = PresetKind::exponential;
        n.f_ = [](double t) { return std::exp(t); };
        n.df_ = n.f_;
        n.ddf_ = n.f_;
        n.ftilde_ = [](double t) { return std::expm1(t); };
        n.log_f_ = [](double t) { return t; };
        n.log_df_ = n.log_f_;
        n.log_ddf_ = n.log_f_;
        n.log_ftilde_ = [](double t) { return log_expm1(t); };
        n.tau_ = TauPair{1.0, 1.0};
        return n;
    }

    /// f(t) = (1 + t)^p, p > 1.
    static Nonlinearity power(double p) {
        if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("power nonlinearity requires p > 1");
        Nonlinearity n;
        n.name_ = "pow:" + format_param(p);
        n.kind_ = PresetKind::power;
        n.params_ = {p};
        n.f_ = [p](double t) { return std::pow(1.0 + t, p); };
        n.df_ = [p](double t) { return p * std::pow(1.0 + t, p - 1.0); };
        n.ddf_ = [p](double t) { return p * (p - 1.0) * std::pow(1.0 + t, p - 2.0); };
        n.ftilde_ = [p](double t) { return std::expm1(p * std::log1p(t)); };
        n.log_f_ = [p](double t) { return p * std::log1p(t); };
        n.log_df_ = [p](double t) { return std::log(p) + (p - 1.0) * std::log1p(t); };
        n.log_ddf_ = [p](double t) { return std::log(p * (p - 1.0)) + (p - 2.0) * std::log1p(t); };
        n.log_ftilde_ = [p](double t) { return log_expm1(p * std::log1p(t)); };
        const double tau = (p - 1.0) / p;
        n.tau_ = TauPair{tau, tau};
        return n;
    }

    /// f(t) = exp(t^a), a > 0.
    static Nonlinearity exp_power(double a) {
        if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("exp_power nonlinearity requires a > 0");
        Nonlinearity n;
        n.name_ = "exppow:" + format_param(a);
        n.kind_ = PresetKind::exp_power;
        n.params_ = {a};
        n.f_ = [a](double t) { return std::exp(std::pow(t, a)); };
        n.df_ = [a](double t) {
            if (t == 0.0) return a == 1.0 ? 1.0 : (a > 1.0 ? 0.0 : std::numeric_limits<double>::infinity());
            return a * std::pow(t, a - 1.0) * std::exp(std::pow(t, a));
        };
        n.ddf_ = [a](double t) {
            if (t == 0.0) {
                if (a == 1.0) return 1.0;
                if (a == 2.0) return 2.0;
                if (a > 2.0) return 0.0;
                return a > 1.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            }
            const double ta = std::pow(t, a);
            return a * std::pow(t, a - 2.0) * ((a - 1.0) + a * ta) * std::exp(ta);
        };
        n.ftilde_ = [a](double t) { return std::expm1(std::pow(t, a)); };
        n.log_f_ = [a](double t) { return std::pow(t, a); };
        n.log_df_ = [a](double t) { return std::log(a) + (a - 1.0) * std::log(t) + std::pow(t, a); };
        n.log_ddf_ = [a](double t) {
            const double ta = std::pow(t, a);
            return std::log(a) + (a - 2.0) * std::log(t) + std::log((a - 1.0) + a * ta) + ta;
        };
        n.log_ftilde_ = [a](double t) { return log_expm1(std::pow(t, a)); };
        n.tau_ = TauPair{1.0, 1.0};
        return n;
    }

    /// User-supplied evaluators. No closed-form tau; log evaluators are derived.
    static Nonlinearity custom(std::string name, Fn f, Fn df, Fn ddf) {
        Nonlinearity n;
        n.name_ = std::move(name);
        n.kind_ = PresetKind::custom;
        n.f_ = std::move(f);
        n.df_ = std::move(df);
        n.ddf_ = std::move(ddf);
        const Fn& fref = n.f_;
        n.ftilde_ = [fref](double t) { return fref(t) - fref(0.0); };
        n.log_f_ = [fref](double t) { return std::log(fref(t)); };
        n.log_df_ = [d = n.df_](double t) { return std::log(d(t)); };
        n.log_ddf_ = [d = n.ddf_](double t) { return std::log(d(t)); };
        n.log_ftilde_ = [fn = n.f_](double t) { return std::log(fn(t) - fn(0.0)); };
        return n;
    }

    const std::string& name() const { return name_; }
    PresetKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    const std::optional<TauPair>& closed_form_tau() const { return tau_; }

    double f(double t) const { return f_(t); }
    double df(double t) const { return df_(t); }
    double ddf(double t) const { return ddf_(t); }
    /// f(t) - f(0), i.e. f(t) - 1 under condition (R).
    double ftilde(double t) const { return ftilde_(t); }

    double log_f(double t) const { return log_f_(t); }
    double log_df(double t) const { return log_df_(t); }
    double log_ddf(double t) const { return log_ddf_(t); }
    double log_ftilde(double t) const { return log_ftilde_(t); }

private:
    Nonlinearity() = default;

    // log(e^x - 1) without overflow for large x.
    static double log_expm1(double x) {
        if (x > 30.0) return x + std::log1p(-std::exp(-x));
        return std::log(std::expm1(x));
    }

    static std::string format_param(double x) {
        char buf[64];
        auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
        return ec == std::errc{} ? std::string(buf, end) : std::to_string(x);
    }

    std::string name_;
    PresetKind kind_ = PresetKind::custom;
    std::vector<double> params_;
    Fn f_, df_, ddf_, ftilde_;
    Fn log_f_, log_df_, log_ddf_, log_ftilde_;
    std::optional<TauPair> tau_;
};

inline Nonlinearity make_preset(PresetKind kind, const std::vector<double>& params = {}) {
    auto param = [&](const char* what) {
        if (params.size() != 1) throw std::invalid_argument(std::string(what) + " preset takes exactly one parameter");
        return params.front();
    };
    switch (kind) {
    case PresetKind::exponential:
        if (!params.empty()) throw std::invalid_argument("exponential preset takes no parameters");
        return Nonlinearity::exponential();
    case PresetKind::power: return Nonlinearity::power(param("power"));
    case PresetKind::exp_power: return Nonlinearity::exp_power(param("exp_power"));
    case PresetKind::custom: break;
    }
    throw std::invalid_argument("custom nonlinearities are built with Nonlinearity::custom");
}

/// Parses "exp", "pow:<p>" or "exppow:<a>".
inline Nonlinearity parse_nonlinearity(std::string_view spec) {
    auto number = [&](std::string_view text) {
        double x = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
        if (ec != std::errc{} || ptr != text.data() + text.size())
            throw std::invalid_argument("malformed nonlinearity parameter: '" + std::string(text) + "'");
        return x;
    };
    if (spec == "exp") return Nonlinearity::exponential();
    if (spec.starts_with("pow:")) return Nonlinearity::power(number(spec.substr(4)));
    if (spec.starts_with("exppow:")) return Nonlinearity::exp_power(number(spec.substr(7)));
    throw std::invalid_argument("unknown nonlinearity '" + std::string(spec) + "' (expected exp, pow:<p>, exppow:<a>)");
}

/// tau(t) = f(t) f''(t) / f'(t)^2 for t > 0.
inline double tau_at(const Nonlinearity& f, double t) {
    if (!(t > 0.0)) throw DomainError("tau_at requires t > 0");
    const double d1 = f.df(t);
    if (!(d1 > 0.0)) throw DomainError("tau_at: f'(t) vanishes at t = " + std::to_string(t));
    const double v = f.f(t);
    const double d2 = f.ddf(t);
    if (std::isfinite(v) && std::isfinite(d1) && std::isfinite(d2)) {
        const double r = v * d2 / (d1 * d1);
        if (std::isfinite(r) && d1 * d1 > 0.0 && std::isfinite(d1 * d1)) return r;
    }
    if (!(d2 > 0.0)) throw DomainError("tau_at: f'' not positive where values overflow");
    const double r = std::exp(f.log_f(t) + f.log_ddf(t) - 2.0 * f.log_df(t));
    if (!std::isfinite(r)) throw DomainError("tau_at: non-finite ratio at t = " + std::to_string(t));
    return r;
}

/// Limiting bounds tau-/tau+. Closed form when the preset has one (unless
/// force_sampled); otherwise min/max of tau over a geometric grid on
/// [horizon/100, horizon], which is only a finite-horizon estimate.
inline TauEstimate tau_bounds(const Nonlinearity& f, double horizon, int samples, bool force_sampled = false) {
    if (!(horizon > 1.0)) throw std::invalid_argument("tau_bounds requires horizon > 1");
    if (samples < 16) throw std::invalid_argument("tau_bounds requires at least 16 samples");
    if (f.closed_form_tau() && !force_sampled) {
        return {f.closed_form_tau()->tau_minus, f.closed_form_tau()->tau_plus, horizon, 0, TauSource::closed_form};
    }
    const double t0 = horizon / 100.0;
    const double ratio = std::pow(horizon / t0, 1.0 / (samples - 1));
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int k = 0; k < samples; ++k) {
        const double t = k == samples - 1 ? horizon : t0 * std::pow(ratio, k);
        const double tau = tau_at(f, t);
        lo = std::min(lo, tau);
        hi = std::max(hi, tau);
    }
    return {lo, hi, horizon, samples, TauSource::sampled};
}

inline double ftilde(const Nonlinearity& f, double t) {
    if (t < 0.0) throw std::invalid_argument("ftilde requires t >= 0");
    return f.ftilde(t);
}

/// One sampled check of condition (R). first_violation is the smallest sampled t
/// at which the property failed.
struct ConditionCheck {
    bool ok = true;
    std::optional<double> first_violation;
};

struct ConditionReport {
    ConditionCheck f_zero_is_one;
    ConditionCheck nondecreasing;     // f' >= 0
    ConditionCheck convex;            // f'' >= 0
    ConditionCheck strictly_increasing;  // f' > 0 for t > 0
    ConditionCheck superlinear;       // f(t)/t increasing on [horizon/4, horizon]

    bool all_ok() const {
        return f_zero_is_one.ok && nondecreasing.ok && convex.ok && strictly_increasing.ok && superlinear.ok;
    }
};

inline ConditionReport check_condition_R(const Nonlinearity& f, double horizon, int samples = 1024) {
    if (!(horizon > 0.0)) throw std::invalid_argument("check_condition_R requires horizon > 0");
    samples = std::max(samples, 8);
    ConditionReport rep;
    auto fail = [](ConditionCheck& c, double t) {
        if (c.ok) {
            c.ok = false;
            c.first_violation = t;
        }
    };
    if (std::abs(f.f(0.0) - 1.0) > 1e-14) fail(rep.f_zero_is_one, 0.0);

    const double h = horizon / samples;
    const double tail_start = horizon / 4.0;
    double prev_ratio = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= samples; ++k) {
        const double t = k * h;
        const double d1 = f.df(t);
        const double d2 = f.ddf(t);
        if (!(d1 >= 0.0)) fail(rep.nondecreasing, t);
        if (!(d2 >= 0.0)) fail(rep.convex, t);
        if (t > 0.0 && !(d1 > 0.0)) fail(rep.strictly_increasing, t);
        if (t >= tail_start && t > 0.0) {
            const double ratio = f.f(t) / t;
            if (!(ratio > prev_ratio)) fail(rep.superlinear, t);
            prev_ratio = ratio;
        }
    }
    return rep;
}

}  // namespace extremal
