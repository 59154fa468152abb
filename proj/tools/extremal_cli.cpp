// extremal-cli: regularity thresholds, branch traces, extremal curves, proof
// probes and the singular-solution scan, driven by a flat JSON config.
//
// Resolution order for every setting: built-in default < --config file < flag.
// Exit codes: 0 success, 1 usage/config/solver-setup error, 2 inadmissible.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "extremal/continuation.hpp"
#include "extremal/regularity.hpp"
#include "extremal/stability.hpp"

#ifndef EXTREMAL_VERSION
#define EXTREMAL_VERSION "0.0.0"
#endif

namespace {

using nlohmann::json;
using namespace extremal;

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_inadmissible = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Every key the tool understands, with its default. Unknown keys in a config
// file are rejected so typos cannot silently fall back to defaults.
json default_config() {
    return json{
        {"nonlinearity", "exp"},
        {"dim", 2.0},
        {"cells", 512},
        {"sigma", json::array({1.0})},
        {"tol", 1e-10},
        {"max_iters", 50},
        {"step0", 0.05},
        {"min_step", 1e-8},
        {"epsilons", json::array()},
        {"epsilon_floor", 1e-4},
        {"alphas", json::array({2.0})},
        {"lambda", 1.0},
        {"gamma", 1.0},
        {"horizon", 1e3},
        {"tau_samples", 256},
        {"stability", true},
        {"snapshot_out", ""},
        {"bound12_T", 1.0},
        {"bound12_span", 100.0},
        {"ineq5_samples", 100},
        {"seed", 1},
        {"n_values", json::array({8.0, 9.0, 9.5, 10.5, 11.0, 12.0})},
        {"scan_width", 1e-3},
        {"threads", 1},
        {"out", ""},
    };
}

std::vector<double> parse_csv_numbers(const std::string& text, const char* key) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) throw UsageError(std::string("empty entry in ") + key);
        item = item.substr(b, e - b + 1);
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw UsageError(std::string("malformed number '") + item + "' in " + key);
        out.push_back(x);
    }
    if (out.empty()) throw UsageError(std::string(key) + " must not be empty");
    return out;
}

// Numeric lists accept a JSON array, a single number or a comma-separated string.
std::vector<double> number_list(const json& cfg, const char* key) {
    const json& v = cfg.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (v.is_string()) return parse_csv_numbers(v.get<std::string>(), key);
    if (!v.is_array()) throw UsageError(std::string(key) + " must be a number, list or csv string");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw UsageError(std::string(key) + " entries must be numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

double number(const json& cfg, const char* key) {
    const json& v = cfg.at(key);
    if (!v.is_number()) throw UsageError(std::string(key) + " must be a number");
    return v.get<double>();
}

int integer(const json& cfg, const char* key) {
    const json& v = cfg.at(key);
    if (!v.is_number_integer()) throw UsageError(std::string(key) + " must be an integer");
    return v.get<int>();
}

std::string text(const json& cfg, const char* key) {
    const json& v = cfg.at(key);
    if (!v.is_string()) throw UsageError(std::string(key) + " must be a string");
    return v.get<std::string>();
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw UsageError("config file must hold a flat JSON object");
    const json defaults = default_config();
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (!defaults.contains(it.key())) throw UsageError("unknown config key '" + it.key() + "'");
        if (it.value().is_object()) throw UsageError("config key '" + it.key() + "' must not be nested");
    }
    return doc;
}

// Deterministic, round-trip number text for CSV cells.
std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& command, const json& cfg, const std::vector<std::string>& header) {
        out_ << "# extremal-cli " << EXTREMAL_VERSION << " " << command << "\n";
        out_ << "# config " << cfg.dump() << "\n";
        row(header);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
        out_ << "\n";
        ++rows_;
    }
    std::size_t data_rows() const { return rows_ - 1; }
    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw UsageError("cannot write '" + path + "'");
        f << out_.str();
    }

private:
    std::ostringstream out_;
    std::size_t rows_ = 0;
};

void emit_json(const json& doc, const json& cfg) {
    const std::string body = doc.dump(2) + "\n";
    std::cout << body;
    const std::string path = text(cfg, "out");
    if (!path.empty()) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw UsageError("cannot write '" + path + "'");
        f << body;
    }
}

// JSON number or null for NaN / infinity.
json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json envelope(const char* command, const json& cfg) {
    return json{{"command", command}, {"version", EXTREMAL_VERSION}, {"config", cfg}};
}

ContinuationOptions continuation_options(const json& cfg) {
    ContinuationOptions o;
    o.step0 = number(cfg, "step0");
    o.min_step = number(cfg, "min_step");
    o.newton.tol = number(cfg, "tol");
    o.newton.max_iters = integer(cfg, "max_iters");
    if (!(o.step0 > o.min_step && o.min_step > 0.0)) throw UsageError("need step0 > min_step > 0");
    if (!(o.newton.tol > 0.0) || o.newton.max_iters < 1) throw UsageError("need tol > 0 and max_iters >= 1");
    return o;
}

RadialGrid make_grid(const json& cfg) {
    const double n = number(cfg, "dim");
    const int m = integer(cfg, "cells");
    if (!(n >= 1.0)) throw UsageError("dim must be >= 1");
    if (m < 16) throw UsageError("cells must be >= 16");
    return RadialGrid(n, m);
}

Nonlinearity make_nonlinearity(const json& cfg) {
    try {
        return parse_nonlinearity(text(cfg, "nonlinearity"));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

json regularity_json(const RegularityReport& rep) {
    json r{{"tau_minus", num(rep.tau_minus)},
           {"tau_plus", num(rep.tau_plus)},
           {"alpha_star", rep.alpha_star ? num(*rep.alpha_star) : json(nullptr)},
           {"n_threshold", rep.n_threshold ? num(*rep.n_threshold) : json(nullptr)},
           {"max_integer_dim", rep.max_integer_dim() ? json(*rep.max_integer_dim()) : json(nullptr)},
           {"admissible", rep.admissible},
           {"tau_source", to_string(rep.tau_source)},
           {"horizon", rep.horizon},
           {"reasons", rep.reasons}};
    return r;
}

int cmd_regularity(const json& cfg) {
    const Nonlinearity f = make_nonlinearity(cfg);
    const auto rep = regularity_report(f, number(cfg, "horizon"), integer(cfg, "tau_samples"));
    json doc = envelope("regularity", cfg);
    doc["nonlinearity"] = f.name();
    doc["report"] = regularity_json(rep);
    emit_json(doc, cfg);
    return rep.admissible ? exit_ok : exit_inadmissible;
}

void write_snapshot(const RadialGrid& g, const SolutionPair& s, const json& cfg) {
    const std::string path = text(cfg, "snapshot_out");
    if (path.empty()) return;
    CsvWriter csv("snapshot", cfg, {"r", "u", "v"});
    for (int i = 0; i < g.cells(); ++i) csv.row({fmt(g.nodes()[i]), fmt(s.u[i]), fmt(s.v[i])});
    csv.save(path);
}

int cmd_trace(const json& cfg) {
    const Nonlinearity f = make_nonlinearity(cfg);
    const RadialGrid g = make_grid(cfg);
    const auto sigmas = number_list(cfg, "sigma");
    if (sigmas.size() != 1) throw UsageError("trace takes a single sigma");
    const double sigma = sigmas.front();
    if (!(sigma > 0.0 && sigma <= 1.0)) throw UsageError("trace requires 0 < sigma <= 1 (lambda >= gamma)");
    const auto opt = continuation_options(cfg);
    const bool stability = cfg.at("stability").get<bool>();
    const auto epsilons = number_list(cfg, "epsilons");

    ContinuationOptions topt = opt;
    topt.keep_snapshots = stability || !epsilons.empty();
    Branch br = trace_branch(g, f, sigma, topt);
    if (stability) annotate_stability(g, f, br);

    CsvWriter csv("trace", cfg, {"sigma", "lambda", "gamma", "sup_u", "sup_v", "mu1", "eta", "comparison_violation"});
    for (const auto& p : br.points)
        csv.row({fmt(sigma), fmt(p.lambda), fmt(p.gamma), fmt(p.sup_u), fmt(p.sup_v), fmt(p.mu1), fmt(p.eta),
                 fmt(p.comparison_violation)});
    json doc = envelope("trace", cfg);
    doc["nonlinearity"] = f.name();
    doc["sigma"] = sigma;
    doc["points"] = br.points.size();
    doc["lambda_star"] = br.lambda_star;
    doc["gamma_star"] = sigma * br.lambda_star;
    doc["lambda_star_bracket"] = br.lambda_star_bracket;
    doc["last_lambda"] = br.last.lambda;
    doc["last_sup_u"] = sup_value(br.last.u);
    doc["last_sup_v"] = sup_value(br.last.v);
    if (stability) {
        double min_mu1 = std::numeric_limits<double>::infinity();
        for (const auto& p : br.points) min_mu1 = std::min(min_mu1, p.mu1);
        doc["min_mu1"] = num(min_mu1);
        doc["last_mu1"] = num(br.points.back().mu1);
    }
    if (!epsilons.empty()) {
        ProfileOptions po;
        po.continuation = opt;
        po.epsilon_floor = number(cfg, "epsilon_floor");
        std::vector<ProfileEntry> prof;
        try {
            prof = near_extremal_profile(g, f, br, epsilons, po);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        json rows = json::array();
        for (const auto& e : prof)
            rows.push_back({{"epsilon", e.epsilon}, {"lambda", e.lambda}, {"sup_u", num(e.sup_u)},
                            {"sup_v", num(e.sup_v)}, {"converged", e.converged}});
        doc["profile"] = rows;
        if (prof.size() >= 4) {
            doc["growth_slope_ratio"] = num(growth_slope_ratio(prof));
            doc["growth"] = to_string(growth_classification(prof));
        }
    }
    const std::string out = text(cfg, "out");
    if (!out.empty()) csv.save(out);
    write_snapshot(g, br.last, cfg);
    doc["rows"] = csv.data_rows();
    std::cout << doc.dump(2) << "\n";
    return exit_ok;
}

int cmd_extremal_curve(const json& cfg) {
    const Nonlinearity f = make_nonlinearity(cfg);
    const RadialGrid g = make_grid(cfg);
    const auto sigmas = number_list(cfg, "sigma");
    const int threads = integer(cfg, "threads");
    if (threads < 0) throw UsageError("threads must be >= 0");
    ContinuationOptions opt = continuation_options(cfg);
    opt.keep_snapshots = false;
    const auto curve = extremal_curve(g, f, sigmas, opt, static_cast<unsigned>(threads));

    CsvWriter csv("extremal-curve", cfg, {"sigma", "lambda_star", "gamma_star", "bracket", "status"});
    json rows = json::array();
    std::size_t ok = 0;
    for (const auto& e : curve) {
        ok += e.ok ? 1 : 0;
        csv.row({fmt(e.sigma), fmt(e.ok ? e.lambda_star : NAN), fmt(e.ok ? e.gamma_star : NAN),
                 fmt(e.ok ? e.bracket : NAN), e.ok ? "ok" : "failed"});
        json r{{"sigma", e.sigma}, {"status", e.ok ? "ok" : "failed"}};
        if (e.ok) {
            r["lambda_star"] = e.lambda_star;
            r["gamma_star"] = e.gamma_star;
            r["bracket"] = e.bracket;
        } else {
            r["error"] = e.error;
        }
        rows.push_back(r);
    }
    const std::string out = text(cfg, "out");
    if (!out.empty()) csv.save(out);
    json doc = envelope("extremal-curve", cfg);
    doc["nonlinearity"] = f.name();
    doc["curve"] = rows;
    std::cout << doc.dump(2) << "\n";
    if (ok == 0) {
        std::cerr << "extremal-curve: every ray failed\n";
        return exit_usage;
    }
    return exit_ok;
}

// The minimal solution at (lambda, gamma), reached by continuation from zero
// along the ray through it (with the roles swapped if gamma > lambda).
SolutionPair minimal_solution(const RadialGrid& g, const Nonlinearity& f, double lambda, double gamma,
                              const ContinuationOptions& opt) {
    if (!(lambda > 0.0 && gamma > 0.0)) throw UsageError("probe requires lambda > 0 and gamma > 0");
    const bool swapped = gamma > lambda;
    const double big = swapped ? gamma : lambda;
    const double small = swapped ? lambda : gamma;
    SolutionPair s = continue_to(g, f, small / big, SolutionPair::zero(g), big, opt);
    if (swapped) {
        std::swap(s.u, s.v);
        std::swap(s.lambda, s.gamma);
    }
    return s;
}

int cmd_probe(const json& cfg) {
    const Nonlinearity f = make_nonlinearity(cfg);
    const RadialGrid g = make_grid(cfg);
    const auto alphas = number_list(cfg, "alphas");
    for (double a : alphas)
        if (!(a > 1.0)) throw UsageError("alphas must be > 1, got " + fmt(a));
    const auto opt = continuation_options(cfg);
    const double lambda = number(cfg, "lambda");
    const double gamma = number(cfg, "gamma");
    const double horizon = number(cfg, "horizon");
    const auto rep = regularity_report(f, horizon, integer(cfg, "tau_samples"));
    if (!rep.admissible) {
        json doc = envelope("probe", cfg);
        doc["regularity"] = regularity_json(rep);
        emit_json(doc, cfg);
        return exit_inadmissible;
    }
    for (double a : alphas)
        if (pf_eval(a, rep.tau_minus, rep.tau_plus) > 1e-12 * (1.0 + a * a))
            throw UsageError("alpha " + fmt(a) + " exceeds alpha* = " + fmt(*rep.alpha_star));

    SolutionPair sol;
    try {
        sol = minimal_solution(g, f, lambda, gamma, opt);
    } catch (const NonConvergence& e) {
        std::cerr << "probe: no minimal solution at the requested parameters (" << e.what() << ")\n";
        return exit_usage;
    }
    write_snapshot(g, sol, cfg);

    const double mu1 = mu1_semistability(g, sol, f).value;
    const auto tests = random_test_functions(g, integer(cfg, "ineq5_samples"), cfg.at("seed").get<std::uint64_t>());
    const auto m5 = check_inequality5(g, sol, f, tests);
    double min5 = std::numeric_limits<double>::infinity();
    for (double x : m5) min5 = std::min(min5, x);

    const double T = number(cfg, "bound12_T");
    const double span = number(cfg, "bound12_span");
    if (!(T > 0.0 && span > 1.0)) throw UsageError("need bound12_T > 0 and bound12_span > 1");
    std::vector<double> ts(32);
    for (std::size_t k = 0; k < ts.size(); ++k) ts[k] = T * std::pow(span, static_cast<double>(k) / (ts.size() - 1));
    const auto m12 = check_bound12(f, rep.tau_plus, T, ts);
    json b12 = json::array();
    double min12 = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ts.size(); ++k) {
        b12.push_back({{"t", ts[k]}, {"margin", num(m12[k])}});
        min12 = std::min(min12, m12[k]);
    }

    json probes = json::array();
    Inequality8Options o8;
    o8.horizon = horizon;
    for (double a : alphas) {
        const auto p = proof_probe(g, sol, f, a, o8);
        probes.push_back({{"alpha", a},
                          {"ineq8", {num(p.ineq8.lhs), num(p.ineq8.rhs)}},
                          {"ineq8_log", {num(p.ineq8.log_lhs), num(p.ineq8.log_rhs)}},
                          {"ineq8_holds", p.ineq8.holds(1e-6)},
                          {"hoelder", {num(p.hoelder.lhs), num(p.hoelder.rhs)}},
                          {"hoelder_log", {num(p.hoelder.log_lhs), num(p.hoelder.log_rhs)}},
                          {"hoelder_holds", p.hoelder.holds(1e-10)},
                          {"I", num(p.hoelder.I)},
                          {"J", num(p.hoelder.J)}});
    }
    json doc = envelope("probe", cfg);
    doc["nonlinearity"] = f.name();
    doc["lambda"] = sol.lambda;
    doc["gamma"] = sol.gamma;
    doc["sup_u"] = sup_value(sol.u);
    doc["sup_v"] = sup_value(sol.v);
    doc["mu1"] = mu1;
    doc["alpha_star"] = num(*rep.alpha_star);
    doc["ineq5_min_margin"] = num(min5);
    doc["bound12"] = {{"T", T}, {"tau2", rep.tau_plus}, {"min_margin", num(min12)}, {"margins", b12}};
    doc["probes"] = probes;
    emit_json(doc, cfg);
    return exit_ok;
}

int cmd_singular_scan(const json& cfg) {
    const int cells = integer(cfg, "cells");
    if (cells < 16) throw UsageError("cells must be >= 16");
    auto ns = number_list(cfg, "n_values");
    for (double n : ns)
        if (!(n > 2.0)) throw UsageError("n_values must be > 2");
    const auto rows = singular_threshold_scan(ns, cells);

    CsvWriter csv("singular-scan", cfg, {"N", "mu1", "residual_norm"});
    json jrows = json::array();
    for (const auto& r : rows) {
        csv.row({fmt(r.n_dim), fmt(r.mu1), fmt(r.residual_norm)});
        jrows.push_back({{"N", r.n_dim}, {"mu1", r.mu1}, {"residual_norm", r.residual_norm}});
    }
    json doc = envelope("singular-scan", cfg);
    doc["rows"] = jrows;
    doc["sign_change"] = nullptr;
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        if (rows[k].mu1 < 0.0 && rows[k + 1].mu1 >= 0.0) {
            const auto b = singular_sign_change(cells, rows[k].n_dim, rows[k + 1].n_dim, number(cfg, "scan_width"));
            doc["sign_change"] = {{"lo", b.lo}, {"hi", b.hi}};
            break;
        }
    }
    const std::string out = text(cfg, "out");
    if (!out.empty()) csv.save(out);
    std::cout << doc.dump(2) << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimal branches, extremal curves and regularity thresholds for radial elliptic systems"};
    app.set_version_flag("--version", EXTREMAL_VERSION);
    app.require_subcommand(1, 1);

    std::string config_path;
    std::map<std::string, std::string> flags;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat JSON config file");
        for (const char* key : {"nonlinearity", "dim", "cells", "sigma", "out", "alphas", "epsilons", "lambda", "gamma",
                                "tol", "step0", "min-step", "seed", "threads", "snapshot-out", "n-values"}) {
            sub->add_option_function<std::string>(
                std::string("--") + key, [&flags, key](const std::string& v) { flags[key] = v; }, "overrides config key");
        }
    };
    const std::vector<std::pair<const char*, const char*>> commands{
        {"regularity", "tau bounds, alpha* and the dimension threshold N(f)"},
        {"trace", "minimal branch on one ray gamma = sigma lambda, with stability columns"},
        {"extremal-curve", "fold point (lambda*, gamma*) for each sigma"},
        {"probe", "stability probes at one (lambda, gamma)"},
        {"singular-scan", "mu1 of the singular pair -2 log r across dimensions"}};
    for (const auto& [name, about] : commands) add_common(app.add_subcommand(name, about));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        const json defaults = default_config();
        json cfg = defaults;
        if (!config_path.empty()) cfg.update(load_config(config_path));
        // Flags arrive as text; numbers and lists are parsed per key.
        for (const auto& [flag, value] : flags) {
            std::string key = flag;
            for (char& c : key)
                if (c == '-') c = '_';
            const json& def = defaults.at(key);
            if (def.is_string()) {
                cfg[key] = value;
            } else if (def.is_array()) {
                cfg[key] = value;  // csv string, parsed on use
            } else if (def.is_number_integer()) {
                std::size_t used = 0;
                long long x = 0;
                try {
                    x = std::stoll(value, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != value.size()) throw UsageError("--" + flag + " expects an integer");
                cfg[key] = x;
            } else {
                cfg[key] = parse_csv_numbers(value, key.c_str()).at(0);
                if (value.find(',') != std::string::npos) throw UsageError("--" + flag + " expects one number");
            }
        }
        // Lists are normalized to arrays so the embedded config is canonical.
        for (const char* key : {"sigma", "epsilons", "alphas", "n_values"}) {
            const json& v = cfg.at(key);
            if (v.is_array() && v.empty()) continue;
            cfg[key] = number_list(cfg, key);
        }

        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "regularity") return cmd_regularity(cfg);
        if (cmd == "trace") return cmd_trace(cfg);
        if (cmd == "extremal-curve") return cmd_extremal_curve(cfg);
        if (cmd == "probe") return cmd_probe(cfg);
        return cmd_singular_scan(cfg);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    }
}
