#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "harvest/density.hpp"
#include "harvest/errors.hpp"
#include "harvest/hjb.hpp"
#include "harvest/io.hpp"
#include "harvest/model.hpp"
#include "harvest/optimize.hpp"
#include "harvest/sim.hpp"
#include "harvest/strategy.hpp"

namespace harvest::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kDomainFailure = 1, kUsage = 2 };

/// Thrown for anything the caller got wrong in the config; maps to exit 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StrategyBlock {
    std::string kind = "optimal";  // none | constant | bang_bang | optimal
    double rate = 0.0;
    double threshold = 0.0;
};

struct RunConfig {
    Json raw;
    ModelParams model;
    YieldSpec yield = YieldSpec::identity();
    int scan_n = 400;
    SweepSpec sweep;
    int sweep_scan_n = 400;
    std::optional<double> rho_override;
    int hjb_step_n = 2000;
    double hjb_x_lo = 0.0, hjb_x_hi = 0.0;
    StrategyBlock sim_strategy;
    SimConfig sim;
    int replicates = 32;
    StrategyBlock density_strategy;
    int density_grid_n = 20001;
    std::string output_dir = "out";
    bool emit_svg = true;
};

namespace detail {

inline double get_num(const Json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw UsageError(std::string("'") + key + "' must be a number");
    return j.at(key).get<double>();
}

inline std::function<double(double)> tabulated_mu(const Json& table) {
    std::vector<double> xs, ms;
    for (const auto& row : table) {
        if (!row.is_array() || row.size() != 2) throw UsageError("mu_table rows must be [x, mu] pairs");
        xs.push_back(row[0].get<double>());
        ms.push_back(row[1].get<double>());
    }
    if (xs.size() < 2) throw UsageError("mu_table needs at least two rows");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1])) throw UsageError("mu_table x values must increase");
    return [xs, ms](double x) {
        // Piecewise linear, extrapolated linearly past either end.
        std::size_t i = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
        i = std::clamp<std::size_t>(i, 1, xs.size() - 1);
        const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return ms[i - 1] + t * (ms[i] - ms[i - 1]);
    };
}

inline ModelParams parse_model(const Json& m) {
    if (!m.is_object()) throw UsageError("'model' block must be an object");
    double sigma = 1.0;
    if (m.contains("sigma"))
        sigma = get_num(m, "sigma", 1.0);
    else if (m.contains("sigma2"))
        sigma = std::sqrt(get_num(m, "sigma2", 1.0));
    const double cap = get_num(m, "M", 1.0);
    const std::string drift = m.value("drift", std::string("logistic"));
    try {
        if (drift == "logistic")
            return ModelParams::logistic(get_num(m, "mu_bar", 1.0), get_num(m, "kappa", 1.0), sigma, cap,
                                         get_num(m, "x_max", 0.0));
        if (drift == "custom") {
            if (!m.contains("mu_table")) throw UsageError("custom drift needs 'mu_table'");
            return ModelParams::custom(tabulated_mu(m.at("mu_table")), sigma, cap, get_num(m, "x_max", 10.0),
                                       m.value("name", std::string("tabulated")));
        }
    } catch (const ContractError& e) {
        throw UsageError(e.what());
    }
    throw UsageError("unknown drift '" + drift + "'");
}

inline YieldSpec parse_yield(const Json& y) {
    if (!y.is_object()) throw UsageError("'yield' block must be an object");
    const std::string kind = y.value("kind", std::string("identity"));
    if (kind == "identity") return YieldSpec::identity();
    if (kind == "log1p") return YieldSpec::log1p();
    if (kind == "power") return YieldSpec::power(get_num(y, "p", 2.0));
    throw UsageError("unknown yield kind '" + kind + "'");
}

inline StrategyBlock parse_strategy(const Json& j) {
    StrategyBlock s;
    if (!j.is_object()) throw UsageError("'strategy' must be an object");
    s.kind = j.value("kind", std::string("optimal"));
    if (s.kind != "none" && s.kind != "constant" && s.kind != "bang_bang" && s.kind != "optimal")
        throw UsageError("unknown strategy kind '" + s.kind + "'");
    s.rate = get_num(j, "rate", 0.0);
    s.threshold = get_num(j, "threshold", 0.0);
    return s;
}

}  // namespace detail

inline RunConfig parse_config(const Json& j) {
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    RunConfig c;
    c.raw = j;
    if (!j.contains("model")) throw UsageError("config needs a 'model' block");
    c.model = detail::parse_model(j.at("model"));
    if (j.contains("yield")) c.yield = detail::parse_yield(j.at("yield"));
    if (j.contains("optimize")) c.scan_n = static_cast<int>(detail::get_num(j.at("optimize"), "scan_n", 400));
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        c.sweep.name = s.value("param", std::string());
        if (!s.contains("values") || !s.at("values").is_array()) throw UsageError("sweep needs a 'values' array");
        c.sweep.values = s.at("values").get<std::vector<double>>();
        c.sweep_scan_n = static_cast<int>(detail::get_num(s, "scan_n", 400));
    }
    if (j.contains("hjb")) {
        const auto& h = j.at("hjb");
        if (h.contains("rho_override") && !h.at("rho_override").is_null())
            c.rho_override = detail::get_num(h, "rho_override", 0.0);
        c.hjb_step_n = static_cast<int>(detail::get_num(h, "step_n", 2000));
        c.hjb_x_lo = detail::get_num(h, "x_lo", 0.0);
        c.hjb_x_hi = detail::get_num(h, "x_hi", 0.0);
    }
    if (j.contains("simulate")) {
        const auto& s = j.at("simulate");
        if (s.contains("strategy")) c.sim_strategy = detail::parse_strategy(s.at("strategy"));
        c.sim.x0 = detail::get_num(s, "x0", c.sim.x0);
        c.sim.horizon_T = detail::get_num(s, "T", c.sim.horizon_T);
        c.sim.dt = detail::get_num(s, "dt", c.sim.dt);
        if (s.contains("seed")) c.sim.seed = s.at("seed").get<std::uint64_t>();
        c.sim.burn_in_fraction = detail::get_num(s, "burn_in_fraction", c.sim.burn_in_fraction);
        c.sim.hist_bins = static_cast<int>(detail::get_num(s, "hist_bins", c.sim.hist_bins));
        c.sim.trajectory_every = static_cast<int>(detail::get_num(s, "trajectory_every", 0));
        c.replicates = static_cast<int>(detail::get_num(s, "replicates", 32));
    }
    if (j.contains("density")) {
        const auto& d = j.at("density");
        if (d.contains("strategy")) c.density_strategy = detail::parse_strategy(d.at("strategy"));
        c.density_grid_n = static_cast<int>(detail::get_num(d, "grid_n", 20001));
    }
    c.output_dir = j.value("output_dir", std::string("out"));
    c.emit_svg = j.value("emit_svg", true);
    return c;
}

// --------------------------------------------------------------------------
// Serialisation helpers

inline Json model_json(const ModelParams& p) {
    Json j;
    if (p.drift_kind == DriftKind::Logistic) {
        j["drift"] = "logistic";
        j["mu_bar"] = p.mu_bar;
        j["kappa"] = p.kappa;
    } else {
        j["drift"] = "custom";
        j["name"] = p.custom_name;
    }
    j["sigma"] = p.sigma;
    j["M"] = p.harvest_cap_M;
    j["x_max"] = p.x_max;
    return j;
}

inline Json report_json(const AssumptionReport& r) {
    Json checks = Json::array();
    for (const auto& c : r.checks) {
        Json e;
        e["name"] = c.name;
        e["pass"] = c.pass;
        e["witness"] = c.witness;
        e["detail"] = c.detail;
        checks.push_back(e);
    }
    Json j;
    j["all_pass"] = r.all_pass;
    j["checks"] = checks;
    return j;
}

inline Json histogram_json(const Histogram& h) {
    Json j;
    j["edges"] = h.edges;
    j["masses"] = h.masses;
    return j;
}

// --------------------------------------------------------------------------
// Commands

class Runner {
public:
    Runner(RunConfig cfg, std::ostream& out, std::ostream& err) : c_(std::move(cfg)), out_(out), err_(err) {}

    int validate() {
        auto report = validate_assumptions(c_.model, 400);
        Json j;
        j["model"] = model_json(c_.model);
        j["assumptions"] = report_json(report);
        bool ok = report.all_pass;
        if (c_.raw.contains("yield")) {
            const auto yr = validate_yield(c_.yield, 400);
            j["yield"] = report_json(yr);
            ok = ok && yr.all_pass;
        }
        j["all_pass"] = ok;
        write("assumptions.json", j.dump(2) + "\n");
        for (const auto& ch : report.checks)
            if (!ch.pass) err_ << "assumption failed: " << ch.name << " (" << ch.detail << ")\n";
        out_ << (ok ? "all assumptions hold" : "assumption check failed") << "\n";
        return ok ? kOk : kDomainFailure;
    }

    int optimize() {
        require_bang_bang_yield();
        const auto t = optimal_threshold(c_.model, c_.scan_n, c_.yield);
        const auto b = yield_bounds(c_.model);
        Json j;
        j["model"] = model_json(c_.model);
        j["yield"] = c_.yield.name;
        j["x_star"] = t.x_star;
        j["H_star"] = t.H_at_x_star;
        j["bracket"] = {t.bracket_lo, t.bracket_hi};
        j["scan_n"] = c_.scan_n;
        j["local_maxima"] = t.local_maxima;
        j["unique_max_witness"] = t.unique_max_witness;
        j["lower_bound"] = b.lower;
        j["upper_bound"] = b.upper;
        if (c_.yield.is_identity()) j["sandwich_holds"] = b.lower <= t.H_at_x_star && t.H_at_x_star <= b.upper;
        write("threshold.json", j.dump(2) + "\n");

        io::CsvWriter csv({"eta", "H"});
        for (auto [eta, h] : t.grid_scan) csv.row({io::num(eta), io::num(h)});
        write("H_curve.csv", csv.str());
        if (c_.emit_svg) {
            io::PlotSpec spec{"Asymptotic yield of the bang-bang rule", "threshold x", "H(x)", true};
            write("H_curve.svg", io::line_plot_svg(spec, {{"", t.grid_scan}}));
        }
        out_ << "x* = " << io::num(t.x_star) << "  H(x*) = " << io::num(t.H_at_x_star) << "  bounds ["
             << io::num(b.lower) << ", " << io::num(b.upper) << "]\n";
        return kOk;
    }

    int sweep() {
        if (c_.sweep.name.empty()) throw UsageError("config needs a 'sweep' block with 'param'");
        if (c_.sweep.name != "mu_bar" && c_.sweep.name != "kappa" && c_.sweep.name != "M" &&
            c_.sweep.name != "sigma")
            throw UsageError("sweep param must be one of mu_bar, kappa, M, sigma");
        if (c_.model.drift_kind != DriftKind::Logistic) throw UsageError("sweep needs a logistic model");
        const auto rows = parameter_sweep(c_.model, c_.sweep, c_.sweep_scan_n);
        io::CsvWriter csv({"param", "value", "x_star", "H_star", "lower", "upper"});
        std::vector<io::Series> series;
        bool all_ok = true;
        for (const auto& r : rows) {
            const double nan = std::numeric_limits<double>::quiet_NaN();
            csv.row({r.param, io::num(r.value), io::num(r.ok ? r.x_star : nan), io::num(r.ok ? r.H_at_x_star : nan),
                     io::num(r.ok ? r.lower_bound : nan), io::num(r.ok ? r.upper_bound : nan)});
            if (r.ok)
                series.push_back({legend(r.param) + " = " + io::num(r.value), r.curve});
            else {
                all_ok = false;
                err_ << r.param << " = " << io::num(r.value) << ": " << r.error << "\n";
            }
        }
        write("sweep.csv", csv.str());
        if (c_.emit_svg) {
            io::PlotSpec spec{"H(x) for several values of " + legend(c_.sweep.name), "x", "H(x)", true};
            write("sweep.svg", io::line_plot_svg(spec, series));
        }
        out_ << rows.size() << " sweep rows written\n";
        return all_ok ? kOk : kDomainFailure;
    }

    int hjb_verify() {
        require_bang_bang_yield();
        const auto t = optimal_threshold(c_.model, c_.scan_n, c_.yield);
        const double rho = c_.rho_override.value_or(t.H_at_x_star);
        const double x_lo = c_.hjb_x_lo > 0 ? c_.hjb_x_lo : 1e-4 * t.x_star;
        const double x_hi =
            c_.hjb_x_hi > 0 ? c_.hjb_x_hi : std::max(10.0 * t.x_star, 4.0 * growth_peak(c_.model).x);
        const auto prof = integrate_phi(c_.model, c_.yield, rho, t.x_star, x_lo, x_hi, c_.hjb_step_n);
        const auto rep = crossing_report(prof, c_.model, rho, c_.yield);

        io::CsvWriter csv({"x", "phi", "regime", "barrier"});
        for (std::size_t i = 0; i < prof.grid.size(); ++i)
            csv.row({io::num(prof.grid[i]), io::num(prof.phi[i]), to_string(prof.regime[i]),
                     io::num(prof.barrier[i])});
        write("hjb_profile.csv", csv.str());

        Json j;
        j["model"] = model_json(c_.model);
        j["yield"] = c_.yield.name;
        j["barrier_kind"] = to_string(prof.barrier_kind);
        j["rho"] = rho;
        j["rho_overridden"] = c_.rho_override.has_value();
        j["x_star"] = t.x_star;
        Json cr = Json::array();
        for (const auto& c : rep.crossings) cr.push_back({{"x", c.x}, {"direction", to_string(c.direction)}});
        j["crossings"] = cr;
        j["alpha1"] = rep.alpha1 ? Json(*rep.alpha1) : Json(nullptr);
        j["alpha2"] = rep.alpha2 ? Json(*rep.alpha2) : Json(nullptr);
        j["double_root"] = rep.double_root;
        j["verdict"] = rep.verdict == Verdict::SingleFromAbove ? "SingleFromAbove" : "Violation";
        j["violated"] = rep.violated;
        j["detail"] = rep.detail;
        j["min_phi"] = rep.min_phi;
        j["truncated_left"] = prof.truncated_left;
        j["truncated_right"] = prof.truncated_right;
        j["note"] = prof.note;
        write("crossing.json", j.dump(2) + "\n");
        if (rep.verdict == Verdict::SingleFromAbove) {
            out_ << "verified: single crossing from above at x = " << io::num(rep.crossings.front().x) << "\n";
            return kOk;
        }
        out_ << "violation (" << rep.violated << "): " << rep.detail << "\n";
        return kDomainFailure;
    }

    int simulate() {
        const auto s = make_strategy(c_.sim_strategy);
        const auto first = simulate_path(c_.model, s, c_.yield, c_.sim);
        const auto mc = monte_carlo_yield(c_.model, s, c_.yield, c_.sim, c_.replicates);
        Json j;
        j["model"] = model_json(c_.model);
        j["yield"] = c_.yield.name;
        j["strategy"] = s.describe();
        j["T"] = c_.sim.horizon_T;
        j["dt"] = c_.sim.dt;
        j["seed"] = c_.sim.seed;
        j["replicates"] = c_.replicates;
        j["mean"] = mc.mean;
        j["stderr"] = mc.std_error;
        j["yields"] = mc.yields;
        j["extinct_count"] = mc.extinct_count;
        j["extinct_majority"] = 2 * mc.extinct_count > c_.replicates;
        std::optional<double> analytic;
        if (persists(c_.model)) {
            try {
                const auto prof = stationary_density(c_.model, s);
                analytic = asymptotic_yield(c_.model, s, c_.yield, prof);
            } catch (const ExtinctionError&) {
                analytic = 0.0;
            }
        }
        j["analytic"] = analytic ? Json(*analytic) : Json(nullptr);
        if (analytic) j["within_3_stderr"] = std::abs(mc.mean - *analytic) <= 3.0 * mc.std_error;
        Json fp;
        fp["seed"] = c_.sim.seed;
        fp["empirical_yield"] = first.empirical_yield;
        fp["min_x"] = first.min_x;
        fp["max_x"] = first.max_x;
        fp["extinct_flag"] = first.extinct_flag;
        fp["histogram"] = histogram_json(first.histogram);
        j["first_path"] = fp;
        write("sim.json", j.dump(2) + "\n");
        if (c_.sim.trajectory_every > 0) {
            io::CsvWriter csv({"t", "x", "v"});
            for (const auto& tp : first.trajectory) csv.row({io::num(tp.t), io::num(tp.x), io::num(tp.v)});
            write("trajectory.csv", csv.str());
        }
        out_ << "yield = " << io::num(mc.mean) << " +- " << io::num(mc.std_error);
        if (analytic) out_ << "  (analytic " << io::num(*analytic) << ")";
        out_ << "  extinct " << mc.extinct_count << "/" << c_.replicates << "\n";
        return kOk;
    }

    int density() {
        const auto s = make_strategy(c_.density_strategy);
        const auto prof = stationary_density(c_.model, s, c_.density_grid_n);
        io::CsvWriter csv({"y", "rho"});
        for (std::size_t i = 0; i < prof.grid.size(); ++i) csv.row({io::num(prof.grid[i]), io::num(prof.values[i])});
        write("density.csv", csv.str());
        Json j;
        j["model"] = model_json(c_.model);
        j["strategy"] = prof.strategy_id;
        j["grid_n"] = prof.grid.size();
        j["C1"] = prof.norm_constant_C1;
        j["log_C1"] = prof.log_norm_constant;
        j["y_min"] = prof.truncation.y_min;
        j["y_max"] = prof.truncation.y_max;
        j["lower_tail_mass"] = prof.truncation.lower_tail_mass;
        j["upper_tail_mass"] = prof.truncation.upper_tail_mass;
        j["trapezoid_integral"] = prof.trapezoid_integral();
        j["fokker_planck_residual"] = fokker_planck_residual(c_.model, s, prof);
        j["asymptotic_yield"] = asymptotic_yield(c_.model, s, c_.yield, prof);
        write("density.json", j.dump(2) + "\n");
        out_ << "density on " << prof.grid.size() << " points, mass " << io::num(prof.trapezoid_integral()) << "\n";
        return kOk;
    }

private:
    void require_bang_bang_yield() const {
        if (c_.model.drift_kind != DriftKind::Logistic) throw UsageError("this command needs a logistic model");
        if (c_.yield.kind != YieldKind::Identity && c_.yield.kind != YieldKind::Convex)
            throw UsageError("this command needs an identity or convex yield");
    }

    Strategy make_strategy(const StrategyBlock& b) const {
        const double M = c_.model.harvest_cap_M;
        try {
            if (b.kind == "none") return Strategy::none();
            if (b.kind == "constant") return Strategy::constant(b.rate, M);
            if (b.kind == "bang_bang") return make_bang_bang(b.threshold, M);
        } catch (const ContractError& e) {
            throw UsageError(e.what());
        }
        require_bang_bang_yield();
        return make_bang_bang(optimal_threshold(c_.model, c_.scan_n, c_.yield).x_star, M);
    }

    static std::string legend(const std::string& name) {
        if (name == "mu_bar") return "\xCE\xBC\xCC\x84";  // mu with macron
        if (name == "kappa") return "\xCE\xBA";
        if (name == "sigma") return "\xCF\x83";
        return name;
    }

    void write(const std::string& name, const std::string& content) const {
        io::write_file((std::filesystem::path(c_.output_dir) / name).string(), content);
    }

    RunConfig c_;
    std::ostream& out_;
    std::ostream& err_;
};

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Optimal ergodic harvesting: thresholds, HJB verification, simulation"};
    app.require_subcommand(1);
    std::string config_path, output_dir;
    std::optional<bool> emit_svg;
    std::optional<std::uint64_t> seed;
    const std::vector<std::string> names{"validate", "optimize", "sweep", "hjb-verify", "simulate", "density"};
    for (const auto& n : names) {
        auto* sub = app.add_subcommand(n);
        sub->add_option("config", config_path, "JSON config file")->required();
        sub->add_option("-o,--output-dir", output_dir, "override output_dir");
        sub->add_option("--emit-svg", emit_svg, "override emit_svg (true/false)");
        sub->add_option("--seed", seed, "override simulate.seed");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kUsage;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    RunConfig cfg;
    try {
        std::ifstream f(config_path);
        if (!f) throw UsageError("cannot open config '" + config_path + "'");
        const Json j = Json::parse(f);
        cfg = parse_config(j);
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (emit_svg) cfg.emit_svg = *emit_svg;
        if (seed) cfg.sim.seed = *seed;
        std::filesystem::create_directories(cfg.output_dir);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kUsage;
    }

    Runner r(std::move(cfg), out, err);
    try {
        if (cmd == "validate") return r.validate();
        if (cmd == "optimize") return r.optimize();
        if (cmd == "sweep") return r.sweep();
        if (cmd == "hjb-verify") return r.hjb_verify();
        if (cmd == "simulate") return r.simulate();
        return r.density();
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ContractError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDomainFailure;
    }
}

}  // namespace harvest::cli
