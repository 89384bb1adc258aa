// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "harvest/harvest.hpp"

using namespace harvest;
namespace fs = std::filesystem;

namespace {

const ModelParams base = ModelParams::logistic(1, 1, 1, 1);

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [fail: " << what << "]";
        }
    }
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_s, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && secs > budget_s) {
        o.pass = false;
        o.detail << " [over budget " << budget_s << " s]";
    }
    if (!o.pass) ++failures;
    std::printf("%s %2d %-28s %9.3f s %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs,
                o.detail.str().c_str());
    std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path env_path(const char* name, const char* fallback) {
    const char* v = std::getenv(name);
    return v ? fs::path(v) : fs::path(fallback);
}

}  // namespace

int main() {
    std::cout.precision(12);
    std::printf("acceptance: %d worker thread(s)\n", static_cast<int>(numerics::worker_count()));

    criterion(1, "closed-form MSY", 1e-3, [](Outcome& o) {
        const auto c = optimal_constant(base);
        const auto b = yield_bounds(base);
        o.require(c.rate == 0.25 && c.yield == 0.0625, "optimal_constant");
        o.require(b.lower == 0.0625 && b.upper == 0.25, "yield_bounds");
        o.detail << "l*=" << c.rate << " L*=" << c.yield;
    });

    criterion(2, "bound sandwich", 5.0, [](Outcome& o) {
        const auto t = optimal_threshold(base, 400);
        const double d = 1e-4 * t.x_star;
        const double slope = std::abs(yield_H(base, t.x_star + d) - yield_H(base, t.x_star - d)) / (2 * d);
        o.require(0.0625 < t.H_at_x_star && t.H_at_x_star < 0.25, "sandwich");
        o.require(slope < 1e-5, "|H'| proxy");
        char buf[160];
        std::snprintf(buf, sizeof buf, "x*=%.10f H=%.12f |H'|~%.2e", t.x_star, t.H_at_x_star, slope);
        o.detail << buf;
    });

    criterion(3, "unique maximum on 2000 nodes", 30.0, [](Outcome& o) {
        const auto t = optimal_threshold(base, 2000);
        o.require(t.unique_max_witness, "unique_max_witness");
        o.detail << "local maxima=" << t.local_maxima;
    });

    criterion(4, "HJB crossing structure", 5.0, [](Outcome& o) {
        const auto t = optimal_threshold(base, 400);
        const auto prof = integrate_phi(base, YieldSpec::identity(), t.H_at_x_star, t.x_star);
        const auto rep = crossing_report(prof, base, t.H_at_x_star);
        o.require(rep.verdict == Verdict::SingleFromAbove, "verdict " + rep.violated);
        if (rep.crossings.size() == 1) {
            const double x = rep.crossings[0].x;
            o.require(std::abs(x - t.x_star) <= 1e-3 * t.x_star, "crossing near x*");
            const auto roots = g_roots(base, t.H_at_x_star);
            o.require(roots.kind == GRoots::Kind::Two && roots.alpha1 <= x && x <= roots.alpha2, "in [a1, a2]");
            char buf[160];
            std::snprintf(buf, sizeof buf, "crossing=%.8f alpha=(%.4f, %.4f)", x, roots.alpha1, roots.alpha2);
            o.detail << buf;
        } else {
            o.require(false, "crossing count " + std::to_string(rep.crossings.size()));
        }
    });

    criterion(5, "sweep monotonicity", 180.0, [](Outcome& o) {
        const auto mu = parameter_sweep(base, {"mu_bar", {1, 1.5, 2, 2.5, 3}});
        const auto M = parameter_sweep(base, {"M", {0.1, 0.2, 0.5, 1, 2, 5}});
        const auto k = parameter_sweep(base, {"kappa", {1, 2, 3, 4, 5}});
        int mu_ok = 0, M_ok = 0, k_ok = 0;
        for (const auto* rows : {&mu, &M, &k})
            for (const auto& r : *rows) o.require(r.ok, r.param + " row " + r.error);
        for (std::size_t i = 1; i < mu.size(); ++i) mu_ok += mu[i].x_star > mu[i - 1].x_star;
        for (std::size_t i = 1; i < M.size(); ++i)
            M_ok += M[i].x_star > M[i - 1].x_star && M[i].H_at_x_star > M[i - 1].H_at_x_star;
        for (std::size_t i = 1; i < k.size(); ++i)
            k_ok += k[i].x_star < k[i - 1].x_star && k[i].H_at_x_star < k[i - 1].H_at_x_star;
        o.require(mu_ok == 4 && M_ok == 5 && k_ok == 4, "ordering");
        o.detail << "ordered steps mu=" << mu_ok << "/4 M=" << M_ok << "/5 kappa=" << k_ok << "/4";
    });

    criterion(6, "ergodic cross-validation", 180.0, [](Outcome& o) {
        SimConfig c;
        c.horizon_T = 1e4;
        c.dt = 1e-3;
        c.seed = 1;
        const auto t = optimal_threshold(base, 400);
        const auto bb = monte_carlo_yield(base, make_bang_bang(t.x_star, 1), YieldSpec::identity(), c, 32);
        const double h = yield_H(base, t.x_star);
        c.seed = 1000;
        const auto cst = monte_carlo_yield(base, Strategy::constant(0.25, 1), YieldSpec::identity(), c, 32);
        o.require(std::abs(bb.mean - h) < 3 * bb.std_error, "bang-bang");
        o.require(std::abs(cst.mean - 0.0625) < 3 * cst.std_error, "constant");
        char buf[200];
        std::snprintf(buf, sizeof buf, "bang-bang %.5f+-%.5f vs %.5f; constant %.5f+-%.5f vs 0.0625", bb.mean,
                      bb.std_error, h, cst.mean, cst.std_error);
        o.detail << buf;
    });

    criterion(7, "stationary density", 0, [](Outcome& o) {
        const auto none = stationary_density(base, Strategy::none());
        double pointwise = 0.0;
        for (std::size_t i = 0; i < none.grid.size(); ++i)
            pointwise = std::max(pointwise, std::abs(none.values[i] - 2.0 * std::exp(-2.0 * none.grid[i])));
        o.require(pointwise <= 1e-8, "pointwise");

        const auto b = make_bang_bang(0.4643296884, 1);
        const auto c = Strategy::constant(0.25, 1);
        double norm = 0.0, mass = 0.0;
        for (const auto* s : {&b, &c, static_cast<const Strategy*>(nullptr)}) {
            const Strategy strat = s ? *s : Strategy::none();
            for (int n : {4000, 20001}) {
                const auto prof = stationary_density(base, strat, n);
                const double m = prof.mass_between(prof.truncation.y_min, prof.truncation.y_max) +
                                 prof.truncation.lower_tail_mass + prof.truncation.upper_tail_mass;
                mass = std::max(mass, std::abs(m - 1.0));
                if (n == 20001) norm = std::max(norm, std::abs(prof.trapezoid_integral() - 1.0));
            }
        }
        o.require(mass <= 1e-6, "normalisation (exact mass)");
        o.require(norm <= 1e-6, "normalisation (grid trapezoid)");

        double fp = 0.0, worst_ratio = 1e300;
        for (const Strategy& s : {Strategy::none(), c, b}) {
            const double r4 = fokker_planck_residual(base, s, stationary_density(base, s, 4000));
            const double r8 = fokker_planck_residual(base, s, stationary_density(base, s, 8000));
            fp = std::max(fp, r4);
            worst_ratio = std::min(worst_ratio, r4 / r8);
        }
        o.require(fp < 1e-4, "FP residual");
        o.require(worst_ratio > 3.5, "O(h^2) decay");
        char buf[200];
        std::snprintf(buf, sizeof buf, "pointwise=%.1e mass=%.1e trapz=%.1e FP=%.1e ratio=%.2f", pointwise, mass,
                      norm, fp, worst_ratio);
        o.detail << buf;
    });

    criterion(8, "concave yield control", 0, [](Outcome& o) {
        const auto lg = YieldSpec::log1p();
        auto vx = [](double x) { return 2.0 / (1.0 + x); };
        double prev = 0.0, min_ratio = 1e300, branch_err = 0.0;
        int branch_miss = 0;
        for (int n : {201, 401, 801, 1601, 3201}) {
            std::vector<double> grid(n);
            for (int i = 0; i < n; ++i) grid[i] = 0.1 + 9.9 * i / (n - 1);
            const auto s = concave_control(base, lg, vx, grid);
            double jump = 0.0;
            for (int i = 0; i < n; ++i) {
                const double x = grid[i], a = vx(x), v = s.values()[i];
                // Phi'(w) = 1/(1+w), so [Phi']^{-1}(a) = 1/a - 1 in closed form.
                double want;
                int branch;
                if (a >= 1.0) {
                    want = 0.0, branch = 0;
                } else if ((1.0 / a - 1.0) >= x * base.harvest_cap_M) {
                    want = base.harvest_cap_M, branch = 2;
                } else {
                    want = (1.0 / a - 1.0) / x, branch = 1;
                }
                const int got = v == 0.0 ? 0 : (v == base.harvest_cap_M ? 2 : 1);
                if (got != branch && !(branch == 1 && std::abs(v - want) < 1e-9)) ++branch_miss;
                branch_err = std::max(branch_err, std::abs(v - want));
                if (i) jump = std::max(jump, std::abs(v - s.values()[i - 1]));
            }
            if (prev > 0) min_ratio = std::min(min_ratio, prev / jump);
            prev = jump;
        }
        o.require(min_ratio >= 1.8, "jump ratio");
        o.require(branch_miss == 0 && branch_err < 1e-9, "three-branch formula");
        o.detail << "min jump ratio=" << min_ratio << " max |v - formula|=" << branch_err;
    });

    criterion(9, "convex yield", 0, [](Outcome& o) {
        const auto sq = YieldSpec::power(2.0);
        double err = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double x = 0.02 + 0.03 * i;
            err = std::max(err, std::abs(convex_G(base, sq, x) - (2 * x * x * x - 3 * x * x)));
        }
        o.require(err <= 1e-12, "G formula");
        const auto m = convex_G_minimum(base, sq, detail::geometric_grid(1e-3, 100.0, 2000));
        o.require(m.unique_minimum && std::abs(m.x_min - 1.0) < 1e-6, "unique minimum at 1");
        const auto t = optimal_threshold(base, 400, sq);
        const auto rep = crossing_report(integrate_phi(base, sq, t.H_at_x_star, t.x_star), base, t.H_at_x_star, sq);
        o.require(rep.verdict == Verdict::SingleFromAbove, "convex verdict " + rep.violated);
        o.detail << "max |G - (2x^3 - 3x^2)|=" << err << " x_min=" << m.x_min << " x*=" << t.x_star;
    });

    criterion(10, "extinction regime", 0, [](Outcome& o) {
        const auto ext = ModelParams::logistic(0.4, 1, 1, 1);
        int extinct = 0;
        for (int i = 0; i < 20; ++i) {
            SimConfig c;
            c.horizon_T = 1e4;
            c.seed = 1 + i;
            extinct += simulate_path(ext, Strategy::none(), YieldSpec::identity(), c).extinct_flag;
        }
        o.require(extinct >= 18, "extinct paths");
        bool raised = false;
        try {
            (void)stationary_density(ext, Strategy::none());
        } catch (const ExtinctionError&) {
            raised = true;
        }
        o.require(raised, "ExtinctionError");
        o.detail << extinct << "/20 extinct";
    });

    criterion(11, "CLI determinism", 0, [](Outcome& o) {
        const fs::path cli = env_path("HARVEST_CLI", "harvest");
        const fs::path cfg = env_path("HARVEST_CONFIG_DIR", "configs");
        const fs::path root = fs::temp_directory_path() / "harvest_acceptance";
        fs::remove_all(root);
        fs::create_directories(root);

        auto reduced = [&](const std::string& name) {
            auto j = nlohmann::ordered_json::parse(slurp(cfg / name));
            if (j.contains("simulate")) {
                j["simulate"]["T"] = 500;
                j["simulate"]["replicates"] = 4;
                j["simulate"]["trajectory_every"] = 100;
            }
            if (j.contains("sweep")) j["sweep"]["scan_n"] = 100;
            const auto p = root / name;
            std::ofstream(p) << j.dump(2);
            return p;
        };
        const std::vector<std::pair<std::string, std::string>> runs{
            {"validate", "base.json"},  {"optimize", "base.json"},  {"sweep", "sweep_M.json"},
            {"hjb-verify", "base.json"}, {"hjb-verify", "convex_x2.json"}, {"simulate", "base.json"},
            {"density", "base.json"},   {"density", "constant_msy.json"}};
        int compared = 0;
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const auto& [cmd, name] = runs[k];
            const auto config = reduced(name);
            std::vector<fs::path> outs;
            for (int rep = 0; rep < 2; ++rep) {
                const auto dir = root / (std::to_string(k) + "_" + std::to_string(rep));
                const std::string line = "\"" + cli.string() + "\" " + cmd + " \"" + config.string() + "\" -o \"" +
                                         dir.string() + "\" > /dev/null 2>&1";
                const int rc = std::system(line.c_str());
                o.require(rc == 0, cmd + " " + name + " exit status");
                outs.push_back(dir);
            }
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(outs[0])) files.push_back(e.path().filename());
            o.require(!files.empty(), cmd + " produced no files");
            for (const auto& f : files) {
                o.require(fs::exists(outs[1] / f) && slurp(outs[0] / f) == slurp(outs[1] / f),
                          cmd + " " + f.string() + " differs");
                ++compared;
            }
        }
        o.detail << compared << " files byte-identical across reruns";
    });

    std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
