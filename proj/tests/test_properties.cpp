#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <random>

#include "harvest/harvest.hpp"

using namespace harvest;
using Catch::Approx;

namespace {

const ModelParams base = ModelParams::logistic(1, 1, 1, 1);

struct Draw {
    std::mt19937_64 rng{20240611};
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }

    /// Logistic model with mu_bar - sigma^2/2 >= 0.2 so it persists.
    ModelParams persistent_logistic() {
        const double sigma = uniform(0.3, 1.3);
        const double mu_bar = 0.5 * sigma * sigma + uniform(0.2, 2.0);
        return ModelParams::logistic(mu_bar, uniform(0.5, 4.0), sigma, uniform(0.2, 3.0));
    }
};

}  // namespace

TEST_CASE("model properties") {
    Draw d;
    for (int k = 0; k < 50; ++k) {
        const auto p = d.persistent_logistic();
        const double a = d.uniform(0, 5), b = d.uniform(0, 5);
        CHECK(drift_mu(p, a) + drift_mu(p, b) == Approx(2 * drift_mu(p, 0.5 * (a + b))).margin(1e-13));
        CHECK(validate_assumptions(p, 200).all_pass);
    }
    const auto lg = YieldSpec::log1p();
    for (int k = 0; k < 200; ++k) {
        const double a = d.uniform(1e-3, 1.0);
        const auto w = phi_prime_inverse(lg, a);
        REQUIRE(w.has_value());
        CHECK(std::abs(lg.derivative(*w) - a) <= 1e-10);
    }
}

TEST_CASE("strategy properties") {
    Draw d;
    for (int k = 0; k < 50; ++k) {
        const double cap = d.uniform(0.1, 3), t = d.log_uniform(0.01, 10);
        const auto b = make_bang_bang(t, cap);
        const auto c = Strategy::constant(d.uniform(0, cap), cap);
        std::vector<double> grid, vals;
        double x = d.uniform(0.01, 0.1);
        for (int i = 0; i < 10; ++i, x *= d.uniform(1.1, 2.0)) {
            grid.push_back(x);
            vals.push_back(d.uniform(0, cap));
        }
        const auto tab = Strategy::tabulated(grid, vals, cap);
        for (int i = 0; i < 200; ++i) {
            const double y = d.log_uniform(1e-4, 1e3);
            for (const auto* s : {&b, &c, &tab}) {
                const double v = strategy_eval(*s, y);
                CHECK(v >= 0.0);
                CHECK(v <= cap);
            }
        }
        double last = 0.0;
        for (double y = 1e-3; y < 100; y *= 1.05) {
            const double v = b(y);
            CHECK(v >= last);
            last = v;
        }
        CHECK(b(t) == 0.0);
        CHECK(b(2 * t) == cap);
    }
}

TEST_CASE("density properties over random models") {
    Draw d;
    for (int k = 0; k < 12; ++k) {
        const auto p = d.persistent_logistic();
        const auto peak = growth_peak(p);
        const double eta = peak.x * d.log_uniform(0.1, 5.0);
        INFO("mu_bar=" << p.mu_bar << " kappa=" << p.kappa << " sigma=" << p.sigma << " M=" << p.harvest_cap_M
                       << " eta=" << eta);
        const auto b = make_bang_bang(eta, p.harvest_cap_M);
        try {
            const auto prof = stationary_density(p, b);
            CHECK(prof.trapezoid_integral() == Approx(1.0).margin(1e-6));
            CHECK(asymptotic_yield(p, b, YieldSpec::identity(), prof) == Approx(yield_H(p, eta)).margin(1e-6));
            CHECK(yield_H(p, eta) > 0.0);
        } catch (const ExtinctionError&) {
            FAIL("persistent model reported extinction");
        }
        CHECK(yield_H(p, 200.0 * peak.x) < 1e-12);
    }
}

TEST_CASE("optimisation properties") {
    Draw d;
    for (int k = 0; k < 6; ++k) {
        const auto p = d.persistent_logistic();
        INFO("mu_bar=" << p.mu_bar << " kappa=" << p.kappa << " sigma=" << p.sigma << " M=" << p.harvest_cap_M);
        const auto t = optimal_threshold(p, 150);
        const auto b = yield_bounds(p);
        CHECK(b.lower < t.H_at_x_star + 1e-12);
        CHECK(t.H_at_x_star < b.upper);
        for (int i = 0; i <= 100; ++i) {
            const double l = std::min(p.harvest_cap_M, p.mu_bar) * i / 100.0;
            if (l <= p.harvest_cap_M) CHECK(t.H_at_x_star >= constant_yield(p, l) - 1e-12);
        }
        const double delta = 1e-4 * t.x_star;
        CHECK(yield_H(p, t.x_star + delta) <= t.H_at_x_star);
        CHECK(yield_H(p, t.x_star - delta) <= t.H_at_x_star);
        CHECK(t.unique_max_witness);
    }
}

TEST_CASE("HJB profile properties") {
    const auto t = optimal_threshold(base, 400);
    const double rho = t.H_at_x_star;
    const auto prof = integrate_phi(base, YieldSpec::identity(), rho, t.x_star, 1e-4 * t.x_star, 10 * t.x_star, 20000);

    SECTION("regime labels match phi against the barrier") {
        for (std::size_t i = 0; i < prof.grid.size(); ++i) {
            const bool above = prof.phi[i] > prof.barrier[i];
            CHECK(above == (prof.regime[i] == Regime::NoHarvest));
        }
    }
    SECTION("phi is nonnegative") {
        for (double v : prof.phi) CHECK(v >= 0.0);
    }
    SECTION("the HJB balances rho with a finite-difference phi'") {
        double worst = 0.0;
        for (std::size_t i = 1; i + 1 < prof.grid.size(); ++i) {
            if (prof.regime[i - 1] != prof.regime[i] || prof.regime[i + 1] != prof.regime[i]) continue;
            if (prof.grid[i] == t.x_star || prof.grid[i - 1] == t.x_star || prof.grid[i + 1] == t.x_star) continue;
            const double x0 = prof.grid[i - 1], x1 = prof.grid[i], x2 = prof.grid[i + 1];
            const double h0 = x1 - x0, h1 = x2 - x1;
            const double dphi = -h1 / (h0 * (h0 + h1)) * prof.phi[i - 1] + (h1 - h0) / (h0 * h1) * prof.phi[i] +
                                h0 / (h1 * (h0 + h1)) * prof.phi[i + 1];
            const double v = prof.regime[i] == Regime::Harvest ? base.harvest_cap_M : 0.0;
            const double lhs = 0.5 * base.sigma2() * x1 * x1 * dphi + x1 * (drift_mu(base, x1) - v) * prof.phi[i] + x1 * v;
            worst = std::max(worst, std::abs(lhs - rho) / rho);
        }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("control properties") {
    Draw d;
    SECTION("identity and convex rules are two-valued and match the identity formula") {
        const auto id = YieldSpec::identity();
        const auto sq = YieldSpec::power(2.0);
        for (int k = 0; k < 500; ++k) {
            const double vx = d.uniform(0, 3), x = d.log_uniform(1e-3, 10), cap = d.uniform(0.1, 3);
            const double a = convex_control_rule(vx, x, id, cap);
            CHECK((a == 0.0 || a == cap));
            if (vx > 1) CHECK(a == 0.0);
            if (vx < 1) CHECK(a == cap);
            const double b = convex_control_rule(vx, x, sq, cap);
            CHECK((b == 0.0 || b == cap));
        }
    }
    SECTION("Phi(xM)/(xM) increases for convex power yields") {
        for (double p : {1.0, 1.5, 2.0, 3.0}) {
            const auto y = YieldSpec::power(p);
            double prev = -1.0;
            for (double x : detail::geometric_grid(1e-3, 1e2, 500)) {
                const double r = barrier_value(BarrierKind::PhiRatio, y, x, 1.3);
                CHECK(r >= prev);
                prev = r;
            }
        }
    }
    SECTION("concave control jumps shrink at first order") {
        const auto lg = YieldSpec::log1p();
        auto vx = [](double x) { return 2.0 / (1.0 + x); };
        double prev_jump = 0.0;
        for (int n : {201, 401, 801, 1601}) {
            std::vector<double> grid(n);
            for (int i = 0; i < n; ++i) grid[i] = 0.1 + 9.9 * i / (n - 1);
            const auto s = concave_control(base, lg, vx, grid);
            double jump = 0.0;
            for (int i = 0; i + 1 < n; ++i) jump = std::max(jump, std::abs(s.values()[i + 1] - s.values()[i]));
            if (prev_jump > 0) CHECK(prev_jump / jump >= 1.8);
            prev_jump = jump;
        }
    }
}

TEST_CASE("simulation properties") {
    SECTION("positivity and determinism") {
        SimConfig c;
        c.horizon_T = 500;
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            c.seed = seed;
            const auto a = simulate_path(base, make_bang_bang(0.3, 1), YieldSpec::identity(), c);
            const auto b = simulate_path(base, make_bang_bang(0.3, 1), YieldSpec::identity(), c);
            CHECK(a.min_x > 0.0);
            CHECK(std::memcmp(&a.empirical_yield, &b.empirical_yield, sizeof(double)) == 0);
            CHECK(a.histogram.masses == b.histogram.masses);
        }
    }
    SECTION("halving dt moves the yield by less than one standard error") {
        // Coarse and fine paths share Brownian increments: the coarse normal is
        // the normalised sum of the two fine normals covering the same step.
        const auto s = make_bang_bang(0.4643296812, 1);
        const int reps = 4;
        std::vector<double> coarse, fine;
        for (int r = 0; r < reps; ++r) {
            SimConfig c;
            c.horizon_T = 1e4;
            c.dt = 1e-3;
            numerics::NormalStream a(900 + r), b(900 + r);
            coarse.push_back(simulate_path_with(base, s, YieldSpec::identity(), c,
                                                [&a] { return (a.next() + a.next()) / std::sqrt(2.0); })
                                 .empirical_yield);
            c.dt = 5e-4;
            fine.push_back(simulate_path_with(base, s, YieldSpec::identity(), c, [&b] { return b.next(); })
                               .empirical_yield);
        }
        double mean_c = 0, mean_f = 0;
        for (int r = 0; r < reps; ++r) mean_c += coarse[r] / reps, mean_f += fine[r] / reps;
        double ss = 0;
        for (double y : coarse) ss += (y - mean_c) * (y - mean_c);
        const double se = std::sqrt(ss / (reps - 1) / reps);
        INFO("coarse " << mean_c << " fine " << mean_f << " se " << se);
        CHECK(std::abs(mean_c - mean_f) < se);
    }
    SECTION("occupancy matches the stationary density") {
        SimConfig c;
        c.seed = 77;
        const auto path = simulate_path(base, Strategy::none(), YieldSpec::identity(), c);
        CHECK(occupancy_vs_density(path, stationary_density(base, Strategy::none())) < 0.02);
        const auto b = make_bang_bang(0.4643296812, 1);
        const auto bb = simulate_path(base, b, YieldSpec::identity(), c);
        CHECK(occupancy_vs_density(bb, stationary_density(base, b)) < 0.02);
    }
    SECTION("ergodic cross-check for an off-optimal threshold") {
        SimConfig c;
        c.seed = 4000;
        const auto s = make_bang_bang(1.0, 1);
        const auto mc = monte_carlo_yield(base, s, YieldSpec::identity(), c, 8);
        const double analytic = asymptotic_yield(base, s, YieldSpec::identity(), stationary_density(base, s));
        INFO("mc " << mc.mean << " +- " << mc.std_error << " analytic " << analytic);
        CHECK(std::abs(mc.mean - analytic) < 3.0 * mc.std_error);
    }
}
