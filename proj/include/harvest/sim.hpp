#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "harvest/density.hpp"
#include "harvest/errors.hpp"
#include "harvest/model.hpp"
#include "harvest/numerics/parallel.hpp"
#include "harvest/numerics/philox.hpp"
#include "harvest/strategy.hpp"

namespace harvest {

struct SimConfig {
    double x0 = 0.5;
    double horizon_T = 1e4;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    double burn_in_fraction = 0.1;
    int hist_bins = 12;
    double hist_lo = 0.0;  // 0: x_ref / 100
    double hist_hi = 0.0;  // 0: 20 x_ref
    int trajectory_every = 0;

    void check() const {
        if (!(x0 > 0.0)) throw ContractError("x0 must be > 0");
        if (!(horizon_T > 0.0)) throw ContractError("horizon_T must be > 0");
        if (!(dt > 0.0)) throw ContractError("dt must be > 0");
        if (dt > horizon_T / 1000.0) throw ContractError("dt must be <= horizon_T / 1000");
        if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
            throw ContractError("burn_in_fraction must lie in [0, 1)");
        if (hist_bins < 1) throw ContractError("hist_bins must be >= 1");
        if (trajectory_every < 0) throw ContractError("trajectory_every must be >= 0");
    }
};

/// Occupation measure after burn-in. masses[0] is (0, edges[0]), masses[k] is
/// [edges[k-1], edges[k]) and masses.back() is [edges.back(), inf).
struct Histogram {
    std::vector<double> edges;
    std::vector<double> masses;
};

struct TrajectoryPoint {
    double t, x, v;
};

struct PathSummary {
    double empirical_yield = 0.0;
    Histogram histogram;
    double min_x = 0.0;
    double max_x = 0.0;
    bool extinct_flag = false;
    double extinction_time = 0.0;
    std::vector<TrajectoryPoint> trajectory;
};

inline constexpr double kExtinctionFloor = 1e-10;

/// Log-space Euler-Maruyama for dX = X(mu(X) - v(X))dt + sigma X dB, driven
/// by standard normals drawn from `normal()` (one per step).
/// A path that stays below the floor for one full time unit is classified
/// extinct and frozen; the rest of the horizon is booked at the frozen state.
template <typename NormalSource>
PathSummary simulate_path_with(const ModelParams& p, const Strategy& s, const YieldSpec& yspec,
                               const SimConfig& cfg, NormalSource&& normal) {
    cfg.check();
    p.check();
    const auto steps = static_cast<std::int64_t>(std::llround(cfg.horizon_T / cfg.dt));
    const auto burn = static_cast<std::int64_t>(std::floor(cfg.burn_in_fraction * static_cast<double>(steps)));
    const double dt = cfg.dt;
    const double sq = p.sigma * std::sqrt(dt);
    const double half_s2 = 0.5 * p.sigma2();
    const bool identity = yspec.is_identity();
    const bool logistic = p.drift_kind == DriftKind::Logistic;

    double lo = cfg.hist_lo, hi = cfg.hist_hi;
    if (lo <= 0.0 || hi <= 0.0) {
        const double x_ref = growth_peak(p).x;
        if (lo <= 0.0) lo = x_ref / 100.0;
        if (hi <= 0.0) hi = 20.0 * x_ref;
    }
    if (!(lo < hi)) throw ContractError("histogram range must satisfy lo < hi");
    const int nb = cfg.hist_bins;
    const double ulo = std::log(lo), du = (std::log(hi) - ulo) / nb;
    PathSummary out;
    out.histogram.edges.resize(nb + 1);
    for (int k = 0; k <= nb; ++k) out.histogram.edges[k] = std::exp(ulo + du * k);
    out.histogram.edges.front() = lo;
    out.histogram.edges.back() = hi;
    std::vector<double> counts(nb + 2, 0.0);
    auto bin_of = [&](double y) -> std::size_t {
        const double r = (y - ulo) / du;
        if (r < 0.0) return 0;
        if (r >= nb) return static_cast<std::size_t>(nb + 1);
        return static_cast<std::size_t>(r) + 1;
    };

    double y = std::log(cfg.x0);
    double x = cfg.x0;
    double yield_sum = 0.0;
    double below = 0.0;
    out.min_x = out.max_x = x;
    std::int64_t i = 0;
    for (; i < steps; ++i) {
        x = std::exp(y);
        out.min_x = std::min(out.min_x, x);
        out.max_x = std::max(out.max_x, x);
        const double v = s.eval_unchecked(x);
        if (cfg.trajectory_every > 0 && i % cfg.trajectory_every == 0)
            out.trajectory.push_back({static_cast<double>(i) * dt, x, v});
        if (i >= burn) {
            yield_sum += identity ? x * v : yspec(x * v);
            counts[bin_of(y)] += 1.0;
        }
        if (x < kExtinctionFloor) {
            below += dt;
            if (below >= 1.0 - 0.5 * dt) {
                out.extinct_flag = true;
                out.extinction_time = static_cast<double>(i + 1) * dt;
                break;
            }
        } else {
            below = 0.0;
        }
        const double mu = logistic ? p.mu_bar - p.kappa * x : drift_mu(p, x);
        y += (mu - v - half_s2) * dt + sq * normal();
    }
    if (out.extinct_flag) {
        // Remaining steps sit at the frozen state.
        x = std::exp(y);
        out.min_x = std::min(out.min_x, x);
        const double v = s.eval_unchecked(x);
        const double first = static_cast<double>(std::max(i + 1, burn));
        const double rest = static_cast<double>(steps) - first;
        if (rest > 0.0) {
            yield_sum += rest * (identity ? x * v : yspec(x * v));
            counts[bin_of(y)] += rest;
        }
    }
    const double kept = static_cast<double>(steps - burn);
    out.empirical_yield = kept > 0 ? yield_sum / kept : 0.0;
    double total = 0.0;
    for (double c : counts) total += c;
    out.histogram.masses.resize(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k) out.histogram.masses[k] = total > 0 ? counts[k] / total : 0.0;
    return out;
}

/// Path driven by the counter-based stream keyed by cfg.seed.
inline PathSummary simulate_path(const ModelParams& p, const Strategy& s, const YieldSpec& yspec,
                                 const SimConfig& cfg) {
    numerics::NormalStream stream(cfg.seed);
    return simulate_path_with(p, s, yspec, cfg, [&stream] { return stream.next(); });
}

struct MonteCarloResult {
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<double> yields;
    int extinct_count = 0;
};

/// Replicates run with seeds seed, seed+1, ...; aggregation is in seed order.
inline MonteCarloResult monte_carlo_yield(const ModelParams& p, const Strategy& s, const YieldSpec& yspec,
                                          const SimConfig& cfg, int replicates) {
    if (replicates < 2) throw ContractError("monte_carlo_yield needs replicates >= 2");
    cfg.check();
    const auto paths = numerics::parallel_map<PathSummary>(static_cast<std::size_t>(replicates), [&](std::size_t i) {
        SimConfig c = cfg;
        c.seed = cfg.seed + i;
        c.trajectory_every = 0;
        return simulate_path(p, s, yspec, c);
    });
    MonteCarloResult r;
    for (const auto& path : paths) {
        r.yields.push_back(path.empirical_yield);
        r.extinct_count += path.extinct_flag ? 1 : 0;
    }
    const double n = static_cast<double>(replicates);
    double sum = 0.0;
    for (double y : r.yields) sum += y;
    r.mean = sum / n;
    double ss = 0.0;
    for (double y : r.yields) ss += (y - r.mean) * (y - r.mean);
    r.std_error = std::sqrt(ss / (n - 1.0) / n);
    return r;
}

/// Total variation between the path's occupation histogram and the analytic
/// density binned on the same edges (end bins open).
inline double occupancy_vs_density(const PathSummary& summary, const DensityProfile& prof) {
    const auto& e = summary.histogram.edges;
    const auto& m = summary.histogram.masses;
    if (e.size() < 2 || m.size() != e.size() + 1) throw ContractError("malformed histogram");
    if (e.back() <= prof.truncation.y_min || e.front() >= prof.truncation.y_max)
        throw ContractError("histogram and density supports are disjoint");
    double tv = std::abs(m.front() - prof.mass_between(0.0, e.front()));
    for (std::size_t k = 0; k + 1 < e.size(); ++k) tv += std::abs(m[k + 1] - prof.mass_between(e[k], e[k + 1]));
    tv += std::abs(m.back() - prof.mass_between(e.back(), std::numeric_limits<double>::infinity()));
    return 0.5 * tv;
}

/// Total variation between two histograms on identical edges.
inline double occupancy_distance(const Histogram& a, const Histogram& b) {
    if (a.edges != b.edges || a.masses.size() != b.masses.size())
        throw ContractError("histograms must share their edges");
    double tv = 0.0;
    for (std::size_t k = 0; k < a.masses.size(); ++k) tv += std::abs(a.masses[k] - b.masses[k]);
    return 0.5 * tv;
}

}  // namespace harvest
