#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "harvest/density.hpp"
#include "harvest/errors.hpp"
#include "harvest/model.hpp"
#include "harvest/numerics/golden.hpp"
#include "harvest/numerics/parallel.hpp"

namespace harvest {

struct ConstantOptimum {
    double rate;   // l*
    double yield;  // L(l*), the maximum sustainable yield
};

/// Asymptotic yield L(l) = l (mu_bar - l - sigma^2/2) / kappa of the constant
/// rule l in the logistic model (0 once the population cannot persist).
inline double constant_yield(const ModelParams& p, double rate) {
    if (p.drift_kind != DriftKind::Logistic) throw ContractError("constant_yield needs a logistic drift");
    const double growth = p.mu_bar - rate - 0.5 * p.sigma2();
    return growth > 0.0 ? rate * growth / p.kappa : 0.0;
}

inline ConstantOptimum optimal_constant(const ModelParams& p) {
    if (p.drift_kind != DriftKind::Logistic) throw ContractError("optimal_constant needs a logistic drift");
    const double r = p.mu_bar - 0.5 * p.sigma2();
    if (!(r > 0.0)) throw ExtinctionError("mu_bar - sigma^2/2 = " + std::to_string(r) + " <= 0");
    return {0.5 * r, r * r / (4.0 * p.kappa)};
}

struct YieldBounds {
    double lower;
    double upper;
};

/// Analytic sandwich for the optimal ergodic yield: the best constant rule
/// admissible under the cap from below (logistic only, 0 otherwise) and
/// sup_x x mu(x) from above. When l* > M the lower end is L(M), not L(l*).
inline YieldBounds yield_bounds(const ModelParams& p) {
    if (!persists(p))
        throw ExtinctionError("mu(0) - sigma^2/2 = " + std::to_string(stochastic_growth_rate(p)) + " <= 0");
    double lower = 0.0;
    if (p.drift_kind == DriftKind::Logistic) {
        const auto c = optimal_constant(p);
        lower = c.rate <= p.harvest_cap_M ? c.yield : constant_yield(p, p.harvest_cap_M);
    }
    return {lower, growth_peak(p).value};
}

struct ThresholdResult {
    double x_star = 0.0;
    double H_at_x_star = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    std::vector<std::pair<double, double>> grid_scan;
    int local_maxima = 0;
    bool unique_max_witness = false;
};

/// Number of local maxima of a sampled curve, ignoring steps of size <= tol.
/// A curve that starts by falling has a maximum at its left end; one that ends
/// rising has one at its right end.
inline int count_local_maxima(const std::vector<double>& values, double tol) {
    int trend = 0, first = 0, maxima = 0;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        const double d = values[i + 1] - values[i];
        if (std::abs(d) <= tol) continue;
        const int s = d > 0 ? 1 : -1;
        if (first == 0) first = s;
        if (trend > 0 && s < 0) ++maxima;
        trend = s;
    }
    if (first < 0) ++maxima;
    if (trend > 0) ++maxima;
    return maxima;
}

/// Best bang-bang threshold: scan H on a geometric grid over
/// [1e-3 x_ref, 10 x_ref] (x_ref = argmax x mu(x)), bracket the best node, then
/// golden-section to a bracket narrower than 1e-8.
inline ThresholdResult optimal_threshold(const ModelParams& p, int scan_n,
                                         const YieldSpec& yspec = YieldSpec::identity()) {
    if (scan_n < 3) throw ContractError("optimal_threshold: scan_n must be >= 3");
    if (p.drift_kind != DriftKind::Logistic) throw ContractError("optimal_threshold needs a logistic drift");
    const double x_ref = growth_peak(p).x;
    const auto etas = detail::geometric_grid(1e-3 * x_ref, 10.0 * x_ref, scan_n);
    const auto H = [&](double eta) { return bang_bang_yield(p, yspec, eta); };
    const auto values = numerics::parallel_map<double>(etas.size(), [&](std::size_t i) { return H(etas[i]); });

    ThresholdResult r;
    r.grid_scan.reserve(etas.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < etas.size(); ++i) {
        r.grid_scan.emplace_back(etas[i], values[i]);
        if (values[i] > values[best]) best = i;
    }
    r.local_maxima = count_local_maxima(values, 1e-10);
    r.unique_max_witness = r.local_maxima == 1;
    r.bracket_lo = etas[best == 0 ? 0 : best - 1];
    r.bracket_hi = etas[std::min(best + 1, etas.size() - 1)];
    const auto g = numerics::golden_section_max(H, r.bracket_lo, r.bracket_hi, 1e-8);
    r.x_star = g.x;
    r.H_at_x_star = g.value;
    if (values[best] > r.H_at_x_star) {
        r.x_star = etas[best];
        r.H_at_x_star = values[best];
    }
    return r;
}

struct SweepRow {
    std::string param;
    double value = 0.0;
    double x_star = 0.0;
    double H_at_x_star = 0.0;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    bool ok = false;
    std::string error;
    std::vector<std::pair<double, double>> curve;
};

struct SweepSpec {
    std::string name;  // mu_bar | kappa | M | sigma
    std::vector<double> values;
};

inline ModelParams with_parameter(ModelParams p, const std::string& name, double value) {
    if (name == "mu_bar")
        p.mu_bar = value;
    else if (name == "kappa")
        p.kappa = value;
    else if (name == "M")
        p.harvest_cap_M = value;
    else if (name == "sigma")
        p.sigma = value;
    else
        throw ContractError("unknown sweep parameter '" + name + "'");
    p.check();
    return p;
}

/// One optimisation per value, rows in input order. A failing row records its
/// error and the sweep moves on.
inline std::vector<SweepRow> parameter_sweep(const ModelParams& base, const SweepSpec& vary, int scan_n = 400) {
    std::vector<SweepRow> rows;
    rows.reserve(vary.values.size());
    for (double v : vary.values) {
        SweepRow row;
        row.param = vary.name;
        row.value = v;
        try {
            const auto p = with_parameter(base, vary.name, v);
            const auto t = optimal_threshold(p, scan_n);
            const auto b = yield_bounds(p);
            row.x_star = t.x_star;
            row.H_at_x_star = t.H_at_x_star;
            row.lower_bound = b.lower;
            row.upper_bound = b.upper;
            row.curve = t.grid_scan;
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace harvest
