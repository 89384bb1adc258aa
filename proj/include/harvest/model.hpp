#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "harvest/errors.hpp"
#include "harvest/numerics/golden.hpp"

namespace harvest {

enum class DriftKind { Logistic, Custom };

/// Per-capita growth model dX = X(mu(X) - v(X)) dt + sigma X dB with harvest
/// rates bounded by `harvest_cap_M`.
struct ModelParams {
    DriftKind drift_kind = DriftKind::Logistic;
    double mu_bar = 1.0;
    double kappa = 1.0;
    std::function<double(double)> custom_mu;
    std::string custom_name;
    double sigma = 1.0;
    double harvest_cap_M = 1.0;
    double x_max = 10.0;

    static ModelParams logistic(double mu_bar, double kappa, double sigma, double cap,
                                double x_max = 0.0) {
        ModelParams p;
        p.drift_kind = DriftKind::Logistic;
        p.mu_bar = mu_bar;
        p.kappa = kappa;
        p.sigma = sigma;
        p.harvest_cap_M = cap;
        p.x_max = x_max > 0.0 ? x_max : 10.0 * mu_bar / kappa;
        p.check();
        return p;
    }

    static ModelParams custom(std::function<double(double)> mu, double sigma, double cap,
                              double x_max, std::string name = "custom") {
        ModelParams p;
        p.drift_kind = DriftKind::Custom;
        p.custom_mu = std::move(mu);
        p.custom_name = std::move(name);
        p.sigma = sigma;
        p.harvest_cap_M = cap;
        p.x_max = x_max;
        p.check();
        return p;
    }

    double sigma2() const { return sigma * sigma; }

    /// Structural invariants. Persistence is deliberately not enforced here:
    /// extinction-regime models are valid inputs for simulation and reports.
    void check() const {
        if (!(sigma > 0.0)) throw ContractError("sigma must be > 0");
        if (!(harvest_cap_M > 0.0)) throw ContractError("harvest cap M must be > 0");
        if (!(x_max > 0.0)) throw ContractError("x_max must be > 0");
        if (drift_kind == DriftKind::Logistic) {
            if (!(mu_bar > 0.0)) throw ContractError("logistic mu_bar must be > 0");
            if (!(kappa > 0.0)) throw ContractError("logistic kappa must be > 0");
        } else if (!custom_mu) {
            throw ContractError("custom drift requires a mu(x) function");
        }
    }
};

inline double drift_mu(const ModelParams& p, double x) {
    if (!(x >= 0.0)) throw DomainError("drift_mu: x must be >= 0");
    if (p.drift_kind == DriftKind::Logistic) return p.mu_bar - p.kappa * x;
    const double v = p.custom_mu(x);
    if (!std::isfinite(v)) throw DomainError("drift_mu: custom drift undefined at x=" + std::to_string(x));
    return v;
}

/// mu(0) - sigma^2/2, the stochastic growth rate of the unharvested population.
inline double stochastic_growth_rate(const ModelParams& p) {
    return drift_mu(p, 0.0) - 0.5 * p.sigma2();
}

inline bool persists(const ModelParams& p) { return stochastic_growth_rate(p) > 0.0; }

/// Location and value of max_x x*mu(x).
struct GrowthPeak {
    double x;
    double value;
};

inline GrowthPeak growth_peak(const ModelParams& p) {
    if (p.drift_kind == DriftKind::Logistic) {
        const double x = p.mu_bar / (2.0 * p.kappa);
        return {x, p.mu_bar * p.mu_bar / (4.0 * p.kappa)};
    }
    // Coarse scan first so the golden-section bracket holds the global peak.
    const int n = 2000;
    double best_x = 0.0, best = 0.0;
    for (int i = 1; i <= n; ++i) {
        const double x = p.x_max * i / n;
        const double v = x * drift_mu(p, x);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    const double h = p.x_max / n;
    auto r = numerics::golden_section_max([&](double x) { return x * drift_mu(p, x); },
                                          std::max(0.0, best_x - h), best_x + h, 1e-12);
    return {r.x, r.value};
}

// --------------------------------------------------------------------------
// Yield functions

enum class YieldKind { Identity, Concave, Convex, Custom };

struct YieldSpec {
    YieldKind kind = YieldKind::Identity;
    std::function<double(double)> phi;
    std::function<double(double)> phi_prime;
    int growth_exponent_n = 2;
    std::string name = "identity";

    double operator()(double w) const { return phi(w); }
    double derivative(double w) const {
        if (!phi_prime) throw ContractError("yield '" + name + "' has no derivative");
        return phi_prime(w);
    }
    bool is_identity() const { return kind == YieldKind::Identity; }

    static YieldSpec identity() {
        return {YieldKind::Identity, [](double w) { return w; }, [](double) { return 1.0; }, 2,
                "identity"};
    }
    /// Phi(w) = ln(1 + w), strictly concave.
    static YieldSpec log1p() {
        return {YieldKind::Concave, [](double w) { return std::log1p(w); },
                [](double w) { return 1.0 / (1.0 + w); }, 1, "log1p"};
    }
    /// Phi(w) = w^p; convex for p >= 1, concave for 0 < p < 1.
    static YieldSpec power(double p) {
        if (!(p > 0.0)) throw ContractError("power yield exponent must be > 0");
        const auto kind = p >= 1.0 ? YieldKind::Convex : YieldKind::Concave;
        return {kind, [p](double w) { return std::pow(w, p); },
                [p](double w) { return p * std::pow(w, p - 1.0); },
                static_cast<int>(std::floor(p)) + 1, "power(" + std::to_string(p) + ")"};
    }
};

// --------------------------------------------------------------------------
// Assumption checks

struct AssumptionCheck {
    std::string name;
    bool pass;
    double witness;
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    bool all_pass = true;

    void add(std::string name, bool pass, double witness, std::string detail = {}) {
        checks.push_back({std::move(name), pass, witness, std::move(detail)});
        all_pass = all_pass && pass;
    }
    const AssumptionCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {
inline std::vector<double> geometric_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    const double r = std::log(hi / lo);
    for (int i = 0; i < n; ++i) g[i] = lo * std::exp(r * i / (n - 1));
    g.back() = hi;
    return g;
}
}  // namespace detail

/// Grid checks of the standing drift assumptions plus persistence. The
/// Lipschitz item is a heuristic: difference quotients between grid nodes must
/// stay below ten times the largest pointwise slope estimate.
inline AssumptionReport validate_assumptions(const ModelParams& p, int grid_n) {
    if (grid_n < 100) throw ContractError("validate_assumptions: grid_n must be >= 100");
    p.check();
    AssumptionReport rep;
    const auto grid = detail::geometric_grid(p.x_max * 1e-6, p.x_max, grid_n);
    std::vector<double> mu(grid.size());
    bool finite = true;
    double bad_x = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        try {
            mu[i] = drift_mu(p, grid[i]);
        } catch (const DomainError&) {
            finite = false;
            bad_x = grid[i];
            break;
        }
    }
    if (!finite) {
        rep.add("mu_defined", false, bad_x, "drift undefined on grid");
        return rep;
    }

    {
        double max_slope = 0.0;
        for (double x : grid) {
            const double h = 1e-6 * x;
            max_slope = std::max(max_slope, std::abs(drift_mu(p, x + h) - drift_mu(p, x - h)) / (2 * h));
        }
        const double bound = 10.0 * max_slope + 1e-12;
        bool ok = true;
        double w = 0.0;
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const double q = std::abs(mu[i + 1] - mu[i]) / (grid[i + 1] - grid[i]);
            if (q > bound) {
                ok = false;
                w = grid[i];
                break;
            }
        }
        rep.add("mu_locally_lipschitz", ok, w, "heuristic: grid difference quotients bounded");
    }
    {
        bool ok = true;
        double w = 0.0;
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            if (mu[i + 1] > mu[i] + 1e-12 * (1.0 + std::abs(mu[i]))) {
                ok = false;
                w = grid[i];
                break;
            }
        }
        rep.add("mu_decreasing", ok, w);
    }
    {
        const double top = mu.back();
        const double decade = drift_mu(p, p.x_max / 10.0);
        rep.add("mu_to_minus_infinity", top < 0.0 && top < decade, p.x_max,
                "mu(x_max) negative and still falling over the top decade");
    }
    {
        // x*mu(x) must rise then fall: exactly one + to - change, none back.
        int sign = 0, changes = 0, rises_after_fall = 0;
        double w = 0.0;
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const double d = grid[i + 1] * mu[i + 1] - grid[i] * mu[i];
            const int s = d > 0 ? 1 : (d < 0 ? -1 : 0);
            if (s == 0) continue;
            if (sign != 0 && s != sign) {
                if (s < 0) {
                    ++changes;
                    w = grid[i];
                } else {
                    ++rises_after_fall;
                }
            }
            sign = s;
        }
        rep.add("x_mu_unimodal", changes == 1 && rises_after_fall == 0, w);
    }
    {
        const double r = stochastic_growth_rate(p);
        rep.add("persistence", r > 0.0, 0.0, "mu(0) - sigma^2/2 = " + std::to_string(r));
    }
    return rep;
}

/// Checks of the yield-function assumptions on a geometric grid over
/// [1e-6, 1e6]: Phi(0) = 0, continuity, subpolynomial growth with the declared
/// exponent, and consistency of Phi' with the declared curvature class.
inline AssumptionReport validate_yield(const YieldSpec& y, int grid_n) {
    if (grid_n < 100) throw ContractError("validate_yield: grid_n must be >= 100");
    AssumptionReport rep;
    rep.add("phi_zero_at_zero", std::abs(y(0.0)) <= 1e-14, 0.0);

    const auto grid = detail::geometric_grid(1e-6, 1e6, grid_n);
    {
        bool ok = true;
        double w = 0.0;
        for (double x : grid) {
            const double v = y(x);
            if (!std::isfinite(v) || v < 0.0) {
                ok = false;
                w = x;
                break;
            }
        }
        rep.add("phi_nonnegative", ok, w);
    }
    {
        // Chase the larger half-increment down 40 bisections; a jump survives.
        bool ok = true;
        double w = 0.0;
        std::vector<double> cells(grid.begin(), grid.end());
        cells.insert(cells.begin(), 0.0);
        for (std::size_t i = 0; i + 1 < cells.size() && ok; ++i) {
            double a = cells[i], b = cells[i + 1];
            for (int k = 0; k < 40; ++k) {
                const double m = 0.5 * (a + b);
                if (std::abs(y(m) - y(a)) >= std::abs(y(b) - y(m)))
                    b = m;
                else
                    a = m;
            }
            const double jump = std::abs(y(b) - y(a));
            if (jump > 1e-6 * (1.0 + std::abs(y(a)))) {
                ok = false;
                w = a;
            }
        }
        rep.add("phi_continuous", ok, w);
    }
    {
        // Phi(x)/x^n decreasing across the top decade and already small.
        const int n = y.growth_exponent_n;
        const auto top = detail::geometric_grid(1e5, 1e6, 50);
        bool ok = true;
        double prev = y(top[0]) / std::pow(top[0], n);
        const double first = prev;
        for (std::size_t i = 1; i < top.size(); ++i) {
            const double r = y(top[i]) / std::pow(top[i], n);
            if (r > prev * (1.0 + 1e-12)) ok = false;
            prev = r;
        }
        ok = ok && prev < first;
        rep.add("phi_subpolynomial", ok, 1e6, "n = " + std::to_string(n));
    }
    if (y.kind == YieldKind::Concave || y.kind == YieldKind::Convex) {
        bool ok = static_cast<bool>(y.phi_prime);
        double w = 0.0;
        if (ok) {
            std::vector<double> pts(grid.begin(), grid.end());
            pts.insert(pts.begin(), 0.0);
            for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
                const double d0 = y.derivative(pts[i]);
                const double d1 = y.derivative(pts[i + 1]);
                const bool good = y.kind == YieldKind::Concave
                                      ? d1 < d0
                                      : d1 >= d0 - 1e-12 * (1.0 + std::abs(d0));
                if (!good) {
                    ok = false;
                    w = pts[i];
                    break;
                }
            }
        }
        rep.add(y.kind == YieldKind::Concave ? "phi_strictly_concave" : "phi_weakly_convex", ok, w);
    }
    return rep;
}

/// Solves Phi'(w) = a for a strictly concave yield. Returns 0 when a equals
/// Phi'(0), nullopt when a exceeds Phi'(0) or lies at/below inf Phi'.
inline std::optional<double> phi_prime_inverse(const YieldSpec& y, double a, double tol = 1e-10) {
    if (y.kind != YieldKind::Concave) throw ContractError("phi_prime_inverse needs a concave yield");
    const double top = y.derivative(0.0);
    if (a > top) return std::nullopt;
    if (a == top) return 0.0;
    double hi = 1.0;
    int doublings = 0;
    while (y.derivative(hi) >= a) {
        hi *= 2.0;
        if (++doublings > 1000 || !std::isfinite(hi)) return std::nullopt;
    }
    double lo = 0.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (y.derivative(mid) >= a)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace harvest
