#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "harvest/errors.hpp"
#include "harvest/model.hpp"
#include "harvest/numerics/quadrature.hpp"
#include "harvest/strategy.hpp"

namespace harvest {

namespace detail {

/// log of the unnormalised speed density
///   q(y) = exp(2 * int_ref^y (mu(z) - v(z)) / (sigma^2 z) dz) / (sigma^2 y^2).
///
/// The harvest part is integrated exactly (v is piecewise constant). The drift
/// part is closed form for the logistic model; a custom drift goes through a
/// cumulative trapezoid table in ln y.
class LogSpeed {
public:
    LogSpeed(const ModelParams& p, const Strategy& s, double ref, int table_n)
        : p_(p), s_(s), ref_(ref), sigma2_(p.sigma2()) {
        const auto b = s.breakpoints();
        c0_ = s.rate_near_zero();
        double prev = c0_, cum_jump = 0.0, cum_jump_log = 0.0;
        for (double x : b) {
            const double c = s.eval_unchecked(std::nextafter(x, std::numeric_limits<double>::infinity()));
            cum_jump += c - prev;
            cum_jump_log += (c - prev) * std::log(x);
            breaks_.push_back(x);
            jump_.push_back(cum_jump);
            jump_log_.push_back(cum_jump_log);
            prev = c;
        }
        if (p.drift_kind == DriftKind::Custom) build_table(table_n);
        offset_ = harvest_integral(ref_);
    }

    double log_q(double y) const {
        return (2.0 / sigma2_) * (drift_integral(y) - (harvest_integral(y) - offset_)) -
               std::log(sigma2_ * y * y);
    }
    /// log of the density of ln X (unnormalised): q(e^u) e^u.
    double log_rho_z(double u) const {
        const double y = std::exp(u);
        return log_q(y) + u;
    }

    double ref() const { return ref_; }

private:
    // int_ref^y v(z)/z dz up to an additive constant.
    double harvest_integral(double y) const {
        const double ly = std::log(y);
        const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), y);
        const auto j = static_cast<std::size_t>(it - breaks_.begin());
        if (j == 0) return c0_ * ly;
        return (c0_ + jump_[j - 1]) * ly - jump_log_[j - 1];
    }

    // int_ref^y mu(z)/z dz
    double drift_integral(double y) const {
        if (p_.drift_kind == DriftKind::Logistic)
            return p_.mu_bar * std::log(y / ref_) - p_.kappa * (y - ref_);
        const double u = std::log(y);
        double pos = (u - table_lo_) / table_du_;
        if (pos < 0.0 || pos > static_cast<double>(table_.size() - 1))
            throw DomainError("custom drift table does not cover y=" + std::to_string(y));
        const auto i = std::min(static_cast<std::size_t>(pos), table_.size() - 2);
        const double t = pos - static_cast<double>(i);
        return table_[i] + t * (table_[i + 1] - table_[i]) - table_ref_;
    }

    void build_table(int n) {
        table_lo_ = std::log(ref_) - 80.0;
        const double hi = std::log(std::max(8.0 * p_.x_max, 8.0 * ref_));
        table_du_ = (hi - table_lo_) / (n - 1);
        table_.assign(n, 0.0);
        double prev = drift_mu(p_, std::exp(table_lo_));
        for (int i = 1; i < n; ++i) {
            const double cur = drift_mu(p_, std::exp(table_lo_ + i * table_du_));
            table_[i] = table_[i - 1] + 0.5 * table_du_ * (prev + cur);
            prev = cur;
        }
        table_ref_ = 0.0;
        table_ref_ = drift_integral(ref_);
    }

    ModelParams p_;
    Strategy s_;
    double ref_;
    double sigma2_;
    double c0_ = 0.0;
    double offset_ = 0.0;
    std::vector<double> breaks_, jump_, jump_log_;
    std::vector<double> table_;
    double table_lo_ = 0.0, table_du_ = 1.0, table_ref_ = 0.0;
};

}  // namespace detail

struct Truncation {
    double y_min = 0.0;
    double y_max = 0.0;
    double lower_tail_mass = 0.0;
    double upper_tail_mass = 0.0;
};

/// Stationary density of the controlled diffusion on a grid that is geometric
/// between breakpoints of the strategy (breakpoints are grid nodes).
struct DensityProfile {
    std::vector<double> grid;
    std::vector<double> values;
    double norm_constant_C1 = 0.0;
    double log_norm_constant = 0.0;
    Truncation truncation;
    std::string strategy_id;
    std::vector<double> breakpoints;
    std::shared_ptr<const detail::LogSpeed> speed;

    /// Exact normalised density at y (independent of the grid).
    double density_at(double y) const {
        if (!(y > 0.0)) return 0.0;
        return std::exp(speed->log_q(y) + log_norm_constant);
    }

    /// Probability mass on [a, b] by adaptive quadrature in ln y.
    double mass_between(double a, double b) const {
        a = std::max(a, truncation.y_min);
        b = std::min(b, truncation.y_max);
        if (!(a < b)) return 0.0;
        std::vector<double> cuts{std::log(a)};
        for (double x : breakpoints)
            if (x > a && x < b) cuts.push_back(std::log(x));
        cuts.push_back(std::log(b));
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                [&](double u) { return std::exp(speed->log_rho_z(u) + log_norm_constant); },
                cuts[k], cuts[k + 1], 20, 1e-12);
        }
        return total;
    }

    /// Trapezoid integral of the grid values, taken in the grid's own
    /// coordinate: int rho dy = int y rho(y) d(ln y).
    double trapezoid_integral() const {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < grid.size(); ++i)
            s += 0.5 * (grid[i] * values[i] + grid[i + 1] * values[i + 1]) *
                 std::log(grid[i + 1] / grid[i]);
        return s;
    }
};

namespace detail {

inline constexpr double kTailTarget = 1e-9;

inline double integrate_log_piece(const LogSpeed& sp, double shift, double u0, double u1) {
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double u) { return std::exp(sp.log_rho_z(u) - shift); }, u0, u1, 20, 1e-13);
}

}  // namespace detail

/// Stationary density of dX = X(mu(X) - v(X)) dt + sigma X dB.
///
/// Throws ExtinctionError when mu(0) - v(0+) - sigma^2/2 <= 0: the speed
/// measure is not integrable at 0 and the process is absorbed there.
inline DensityProfile stationary_density(const ModelParams& p, const Strategy& s, int grid_n = 20001) {
    p.check();
    if (grid_n < 5) throw ContractError("stationary_density: grid_n must be >= 5");
    const double sigma2 = p.sigma2();
    const double c0 = s.rate_near_zero();
    const double mu0 = drift_mu(p, 0.0);
    if (!(2.0 * (mu0 - c0) / sigma2 - 1.0 > 0.0))
        throw ExtinctionError("mu(0) - v(0+) - sigma^2/2 = " + std::to_string(mu0 - c0 - 0.5 * sigma2) +
                              " <= 0");

    const auto breaks = s.breakpoints();
    const double ref = s.kind() == StrategyKind::BangBang ? s.threshold() : 1.0;
    auto speed = std::make_shared<detail::LogSpeed>(p, s, ref, 10 * std::max(grid_n, 4000));

    // Core window around the reference point and every breakpoint.
    double core_lo = std::log(ref) - 1.0, core_hi = std::log(ref) + 1.0;
    for (double b : breaks) {
        core_lo = std::min(core_lo, std::log(b) - 1.0);
        core_hi = std::max(core_hi, std::log(b) + 1.0);
    }
    double shift = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 200; ++i)
        shift = std::max(shift, speed->log_rho_z(core_lo + (core_hi - core_lo) * i / 200.0));
    const double core_mass = detail::integrate_log_piece(*speed, shift, core_lo, core_hi);

    // Lower tail: for u < u_min, d ln rho_z / du >= 2(mu(y_min) - max v)/sigma^2 - 1.
    auto max_rate_below = [&](double y) {
        double m = c0;
        for (double b : breaks) {
            if (b >= y) break;
            m = std::max(m, s.eval_unchecked(std::nextafter(b, y)));
        }
        return m;
    };
    double u_min = core_lo;
    double lower_tail = 0.0;
    for (;;) {
        const double y = std::exp(u_min);
        const double slope = 2.0 * (drift_mu(p, y) - max_rate_below(y)) / sigma2 - 1.0;
        if (slope > 0.0) {
            lower_tail = std::exp(speed->log_rho_z(u_min) - shift) / slope / core_mass;
            if (lower_tail < detail::kTailTarget) break;
        }
        if (u_min < -700.0) {
            if (slope <= 0.0) lower_tail = 1.0;
            break;
        }
        u_min -= 1.0;
    }

    // Upper tail: v >= 0 and mu decreasing give slope <= 2 mu(y_max)/sigma^2 - 1.
    double u_max = core_hi;
    double upper_tail = 0.0;
    for (;;) {
        const double y = std::exp(u_max);
        const double slope = 1.0 - 2.0 * drift_mu(p, y) / sigma2;
        if (slope > 0.0) {
            upper_tail = std::exp(speed->log_rho_z(u_max) - shift) / slope / core_mass;
            if (upper_tail < detail::kTailTarget) break;
        }
        if (u_max > 700.0) {
            if (slope <= 0.0) upper_tail = 1.0;
            break;
        }
        u_max += std::log(2.0);
    }

    // Pieces split at breakpoints inside the window.
    std::vector<double> cuts{u_min};
    for (double b : breaks) {
        const double u = std::log(b);
        if (u > u_min && u < u_max) cuts.push_back(u);
    }
    cuts.push_back(u_max);

    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
        total += detail::integrate_log_piece(*speed, shift, cuts[k], cuts[k + 1]);

    DensityProfile prof;
    prof.log_norm_constant = -(std::log(total) + shift);
    prof.norm_constant_C1 = std::exp(prof.log_norm_constant);
    prof.truncation = {std::exp(u_min), std::exp(u_max), lower_tail, upper_tail};
    prof.strategy_id = s.describe();
    for (double b : breaks)
        if (b > prof.truncation.y_min && b < prof.truncation.y_max) prof.breakpoints.push_back(b);
    prof.speed = speed;

    // Intervals per piece proportional to its log-length, at least 2 each.
    const int intervals = grid_n - 1;
    const std::size_t pieces = cuts.size() - 1;
    std::vector<int> count(pieces);
    int assigned = 0;
    for (std::size_t k = 0; k < pieces; ++k) {
        count[k] = std::max(2, static_cast<int>(std::lround(intervals * (cuts[k + 1] - cuts[k]) /
                                                            (u_max - u_min))));
        assigned += count[k];
    }
    // Absorb rounding into the longest piece.
    const auto longest = static_cast<std::size_t>(std::max_element(count.begin(), count.end()) - count.begin());
    count[longest] += intervals - assigned;
    if (count[longest] < 2) throw ContractError("stationary_density: grid_n too small for breakpoints");

    prof.grid.reserve(grid_n);
    for (std::size_t k = 0; k < pieces; ++k) {
        for (int i = 0; i < count[k]; ++i)
            prof.grid.push_back(std::exp(cuts[k] + (cuts[k + 1] - cuts[k]) * i / count[k]));
    }
    prof.grid.push_back(std::exp(u_max));
    // Breakpoints exactly, not exp(log(b)).
    {
        std::size_t node = 0;
        for (std::size_t k = 1; k + 1 < cuts.size(); ++k) {
            node += count[k - 1];
            prof.grid[node] = prof.breakpoints[k - 1];
        }
    }
    prof.values.resize(prof.grid.size());
    for (std::size_t i = 0; i < prof.grid.size(); ++i) prof.values[i] = prof.density_at(prof.grid[i]);
    return prof;
}

/// Long-run yield int Phi(y v(y)) rho(y) dy, integrated in ln y piecewise
/// between the strategy's discontinuities.
inline double asymptotic_yield(const ModelParams& p, const Strategy& s, const YieldSpec& yspec,
                               const DensityProfile& prof) {
    (void)p;
    if (prof.strategy_id != s.describe())
        throw ContractError("asymptotic_yield: profile was generated for " + prof.strategy_id +
                            ", not " + s.describe());
    std::vector<double> cuts{std::log(prof.truncation.y_min)};
    for (double b : prof.breakpoints) cuts.push_back(std::log(b));
    cuts.push_back(std::log(prof.truncation.y_max));
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        // Piece interior has a single rate.
        const double rate = s.eval_unchecked(std::exp(0.5 * (cuts[k] + cuts[k + 1])));
        if (rate == 0.0) continue;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            [&](double u) {
                const double y = std::exp(u);
                return yspec(y * rate) * std::exp(prof.speed->log_rho_z(u) + prof.log_norm_constant);
            },
            cuts[k], cuts[k + 1], 20, 1e-12);
    }
    return total;
}

/// Yield of the bang-bang rule with threshold eta for the logistic model, as
/// the ratio of the explicit integrals of its speed density. Independent of
/// DensityProfile: different coordinates, different quadrature.
inline double bang_bang_yield(const ModelParams& p, const YieldSpec& yspec, double eta) {
    if (p.drift_kind != DriftKind::Logistic) throw ContractError("bang_bang_yield needs a logistic drift");
    if (!(eta > 0.0)) throw ContractError("bang_bang_yield: eta must be > 0");
    const double s2 = p.sigma2();
    const double gamma = 2.0 * p.mu_bar / s2 - 1.0;
    if (!(gamma > 0.0))
        throw ExtinctionError("mu_bar - sigma^2/2 = " + std::to_string(p.mu_bar - 0.5 * s2) + " <= 0");
    const double M = p.harvest_cap_M;
    const double decay = 2.0 * p.kappa / s2;
    const double upper_exp = 2.0 * (p.mu_bar - M) / s2;

    numerics::QuadratureOptions opt;
    opt.abs_tol = 1e-15;
    opt.rel_tol = 1e-12;

    // (0, eta]: y = eta t^(1/gamma) turns y^(gamma-1) into a constant.
    const auto low = numerics::integrate(
        [&](double t) { return std::exp(-decay * eta * (std::pow(t, 1.0 / gamma) - 1.0)); }, 0.0, 1.0,
        opt);
    const double d_low = low.value / (s2 * eta * gamma);

    const double scale = eta + 1.0 / decay;
    auto weight = [&](double y) {
        return std::exp(upper_exp * std::log(y / eta) - decay * (y - eta)) / (s2 * y * y);
    };
    auto mapped = [&](auto&& g) {
        return [&, g](double t) {
            if (t >= 1.0) return 0.0;
            const double r = 1.0 - t;
            const double y = eta + scale * t / r;
            const double v = g(y);
            return v == 0.0 ? 0.0 : v * scale / (r * r);
        };
    };
    const auto d_high = numerics::integrate(mapped([&](double y) { return weight(y); }), 0.0, 1.0, opt);
    const auto num = numerics::integrate(mapped([&](double y) { return yspec(y * M) * weight(y); }), 0.0,
                                         1.0, opt);
    return num.value / (d_low + d_high.value);
}

/// Asymptotic yield H(eta) of the threshold-eta bang-bang rule, identity yield.
inline double yield_H(const ModelParams& p, double eta) {
    return bang_bang_yield(p, YieldSpec::identity(), eta);
}

/// max over the interior grid of the stationary Fokker-Planck residual, written
/// for the density of ln X (f = y rho(y)):
///   | (sigma^2/2) f'' - ((mu - v - sigma^2/2) f)' |   (derivatives in ln y).
/// This equals y times the residual of the equation for rho, stays bounded at
/// the natural boundary 0, and is second order on the geometric grid. Nodes
/// within two cells of a strategy discontinuity are skipped.
inline double fokker_planck_residual(const ModelParams& p, const Strategy& s, const DensityProfile& prof) {
    const auto n = prof.grid.size();
    if (n < 7) throw ContractError("fokker_planck_residual: need at least 5 interior points");
    const double s2 = p.sigma2();
    std::vector<double> u(n), f(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = prof.grid[i];
        u[i] = std::log(y);
        f[i] = y * prof.values[i];
        g[i] = (drift_mu(p, y) - s.eval_unchecked(y) - 0.5 * s2) * f[i];
    }
    std::vector<bool> skip(n, false);
    for (double b : s.breakpoints()) {
        const auto it = std::lower_bound(prof.grid.begin(), prof.grid.end(), b);
        const auto j = static_cast<std::ptrdiff_t>(it - prof.grid.begin());
        for (std::ptrdiff_t k = j - 2; k <= j + 2; ++k)
            if (k >= 0 && k < static_cast<std::ptrdiff_t>(n)) skip[k] = true;
    }
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (skip[i]) continue;
        const double h1 = u[i] - u[i - 1], h2 = u[i + 1] - u[i];
        const double den = h1 * h2 * (h1 + h2);
        const double f2 = 2.0 * (h1 * f[i + 1] - (h1 + h2) * f[i] + h2 * f[i - 1]) / den;
        const double g1 = (h1 * h1 * g[i + 1] - h2 * h2 * g[i - 1] + (h2 * h2 - h1 * h1) * g[i]) / den;
        worst = std::max(worst, std::abs(0.5 * s2 * f2 - g1));
    }
    return worst;
}

}  // namespace harvest
