#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "harvest/errors.hpp"
#include "harvest/model.hpp"
#include "harvest/numerics/dormand_prince.hpp"
#include "harvest/numerics/golden.hpp"
#include "harvest/strategy.hpp"

namespace harvest {

enum class Regime { NoHarvest, Harvest };
enum class BarrierKind { One, PhiRatio };
enum class Direction { FromAbove, FromBelow };

inline const char* to_string(Regime r) { return r == Regime::NoHarvest ? "NoHarvest" : "Harvest"; }
inline const char* to_string(BarrierKind b) { return b == BarrierKind::One ? "One" : "PhiRatio"; }
inline const char* to_string(Direction d) { return d == Direction::FromAbove ? "FromAbove" : "FromBelow"; }

// --------------------------------------------------------------------------
// Roots of g(x) = rho - x mu(x)

struct GRoots {
    enum class Kind { None, Double, Two } kind = Kind::None;
    double x_iota = 0.0;  // argmin g
    double g_min = 0.0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
};

namespace detail {

template <typename F>
double bisect_root(F&& f, double lo, double hi, double tol) {
    double flo = f(lo);
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Roots of a valley-shaped f (positive at 0+, unique minimum at x_min,
/// positive again far right).
template <typename F>
GRoots valley_roots(F&& f, double x_min, double tol) {
    GRoots r;
    r.x_iota = x_min;
    r.g_min = f(x_min);
    if (r.g_min > 1e-12) return r;
    if (std::abs(r.g_min) <= 1e-12) {
        r.kind = GRoots::Kind::Double;
        r.alpha1 = r.alpha2 = x_min;
        return r;
    }
    r.kind = GRoots::Kind::Two;
    r.alpha1 = bisect_root(f, 0.0, x_min, tol);
    double hi = 2.0 * x_min;
    for (int i = 0; i < 2000 && f(hi) <= 0.0; ++i) hi *= 2.0;
    r.alpha2 = bisect_root(f, x_min, hi, tol);
    return r;
}

}  // namespace detail

inline GRoots g_roots(const ModelParams& p, double rho) {
    const auto peak = growth_peak(p);
    return detail::valley_roots([&](double x) { return rho - x * drift_mu(p, x); }, peak.x, 1e-12);
}

// --------------------------------------------------------------------------
// Convex yields

/// G(x) = Phi(xM)(1 - 2 mu(x)/sigma^2) - xM Phi'(xM).
inline double convex_G(const ModelParams& p, const YieldSpec& y, double x) {
    const double w = x * p.harvest_cap_M;
    return y(w) * (1.0 - 2.0 * drift_mu(p, x) / p.sigma2()) - w * y.derivative(w);
}

struct GMinimumCheck {
    bool unique_minimum = false;
    double x_min = 0.0;
    int sign_changes = 0;
};

/// Scans G on the grid; passes when the discrete derivative changes sign
/// exactly once, from negative to positive.
inline GMinimumCheck convex_G_minimum(const ModelParams& p, const YieldSpec& y, const std::vector<double>& grid) {
    GMinimumCheck c;
    if (grid.size() < 3) throw ContractError("convex_G_minimum needs at least 3 grid points");
    int prev = 0;
    bool down_up = false;
    double prev_g = convex_G(p, y, grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double g = convex_G(p, y, grid[i]);
        const double d = g - prev_g;
        prev_g = g;
        if (d == 0.0) continue;
        const int s = d > 0 ? 1 : -1;
        if (prev != 0 && s != prev) {
            ++c.sign_changes;
            if (prev < 0 && s > 0) {
                down_up = true;
                c.x_min = grid[i - 1];
            }
        }
        prev = s;
    }
    if (c.sign_changes == 1 && down_up) {
        const std::size_t hi = static_cast<std::size_t>(
            std::upper_bound(grid.begin(), grid.end(), c.x_min) - grid.begin());
        const double lo_x = hi >= 2 ? grid[hi - 2] : grid.front();
        const double hi_x = grid[std::min(hi, grid.size() - 1)];
        c.x_min = numerics::golden_section_max([&](double x) { return -convex_G(p, y, x); }, lo_x, hi_x, 1e-12)
                      .x;
        c.unique_minimum = true;
    }
    return c;
}

/// Bang-bang rule for identity or convex yields: cap when V_x <= Phi(xM)/(xM),
/// 0 above it.
inline double convex_control_rule(double vx, double x, const YieldSpec& y, double cap) {
    if (!(x > 0.0)) throw DomainError("convex_control_rule at x <= 0");
    if (y.kind != YieldKind::Identity && y.kind != YieldKind::Convex)
        throw ContractError("convex_control_rule needs an identity or convex yield");
    const double ratio = y.is_identity() ? 1.0 : y(x * cap) / (x * cap);
    return vx <= ratio ? cap : 0.0;
}

// --------------------------------------------------------------------------
// Concave yields

/// v(x) = clamp([Phi']^{-1}(V_x(x)) / x, 0, M) tabulated on the grid.
inline Strategy concave_control(const ModelParams& p, const YieldSpec& y, const std::function<double(double)>& vx,
                                const std::vector<double>& grid) {
    if (y.kind != YieldKind::Concave) throw ContractError("concave_control needs a strictly concave yield");
    const double M = p.harvest_cap_M;
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        if (!(x > 0.0)) throw ContractError("concave_control grid must be positive");
        const double a = vx(x);
        const auto w = phi_prime_inverse(y, a);
        double v;
        if (!w)
            v = a > y.derivative(0.0) ? 0.0 : M;
        else if (*w <= 0.0)
            v = 0.0;
        else if (*w >= x * M)
            v = M;
        else
            v = *w / x;
        values[i] = v;
    }
    return Strategy::tabulated(grid, std::move(values), M);
}

// --------------------------------------------------------------------------
// phi = V*_x

inline double barrier_value(BarrierKind kind, const YieldSpec& y, double x, double M) {
    return kind == BarrierKind::One ? 1.0 : y(x * M) / (x * M);
}

inline BarrierKind barrier_kind_for(const YieldSpec& y) {
    if (y.kind == YieldKind::Identity) return BarrierKind::One;
    if (y.kind == YieldKind::Convex) return BarrierKind::PhiRatio;
    throw ContractError("HJB verification needs an identity or convex yield");
}

inline double phi_rhs_in(const ModelParams& p, const YieldSpec& y, double rho, double x, double phi, Regime r) {
    const double s2x2 = p.sigma2() * x * x;
    const double mu = drift_mu(p, x);
    if (r == Regime::NoHarvest) return 2.0 * (rho - x * mu * phi) / s2x2;
    const double M = p.harvest_cap_M;
    return 2.0 * (rho - y(x * M) - x * (mu - M) * phi) / s2x2;
}

/// phi' from the HJB, with the regime read off phi versus the barrier.
inline double phi_rhs(const ModelParams& p, double rho, double x, double phi, double barrier,
                      const YieldSpec& y = YieldSpec::identity()) {
    if (!(x > 0.0)) throw DomainError("phi_rhs at x <= 0");
    return phi_rhs_in(p, y, rho, x, phi, phi > barrier ? Regime::NoHarvest : Regime::Harvest);
}

struct HjbCrossing {
    double x;
    Direction direction;
};

struct HjbProfile {
    std::vector<double> grid;
    std::vector<double> phi;
    std::vector<double> dphi;
    std::vector<Regime> regime;
    std::vector<double> barrier;
    BarrierKind barrier_kind = BarrierKind::One;
    double rho = 0.0;
    double x_star = 0.0;
    double cap_M = 0.0;
    std::vector<HjbCrossing> events;  // anchor plus every located switch, increasing x
    bool truncated_left = false;
    bool truncated_right = false;
    std::string note;
};

namespace detail {

struct PhiState {
    double x;
    double phi;
    Regime regime;
};

inline bool regime_violated(Regime r, double phi, double b) {
    return r == Regime::NoHarvest ? phi < b : phi > b;
}

}  // namespace detail

/// Integrates phi outward from the anchor phi(x*) = barrier(x*), switching
/// regime at every located barrier crossing. Output nodes: step_n log-uniform
/// points on [x_lo, x_hi] plus x* itself.
inline HjbProfile integrate_phi(const ModelParams& p, const YieldSpec& y, double rho, double x_star, double x_lo,
                                double x_hi, int step_n) {
    if (!(x_lo > 0.0 && x_lo < x_star && x_star < x_hi))
        throw ContractError("integrate_phi needs 0 < x_lo < x_star < x_hi");
    if (step_n < 2) throw ContractError("integrate_phi needs step_n >= 2");
    const double M = p.harvest_cap_M;
    const auto kind = barrier_kind_for(y);
    const auto barrier = [&](double x) { return barrier_value(kind, y, x, M); };

    HjbProfile prof;
    prof.barrier_kind = kind;
    prof.rho = rho;
    prof.x_star = x_star;
    prof.cap_M = M;

    const double b0 = barrier(x_star);
    const double slope = phi_rhs_in(p, y, rho, x_star, b0, Regime::Harvest);
    const double db = kind == BarrierKind::One
                          ? 0.0
                          : (barrier(x_star * (1 + 1e-6)) - barrier(x_star * (1 - 1e-6))) / (2e-6 * x_star);
    // phi' - b' < 0 at the anchor: phi is above the barrier to the left.
    const bool from_above = slope - db <= 0.0;
    const Regime left0 = from_above ? Regime::NoHarvest : Regime::Harvest;
    const Regime right0 = from_above ? Regime::Harvest : Regime::NoHarvest;
    prof.events.push_back({x_star, from_above ? Direction::FromAbove : Direction::FromBelow});

    const auto nodes = detail::geometric_grid(x_lo, x_hi, step_n);
    std::vector<double> left_nodes, right_nodes;
    for (double x : nodes) {
        if (x < x_star) left_nodes.push_back(x);
        if (x > x_star) right_nodes.push_back(x);
    }
    std::reverse(left_nodes.begin(), left_nodes.end());

    numerics::StepControl ctl;
    constexpr double kBlowUp = 1e12;
    constexpr int kMaxSwitches = 64;

    struct Sample {
        double x, phi;
        Regime r;
    };

    auto run = [&](Regime start, const std::vector<double>& targets, std::vector<Sample>& out,
                   std::vector<HjbCrossing>& events, bool& truncated) {
        detail::PhiState st{x_star, b0, start};
        const double dir = targets.empty() ? 1.0 : (targets.front() > x_star ? 1.0 : -1.0);
        double h = dir * 1e-3 * x_star;
        int switches = 0;
        for (double target : targets) {
            while (st.x != target) {
                auto f = [&](double x, double v) { return phi_rhs_in(p, y, rho, x, v, st.regime); };
                const double x0 = st.x, y0 = st.phi;
                double x1 = st.x, y1 = st.phi;
                if (!numerics::dopri_advance(f, x1, y1, h, target, ctl)) {
                    truncated = true;
                    prof.note += "step underflow at x=" + std::to_string(x0) + "; ";
                    return;
                }
                if (!std::isfinite(y1) || std::abs(y1) > kBlowUp) {
                    truncated = true;
                    prof.note += "phi blow-up near x=" + std::to_string(x1) + "; ";
                    return;
                }
                if (!detail::regime_violated(st.regime, y1, barrier(x1))) {
                    st.x = x1;
                    st.phi = y1;
                    continue;
                }
                // Locate the switch by bisection on the step length.
                double lo = 0.0, hi = x1 - x0;
                while (std::abs(hi - lo) > 1e-10 * std::max(1.0, std::abs(x0))) {
                    const double mid = 0.5 * (lo + hi);
                    const double ym = numerics::dopri_step(f, x0, y0, mid).y5;
                    if (detail::regime_violated(st.regime, ym, barrier(x0 + mid)))
                        hi = mid;
                    else
                        lo = mid;
                }
                const double xe = x0 + hi;
                const double ye = numerics::dopri_step(f, x0, y0, hi).y5;
                // Moving right out of NoHarvest means phi drops through the barrier.
                const bool left_is_no_harvest = (dir > 0) == (st.regime == Regime::NoHarvest);
                events.push_back({xe, left_is_no_harvest ? Direction::FromAbove : Direction::FromBelow});
                st.x = xe;
                st.phi = ye;
                st.regime = st.regime == Regime::NoHarvest ? Regime::Harvest : Regime::NoHarvest;
                h = dir * std::max(std::abs(h), 1e-8 * xe);
                if (++switches > kMaxSwitches) {
                    truncated = true;
                    prof.note += "too many regime switches near x=" + std::to_string(xe) + "; ";
                    return;
                }
            }
            out.push_back({st.x, st.phi, st.regime});
        }
    };

    std::vector<Sample> left, right;
    std::vector<HjbCrossing> left_events, right_events;
    run(left0, left_nodes, left, left_events, prof.truncated_left);
    run(right0, right_nodes, right, right_events, prof.truncated_right);

    auto push = [&](const Sample& s) {
        prof.grid.push_back(s.x);
        prof.phi.push_back(s.phi);
        prof.regime.push_back(s.r);
        prof.barrier.push_back(barrier(s.x));
        prof.dphi.push_back(phi_rhs_in(p, y, rho, s.x, s.phi, s.r));
    };
    for (auto it = left.rbegin(); it != left.rend(); ++it) push(*it);
    push({x_star, b0, Regime::Harvest});
    for (const auto& s : right) push(s);

    std::vector<HjbCrossing> ev(left_events.rbegin(), left_events.rend());
    ev.push_back(prof.events.front());
    ev.insert(ev.end(), right_events.begin(), right_events.end());
    prof.events = std::move(ev);
    return prof;
}

/// Default verification window: [1e-4 x*, max(10 x*, 2 x_max-of-growth)].
inline HjbProfile integrate_phi(const ModelParams& p, const YieldSpec& y, double rho, double x_star,
                                int step_n = 2000) {
    const auto peak = growth_peak(p);
    const double hi = std::max(10.0 * x_star, 4.0 * peak.x);
    return integrate_phi(p, y, rho, x_star, 1e-4 * x_star, hi, step_n);
}

// --------------------------------------------------------------------------
// Crossing report

enum class Verdict { SingleFromAbove, Violation };

struct CrossingReport {
    std::vector<HjbCrossing> crossings;
    std::optional<double> alpha1, alpha2;
    bool double_root = false;
    Verdict verdict = Verdict::Violation;
    std::string violated;  // p:zero | p:infinity | p:crossing | p:nonnegative
    std::string detail;
    double min_phi = 0.0;
};

/// Crossing roots: g(x) = rho - x mu(x) for the identity yield, and
/// G(x) + 2 M rho / sigma^2 for convex yields (which is (2M/sigma^2) g when Phi
/// is the identity).
inline GRoots crossing_roots(const ModelParams& p, const YieldSpec& y, double rho) {
    if (y.is_identity()) return g_roots(p, rho);
    const double shift = 2.0 * p.harvest_cap_M * rho / p.sigma2();
    const auto peak = growth_peak(p);
    const auto grid = detail::geometric_grid(1e-4 * peak.x, 100.0 * peak.x, 4000);
    const auto c = convex_G_minimum(p, y, grid);
    if (!c.unique_minimum) throw DomainError("G has no unique minimum; crossing bounds unavailable");
    return detail::valley_roots([&](double x) { return convex_G(p, y, x) + shift; }, c.x_min, 1e-12);
}

/// Crossings read off the sampled profile (sign changes of phi - barrier),
/// snapped to the exact switch points recorded by the integrator.
inline std::vector<HjbCrossing> enumerate_crossings(const HjbProfile& prof) {
    std::vector<HjbCrossing> out;
    int last = 0;
    double last_x = 0.0;
    for (std::size_t i = 0; i < prof.grid.size(); ++i) {
        const double d = prof.phi[i] - prof.barrier[i];
        const int s = d > 0 ? 1 : (d < 0 ? -1 : 0);
        if (s == 0) continue;
        if (last != 0 && s != last) {
            double lo = last_x, hi = prof.grid[i];
            double x = 0.5 * (lo + hi);
            for (const auto& e : prof.events)
                if (e.x >= lo && e.x <= hi) x = e.x;
            out.push_back({x, last > 0 ? Direction::FromAbove : Direction::FromBelow});
        }
        last = s;
        last_x = prof.grid[i];
    }
    return out;
}

inline CrossingReport crossing_report(const HjbProfile& prof, const ModelParams& p, double rho,
                                      const YieldSpec& y = YieldSpec::identity()) {
    CrossingReport rep;
    rep.crossings = enumerate_crossings(prof);
    const auto roots = crossing_roots(p, y, rho);
    if (roots.kind == GRoots::Kind::Two) {
        rep.alpha1 = roots.alpha1;
        rep.alpha2 = roots.alpha2;
    } else if (roots.kind == GRoots::Kind::Double) {
        rep.alpha1 = rep.alpha2 = roots.x_iota;
        rep.double_root = true;
    }
    rep.min_phi = prof.phi.empty() ? 0.0 : *std::min_element(prof.phi.begin(), prof.phi.end());

    auto fail = [&](const char* label, std::string why) {
        rep.verdict = Verdict::Violation;
        rep.violated = label;
        rep.detail = std::move(why);
        return rep;
    };
    if (prof.grid.empty()) return fail("p:zero", "empty profile");
    if (rep.crossings.size() > 1)
        return fail("p:crossing", std::to_string(rep.crossings.size()) + " barrier crossings, at most one permitted");
    if (rep.min_phi < 0.0) return fail("p:nonnegative", "V*_x takes negative values");
    if (prof.phi.front() <= prof.barrier.front())
        return fail("p:zero", "V*_x is at or below the barrier on a neighbourhood of 0");
    if (prof.phi.back() >= prof.barrier.back())
        return fail("p:infinity",
                    "There does not exist any chi > 0 such that V*_x(x) >= barrier for all x >= chi");
    if (rep.crossings.empty()) return fail("p:crossing", "no barrier crossing");
    const auto& c = rep.crossings.front();
    if (c.direction != Direction::FromAbove) return fail("p:crossing", "the crossing is from below");
    if (roots.kind == GRoots::Kind::None)
        return fail("p:crossing", "g has no roots, so a crossing from above is impossible");
    const double tol = 1e-8 * (1.0 + c.x);
    if (c.x < roots.alpha1 - tol || c.x > roots.alpha2 + tol)
        return fail("p:crossing", "crossing at x=" + std::to_string(c.x) + " lies outside [alpha1, alpha2]");
    rep.verdict = Verdict::SingleFromAbove;
    return rep;
}

}  // namespace harvest
