#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "harvest/errors.hpp"

namespace harvest {

enum class StrategyKind { Constant, BangBang, Tabulated };

/// Stationary Markov harvesting rule v : (0, inf) -> [0, cap].
///
/// Every kind is piecewise constant in x. Tabulated rules are left-continuous
/// steps: v(x) = values[i] on (grid[i], grid[i+1]], 0 on (0, grid[0]] and
/// values.back() above the last node, so a bang-bang rule with threshold t is
/// exactly the table {(t, cap)}.
class Strategy {
public:
    static Strategy constant(double rate, double cap = -1.0) {
        if (cap < 0.0) cap = rate;
        if (!(rate >= 0.0) || rate > cap) throw ContractError("constant rate must lie in [0, cap]");
        Strategy s;
        s.kind_ = StrategyKind::Constant;
        s.rate_ = rate;
        s.cap_ = cap;
        return s;
    }

    static Strategy none() { return constant(0.0, 0.0); }

    static Strategy tabulated(std::vector<double> grid, std::vector<double> values, double cap) {
        if (grid.empty() || grid.size() != values.size())
            throw ContractError("tabulated strategy needs matching, non-empty grid and values");
        if (!(cap >= 0.0)) throw ContractError("tabulated cap must be >= 0");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!(grid[i] > 0.0)) throw ContractError("tabulated grid must be positive");
            if (i > 0 && !(grid[i] > grid[i - 1]))
                throw ContractError("tabulated grid must be strictly increasing");
            if (!(values[i] >= 0.0 && values[i] <= cap))
                throw ContractError("tabulated values must lie in [0, cap]");
        }
        Strategy s;
        s.kind_ = StrategyKind::Tabulated;
        s.grid_ = std::move(grid);
        s.values_ = std::move(values);
        s.cap_ = cap;
        return s;
    }

    StrategyKind kind() const { return kind_; }
    double cap() const { return cap_; }
    double rate() const { return rate_; }
    double threshold() const { return threshold_; }
    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }

    double operator()(double x) const {
        if (!(x > 0.0)) throw DomainError("strategy evaluated at x <= 0");
        return eval_unchecked(x);
    }

    double eval_unchecked(double x) const {
        switch (kind_) {
            case StrategyKind::Constant:
                return rate_;
            case StrategyKind::BangBang:
                return x <= threshold_ ? 0.0 : cap_;
            case StrategyKind::Tabulated: {
                if (x <= grid_.front()) return 0.0;
                // First node >= x; the step to its left owns x.
                const auto it = std::lower_bound(grid_.begin(), grid_.end(), x);
                const auto i = static_cast<std::size_t>(it - grid_.begin());
                return values_[i - 1];
            }
        }
        return 0.0;
    }

    /// Rate on (0, first breakpoint].
    double rate_near_zero() const { return kind_ == StrategyKind::Constant ? rate_ : 0.0; }

    /// Points where v changes value, increasing.
    std::vector<double> breakpoints() const {
        std::vector<double> b;
        if (kind_ == StrategyKind::BangBang) {
            b.push_back(threshold_);
        } else if (kind_ == StrategyKind::Tabulated) {
            double prev = 0.0;
            for (std::size_t i = 0; i < grid_.size(); ++i) {
                if (values_[i] != prev) b.push_back(grid_[i]);
                prev = values_[i];
            }
        }
        return b;
    }

    /// Stable textual descriptor; density profiles carry it to detect mismatches.
    std::string describe() const {
        std::ostringstream os;
        os << std::setprecision(17);
        switch (kind_) {
            case StrategyKind::Constant:
                os << "constant(rate=" << rate_ << ")";
                break;
            case StrategyKind::BangBang:
                os << "bang_bang(threshold=" << threshold_ << ",cap=" << cap_ << ")";
                break;
            case StrategyKind::Tabulated: {
                std::size_t h = 1469598103934665603ull;
                auto mix = [&h](double d) {
                    std::uint64_t bits;
                    std::memcpy(&bits, &d, sizeof bits);
                    h = (h ^ bits) * 1099511628211ull;
                };
                for (std::size_t i = 0; i < grid_.size(); ++i) {
                    mix(grid_[i]);
                    mix(values_[i]);
                }
                os << "tabulated(n=" << grid_.size() << ",cap=" << cap_ << ",hash=" << std::hex << h
                   << ")";
                break;
            }
        }
        return os.str();
    }

private:
    friend Strategy make_bang_bang(double threshold, double cap);
    Strategy() = default;

    StrategyKind kind_ = StrategyKind::Constant;
    double rate_ = 0.0;
    double threshold_ = 0.0;
    double cap_ = 0.0;
    std::vector<double> grid_;
    std::vector<double> values_;
};

/// v(x) = 0 on (0, threshold], cap above it.
inline Strategy make_bang_bang(double threshold, double cap) {
    if (!(threshold > 0.0)) throw ContractError("bang-bang threshold must be > 0");
    if (!(cap > 0.0)) throw ContractError("bang-bang cap must be > 0");
    Strategy s;
    s.kind_ = StrategyKind::BangBang;
    s.threshold_ = threshold;
    s.cap_ = cap;
    return s;
}

inline double strategy_eval(const Strategy& s, double x) { return s(x); }

}  // namespace harvest
