#pragma once

#include <cmath>
#include <stdexcept>

namespace harvest::numerics {

struct GoldenResult {
    double x;
    double value;
    double lo;
    double hi;
    int iterations;
};

/// Golden-section search for a maximum of a unimodal function on [lo, hi].
/// Stops once the bracket is narrower than `width_tol`.
template <typename F>
GoldenResult golden_section_max(F&& f, double lo, double hi, double width_tol = 1e-8,
                                int max_iter = 500) {
    if (!(lo < hi)) throw std::invalid_argument("golden_section_max: empty bracket");
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = f(c);
    double fd = f(d);
    int it = 0;
    while (hi - lo > width_tol && it < max_iter) {
        if (fc >= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
        ++it;
    }
    const double x = fc >= fd ? c : d;
    return {x, fc >= fd ? fc : fd, lo, hi, it};
}

}  // namespace harvest::numerics
