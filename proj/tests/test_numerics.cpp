#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "harvest/numerics/dormand_prince.hpp"
#include "harvest/numerics/golden.hpp"
#include "harvest/numerics/parallel.hpp"
#include "harvest/numerics/philox.hpp"
#include "harvest/numerics/quadrature.hpp"

using namespace harvest::numerics;
using Catch::Approx;

TEST_CASE("adaptive Gauss-Kronrod on smooth and singular integrands") {
    auto sq = integrate([](double x) { return x * x; }, 0.0, 1.0);
    CHECK(sq.converged);
    CHECK(sq.value == Approx(1.0 / 3.0).epsilon(1e-14));

    auto lg = integrate([](double x) { return x > 0 ? std::log(x) : 0.0; }, 0.0, 1.0);
    CHECK(lg.value == Approx(-1.0).epsilon(1e-10));

    auto osc = integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
    CHECK(osc.value == Approx(2.0).epsilon(1e-13));

    auto empty = integrate([](double) { return 1.0; }, 2.0, 2.0);
    CHECK(empty.value == 0.0);
}

TEST_CASE("improper integrals through the t/(1-t) map") {
    auto e = integrate_to_infinity([](double x) { return std::exp(-x); }, 0.0);
    CHECK(e.value == Approx(1.0).epsilon(1e-12));
    auto c = integrate_to_infinity([](double x) { return 1.0 / (1.0 + x * x); }, 0.0);
    CHECK(c.value == Approx(std::numbers::pi / 2).epsilon(1e-10));
    auto g = integrate_to_infinity([](double x) { return std::exp(-x * x); }, 1.0);
    CHECK(g.value == Approx(0.5 * std::sqrt(std::numbers::pi) * std::erfc(1.0)).epsilon(1e-11));
}

TEST_CASE("golden-section search brackets the maximiser") {
    auto r = golden_section_max([](double x) { return -(x - 0.3) * (x - 0.3); }, 0.0, 1.0, 1e-10);
    CHECK(r.x == Approx(0.3).margin(1e-9));
    CHECK(r.hi - r.lo <= 1e-10);
    CHECK(r.lo <= r.x);
    CHECK(r.x <= r.hi);
    CHECK_THROWS_AS(golden_section_max([](double x) { return x; }, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("Dormand-Prince reproduces closed-form solutions") {
    SECTION("exponential growth") {
        auto f = [](double, double y) { return y; };
        double x = 0.0, y = 1.0, h = 0.1;
        while (x < 1.0) REQUIRE(dopri_advance(f, x, y, h, 1.0, StepControl{}));
        CHECK(x == 1.0);
        CHECK(y == Approx(std::exp(1.0)).epsilon(1e-9));
    }
    SECTION("Gaussian, integrated backwards") {
        auto f = [](double x, double y) { return -2.0 * x * y; };
        double x = 2.0, y = std::exp(-4.0), h = -0.1;
        while (x > 0.0) REQUIRE(dopri_advance(f, x, y, h, 0.0, StepControl{}));
        CHECK(x == 0.0);
        CHECK(y == Approx(1.0).epsilon(1e-9));
    }
    SECTION("single step is fifth order") {
        auto f = [](double, double y) { return y; };
        const double e1 = std::abs(dopri_step(f, 0.0, 1.0, 0.1).y5 - std::exp(0.1));
        const double e2 = std::abs(dopri_step(f, 0.0, 1.0, 0.05).y5 - std::exp(0.05));
        CHECK(e1 / e2 > 40.0);
    }
    SECTION("underflow is reported") {
        auto f = [](double x, double) { return 1.0 / (1.0 - x); };
        double x = 0.0, y = 0.0, h = 0.1;
        bool ok = true;
        for (int i = 0; i < 100000 && ok && x < 1.0; ++i) ok = dopri_advance(f, x, y, h, 1.0, StepControl{});
        CHECK_FALSE(ok);
    }
}

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using B = Philox4x32::Block;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::generate(B{0, 0, 0, 0}, K{0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32::generate(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
          B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32::generate(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
          B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normal stream moments and determinism") {
    NormalStream a(42), b(42), c(43);
    const int n = 200000;
    double s = 0, s2 = 0, s4 = 0;
    bool same = true, differs = false;
    for (int i = 0; i < n; ++i) {
        const double z = a.next();
        same = same && z == b.next();
        differs = differs || z != c.next();
        s += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    CHECK(same);
    CHECK(differs);
    CHECK(std::abs(s / n) < 5.0 / std::sqrt(n));
    CHECK(s2 / n == Approx(1.0).margin(0.02));
    CHECK(s4 / n == Approx(3.0).margin(0.1));
    CHECK(a.blocks_used() == n / 2);
}

TEST_CASE("parallel_map keeps index order and propagates errors") {
    auto out = parallel_map<int>(1000, [](std::size_t i) { return static_cast<int>(i * i); });
    REQUIRE(out.size() == 1000);
    bool ordered = true;
    for (std::size_t i = 0; i < out.size(); ++i) ordered = ordered && out[i] == static_cast<int>(i * i);
    CHECK(ordered);
    CHECK_THROWS_AS(parallel_map<int>(10,
                                      [](std::size_t i) -> int {
                                          if (i == 7) throw std::runtime_error("boom");
                                          return 0;
                                      }),
                    std::runtime_error);
    CHECK(parallel_map<int>(0, [](std::size_t) { return 1; }).empty());
}
