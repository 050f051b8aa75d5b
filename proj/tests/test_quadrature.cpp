#include "shl/quadrature.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using shl::Complex;

TEST_CASE("adaptive Gauss-Kronrod on known integrals", "[quadrature]") {
    auto sine = [](double x) { return Complex{std::sin(x), 0.0}; };
    CHECK(std::fabs(shl::integrate_adaptive(sine, {0.0, M_PI}, 1e-13).value.real() - 2.0) <= 1e-13);
    // Degree-29 polynomials are integrated exactly by one 15-point Kronrod panel.
    auto poly = [](double x) { return Complex{std::pow(x, 10) - 3.0 * x * x, 0.0}; };
    const auto r = shl::integrate_adaptive(poly, {-1.0, 2.0}, 1e-12);
    CHECK(std::fabs(r.value.real() - ((std::pow(2.0, 11) + 1.0) / 11.0 - 9.0)) <= 1e-12);
    // Endpoint square-root singularity.
    auto root = [](double x) { return Complex{std::sqrt(x), 0.0}; };
    CHECK(std::fabs(shl::integrate_adaptive(root, {0.0, 1.0}, 1e-10).value.real() - 2.0 / 3.0) <= 1e-9);
}

TEST_CASE("tolerance failure is reported", "[quadrature]") {
    auto wild = [](double x) { return Complex{std::sin(1.0 / (x + 1e-9)), 0.0}; };
    CHECK_THROWS_AS(shl::integrate_adaptive(wild, {0.0, 1.0}, 1e-14, 1e-15, 8), shl::ToleranceError);
}

TEST_CASE("QuadratureSpec validation", "[quadrature]") {
    shl::QuadratureSpec s;
    s.rel_tol = 0.0;
    CHECK_THROWS_AS(shl::drift_integral({0.0, 1.0}, s), std::invalid_argument);
    s.rel_tol = 1e-8;
    s.half_width = 1.0;
    CHECK_THROWS_AS(shl::delta_integral(1.0, s), std::invalid_argument);
    CHECK_THROWS_AS(shl::drift_integral({0.0, 0.0}, shl::QuadratureSpec{}), shl::DomainError);
    CHECK_THROWS_AS(shl::squared_displacement_integral(0.0, shl::QuadratureSpec{}), shl::DomainError);
}

TEST_CASE("drift integral tends to i pi/2", "[quadrature]") {
    for (double y : {1.0, 5.0, 10.0}) {
        const auto r = shl::drift_integral({0.0, y}, {});
        CHECK(std::abs(r.value - Complex{0.0, shl::kHalfPi}) <= 1e-6);
        CHECK(std::fabs(r.value.real()) <= 1e-8);
    }
    // Off-center points see the same drift (translation invariance).
    const auto shifted = shl::drift_integral({3.25, 2.0}, {});
    CHECK(std::abs(shifted.value - Complex{0.0, shl::kHalfPi}) <= 1e-6);
}

TEST_CASE("finite-window drift: quadrature oracle for the closed form", "[quadrature]") {
    shl::QuadratureSpec none;
    none.tail_mode = shl::TailMode::none;
    for (double X : {2.0, 50.0, 4000.0}) {
        none.half_width = X;
        for (Complex z : {Complex{0.0, 1.0}, Complex{0.4, 0.05}, Complex{-7.0, 12.0}, Complex{1.0, 1e-3}}) {
            const auto q = shl::drift_integral(z, none);
            const Complex closed = shl::window_drift(z, -X, X);
            CHECK(std::abs(q.value - closed) <= 1e-9 * std::max(1.0, std::abs(closed)));
        }
    }
}

TEST_CASE("tail correction closes the gap between finite and infinite windows", "[quadrature]") {
    shl::QuadratureSpec none;
    none.tail_mode = shl::TailMode::none;
    none.half_width = 500.0;
    const Complex z{0.0, 2.0};
    shl::QuadratureSpec series = none;
    series.tail_mode = shl::TailMode::series;
    const Complex with_tail = shl::drift_integral(z, series).value;
    const Complex without = shl::drift_integral(z, none).value;
    // Leading-order missing mass: the two outer half-lines of -1/(2(z - x)).
    const Complex gap = 0.5 * (std::log(Complex{-500.0, 0.0} - z) - std::log(Complex{500.0, 0.0} - z)) +
                        Complex{0.0, shl::kHalfPi};
    CHECK(std::abs((with_tail - without) - gap) <= 1e-12);
    // What is left is the O(X^-2) remainder of the series.
    CHECK(std::abs(with_tail - Complex{0.0, shl::kHalfPi}) <= 1e-5);
}

TEST_CASE("squared displacement against pi/(4y)", "[quadrature]") {
    for (double y : {5.0, 10.0, 20.0, 100.0}) {
        const double v = shl::squared_displacement_integral(y, {});
        CHECK(std::fabs(v - M_PI / (4.0 * y)) <= 5.0 / (y * y * y));
    }
    // The error term is O(y^-3): doubling y cuts it roughly eightfold.
    const double e10 = std::fabs(shl::squared_displacement_integral(10.0, {}) - M_PI / 40.0);
    const double e20 = std::fabs(shl::squared_displacement_integral(20.0, {}) - M_PI / 80.0);
    CHECK(e20 < e10 / 6.0);
}

TEST_CASE("delta integrates to pi/2 at every height", "[quadrature]") {
    for (double zeta : {0.0, 1.0, 50.0, 0.01, 7.5}) {
        CHECK(std::fabs(shl::delta_integral(zeta, {}) - shl::kHalfPi) <= 1e-6);
    }
}

TEST_CASE("breakpoints are sorted, unique and inside the window", "[quadrature]") {
    const auto b = shl::slit_breakpoints(3.0, 100.0);
    REQUIRE(b.size() >= 3);
    CHECK(b.front() == -100.0);
    CHECK(b.back() == 100.0);
    for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i] > b[i - 1]);
}
