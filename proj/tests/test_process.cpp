#include "shl/process.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using shl::Complex;

namespace {

shl::EventStream manual_stream(std::vector<shl::Arrival> arrivals, double horizon, shl::Window w = {-10.0, 10.0}) {
    return shl::EventStream{w, horizon, std::move(arrivals), 0, 0};
}

}  // namespace

TEST_CASE("one arrival applies one slit map", "[process]") {
    const auto s = manual_stream({{0.3, 0.5}}, 1.0);
    const double at[] = {0.25, 1.0};
    const auto r = shl::evolve(s, {shl::TrackedPoint::at({0.0, 0.0}), shl::TrackedPoint::at({1.0, 2.0})},
                               shl::DriftMode::asymptotic, at);
    REQUIRE(r.snapshots.size() == 2);
    CHECK(r.arrivals == 1);
    CHECK(r.snapshots[0].points[0].value == Complex{0.0, 0.0});
    CHECK(std::abs(r.snapshots[1].points[0].value - shl::slit_apply(0.3, {0.0, 0.0})) <= 1e-15);
    CHECK(std::abs(r.snapshots[1].points[1].value - shl::slit_apply(0.3, {1.0, 2.0})) <= 1e-15);
}

TEST_CASE("backward composition puts the latest arrival outermost", "[process]") {
    const auto s = shl::sample_arrivals(-6.0, 6.0, 2.0, 21, 0);
    REQUIRE(s.arrivals.size() > 5);
    const Complex z0{0.4, 0.7};
    Complex z = z0;
    Complex dz{1.0, 0.0};
    for (const auto& a : s.arrivals) {
        dz *= shl::slit_derivative(a.x, z);
        z = shl::slit_apply(a.x, z);
    }
    const double at[] = {2.0};
    const auto r = shl::evolve(s, {shl::TrackedPoint::at(z0)}, shl::DriftMode::asymptotic, at);
    const auto& p = r.snapshots[0].points[0];
    CHECK(std::abs(p.value - z) <= 1e-12 * std::abs(z));
    CHECK(std::abs(p.deriv - dz) <= 1e-10 * std::abs(dz));
}

TEST_CASE("tracked derivative matches finite differences of the composed map", "[process]") {
    const auto s = shl::sample_arrivals(-6.0, 6.0, 3.0, 22, 0);
    const double at[] = {3.0};
    const Complex z0{0.1, 1.3};
    const double h = 1e-6;
    const auto r = shl::evolve(s,
                               {shl::TrackedPoint::at(z0), shl::TrackedPoint::at(z0 + h), shl::TrackedPoint::at(z0 - h)},
                               shl::DriftMode::asymptotic, at);
    const auto& pts = r.snapshots[0].points;
    const Complex fd = (pts[1].value - pts[2].value) / (2.0 * h);
    CHECK(std::abs(pts[0].deriv - fd) <= 1e-6 * std::abs(fd));
}

TEST_CASE("forward and backward maps are reversals of each other", "[process]") {
    const auto s = shl::sample_arrivals(-5.0, 5.0, 1.5, 23, 0);
    const double grid[] = {-1.0, 0.0, 0.5};
    const auto forward = shl::render_forward(s, grid, 1.5);
    std::vector<shl::TrackedPoint> pts;
    for (double x : grid) pts.push_back(shl::TrackedPoint::at({x, 0.0}));
    // The same maps in opposite order, retimed into a backward stream.
    std::vector<shl::Arrival> order(s.arrivals.rbegin(), s.arrivals.rend());
    for (std::size_t i = 0; i < order.size(); ++i) order[i].t = static_cast<double>(i + 1) / (order.size() + 1);
    const auto back_stream = manual_stream(order, 1.0, s.window);
    const double at[] = {1.0};
    const auto back = shl::evolve(back_stream, pts, shl::DriftMode::asymptotic, at);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::abs(forward[i] - back.snapshots[0].points[i].value) <= 1e-12 * std::abs(forward[i]));
    }
}

TEST_CASE("empty stream: fluctuation equals minus the drift", "[process]") {
    const auto s = manual_stream({}, 2.0);
    const double at[] = {2.0};
    const Complex z{0.5, 1.0};
    const auto r = shl::evolve(s, {shl::TrackedPoint::at(z)}, shl::DriftMode::exact_quadrature, at);
    const auto& p = r.snapshots[0].points[0];
    CHECK(p.value == z);
    CHECK(std::abs(shl::fluctuation(p, 2.0, shl::DriftMode::asymptotic) - Complex{0.0, -M_PI}) <= 1e-15);
    CHECK(std::abs(shl::fluctuation(p, 2.0, shl::DriftMode::exact_quadrature) +
                   2.0 * shl::window_drift(z, -10.0, 10.0)) <= 1e-14);
}

TEST_CASE("heights never decrease along the path", "[process]") {
    const auto s = shl::sample_arrivals(-20.0, 20.0, 5.0, 24, 0);
    const double at[] = {0.5, 1.0, 2.0, 3.0, 4.0, 5.0};
    const auto r = shl::evolve(s, {shl::TrackedPoint::at({0.0, 0.0}), shl::TrackedPoint::at({3.0, 0.2})},
                               shl::DriftMode::asymptotic, at);
    REQUIRE(r.snapshots.size() == 6);
    for (std::size_t k = 1; k < r.snapshots.size(); ++k) {
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(r.snapshots[k].points[i].value.imag() >= r.snapshots[k - 1].points[i].value.imag());
        }
    }
}

TEST_CASE("exact compensator makes M a martingale", "[process][property]") {
    // E M_t = 0 for the Doob decomposition of the finite-window process; the
    // asymptotic drift overshoots it by about the truncated tail.
    const int n = 3000;
    const double t = 3.0;
    double sr = 0, si = 0, sr2 = 0, si2 = 0;
    for (int i = 0; i < n; ++i) {
        shl::ArrivalGenerator gen({-8.0, 8.0}, t, 77, i);
        const double at[] = {t};
        const auto r = shl::evolve(gen, {shl::TrackedPoint::at({0.0, 0.0})}, shl::DriftMode::exact_quadrature, at);
        const Complex m = shl::fluctuation(r.snapshots[0].points[0], t, shl::DriftMode::exact_quadrature);
        sr += m.real();
        si += m.imag();
        sr2 += m.real() * m.real();
        si2 += m.imag() * m.imag();
    }
    const double mr = sr / n, mi = si / n;
    const double ser = std::sqrt((sr2 / n - mr * mr) / n), sei = std::sqrt((si2 / n - mi * mi) / n);
    CHECK(std::fabs(mr) <= 4.0 * ser);
    CHECK(std::fabs(mi) <= 4.0 * sei);
}

TEST_CASE("exact compensator equals the direct sum of window drifts", "[process]") {
    // Oracle: window_drift evaluated at every inter-arrival interval.
    for (double half : {3.0, 40.0, 500.0, 5000.0}) {
        const double t = half > 1000.0 ? 0.5 : 2.0;
        const auto s = shl::sample_arrivals(-half, half, t, 31, static_cast<std::uint64_t>(half));
        for (Complex z0 : {Complex{0.0, 0.0}, Complex{0.3, 2.0}, Complex{half - 1.0, 0.5}}) {
            Complex z = z0;
            Complex comp{0.0, 0.0};
            double last = 0.0;
            for (const auto& a : s.arrivals) {
                comp += (a.t - last) * shl::window_drift(z, -half, half);
                last = a.t;
                z = shl::slit_apply(a.x, z);
            }
            comp += (t - last) * shl::window_drift(z, -half, half);
            const double at[] = {t};
            const auto r = shl::evolve(s, {shl::TrackedPoint::at(z0)}, shl::DriftMode::exact_quadrature, at);
            CHECK(std::abs(r.snapshots[0].points[0].compensator - comp) <= 1e-12 * std::abs(comp));
        }
    }
}

TEST_CASE("checkpoint validation", "[process]") {
    const auto s = manual_stream({}, 1.0);
    const double beyond[] = {2.0};
    CHECK_THROWS_AS(shl::evolve(s, {}, shl::DriftMode::asymptotic, beyond), std::invalid_argument);
    const double unordered[] = {0.5, 0.2};
    CHECK_THROWS_AS(shl::evolve(s, {}, shl::DriftMode::asymptotic, unordered), std::invalid_argument);
    CHECK_THROWS_AS(shl::TrackedPoint::at({0.0, -1.0}), shl::DomainError);
}

TEST_CASE("drift mode names", "[process]") {
    CHECK(shl::parse_drift_mode("asymptotic") == shl::DriftMode::asymptotic);
    CHECK(shl::parse_drift_mode("exact") == shl::DriftMode::exact_quadrature);
    CHECK(shl::parse_drift_mode(shl::to_string(shl::DriftMode::exact_quadrature)) == shl::DriftMode::exact_quadrature);
    CHECK_THROWS_AS(shl::parse_drift_mode("bogus"), std::invalid_argument);
}

TEST_CASE("auto window", "[process]") {
    CHECK(shl::auto_window_halfwidth(0.5) == 64.0);
    const double l = std::log(10.0);
    CHECK(shl::auto_window_halfwidth(8.0) == Catch::Approx(64.0 * l * l).epsilon(1e-15));
    CHECK(shl::auto_window_halfwidth(64.0) > 8.0 * 64.0);
}
