#pragma once

// Adaptive Gauss-Kronrod (7/15) integration of complex-valued integrands on
// finite intervals, plus the slit-map integrals built on it. These are the
// independent numerical oracles for the closed forms used by the
// simulation engine.

#include "shl/conformal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace shl {

enum class TailMode { none, series };

struct QuadratureSpec {
    double half_width = 1.0e4;  // the x-integral is truncated to [-half_width, half_width]
    double rel_tol = 1.0e-10;
    TailMode tail_mode = TailMode::series;

    void validate() const {
        if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
            throw std::invalid_argument("quadrature rel_tol must lie in (0, 1)");
        }
        if (!(half_width >= 2.0)) throw std::invalid_argument("quadrature half_width must be >= 2");
    }
};

/// Adaptive refinement gave up before reaching the requested tolerance.
class ToleranceError : public std::runtime_error {
public:
    ToleranceError(const std::string& what, double achieved, double requested)
        : std::runtime_error(what + " (achieved error " + std::to_string(achieved) + ", requested " +
                             std::to_string(requested) + ")"),
          achieved_error(achieved),
          requested_error(requested) {}

    double achieved_error;
    double requested_error;
};

struct QuadratureResult {
    Complex value;
    double error_estimate = 0.0;
    std::size_t intervals = 0;
};

namespace detail {

// QUADPACK qk15 abscissae and weights.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a;
    double b;
    Complex value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod_15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const Complex fc = f(center);
    Complex kronrod = fc * kKronrodWeights[7];
    Complex gauss = fc * kGaussWeights[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kKronrodNodes[j];
        const Complex pair = f(center - dx) + f(center + dx);
        kronrod += pair * kKronrodWeights[j];
        if (j % 2 == 1) gauss += pair * kGaussWeights[j / 2];
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Integrates f over the partition given by sorted `breakpoints`, bisecting
/// the worst panel until the summed error estimate is at most
/// max(rel_tol * |I|, abs_floor).
template <class F>
QuadratureResult integrate_adaptive(F&& f, const std::vector<double>& breakpoints, double rel_tol,
                                    double abs_floor = 1.0e-15, std::size_t max_panels = 200000) {
    if (breakpoints.size() < 2) throw std::invalid_argument("need at least one integration panel");
    std::priority_queue<detail::Panel> panels;
    Complex total{0.0, 0.0};
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (!(breakpoints[i] < breakpoints[i + 1])) throw std::invalid_argument("breakpoints must increase");
        detail::Panel p = detail::gauss_kronrod_15(f, breakpoints[i], breakpoints[i + 1]);
        total += p.value;
        error += p.error;
        panels.push(p);
    }
    while (error > std::max(rel_tol * std::abs(total), abs_floor)) {
        if (panels.size() >= max_panels) {
            throw ToleranceError("adaptive quadrature exhausted its panel budget", error,
                                 std::max(rel_tol * std::abs(total), abs_floor));
        }
        const detail::Panel worst = panels.top();
        panels.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            throw ToleranceError("adaptive quadrature reached machine resolution", error,
                                 std::max(rel_tol * std::abs(total), abs_floor));
        }
        const detail::Panel left = detail::gauss_kronrod_15(f, worst.a, mid);
        const detail::Panel right = detail::gauss_kronrod_15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
    }
    // Re-sum in a fixed order to shed the drift of the running updates.
    std::vector<detail::Panel> all;
    all.reserve(panels.size());
    while (!panels.empty()) {
        all.push_back(panels.top());
        panels.pop();
    }
    std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
    Complex value{0.0, 0.0};
    double err = 0.0;
    for (const auto& p : all) {
        value += p.value;
        err += p.error;
    }
    return {value, err, all.size()};
}

/// Breakpoints on [-half_width, half_width] refined around `center`: at
/// center +- 1 (where the slit integrands have square-root kinks on the
/// real axis) and on a geometric ladder center +- 2^k outward.
inline std::vector<double> slit_breakpoints(double center, double half_width) {
    std::vector<double> pts{-half_width, half_width};
    for (double step = 1.0; step < 4.0 * half_width; step *= 2.0) {
        pts.push_back(center - step);
        pts.push_back(center + step);
    }
    pts.push_back(center);
    std::vector<double> kept;
    for (double p : pts) {
        if (p >= -half_width && p <= half_width) kept.push_back(p);
    }
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    return kept;
}

/// Integral over x in R of phi_x(z) - z (equals i*pi/2 in the limit).
/// Quadrature on [-X, X]; with TailMode::series the outer contribution of the
/// leading term -1/(2(z - x)) is added in closed form.
inline QuadratureResult drift_integral(Complex z, const QuadratureSpec& spec) {
    spec.validate();
    if (!(z.imag() > 0.0)) throw DomainError("drift_integral needs Im z > 0");
    const double X = spec.half_width;
    auto f = [z](double x) { return detail::increment_offset(z - x); };
    QuadratureResult r = integrate_adaptive(f, slit_breakpoints(z.real(), X), spec.rel_tol);
    if (spec.tail_mode == TailMode::series) {
        r.value += 0.5 * (std::log(Complex{-X, 0.0} - z) - std::log(Complex{X, 0.0} - z)) + Complex{0.0, kHalfPi};
    }
    return r;
}

/// Integral over x in R of |phi_x(iy) - iy|^2; about pi/(4y) for large y.
inline double squared_displacement_integral(double y, const QuadratureSpec& spec) {
    spec.validate();
    if (!(y > 0.0)) throw DomainError("squared_displacement_integral needs y > 0");
    const double X = spec.half_width;
    auto f = [y](double x) { return Complex{std::norm(detail::increment_offset(Complex{-x, y})), 0.0}; };
    double value = integrate_adaptive(f, slit_breakpoints(0.0, X), spec.rel_tol).value.real();
    if (spec.tail_mode == TailMode::series) {
        // 2 * int_X^inf dx / (4 (x^2 + y^2))
        value += (kHalfPi - std::atan(X / y)) / (2.0 * y);
    }
    return value;
}

/// Integral over x in R of delta(zeta, x); equals pi/2 for every zeta >= 0.
inline double delta_integral(double zeta, const QuadratureSpec& spec) {
    spec.validate();
    if (!(zeta >= 0.0)) throw DomainError("delta_integral needs zeta >= 0");
    const double X = spec.half_width;
    auto f = [zeta](double x) { return Complex{detail::increment_offset(Complex{-x, zeta}).imag(), 0.0}; };
    double value = integrate_adaptive(f, slit_breakpoints(0.0, X), spec.rel_tol).value.real();
    if (spec.tail_mode == TailMode::series && zeta > 0.0) {
        // 2 * int_X^inf zeta / (2 (x^2 + zeta^2)) dx
        value += kHalfPi - std::atan(X / zeta);
    }
    return value;
}

}  // namespace shl
