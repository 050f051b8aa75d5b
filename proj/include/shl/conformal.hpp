#pragma once

// Unit slit maps of the upper half-plane:
//
//     phi_x(z) = x + sqrt((z - x)^2 - 1)
//
// with the square-root branch whose imaginary part is nonnegative. All
// functions here are pure and safe to call concurrently.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace shl {

using Complex = std::complex<double>;

/// Raised when a map is evaluated outside the closed upper half-plane.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

inline constexpr double kHalfPi = std::numbers::pi / 2.0;

/// Offsets beyond this radius use the truncated large-|w| series.
inline constexpr double kSeriesRadius = 1.0e4;

namespace detail {

// Principal square root (C99 csqrt semantics, including signed zeros)
// without the overflow guards; callers keep |p| below about 1e9.
inline Complex principal_sqrt(Complex p) noexcept {
    const double a = p.real();
    const double b = p.imag();
    const double r = std::sqrt(a * a + b * b);
    if (r == 0.0) return {0.0, b};
    if (a >= 0.0) {
        const double t = std::sqrt(0.5 * (r + a));
        return {t, b / (2.0 * t)};
    }
    const double t = std::sqrt(0.5 * (r - a));
    return {std::fabs(b) / (2.0 * t), std::copysign(t, b)};
}

// Root s with s^2 = w^2 - 1, Im s >= 0, and on the real axis sign(Re s) =
// sign(Re w). Only the sign of the principal root is in question, and the
// two candidates differ in the sign of Im s unless w is real.
inline Complex upper_root_direct(Complex w) noexcept {
    const double a = w.real();
    const double b = w.imag();
    Complex s = principal_sqrt({a * a - b * b - 1.0, 2.0 * a * b});
    if (s.imag() < 0.0 || (s.imag() == 0.0 && s.real() * a < 0.0)) s = -s;
    return s;
}

// 1/w without the scaling guards of the library division; |w| is far
// from both overflow and underflow on every call path.
inline Complex reciprocal(Complex w) noexcept {
    const double n = 1.0 / (w.real() * w.real() + w.imag() * w.imag());
    return {w.real() * n, -w.imag() * n};
}

inline Complex multiply(Complex a, Complex b) noexcept {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

/// phi_x(z) - z as a function of the offset w = z - x, through the product
/// identity (s - w)(s + w) = -1. The sum s + w never cancels (|s + w| >= 1
/// on the closed half-plane), so this is accurate for all |w| up to
/// kSeriesRadius.
inline Complex increment_direct(Complex w) noexcept {
    const Complex s = upper_root_direct(w);
    return -reciprocal({s.real() + w.real(), s.imag() + w.imag()});
}

/// Truncated expansion -1/(2w) - 1/(8w^3) - 1/(16w^5); relative error is
/// O(|w|^-6).
inline Complex increment_series(Complex w) noexcept {
    const Complex inv = reciprocal(w);
    const Complex inv2 = multiply(inv, inv);
    const Complex poly{0.5 + 0.125 * inv2.real() + 0.0625 * (inv2.real() * inv2.real() - inv2.imag() * inv2.imag()),
                       0.125 * inv2.imag() + 0.125 * inv2.real() * inv2.imag()};
    return -multiply(inv, poly);
}

inline Complex increment_offset(Complex w) noexcept {
    if (std::norm(w) > kSeriesRadius * kSeriesRadius) return increment_series(w);
    return increment_direct(w);
}

// phi'_x(z) as a function of w = z - x; requires s(w) != 0.
inline Complex derivative_offset(Complex w) noexcept {
    if (std::norm(w) > kSeriesRadius * kSeriesRadius) {
        // 1 / sqrt(1 - u) = 1 + u/2 + 3u^2/8 + ...,  u = 1/w^2
        const Complex inv = reciprocal(w);
        const Complex u = multiply(inv, inv);
        const Complex u2 = multiply(u, u);
        return {1.0 + 0.5 * u.real() + 0.375 * u2.real(), 0.5 * u.imag() + 0.375 * u2.imag()};
    }
    return multiply(w, reciprocal(upper_root_direct(w)));
}

struct SlitStep {
    Complex increment;
    Complex derivative;
};

// Increment and derivative factor sharing one root evaluation; the hot
// path of the composition engine.
inline SlitStep slit_step(Complex w) noexcept {
    if (std::norm(w) > kSeriesRadius * kSeriesRadius) return {increment_series(w), derivative_offset(w)};
    const Complex s = upper_root_direct(w);
    return {-reciprocal({s.real() + w.real(), s.imag() + w.imag()}), multiply(w, reciprocal(s))};
}

inline void check_closed_half_plane(double x, Complex z) {
    if (!(z.imag() >= 0.0)) {
        throw DomainError("slit map evaluated below the real axis (Im z = " +
                          std::to_string(z.imag()) + ")");
    }
    if (!std::isfinite(x) || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw DomainError("slit map evaluated at a non-finite point");
    }
}

// Antiderivative in w of s(w) - w, namely (w s - log(w + s) - w^2) / 2,
// rewritten through w + s = -1/(s - w) so nothing cancels for large |w|.
// w + s lies in the closed upper half-plane, so the argument is taken in
// [0, pi].
inline Complex increment_antiderivative(Complex w) noexcept {
    const Complex inc = increment_offset(w);
    const Complex q = -reciprocal(inc);
    const double im = q.imag() > 0.0 ? q.imag() : 0.0;
    const Complex log_q{0.5 * std::log(std::norm(q)), std::atan2(im, q.real())};
    return 0.5 * (multiply(w, inc) - log_q);
}

}  // namespace detail

/// phi_x(z) - z. Stable for arbitrarily large |z - x|; |result| <= 1.
inline Complex slit_increment(double x, Complex z) {
    detail::check_closed_half_plane(x, z);
    return detail::increment_offset(z - x);
}

/// phi_x(z).
inline Complex slit_apply(double x, Complex z) {
    detail::check_closed_half_plane(x, z);
    const Complex w = z - x;
    if (std::norm(w) <= 4.0) return x + detail::upper_root_direct(w);
    return z + detail::increment_offset(w);
}

/// phi'_x(z) = (z - x) / sqrt((z - x)^2 - 1); needs Im z > 0.
inline Complex slit_derivative(double x, Complex z) {
    if (!(z.imag() > 0.0)) {
        throw DomainError("slit derivative needs Im z > 0 (got " + std::to_string(z.imag()) + ")");
    }
    return detail::derivative_offset(z - x);
}

/// Vertical increment Im(phi_x(i zeta) - i zeta) of a point at height zeta.
inline double delta(double zeta, double x) {
    if (!(zeta >= 0.0)) throw DomainError("delta needs zeta >= 0");
    return slit_increment(x, Complex{0.0, zeta}).imag();
}

/// Exact integral of phi_x(z) - z over x in [lo, hi]: the jump-rate drift
/// of a point at z under unit-intensity arrivals on that window. Tends to
/// i*pi/2 as the window grows in both directions.
inline Complex window_drift(Complex z, double lo, double hi) {
    if (!(z.imag() >= 0.0)) throw DomainError("window drift needs Im z >= 0");
    return detail::increment_antiderivative(z - lo) - detail::increment_antiderivative(z - hi);
}

}  // namespace shl
