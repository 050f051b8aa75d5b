#pragma once

// Event-driven composition engine for stationary Hastings-Levitov(0).
//
// Backward process: each arrival (x_k, t_k) is applied outermost,
//     F_t(z) = phi_{x_k} o ... o phi_{x_1}(z),   t_k <= t < t_{k+1},
// which makes the image of a tracked point a Markov chain driven by the
// arrivals. The forward process composes the same arrivals earliest-
// outermost and is only needed to draw the aggregate.

#include "shl/arrivals.hpp"
#include "shl/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shl {

/// How the deterministic part of F_t(z) - z is removed.
enum class DriftMode {
    asymptotic,        // i * pi/2 * t, the infinite-window drift
    exact_quadrature,  // the Doob compensator of the finite-window process
};

inline std::string_view to_string(DriftMode mode) {
    return mode == DriftMode::asymptotic ? "asymptotic" : "exact_quadrature";
}

inline DriftMode parse_drift_mode(std::string_view name) {
    if (name == "asymptotic") return DriftMode::asymptotic;
    if (name == "exact_quadrature" || name == "exact") return DriftMode::exact_quadrature;
    throw std::invalid_argument("unknown drift mode '" + std::string(name) + "'");
}

struct TrackedPoint {
    Complex initial;
    Complex value;
    Complex deriv{1.0, 0.0};       // (F_s)'(initial); only tracked when Im initial > 0
    Complex compensator{0.0, 0.0};  // accumulated drift D_s(initial)
    double last_time = 0.0;
    // Exact mode: window drift expanded to second order about `anchor`, valid while
    // |value - anchor|^2 <= anchor_radius2.
    Complex anchor{0.0, 0.0};
    Complex anchor_drift{0.0, 0.0};
    Complex anchor_slope{0.0, 0.0};
    Complex anchor_curvature{0.0, 0.0};  // D''/2
    double anchor_radius2 = -1.0;

    static TrackedPoint at(Complex z) {
        if (!(z.imag() >= 0.0)) throw DomainError("tracked points must lie in the closed upper half-plane");
        return TrackedPoint{z, z};
    }
    bool tracks_derivative() const { return initial.imag() > 0.0; }
};

struct Snapshot {
    double time = 0.0;
    std::vector<TrackedPoint> points;
};

struct EvolveResult {
    std::vector<Snapshot> snapshots;
    std::size_t arrivals = 0;
};

namespace detail {

// D(z) = window_drift(z) has D'(z) = inc(z - lo) - inc(z - hi) and
// inc'(w) = -inc(w) / s(w) with s = -1/inc - w. For |w| >= 2,
// |inc''(w)| <= 4/|w|^3, so the quadratic expansion is off by about
// 1.4 (r/d)^3 per unit time.
inline void anchor_drift(TrackedPoint& p, Window window) {
    const Complex z = p.value;
    p.anchor = z;
    p.anchor_drift = window_drift(z, window.lo, window.hi);
    const double d = std::min(std::abs(z - window.lo), std::abs(z - window.hi));
    if (d >= 4.0) {
        const Complex w_lo = z - window.lo;
        const Complex w_hi = z - window.hi;
        const Complex inc_lo = increment_offset(w_lo);
        const Complex inc_hi = increment_offset(w_hi);
        const Complex s_lo = -reciprocal(inc_lo) - w_lo;
        const Complex s_hi = -reciprocal(inc_hi) - w_hi;
        p.anchor_slope = inc_lo - inc_hi;
        p.anchor_curvature = 0.5 * (inc_hi / s_hi - inc_lo / s_lo);
        const double r = 1e-5 * d;
        p.anchor_radius2 = r * r;
    } else {
        p.anchor_slope = {0.0, 0.0};
        p.anchor_curvature = {0.0, 0.0};
        p.anchor_radius2 = 0.0;
    }
}

inline void accumulate_drift(TrackedPoint& p, double to_time, Window window) {
    const double dt = to_time - p.last_time;
    if (dt > 0.0) {
        Complex dz = p.value - p.anchor;
        if (!(std::norm(dz) <= p.anchor_radius2)) {
            anchor_drift(p, window);
            dz = {0.0, 0.0};
        }
        p.compensator += dt * (p.anchor_drift + multiply(dz, p.anchor_slope + multiply(dz, p.anchor_curvature)));
    }
}

inline void advance_compensators(std::span<TrackedPoint> points, double to_time, DriftMode mode, Window window) {
    for (TrackedPoint& p : points) {
        if (mode == DriftMode::exact_quadrature) {
            accumulate_drift(p, to_time, window);
        } else {
            p.compensator = Complex{0.0, kHalfPi * to_time};
        }
        p.last_time = to_time;
    }
}

}  // namespace detail

/// Runs the backward process over every arrival of `source`, recording the
/// state of all points at each checkpoint time (ascending, within the
/// source horizon). Costs one slit-map evaluation per (arrival, point).
template <ArrivalSource S>
EvolveResult evolve(S& source, std::vector<TrackedPoint> points, DriftMode mode, std::span<const double> checkpoints) {
    const Window window = source.window();
    const double horizon = source.horizon();
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        if (!(checkpoints[i] >= 0.0 && checkpoints[i] <= horizon)) {
            throw std::invalid_argument("checkpoint times must lie in [0, horizon]");
        }
        if (i > 0 && checkpoints[i] < checkpoints[i - 1]) throw std::invalid_argument("checkpoints must be ascending");
    }
    for (const TrackedPoint& p : points) {
        if (!(p.value.imag() >= 0.0)) throw DomainError("tracked point below the real axis");
    }

    EvolveResult result;
    result.snapshots.reserve(checkpoints.size());
    std::size_t next_checkpoint = 0;
    auto emit_until = [&](double t) {
        while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] < t) {
            detail::advance_compensators(points, checkpoints[next_checkpoint], mode, window);
            result.snapshots.push_back({checkpoints[next_checkpoint], points});
            ++next_checkpoint;
        }
    };

    const bool exact = mode == DriftMode::exact_quadrature;
    while (auto arrival = source.next()) {
        emit_until(arrival->t);
        ++result.arrivals;
        for (TrackedPoint& p : points) {
            if (exact) {
                detail::accumulate_drift(p, arrival->t, window);
                p.last_time = arrival->t;
            }
            const Complex w = p.value - arrival->x;
            if (p.tracks_derivative()) {
                const detail::SlitStep step = detail::slit_step(w);
                p.value += step.increment;
                p.deriv = detail::multiply(p.deriv, step.derivative);
            } else {
                p.value += detail::increment_offset(w);
            }
        }
    }
    emit_until(std::numeric_limits<double>::infinity());
    return result;
}

/// Convenience overload for a materialized stream.
inline EvolveResult evolve(const EventStream& stream, std::vector<TrackedPoint> points, DriftMode mode,
                           std::span<const double> checkpoints) {
    StreamCursor cursor(stream);
    return evolve(cursor, std::move(points), mode, checkpoints);
}

/// M_t(z) = F_t(z) - z - drift, with the drift chosen by `mode`.
inline Complex fluctuation(const TrackedPoint& point, double at_time, DriftMode mode) {
    if (mode == DriftMode::asymptotic) return point.value - point.initial - Complex{0.0, kHalfPi * at_time};
    return point.value - point.initial - point.compensator;
}

/// Forward image of real grid points: arrivals up to `at_time` applied
/// earliest-outermost, F~(u) = phi_{x_1} o ... o phi_{x_K}(u).
inline std::vector<Complex> render_forward(const EventStream& stream, std::span<const double> grid, double at_time) {
    auto end = std::upper_bound(stream.arrivals.begin(), stream.arrivals.end(), at_time,
                                [](double t, const Arrival& a) { return t < a.t; });
    std::vector<Complex> image;
    image.reserve(grid.size());
    for (double u : grid) {
        Complex z{u, 0.0};
        for (auto it = end; it != stream.arrivals.begin();) {
            --it;
            z = slit_apply(it->x, z);
        }
        image.push_back(z);
    }
    return image;
}

/// Default window half-width max(64, 8 t ln^2(2 + t)); the truncation
/// bias of order t/m stays small while the arrival count stays tractable.
inline double auto_window_halfwidth(double t) {
    const double l = std::log(2.0 + t);
    return std::max(64.0, 8.0 * t * l * l);
}

}  // namespace shl
