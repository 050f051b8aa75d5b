#pragma once

// Self-checks of the analytic kernel and the quadrature layer, with one
// PASS/FAIL line per check. Used by `shl verify`.

#include "shl/conformal.hpp"
#include "shl/estimators.hpp"
#include "shl/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace shl {

struct VerifyOptions {
    double rel_tol = 1.0e-10;  // quadrature tolerance; check tolerances widen with it
    std::size_t branch_samples = 1000000;
    std::size_t delta_samples = 10000;
    std::size_t koebe_maps = 20;
    std::size_t koebe_pairs = 50;
    double koebe_t = 4.0;
    std::uint64_t seed = 20240607;
    // Test hook: evaluate the map with the principal square root and no
    // branch correction, which must be caught by the branch check.
    bool inject_wrong_branch = false;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    double achieved = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

namespace detail {

inline double tolerance_scale(const VerifyOptions& opt) { return std::max(1.0, opt.rel_tol / 1.0e-10); }

inline CheckResult bounded(std::string name, double achieved, double tolerance, std::string detail = {}) {
    return {std::move(name), achieved <= tolerance, achieved, tolerance, std::move(detail)};
}

inline Complex wrong_branch_apply(double x, Complex z) {
    return x + std::sqrt((z - x) * (z - x) - 1.0);
}

}  // namespace detail

inline std::vector<CheckResult> run_verification(const VerifyOptions& opt) {
    const double scale = detail::tolerance_scale(opt);
    QuadratureSpec qs;
    qs.rel_tol = opt.rel_tol;
    std::vector<CheckResult> out;

    {
        double worst = 0.0;
        for (double y : {0.1, 1.0, 10.0, 1000.0}) {
            const Complex exact{0.0, std::sqrt(y * y + 1.0)};
            worst = std::max(worst, std::abs(slit_apply(0.0, {0.0, y}) - exact) / std::abs(exact));
        }
        out.push_back(detail::bounded("kernel: phi_0(iy) = i sqrt(y^2+1)", worst, 1e-12));
    }

    for (double y : {1.0, 5.0, 10.0}) {
        const Complex d = drift_integral({0.0, y}, qs).value;
        const double err = std::max(std::abs(d - Complex{0.0, kHalfPi}), 0.0);
        auto c = detail::bounded("drift: integral at i" + std::to_string(static_cast<int>(y)) + " -> i pi/2", err,
                                 1e-6 * scale);
        c.passed = c.passed && std::fabs(d.real()) <= 1e-8 * scale;
        char buf[48];
        std::snprintf(buf, sizeof buf, "re=%.2e", d.real());
        c.detail = buf;
        out.push_back(c);
    }

    for (double y : {5.0, 10.0, 20.0, 100.0}) {
        const double v = squared_displacement_integral(y, qs);
        out.push_back(detail::bounded("squared displacement at y=" + std::to_string(static_cast<int>(y)) + " vs pi/(4y)",
                                      std::fabs(v - kHalfPi / (2.0 * y)), 5.0 / (y * y * y) * scale));
    }

    for (double zeta : {0.0, 1.0, 50.0}) {
        out.push_back(detail::bounded("delta integral at zeta=" + std::to_string(static_cast<int>(zeta)) + " = pi/2",
                                      std::fabs(delta_integral(zeta, qs) - kHalfPi), 1e-6 * scale));
    }

    {
        StreamRng rng(opt.seed, 1);
        double worst = 0.0;
        for (std::size_t i = 0; i < opt.delta_samples; ++i) {
            const double zeta = std::exp(std::log(1e-3) + std::log(1e6) * rng.uniform());
            const double x = (2.0 * rng.uniform() - 1.0) * std::exp(std::log(1e-3) + std::log(1e7) * rng.uniform());
            const double d = delta(zeta, x);
            const double d0 = delta(zeta, 0.0);
            const double cap = 1.0 / (1.0 + zeta);
            worst = std::max({worst, -d, d - d0, d0 - cap});
        }
        out.push_back(detail::bounded("delta: 0 <= D(z,x) <= D(z,0) <= 1/(1+z)", std::max(worst, 0.0), 1e-12));
    }

    {
        StreamRng rng(opt.seed, 2);
        double worst_im = 0.0;
        double worst_inc = 0.0;
        for (std::size_t i = 0; i < opt.branch_samples; ++i) {
            const double x = (2.0 * rng.uniform() - 1.0) * 10.0;
            const double re = (2.0 * rng.uniform() - 1.0) * std::exp(std::log(1e-4) + std::log(1e10) * rng.uniform());
            const double im = std::exp(std::log(1e-8) + std::log(1e12) * rng.uniform());
            const Complex z{re, im};
            const Complex image = opt.inject_wrong_branch ? detail::wrong_branch_apply(x, z) : slit_apply(x, z);
            worst_im = std::max(worst_im, -image.imag());
            worst_inc = std::max(worst_inc, std::abs(image - z) - 1.0);
        }
        out.push_back(detail::bounded("branch: Im phi_x(z) >= 0", std::max(worst_im, 0.0), 0.0));
        out.push_back(detail::bounded("branch: |phi_x(z) - z| <= 1", std::max(worst_inc, 0.0), 1e-12));
    }

    {
        SimConfig cfg;
        cfg.master_seed = opt.seed;
        const KoebeReport k = koebe_check(opt.koebe_maps, opt.koebe_pairs, opt.koebe_t, cfg);
        out.push_back(detail::bounded("koebe: |F'(w)| / |F'(z)| <= 16", k.max_ratio, 16.0,
                                      std::to_string(k.pairs) + " pairs"));
    }
    return out;
}

inline bool all_passed(const std::vector<CheckResult>& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

inline std::string format_check(const CheckResult& c) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s  %-52s achieved=%.3e tol=%.3e%s%s", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                  c.achieved, c.tolerance, c.detail.empty() ? "" : "  ", c.detail.c_str());
    return buf;
}

}  // namespace shl
