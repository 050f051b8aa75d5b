#pragma once

// Seeded Monte Carlo drivers for the fluctuation field M_t.
//
// Sample i of experiment cell c always draws its arrivals from
// (cfg.master_seed, derive_stream_id(c, i)), and per-sample outputs are
// reduced in sample order, so results do not depend on the worker count.

#include "shl/arrivals.hpp"
#include "shl/config.hpp"
#include "shl/process.hpp"
#include "shl/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace shl {

/// Runs fn(0), ..., fn(n-1) on up to `threads` workers; output i is fn(i).
template <class Fn>
auto run_parallel(std::size_t n, unsigned threads, Fn&& fn) {
    using T = std::invoke_result_t<Fn&, std::size_t>;
    std::vector<T> out(n);
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        out[i] = fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = n;
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

// ---------------------------------------------------------------------------
// Single realizations

struct PointRecord {
    Complex initial;
    Complex value;  // F_t(initial)
    Complex m;      // M_t(initial)
    std::optional<Complex> deriv;
};

struct FieldSample {
    std::uint64_t sample_id = 0;
    double t = 0.0;
    Window window;
    DriftMode mode = DriftMode::asymptotic;
    std::vector<PointRecord> points;
    double max_im_over_grid = std::numeric_limits<double>::quiet_NaN();
    double im_F_at_0 = std::numeric_limits<double>::quiet_NaN();
};

struct FieldRequest {
    double t = 0.0;
    Window window;
    std::vector<Complex> points;
    DriftMode mode = DriftMode::asymptotic;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    std::uint64_t sample_id = 0;
    // Points [grid_begin, grid_end) feed max_im_over_grid.
    std::size_t grid_begin = 0;
    std::size_t grid_end = 0;
};

inline FieldSample record_field(const FieldRequest& req, const Snapshot& snap, DriftMode mode) {
    FieldSample s;
    s.sample_id = req.sample_id;
    s.t = req.t;
    s.window = req.window;
    s.mode = mode;
    s.points.reserve(snap.points.size());
    for (const TrackedPoint& p : snap.points) {
        PointRecord r{p.initial, p.value, fluctuation(p, req.t, mode), std::nullopt};
        if (p.tracks_derivative()) r.deriv = p.deriv;
        s.points.push_back(r);
        if (p.initial == Complex{0.0, 0.0} && std::isnan(s.im_F_at_0)) s.im_F_at_0 = p.value.imag();
    }
    for (std::size_t i = req.grid_begin; i < req.grid_end && i < s.points.size(); ++i) {
        const double v = s.points[i].m.imag();
        if (std::isnan(s.max_im_over_grid) || v > s.max_im_over_grid) s.max_im_over_grid = v;
    }
    return s;
}

/// One realization of the backward process observed at time req.t.
inline FieldSample simulate_field(const FieldRequest& req) {
    ArrivalGenerator gen(req.window, req.t, req.seed, req.stream_id);
    std::vector<TrackedPoint> pts;
    pts.reserve(req.points.size());
    for (Complex z : req.points) pts.push_back(TrackedPoint::at(z));
    const double checkpoint[] = {req.t};
    EvolveResult r = evolve(gen, std::move(pts), req.mode, checkpoint);
    return record_field(req, r.snapshots.front(), req.mode);
}

namespace detail {

enum class Experiment : std::uint64_t {
    variance = 1,
    covariance,
    max_fluctuation,
    exp_moment,
    lln_tail,
    derivative_moment,
    truncation,
    koebe,
    histogram,
    koebe_geometry,
};

inline std::uint64_t cell_id(Experiment e, std::size_t index) {
    return (static_cast<std::uint64_t>(e) << 16) | static_cast<std::uint64_t>(index);
}

inline void require_samples(const SimConfig& cfg) {
    if (cfg.n_samples < 2) throw InsufficientSamplesError("need at least two Monte Carlo samples");
}

inline void require_positive_times(std::span<const double> ts) {
    if (ts.empty()) throw std::invalid_argument("need at least one time");
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!(ts[i] > 0.0) || !std::isfinite(ts[i])) throw std::invalid_argument("times must be positive");
        if (i > 0 && !(ts[i] > ts[i - 1])) throw std::invalid_argument("times must be strictly ascending");
    }
}

inline std::vector<FieldSample> sample_cell(const SimConfig& cfg, Experiment e, std::size_t index, double t,
                                            Window window, const std::vector<Complex>& points, DriftMode mode,
                                            std::size_t grid_begin = 0, std::size_t grid_end = 0) {
    const std::uint64_t cell = cell_id(e, index);
    return run_parallel(cfg.n_samples, cfg.threads, [&](std::size_t i) {
        FieldRequest req{t, window, points, mode, cfg.master_seed, derive_stream_id(cell, i), i, grid_begin, grid_end};
        return simulate_field(req);
    });
}

template <class F>
std::vector<double> per_sample(const std::vector<FieldSample>& samples, F&& f) {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const FieldSample& s : samples) v.push_back(f(s));
    return v;
}

inline double inner(Complex a, Complex b) { return a.real() * b.real() + a.imag() * b.imag(); }

inline void check_relative_error(const EstimateResult& r, const std::string& what) {
    if (r.std_error > 0.2 * std::fabs(r.estimate)) {
        throw InsufficientSamplesError(what + ": relative standard error " +
                                       std::to_string(r.std_error / std::fabs(r.estimate)) +
                                       " exceeds 0.2; increase the sample count");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Variance law

struct VarianceReport {
    std::vector<double> t;
    std::vector<EstimateResult> estimates;  // E|M_t(0)|^2
    std::optional<SlopeFit> fit;            // against ln t, when >= 3 times
    std::vector<std::vector<FieldSample>> samples;
};

inline VarianceReport estimate_variance(std::span<const double> t_list, const SimConfig& cfg) {
    detail::require_positive_times(t_list);
    detail::require_samples(cfg);
    VarianceReport rep;
    std::vector<SlopePoint> pts;
    for (std::size_t k = 0; k < t_list.size(); ++k) {
        const double t = t_list[k];
        const double m = resolve_halfwidth(cfg, t);
        auto samples = detail::sample_cell(cfg, detail::Experiment::variance, k, t, {-m, m}, {Complex{0.0, 0.0}},
                                           cfg.drift_mode);
        const auto v = detail::per_sample(samples, [](const FieldSample& s) { return std::norm(s.points[0].m); });
        EstimateResult r = summarize(v, config_digest(cfg, {{"estimator", "variance"}, {"t", t}}));
        detail::check_relative_error(r, "variance at t=" + std::to_string(t));
        rep.t.push_back(t);
        rep.estimates.push_back(r);
        pts.push_back({t, r.estimate, r.std_error});
        if (cfg.keep_samples) rep.samples.push_back(std::move(samples));
    }
    if (pts.size() >= 3) rep.fit = fit_log_slope(pts);
    return rep;
}

// ---------------------------------------------------------------------------
// Spatial covariance

/// Component convention for the covariance of two complex fluctuations.
inline constexpr const char* kCovarianceConvention =
    "E[Re M(0) Re M(b) + Im M(0) Im M(b)] (uncentered; M has mean zero)";

struct CovarianceReport {
    double t = 0.0;
    Window window;
    std::vector<double> b;
    std::vector<EstimateResult> covariance;
    EstimateResult variance_at_0;  // same samples, E|M_t(0)|^2
    bool common_randomness = true;
    DriftMode drift_mode = DriftMode::asymptotic;  // mode actually used
    std::vector<FieldSample> samples;
};

/// Inner-product estimate between tracked points i and j of every sample.
inline EstimateResult inner_product_estimate(const std::vector<FieldSample>& samples, std::size_t i, std::size_t j,
                                             std::string digest = {}) {
    const auto v = detail::per_sample(samples, [&](const FieldSample& s) {
        return detail::inner(s.points.at(i).m, s.points.at(j).m);
    });
    return summarize(v, std::move(digest));
}

inline CovarianceReport estimate_covariance(double t, std::span<const double> b_list, const SimConfig& cfg) {
    const double ts[] = {t};
    detail::require_positive_times(ts);
    detail::require_samples(cfg);
    if (b_list.empty()) throw std::invalid_argument("need at least one separation b");
    for (double b : b_list) {
        if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument("separations must be >= 0");
    }
    const double m = resolve_halfwidth(cfg, t);
    const double b_max = *std::max_element(b_list.begin(), b_list.end());
    CovarianceReport rep;
    rep.t = t;
    rep.window = {-m, b_max + m};
    rep.b.assign(b_list.begin(), b_list.end());
    std::vector<Complex> points{Complex{0.0, 0.0}};
    for (double b : b_list) points.emplace_back(b, 0.0);
    // On [-m, b + m] the asymptotic drift leaves Re M(0) and Re M(b) with
    // opposite deterministic offsets of about (t/2) ln(1 + b/m), so any
    // asymmetric window is compensated exactly.
    rep.drift_mode = b_max > 0.0 ? DriftMode::exact_quadrature : cfg.drift_mode;
    auto samples = detail::sample_cell(cfg, detail::Experiment::covariance, 0, t, rep.window, points, rep.drift_mode);
    rep.variance_at_0 =
        inner_product_estimate(samples, 0, 0, config_digest(cfg, {{"estimator", "covariance"}, {"t", t}, {"b", 0.0}}));
    detail::check_relative_error(rep.variance_at_0, "variance at t=" + std::to_string(t));
    for (std::size_t k = 0; k < b_list.size(); ++k) {
        rep.covariance.push_back(inner_product_estimate(
            samples, 0, k + 1,
            config_digest(cfg, {{"estimator", "covariance"},
                                {"t", t},
                                {"b", b_list[k]},
                                {"drift_mode", std::string(to_string(rep.drift_mode))}})));
    }
    if (cfg.keep_samples) rep.samples = std::move(samples);
    return rep;
}

// ---------------------------------------------------------------------------
// Maximal fluctuation over a grid

struct MaxFluctuationOptions {
    double spacing = 0.5;
    double height = 0.0;
    bool height_is_log_t = false;  // use height ln t instead of `height`
    double beta = 8.0;
    double range_lo = 0.0;  // grid covers [range_lo * t, range_hi * t]
    double range_hi = 1.0;
    std::size_t max_grid_points = 1u << 16;
};

struct MaxFluctuationCell {
    double t = 0.0;
    double height = 0.0;
    std::size_t grid_points = 0;
    EstimateResult exceedance;    // P(max_grid Im M_t > beta ln t)
    EstimateResult max_over_log;  // E[max_grid Im M_t / ln t]
    std::vector<std::pair<double, double>> quantiles;  // of max / ln t
};

struct MaxFluctuationReport {
    MaxFluctuationOptions options;
    std::vector<MaxFluctuationCell> cells;
    std::vector<std::vector<FieldSample>> samples;
};

inline MaxFluctuationReport estimate_max_fluctuation(std::span<const double> t_list, const MaxFluctuationOptions& opt,
                                                     const SimConfig& cfg) {
    detail::require_positive_times(t_list);
    detail::require_samples(cfg);
    if (!(opt.spacing > 0.0)) throw std::invalid_argument("grid spacing must be positive");
    if (!(opt.height >= 0.0)) throw std::invalid_argument("grid height must be >= 0");
    if (!(opt.range_hi >= opt.range_lo)) throw std::invalid_argument("grid range must be ordered");
    MaxFluctuationReport rep;
    rep.options = opt;
    for (std::size_t k = 0; k < t_list.size(); ++k) {
        const double t = t_list[k];
        if (!(t > 1.0)) throw std::invalid_argument("max fluctuation needs t > 1 (ln t > 0)");
        const double height = opt.height_is_log_t ? std::log(t) : opt.height;
        const GridSpec grid{opt.range_lo * t, opt.range_hi * t, opt.spacing, height};
        if ((grid.hi - grid.lo) / opt.spacing + 1.0 > static_cast<double>(opt.max_grid_points)) {
            throw CapacityError("grid of " + std::to_string((grid.hi - grid.lo) / opt.spacing + 1.0) +
                                " points exceeds the budget of " + std::to_string(opt.max_grid_points));
        }
        const auto xs = grid.abscissae();
        std::vector<Complex> points;
        for (double x : xs) points.emplace_back(x, height);
        const double m = resolve_halfwidth(cfg, t);
        auto samples = detail::sample_cell(cfg, detail::Experiment::max_fluctuation, k, t, {grid.lo - m, grid.hi + m},
                                           points, cfg.drift_mode, 0, points.size());
        const double lt = std::log(t);
        const auto exceed = detail::per_sample(
            samples, [&](const FieldSample& s) { return s.max_im_over_grid > opt.beta * lt ? 1.0 : 0.0; });
        const auto ratio = detail::per_sample(samples, [&](const FieldSample& s) { return s.max_im_over_grid / lt; });
        MaxFluctuationCell cell;
        cell.t = t;
        cell.height = height;
        cell.grid_points = points.size();
        const nlohmann::ordered_json id{{"estimator", "max_fluctuation"}, {"t", t},         {"spacing", opt.spacing},
                                        {"height", height},               {"beta", opt.beta}, {"range", {opt.range_lo, opt.range_hi}}};
        cell.exceedance = summarize(exceed, config_digest(cfg, id));
        cell.max_over_log = summarize(ratio, cell.exceedance.config_digest);
        for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) cell.quantiles.emplace_back(q, quantile(ratio, q));
        rep.cells.push_back(std::move(cell));
        if (cfg.keep_samples) rep.samples.push_back(std::move(samples));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Exponential moments and the Chernoff tail

/// exp(pi/2 alpha^2 e^alpha) t^{alpha^2}
inline double exp_moment_bound(double alpha, double t) {
    return std::exp(kHalfPi * alpha * alpha * std::exp(alpha)) * std::pow(t, alpha * alpha);
}

/// exp(pi beta^2 / 8 e^{beta/2}) t^{-beta^2/4}
inline double chernoff_tail_bound(double beta, double t) {
    return std::exp(std::numbers::pi * beta * beta / 8.0 * std::exp(beta / 2.0)) * std::pow(t, -beta * beta / 4.0);
}

struct ExpMomentCell {
    double t = 0.0;
    EstimateResult moment;  // E exp(alpha Im M_t(0))
    double bound = 0.0;
    double ratio = 0.0;       // moment / bound
    bool noisy = false;       // relative stderr above 0.3
    EstimateResult tail;      // P(Im M_t(0) > beta ln t)
    double tail_bound = 0.0;
};

struct ExpMomentReport {
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<ExpMomentCell> cells;
    std::vector<std::vector<FieldSample>> samples;
};

inline constexpr double kMaxExpMomentAlpha = 1.0;

inline ExpMomentReport estimate_exp_moment(std::span<const double> t_list, double alpha, double beta,
                                           const SimConfig& cfg) {
    detail::require_positive_times(t_list);
    detail::require_samples(cfg);
    if (!(alpha > 0.0 && alpha <= kMaxExpMomentAlpha)) {
        throw std::invalid_argument("alpha must lie in (0, 1]; larger values give heavy-tailed estimators");
    }
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    ExpMomentReport rep{alpha, beta, {}, {}};
    for (std::size_t k = 0; k < t_list.size(); ++k) {
        const double t = t_list[k];
        const double m = resolve_halfwidth(cfg, t);
        auto samples = detail::sample_cell(cfg, detail::Experiment::exp_moment, k, t, {-m, m}, {Complex{0.0, 0.0}},
                                           cfg.drift_mode);
        const double lt = std::log(t);
        const auto e = detail::per_sample(samples, [&](const FieldSample& s) { return std::exp(alpha * s.points[0].m.imag()); });
        const auto tail = detail::per_sample(
            samples, [&](const FieldSample& s) { return s.points[0].m.imag() > beta * lt ? 1.0 : 0.0; });
        ExpMomentCell cell;
        cell.t = t;
        const std::string digest =
            config_digest(cfg, {{"estimator", "exp_moment"}, {"t", t}, {"alpha", alpha}, {"beta", beta}});
        cell.moment = summarize(e, digest);
        cell.bound = exp_moment_bound(alpha, t);
        cell.ratio = cell.moment.estimate / cell.bound;
        cell.noisy = cell.moment.std_error > 0.3 * cell.moment.estimate;
        cell.tail = summarize(tail, digest);
        cell.tail_bound = chernoff_tail_bound(beta, t);
        rep.cells.push_back(std::move(cell));
        if (cfg.keep_samples) rep.samples.push_back(std::move(samples));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Lower tail of the height

struct LlnTailCell {
    double t = 0.0;
    double a = 0.0;
    EstimateResult probability;  // P(Im F_t(0) < pi t / 2 - a sqrt(t))
};

struct LlnTailReport {
    std::vector<LlnTailCell> cells;
    std::vector<std::vector<FieldSample>> samples;
};

/// Every threshold a is evaluated on the same samples for a given t, so the
/// estimates are monotone in a.
inline LlnTailReport estimate_lln_tail(std::span<const double> t_list, std::span<const double> a_list,
                                       const SimConfig& cfg) {
    detail::require_positive_times(t_list);
    detail::require_samples(cfg);
    if (a_list.empty()) throw std::invalid_argument("need at least one threshold a");
    for (double a : a_list) {
        if (!(a > 0.0)) throw std::invalid_argument("thresholds a must be positive");
    }
    LlnTailReport rep;
    for (std::size_t k = 0; k < t_list.size(); ++k) {
        const double t = t_list[k];
        const double m = resolve_halfwidth(cfg, t);
        auto samples = detail::sample_cell(cfg, detail::Experiment::lln_tail, k, t, {-m, m}, {Complex{0.0, 0.0}},
                                           cfg.drift_mode);
        for (double a : a_list) {
            const double level = kHalfPi * t - a * std::sqrt(t);
            const auto ind = detail::per_sample(samples, [&](const FieldSample& s) { return s.im_F_at_0 < level ? 1.0 : 0.0; });
            rep.cells.push_back({t, a, summarize(ind, config_digest(cfg, {{"estimator", "lln_tail"}, {"t", t}, {"a", a}}))});
        }
        if (cfg.keep_samples) rep.samples.push_back(std::move(samples));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Derivative second moment at height ln t

struct DerivativeMomentCell {
    double t = 0.0;
    EstimateResult moment;  // E|F_t'(i ln t)|^2
};

struct DerivativeMomentReport {
    std::vector<DerivativeMomentCell> cells;
    std::vector<std::vector<FieldSample>> samples;
};

inline DerivativeMomentReport estimate_derivative_moment(std::span<const double> t_list, const SimConfig& cfg) {
    detail::require_positive_times(t_list);
    detail::require_samples(cfg);
    DerivativeMomentReport rep;
    for (std::size_t k = 0; k < t_list.size(); ++k) {
        const double t = t_list[k];
        if (!(t >= 3.0)) throw std::invalid_argument("derivative moment needs t >= 3");
        const double m = resolve_halfwidth(cfg, t);
        auto samples = detail::sample_cell(cfg, detail::Experiment::derivative_moment, k, t, {-m, m},
                                           {Complex{0.0, std::log(t)}}, cfg.drift_mode);
        const auto v = detail::per_sample(samples, [](const FieldSample& s) { return std::norm(*s.points[0].deriv); });
        EstimateResult r = summarize(v, config_digest(cfg, {{"estimator", "derivative_moment"}, {"t", t}}));
        detail::check_relative_error(r, "derivative moment at t=" + std::to_string(t));
        rep.cells.push_back({t, r});
        if (cfg.keep_samples) rep.samples.push_back(std::move(samples));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Window truncation

struct TruncationReport {
    double t = 0.0;
    double m_small = 0.0;
    double m_large = 0.0;
    EstimateResult error;  // E|M^{m_large}_t(0) - M^{m_small}_t(0)|^2
    double calibrated_c = 0.0;  // error * m_small / t
};

/// Couples two windows on one arrival set: the small-window process sees
/// exactly the arrivals of the large one with |x| <= m_small. Both
/// fluctuations use their own Doob compensators, since the comparison is
/// between the finite-window martingales.
inline TruncationReport window_truncation_error(double t, double m_small, double m_large, const SimConfig& cfg) {
    const double ts[] = {t};
    detail::require_positive_times(ts);
    detail::require_samples(cfg);
    if (m_small != m_large && !(m_large >= 8.0 * m_small && m_small >= 2.0 * t)) {
        throw std::invalid_argument("window truncation needs m_large >= 8 m_small >= 16 t");
    }
    const std::uint64_t cell = detail::cell_id(detail::Experiment::truncation, 0);
    const double checkpoint[] = {t};
    const auto diffs = run_parallel(cfg.n_samples, cfg.threads, [&](std::size_t i) {
        const std::uint64_t id = derive_stream_id(cell, i);
        ArrivalGenerator large(Window{-m_large, m_large}, t, cfg.master_seed, id);
        WindowRestriction small(ArrivalGenerator(Window{-m_large, m_large}, t, cfg.master_seed, id),
                                Window{-m_small, m_small});
        const auto big = evolve(large, {TrackedPoint::at({0.0, 0.0})}, DriftMode::exact_quadrature, checkpoint);
        const auto little = evolve(small, {TrackedPoint::at({0.0, 0.0})}, DriftMode::exact_quadrature, checkpoint);
        const Complex d = fluctuation(big.snapshots[0].points[0], t, DriftMode::exact_quadrature) -
                          fluctuation(little.snapshots[0].points[0], t, DriftMode::exact_quadrature);
        return std::norm(d);
    });
    TruncationReport rep{t, m_small, m_large, {}, 0.0};
    rep.error = summarize(
        diffs, config_digest(cfg, {{"estimator", "truncation"}, {"t", t}, {"m_small", m_small}, {"m_large", m_large}}));
    rep.calibrated_c = rep.error.estimate * m_small / t;
    return rep;
}

// ---------------------------------------------------------------------------
// Distortion of simulated maps

struct KoebeReport {
    double t = 0.0;
    std::size_t maps = 0;
    std::size_t pairs = 0;
    double max_ratio = 0.0;  // max |F'(w)| / |F'(z)| over |w - z| < Im z / 2
};

/// Draws `pairs_per_map` pairs (z, w) per simulated map F_t: Re z uniform on
/// [-t, t], Im z log-uniform on [0.05, 20], w uniform in the disk of radius
/// Im z / 2 about z.
inline KoebeReport koebe_check(std::size_t n_maps, std::size_t pairs_per_map, double t, const SimConfig& cfg) {
    if (!(t >= 0.0)) throw std::invalid_argument("koebe check needs t >= 0");
    const double m = resolve_halfwidth(cfg, t);
    const std::uint64_t cell = detail::cell_id(detail::Experiment::koebe, 0);
    const std::uint64_t geometry = detail::cell_id(detail::Experiment::koebe_geometry, 0);
    const auto ratios = run_parallel(n_maps, cfg.threads, [&](std::size_t i) {
        StreamRng rng(cfg.master_seed, derive_stream_id(geometry, i));
        std::vector<TrackedPoint> pts;
        pts.reserve(2 * pairs_per_map);
        for (std::size_t k = 0; k < pairs_per_map; ++k) {
            const double x = -t + 2.0 * t * rng.uniform();
            const double y = std::exp(std::log(0.05) + (std::log(20.0) - std::log(0.05)) * rng.uniform());
            const double r = 0.5 * y * std::sqrt(rng.uniform());
            const double theta = 2.0 * std::numbers::pi * rng.uniform();
            pts.push_back(TrackedPoint::at({x, y}));
            pts.push_back(TrackedPoint::at({x + r * std::cos(theta), y + r * std::sin(theta)}));
        }
        ArrivalGenerator gen(Window{-m, m}, t, cfg.master_seed, derive_stream_id(cell, i));
        const double checkpoint[] = {t};
        const auto res = evolve(gen, std::move(pts), DriftMode::asymptotic, checkpoint);
        double worst = 0.0;
        const auto& snap = res.snapshots[0].points;
        for (std::size_t k = 0; k + 1 < snap.size(); k += 2) {
            worst = std::max(worst, std::abs(snap[k + 1].deriv) / std::abs(snap[k].deriv));
        }
        return worst;
    });
    KoebeReport rep{t, n_maps, n_maps * pairs_per_map, 0.0};
    for (double r : ratios) rep.max_ratio = std::max(rep.max_ratio, r);
    return rep;
}

// ---------------------------------------------------------------------------
// Marginal distribution

struct HistogramReport {
    double t = 0.0;
    std::size_t n = 0;
    Histogram im;
    Histogram re;
    ShapeStats im_shape;
    ShapeStats re_shape;
    std::vector<FieldSample> samples;
};

inline HistogramReport histogram(double t, std::size_t bins, const SimConfig& cfg) {
    if (bins < 10) throw std::invalid_argument("histogram needs at least 10 bins");
    const double ts[] = {t};
    detail::require_positive_times(ts);
    detail::require_samples(cfg);
    const double m = resolve_halfwidth(cfg, t);
    auto samples =
        detail::sample_cell(cfg, detail::Experiment::histogram, 0, t, {-m, m}, {Complex{0.0, 0.0}}, cfg.drift_mode);
    const auto im = detail::per_sample(samples, [](const FieldSample& s) { return s.points[0].m.imag(); });
    const auto re = detail::per_sample(samples, [](const FieldSample& s) { return s.points[0].m.real(); });
    HistogramReport rep{t, samples.size(), bin_equal_width(im, bins), bin_equal_width(re, bins),
                        shape_statistics(im), shape_statistics(re), {}};
    if (cfg.keep_samples) rep.samples = std::move(samples);
    return rep;
}

}  // namespace shl
