#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace shl {

/// Monte Carlo point estimate with its standard error and a normal 95%
/// interval.
struct EstimateResult {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    std::pair<double, double> ci95{0.0, 0.0};
    std::string config_digest;
};

/// Sample mean/sd/stderr could not be formed.
class InsufficientSamplesError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Pairwise summation; the result depends only on the order of `values`.
inline double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 16) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

inline double mean_of(std::span<const double> values) {
    if (values.empty()) throw InsufficientSamplesError("mean of an empty sample");
    return pairwise_sum(values) / static_cast<double>(values.size());
}

/// Mean with stderr = sample-sd / sqrt(n).
inline EstimateResult summarize(std::span<const double> values, std::string digest = {}) {
    if (values.size() < 2) throw InsufficientSamplesError("need at least two samples for a standard error");
    const double n = static_cast<double>(values.size());
    const double mean = mean_of(values);
    std::vector<double> sq(values.size());
    std::transform(values.begin(), values.end(), sq.begin(), [mean](double v) { return (v - mean) * (v - mean); });
    const double sd = std::sqrt(pairwise_sum(sq) / (n - 1.0));
    const double se = sd / std::sqrt(n);
    return {mean, se, values.size(), {mean - 1.96 * se, mean + 1.96 * se}, std::move(digest)};
}

struct SlopePoint {
    double t = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double intercept_stderr = 0.0;
    double chi2 = 0.0;          // weighted residual sum of squares
    std::size_t dof = 0;
    std::vector<double> residuals;  // estimate - fit, per point
    std::vector<SlopePoint> points;
};

/// Weighted least squares of estimate against ln t, weights 1/stderr^2.
inline SlopeFit fit_log_slope(std::span<const SlopePoint> points) {
    if (points.size() < 3) throw std::invalid_argument("slope fit needs at least three points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].t > 0.0)) throw std::invalid_argument("slope fit needs t > 0");
        if (!(points[i].std_error > 0.0)) throw std::invalid_argument("slope fit needs positive standard errors");
        for (std::size_t j = 0; j < i; ++j) {
            if (points[i].t == points[j].t) throw std::invalid_argument("slope fit needs distinct t values");
        }
    }
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const SlopePoint& p : points) {
        const double w = 1.0 / (p.std_error * p.std_error);
        const double x = std::log(p.t);
        sw += w;
        sx += w * x;
        sy += w * p.estimate;
        sxx += w * x * x;
        sxy += w * x * p.estimate;
    }
    const double det = sw * sxx - sx * sx;
    if (!(det > 1e-12 * sw * sxx)) throw std::invalid_argument("singular design in slope fit");
    SlopeFit fit;
    fit.slope = (sw * sxy - sx * sy) / det;
    fit.intercept = (sxx * sy - sx * sxy) / det;
    fit.slope_stderr = std::sqrt(sw / det);
    fit.intercept_stderr = std::sqrt(sxx / det);
    fit.dof = points.size() - 2;
    for (const SlopePoint& p : points) {
        const double r = p.estimate - (fit.intercept + fit.slope * std::log(p.t));
        fit.residuals.push_back(r);
        fit.chi2 += r * r / (p.std_error * p.std_error);
    }
    fit.points.assign(points.begin(), points.end());
    return fit;
}

/// Linear-interpolated empirical quantile (type 7).
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InsufficientSamplesError("quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;
};

/// Equal-width bins over [min, max] of the sample; a constant sample puts
/// everything in the first bin.
inline Histogram bin_equal_width(std::span<const double> values, std::size_t bins) {
    if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
    if (values.empty()) throw InsufficientSamplesError("histogram of an empty sample");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    Histogram h{*mn, *mx, std::vector<std::size_t>(bins, 0)};
    const double width = (h.hi - h.lo) / static_cast<double>(bins);
    for (double v : values) {
        std::size_t k = 0;
        if (width > 0.0) k = std::min(bins - 1, static_cast<std::size_t>((v - h.lo) / width));
        ++h.counts[k];
    }
    return h;
}

struct ShapeStats {
    double skewness = std::numeric_limits<double>::quiet_NaN();
    double skewness_stderr = std::numeric_limits<double>::quiet_NaN();  // jackknife
    double excess_kurtosis = std::numeric_limits<double>::quiet_NaN();
    bool defined = false;  // false for a (numerically) constant sample
};

namespace detail {

struct CentralMoments {
    double m2, m3, m4;
};

// Central moments from raw power sums about a shift c.
inline CentralMoments moments_from_sums(double n, double s1, double s2, double s3, double s4) {
    const double mu = s1 / n;
    const double e2 = s2 / n, e3 = s3 / n, e4 = s4 / n;
    const double m2 = e2 - mu * mu;
    const double m3 = e3 - 3.0 * mu * e2 + 2.0 * mu * mu * mu;
    const double m4 = e4 - 4.0 * mu * e3 + 6.0 * mu * mu * e2 - 3.0 * mu * mu * mu * mu;
    return {m2, m3, m4};
}

}  // namespace detail

/// Sample skewness g1 = m3 / m2^{3/2}, excess kurtosis m4/m2^2 - 3, and a
/// leave-one-out jackknife standard error for the skewness.
inline ShapeStats shape_statistics(std::span<const double> values) {
    ShapeStats out;
    if (values.size() < 3) return out;
    const double c = mean_of(values);  // shift for conditioning
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    for (double v : values) {
        const double d = v - c;
        s1 += d;
        s2 += d * d;
        s3 += d * d * d;
        s4 += d * d * d * d;
    }
    const double n = static_cast<double>(values.size());
    const auto full = detail::moments_from_sums(n, s1, s2, s3, s4);
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::fabs(v - c));
    if (!(full.m2 > 1e-24 * std::max(1.0, scale * scale))) return out;
    out.defined = true;
    out.skewness = full.m3 / std::pow(full.m2, 1.5);
    out.excess_kurtosis = full.m4 / (full.m2 * full.m2) - 3.0;

    std::vector<double> loo(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - c;
        const auto m = detail::moments_from_sums(n - 1.0, s1 - d, s2 - d * d, s3 - d * d * d, s4 - d * d * d * d);
        loo[i] = m.m3 / std::pow(m.m2, 1.5);
    }
    const double loo_mean = mean_of(loo);
    double ss = 0.0;
    for (double g : loo) ss += (g - loo_mean) * (g - loo_mean);
    out.skewness_stderr = std::sqrt((n - 1.0) / n * ss);
    return out;
}

}  // namespace shl
