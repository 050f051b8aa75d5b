#pragma once

// Serialization of estimator reports: JSON documents, CSV tables with 17
// significant digits, NDJSON sample dumps, single-polyline SVG.

#include "shl/config.hpp"
#include "shl/estimators.hpp"
#include "shl/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace shl {

using Json = nlohmann::ordered_json;

inline Json to_json(const EstimateResult& r) {
    return {{"estimate", r.estimate},
            {"stderr", r.std_error},
            {"n", r.n},
            {"ci95", {r.ci95.first, r.ci95.second}},
            {"config_digest", r.config_digest}};
}

inline Json to_json(const SlopeFit& f) {
    return {{"slope", f.slope},         {"intercept", f.intercept}, {"slope_stderr", f.slope_stderr},
            {"intercept_stderr", f.intercept_stderr}, {"chi2", f.chi2}, {"dof", f.dof},
            {"residuals", f.residuals}};
}

inline Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const FieldSample& s) {
    Json pts = Json::array();
    for (const PointRecord& p : s.points) {
        Json j{{"z", complex_json(p.initial)}, {"F", complex_json(p.value)}, {"M", complex_json(p.m)}};
        if (p.deriv) j["dF"] = complex_json(*p.deriv);
        pts.push_back(std::move(j));
    }
    Json j{{"sample_id", s.sample_id},
           {"t", s.t},
           {"window", {s.window.lo, s.window.hi}},
           {"drift_mode", std::string(to_string(s.mode))},
           {"points", std::move(pts)}};
    if (!std::isnan(s.max_im_over_grid)) j["max_im_over_grid"] = s.max_im_over_grid;
    return j;
}

// ---------------------------------------------------------------------------
// CSV

using Cell = std::variant<double, long long, std::string>;

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;
};

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv(const Table& table) {
    std::ostringstream os;
    for (std::size_t i = 0; i < table.header.size(); ++i) os << (i ? "," : "") << table.header[i];
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            if (const double* d = std::get_if<double>(&row[i])) {
                os << format_double(*d);
            } else if (const long long* n = std::get_if<long long>(&row[i])) {
                os << *n;
            } else {
                os << std::get<std::string>(row[i]);
            }
        }
        os << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Per-estimator documents

struct Output {
    Json results;
    Table table;
    std::vector<FieldSample> samples;  // flattened, for samples.ndjson
};

inline void append_samples(std::vector<FieldSample>& into, std::vector<std::vector<FieldSample>>&& cells) {
    for (auto& c : cells) std::move(c.begin(), c.end(), std::back_inserter(into));
}

inline Output to_output(VarianceReport&& rep) {
    Output o;
    o.table.header = {"t", "estimate", "stderr", "n", "ci95_lo", "ci95_hi"};
    Json cells = Json::array();
    for (std::size_t k = 0; k < rep.t.size(); ++k) {
        const auto& e = rep.estimates[k];
        cells.push_back({{"t", rep.t[k]}, {"variance", to_json(e)}});
        o.table.rows.push_back({rep.t[k], e.estimate, e.std_error, static_cast<long long>(e.n), e.ci95.first, e.ci95.second});
    }
    o.results = {{"estimator", "variance"}, {"quantity", "E|M_t(0)|^2"}, {"cells", std::move(cells)}};
    o.results["slope_fit"] = rep.fit ? to_json(*rep.fit) : Json(nullptr);
    o.results["reference_slope"] = std::numbers::pi / 4.0;
    append_samples(o.samples, std::move(rep.samples));
    return o;
}

inline Output to_output(CovarianceReport&& rep) {
    Output o;
    o.table.header = {"t", "b", "estimate", "stderr", "n", "ci95_lo", "ci95_hi", "reference"};
    Json cells = Json::array();
    for (std::size_t k = 0; k < rep.b.size(); ++k) {
        const auto& e = rep.covariance[k];
        const double ref = std::numbers::pi / 4.0 * std::max(std::log(rep.t) - std::log(rep.b[k]), 0.0);
        cells.push_back({{"b", rep.b[k]}, {"covariance", to_json(e)}, {"reference", ref}});
        o.table.rows.push_back({rep.t, rep.b[k], e.estimate, e.std_error, static_cast<long long>(e.n), e.ci95.first,
                                e.ci95.second, ref});
    }
    o.results = {{"estimator", "covariance"},
                 {"t", rep.t},
                 {"window", {rep.window.lo, rep.window.hi}},
                 {"convention", kCovarianceConvention},
                 {"drift_mode", std::string(to_string(rep.drift_mode))},
                 {"reference_profile", "pi/4 * max(log t - log b, 0)"},
                 {"common_randomness", rep.common_randomness},
                 {"variance_at_0", to_json(rep.variance_at_0)},
                 {"cells", std::move(cells)}};
    o.samples = std::move(rep.samples);
    return o;
}

inline Output to_output(MaxFluctuationReport&& rep) {
    Output o;
    o.table.header = {"t", "height", "grid_points", "exceedance", "exceedance_stderr", "max_over_log", "max_over_log_stderr"};
    Json cells = Json::array();
    for (const auto& c : rep.cells) {
        Json q = Json::object();
        for (const auto& [p, v] : c.quantiles) q[format_double(p)] = v;
        cells.push_back({{"t", c.t},
                         {"height", c.height},
                         {"grid_points", c.grid_points},
                         {"exceedance", to_json(c.exceedance)},
                         {"max_over_log", to_json(c.max_over_log)},
                         {"max_over_log_quantiles", std::move(q)}});
        o.table.rows.push_back({c.t, c.height, static_cast<long long>(c.grid_points), c.exceedance.estimate,
                                c.exceedance.std_error, c.max_over_log.estimate, c.max_over_log.std_error});
    }
    o.results = {{"estimator", "max_fluctuation"},
                 {"beta", rep.options.beta},
                 {"spacing", rep.options.spacing},
                 {"grid_range_over_t", {rep.options.range_lo, rep.options.range_hi}},
                 {"note", "grid maximum is a lower bound on the continuum maximum"},
                 {"cells", std::move(cells)}};
    append_samples(o.samples, std::move(rep.samples));
    return o;
}

inline Output to_output(ExpMomentReport&& rep) {
    Output o;
    o.table.header = {"t", "moment", "moment_stderr", "bound", "ratio", "noisy", "tail", "tail_stderr", "tail_bound"};
    Json cells = Json::array();
    for (const auto& c : rep.cells) {
        cells.push_back({{"t", c.t},
                         {"moment", to_json(c.moment)},
                         {"bound", c.bound},
                         {"ratio", c.ratio},
                         {"noisy", c.noisy},
                         {"tail", to_json(c.tail)},
                         {"tail_bound", c.tail_bound}});
        o.table.rows.push_back({c.t, c.moment.estimate, c.moment.std_error, c.bound, c.ratio,
                                static_cast<long long>(c.noisy), c.tail.estimate, c.tail.std_error, c.tail_bound});
    }
    o.results = {{"estimator", "exp_moment"}, {"alpha", rep.alpha}, {"beta", rep.beta}, {"cells", std::move(cells)}};
    append_samples(o.samples, std::move(rep.samples));
    return o;
}

inline Output to_output(LlnTailReport&& rep) {
    Output o;
    o.table.header = {"t", "a", "probability", "stderr", "n"};
    Json cells = Json::array();
    for (const auto& c : rep.cells) {
        cells.push_back({{"t", c.t}, {"a", c.a}, {"probability", to_json(c.probability)}});
        o.table.rows.push_back({c.t, c.a, c.probability.estimate, c.probability.std_error,
                                static_cast<long long>(c.probability.n)});
    }
    o.results = {{"estimator", "lln_tail"}, {"event", "Im F_t(0) < pi t/2 - a sqrt(t)"}, {"cells", std::move(cells)}};
    append_samples(o.samples, std::move(rep.samples));
    return o;
}

inline Output to_output(DerivativeMomentReport&& rep) {
    Output o;
    o.table.header = {"t", "estimate", "stderr", "n"};
    Json cells = Json::array();
    for (const auto& c : rep.cells) {
        cells.push_back({{"t", c.t}, {"moment", to_json(c.moment)}});
        o.table.rows.push_back({c.t, c.moment.estimate, c.moment.std_error, static_cast<long long>(c.moment.n)});
    }
    o.results = {{"estimator", "derivative_moment"}, {"quantity", "E|F_t'(i ln t)|^2"}, {"cells", std::move(cells)}};
    append_samples(o.samples, std::move(rep.samples));
    return o;
}

inline Output to_output(const TruncationReport& rep) {
    Output o;
    o.table.header = {"t", "m_small", "m_large", "estimate", "stderr", "calibrated_c"};
    o.table.rows.push_back({rep.t, rep.m_small, rep.m_large, rep.error.estimate, rep.error.std_error, rep.calibrated_c});
    o.results = {{"estimator", "window_truncation"},
                 {"t", rep.t},
                 {"m_small", rep.m_small},
                 {"m_large", rep.m_large},
                 {"error", to_json(rep.error)},
                 {"calibrated_c", rep.calibrated_c}};
    return o;
}

inline Json to_json(const Histogram& h) { return {{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}}; }

inline Json to_json(const ShapeStats& s) {
    if (!s.defined) return {{"defined", false}};
    return {{"defined", true},
            {"skewness", s.skewness},
            {"skewness_stderr", s.skewness_stderr},
            {"excess_kurtosis", s.excess_kurtosis}};
}

inline Output to_output(HistogramReport&& rep) {
    Output o;
    o.table.header = {"component", "bin", "lo", "hi", "count"};
    for (const auto& [name, h] : {std::pair{"im", &rep.im}, std::pair{"re", &rep.re}}) {
        const double width = (h->hi - h->lo) / static_cast<double>(h->counts.size());
        for (std::size_t k = 0; k < h->counts.size(); ++k) {
            o.table.rows.push_back({std::string(name), static_cast<long long>(k), h->lo + width * static_cast<double>(k),
                                    h->lo + width * static_cast<double>(k + 1), static_cast<long long>(h->counts[k])});
        }
    }
    o.results = {{"estimator", "histogram"}, {"t", rep.t},           {"n", rep.n},
                 {"im", to_json(rep.im)},    {"re", to_json(rep.re)}, {"im_shape", to_json(rep.im_shape)},
                 {"re_shape", to_json(rep.re_shape)}};
    o.samples = std::move(rep.samples);
    return o;
}

// ---------------------------------------------------------------------------
// SVG

/// A single polyline with the viewBox fitted to the data (y axis flipped so
/// that larger values are drawn higher).
inline std::string polyline_svg(const std::vector<std::pair<double, double>>& pts, const std::string& title = {}) {
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    if (!pts.empty()) {
        xmin = xmax = pts.front().first;
        ymin = ymax = pts.front().second;
        for (const auto& [x, y] : pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    double w = xmax - xmin, h = ymax - ymin;
    const double pad = 0.02 * std::max({w, h, 1e-9});
    if (w <= 0.0) w = 1.0;
    if (h <= 0.0) h = 1.0;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << format_double(xmin - pad) << ' '
       << format_double(-(ymax + pad)) << ' ' << format_double(w + 2 * pad) << ' ' << format_double(h + 2 * pad)
       << "\" preserveAspectRatio=\"none\">\n";
    if (!title.empty()) os << "<title>" << title << "</title>\n";
    os << "<polyline fill=\"none\" stroke=\"black\" vector-effect=\"non-scaling-stroke\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        os << (i ? " " : "") << format_double(pts[i].first) << ',' << format_double(-pts[i].second);
    }
    os << "\"/>\n</svg>\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Files

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << content;
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

inline std::string to_ndjson(const std::vector<FieldSample>& samples) {
    std::string out;
    for (const FieldSample& s : samples) {
        out += to_json(s).dump();
        out += '\n';
    }
    return out;
}

}  // namespace shl
