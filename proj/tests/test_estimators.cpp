#include "shl/estimators.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

using shl::Complex;

namespace {

shl::SimConfig small_config(std::size_t n = 200, unsigned threads = 1) {
    shl::SimConfig cfg;
    cfg.master_seed = 2024;
    cfg.n_samples = n;
    cfg.threads = threads;
    return cfg;
}

}  // namespace

TEST_CASE("run_parallel keeps index order and rethrows", "[estimators]") {
    const auto v = shl::run_parallel(1000, 4, [](std::size_t i) { return static_cast<double>(i * i); });
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == static_cast<double>(i * i));
    CHECK_THROWS_AS(shl::run_parallel(100, 3,
                                      [](std::size_t i) -> int {
                                          if (i == 57) throw std::runtime_error("boom");
                                          return 0;
                                      }),
                    std::runtime_error);
}

TEST_CASE("variance: serial and threaded runs agree bit for bit", "[estimators]") {
    const double ts[] = {2.0, 4.0, 8.0};
    const auto a = shl::estimate_variance(ts, small_config(200, 1));
    const auto b = shl::estimate_variance(ts, small_config(200, 3));
    const auto c = shl::estimate_variance(ts, small_config(200, 1));
    REQUIRE(a.fit);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(a.estimates[k].estimate == b.estimates[k].estimate);
        CHECK(a.estimates[k].std_error == b.estimates[k].std_error);
        CHECK(a.estimates[k].estimate == c.estimates[k].estimate);
        CHECK(a.estimates[k].config_digest == b.estimates[k].config_digest);
    }
    CHECK(a.fit->slope == b.fit->slope);
}

TEST_CASE("variance input validation", "[estimators]") {
    const double bad[] = {4.0, 2.0};
    CHECK_THROWS_AS(shl::estimate_variance(bad, small_config()), std::invalid_argument);
    const double neg[] = {-1.0};
    CHECK_THROWS_AS(shl::estimate_variance(neg, small_config()), std::invalid_argument);
    const double ok[] = {2.0};
    CHECK_THROWS_AS(shl::estimate_variance(ok, small_config(1)), shl::InsufficientSamplesError);
    auto narrow = small_config();
    narrow.window_halfwidth = 3.0;
    CHECK_THROWS_AS(shl::estimate_variance(ok, narrow), std::invalid_argument);
}

TEST_CASE("covariance: b = 0 reproduces the variance identically", "[estimators]") {
    const double bs[] = {0.0, 1.0, 3.0};
    auto cfg = small_config(150);
    cfg.keep_samples = true;
    const auto rep = shl::estimate_covariance(4.0, bs, cfg);
    CHECK(rep.covariance[0].estimate == rep.variance_at_0.estimate);
    CHECK(rep.covariance[0].std_error == rep.variance_at_0.std_error);
    CHECK(rep.common_randomness);
    CHECK(rep.window.lo == -shl::auto_window_halfwidth(4.0));
    CHECK(rep.window.hi == 3.0 + shl::auto_window_halfwidth(4.0));
    // Swapping the roles of the two tracked points changes nothing.
    for (std::size_t k = 1; k <= 3; ++k) {
        const auto ab = shl::inner_product_estimate(rep.samples, 0, k);
        const auto ba = shl::inner_product_estimate(rep.samples, k, 0);
        CHECK(ab.estimate == ba.estimate);
        CHECK(ab.std_error == ba.std_error);
    }
    // Tracking b = 0 twice gives the same field.
    for (const auto& s : rep.samples) CHECK(s.points[0].m == s.points[1].m);
}

TEST_CASE("covariance: asymmetric window carries no deterministic offset", "[estimators]") {
    // Asymptotic drift on [-m, b + m] would shift Re M(0) by about
    // -(t/2) ln(1 + b/m), here ~ -4.7.
    const double bs[] = {1000.0};
    auto cfg = small_config(200);
    cfg.keep_samples = true;
    const auto rep = shl::estimate_covariance(4.0, bs, cfg);
    CHECK(rep.drift_mode == shl::DriftMode::exact_quadrature);
    for (std::size_t p = 0; p < 2; ++p) {
        std::vector<double> re;
        for (const auto& s : rep.samples) re.push_back(s.points[p].m.real());
        const auto e = shl::summarize(re);
        CHECK(std::fabs(e.estimate) <= 4.0 * e.std_error);
    }
    CHECK(std::fabs(rep.covariance[0].estimate) <= 4.0 * rep.covariance[0].std_error + 0.5);
    // A symmetric window keeps the requested mode.
    const double zero[] = {0.0};
    CHECK(shl::estimate_covariance(4.0, zero, small_config(50)).drift_mode == shl::DriftMode::asymptotic);
}

TEST_CASE("covariance validation", "[estimators]") {
    const double neg[] = {-1.0};
    CHECK_THROWS_AS(shl::estimate_covariance(4.0, neg, small_config()), std::invalid_argument);
    CHECK_THROWS_AS(shl::estimate_covariance(4.0, std::span<const double>{}, small_config()), std::invalid_argument);
}

TEST_CASE("max fluctuation: exceedance is monotone in beta", "[estimators]") {
    const double ts[] = {4.0};
    shl::MaxFluctuationOptions opt;
    opt.spacing = 1.0;
    auto cfg = small_config(100);
    double prev = 2.0;
    for (double beta : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
        opt.beta = beta;
        const auto rep = shl::estimate_max_fluctuation(ts, opt, cfg);
        REQUIRE(rep.cells.size() == 1);
        CHECK(rep.cells[0].grid_points == 5);
        CHECK(rep.cells[0].exceedance.estimate <= prev);
        prev = rep.cells[0].exceedance.estimate;
        const auto& q = rep.cells[0].quantiles;
        for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i].second >= q[i - 1].second);
    }
    opt.spacing = 0.0;
    CHECK_THROWS_AS(shl::estimate_max_fluctuation(ts, opt, cfg), std::invalid_argument);
    opt.spacing = 1e-6;
    CHECK_THROWS_AS(shl::estimate_max_fluctuation(ts, opt, cfg), shl::CapacityError);
    const double t1[] = {1.0};
    opt.spacing = 0.5;
    CHECK_THROWS_AS(shl::estimate_max_fluctuation(t1, opt, cfg), std::invalid_argument);
}

TEST_CASE("max over a grid bounds every grid point", "[estimators]") {
    shl::FieldRequest req{4.0, {-70.0, 74.0}, {{0.0, 0.0}, {2.0, 0.0}, {4.0, 0.0}}, shl::DriftMode::asymptotic,
                          5, 6, 0, 0, 3};
    const auto s = shl::simulate_field(req);
    for (const auto& p : s.points) CHECK(p.m.imag() <= s.max_im_over_grid);
    CHECK(s.im_F_at_0 == s.points[0].value.imag());
}

TEST_CASE("exp moment: bound formulas and validation", "[estimators]") {
    CHECK(shl::exp_moment_bound(0.5, 16.0) ==
          Catch::Approx(std::exp(M_PI / 2.0 * 0.25 * std::exp(0.5)) * std::pow(16.0, 0.25)).epsilon(1e-15));
    CHECK(shl::chernoff_tail_bound(2.0, 64.0) ==
          Catch::Approx(std::exp(M_PI / 8.0 * 4.0 * std::exp(1.0)) / 64.0).epsilon(1e-15));
    const double ts[] = {4.0};
    CHECK_THROWS_AS(shl::estimate_exp_moment(ts, 1.5, 2.0, small_config()), std::invalid_argument);
    CHECK_THROWS_AS(shl::estimate_exp_moment(ts, 0.0, 2.0, small_config()), std::invalid_argument);
    const auto rep = shl::estimate_exp_moment(ts, 0.5, 2.0, small_config());
    CHECK(rep.cells[0].moment.estimate > 0.0);
    CHECK(rep.cells[0].ratio == rep.cells[0].moment.estimate / rep.cells[0].bound);
}

TEST_CASE("lln tail is monotone in the threshold", "[estimators]") {
    const double ts[] = {4.0, 8.0};
    const double as[] = {0.0001, 0.5, 1.0, 2.0};
    const auto rep = shl::estimate_lln_tail(ts, as, small_config(200));
    REQUIRE(rep.cells.size() == 8);
    for (std::size_t k = 0; k < 2; ++k) {
        for (std::size_t j = 1; j < 4; ++j) {
            CHECK(rep.cells[4 * k + j].probability.estimate <= rep.cells[4 * k + j - 1].probability.estimate);
        }
    }
    const double bad[] = {0.0};
    CHECK_THROWS_AS(shl::estimate_lln_tail(ts, bad, small_config()), std::invalid_argument);
}

TEST_CASE("derivative moment domain", "[estimators]") {
    const double ts[] = {2.0};
    CHECK_THROWS_AS(shl::estimate_derivative_moment(ts, small_config()), std::invalid_argument);
    const double ok[] = {4.0};
    const auto rep = shl::estimate_derivative_moment(ok, small_config(100));
    CHECK(rep.cells[0].moment.estimate > 0.0);
}

TEST_CASE("window truncation: equal windows give zero, order is enforced", "[estimators]") {
    const auto same = shl::window_truncation_error(4.0, 16.0, 16.0, small_config(20));
    CHECK(same.error.estimate == 0.0);
    CHECK_THROWS_AS(shl::window_truncation_error(4.0, 16.0, 64.0, small_config(20)), std::invalid_argument);
    CHECK_THROWS_AS(shl::window_truncation_error(4.0, 4.0, 64.0, small_config(20)), std::invalid_argument);
    const auto rep = shl::window_truncation_error(4.0, 8.0, 64.0, small_config(200));
    CHECK(rep.error.estimate > 0.0);
    CHECK(rep.calibrated_c == rep.error.estimate * 8.0 / 4.0);
}

TEST_CASE("koebe: identity map and coincident points", "[estimators]") {
    const auto id = shl::koebe_check(3, 20, 0.0, small_config());
    CHECK(id.max_ratio == 1.0);
    // w = z: the tracked pair evolves identically.
    shl::ArrivalGenerator gen({-20.0, 20.0}, 3.0, 1, 1);
    const double at[] = {3.0};
    const auto r = shl::evolve(gen, {shl::TrackedPoint::at({0.3, 0.4}), shl::TrackedPoint::at({0.3, 0.4})},
                               shl::DriftMode::asymptotic, at);
    CHECK(std::abs(r.snapshots[0].points[1].deriv) / std::abs(r.snapshots[0].points[0].deriv) == 1.0);
    const auto k = shl::koebe_check(5, 40, 4.0, small_config());
    CHECK(k.pairs == 200);
    CHECK(k.max_ratio >= 1.0);
    CHECK(k.max_ratio <= 16.0);
}

TEST_CASE("histogram conserves counts", "[estimators]") {
    auto cfg = small_config(300);
    const auto h = shl::histogram(4.0, 12, cfg);
    CHECK(std::accumulate(h.im.counts.begin(), h.im.counts.end(), std::size_t{0}) == 300);
    CHECK(std::accumulate(h.re.counts.begin(), h.re.counts.end(), std::size_t{0}) == 300);
    CHECK(h.im_shape.defined);
    CHECK(h.im_shape.skewness_stderr > 0.0);
    CHECK_THROWS_AS(shl::histogram(4.0, 9, cfg), std::invalid_argument);
}

TEST_CASE("config digests ignore execution knobs", "[estimators]") {
    auto a = small_config(10, 1);
    auto b = small_config(10, 8);
    b.keep_samples = true;
    CHECK(shl::config_digest(a) == shl::config_digest(b));
    b.master_seed = 1;
    CHECK(shl::config_digest(a) != shl::config_digest(b));
    CHECK(shl::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
