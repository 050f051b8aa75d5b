// shl: command-line front end for the stationary HL(0) simulator.
//
// Exit codes: 0 success, 1 computational failure (or a failed verify check),
// 2 usage error.

#include "shl/arrivals.hpp"
#include "shl/config.hpp"
#include "shl/estimators.hpp"
#include "shl/report.hpp"
#include "shl/verify.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using shl::Json;

namespace {

constexpr const char* kToolName = "shl";
constexpr const char* kToolVersion = "0.1.0";

struct CommonArgs {
    std::optional<std::uint64_t> seed;
    std::size_t samples = 1000;
    std::string window = "auto";
    std::string drift_mode = "asymptotic";
    unsigned threads = 1;
    std::string out = "shl_out";
    bool keep_samples = false;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

struct Run {
    std::string command;
    Json params = Json::object();
    Json phases = Json::object();
    Clock::time_point phase_start = Clock::now();

    void phase(const std::string& name) {
        const auto now = Clock::now();
        phases[name] = std::chrono::duration<double>(now - phase_start).count();
        phase_start = now;
    }
};

shl::SimConfig make_config(const CommonArgs& a, std::string& seed_source) {
    shl::SimConfig cfg;
    if (a.seed) {
        cfg.master_seed = *a.seed;
        seed_source = "flag";
    } else {
        std::random_device rd;
        cfg.master_seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        seed_source = "entropy";
    }
    cfg.n_samples = a.samples;
    if (a.window != "auto") {
        try {
            std::size_t used = 0;
            cfg.window_halfwidth = std::stod(a.window, &used);
            if (used != a.window.size()) throw std::invalid_argument(a.window);
        } catch (const std::exception&) {
            throw UsageError("--window expects a number or 'auto', got '" + a.window + "'");
        }
    }
    try {
        cfg.drift_mode = shl::parse_drift_mode(a.drift_mode);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    cfg.threads = std::max(1u, a.threads);
    cfg.keep_samples = a.keep_samples;
    return cfg;
}

shl::GridSpec parse_grid(const std::string& text) {
    shl::GridSpec g;
    char c1 = 0, c2 = 0;
    std::istringstream is(text);
    if (!(is >> g.lo >> c1 >> g.hi >> c2 >> g.spacing) || c1 != ':' || c2 != ':' || !is.eof()) {
        throw UsageError("--grid expects lo:hi:step, got '" + text + "'");
    }
    if (!(g.spacing > 0.0)) throw UsageError("--grid step must be positive");
    if (!(g.hi >= g.lo)) throw UsageError("--grid needs lo <= hi");
    return g;
}

std::pair<double, double> parse_range(const std::string& text) {
    std::pair<double, double> r;
    char c = 0;
    std::istringstream is(text);
    if (!(is >> r.first >> c >> r.second) || c != ':' || !is.eof()) {
        throw UsageError("range expects lo:hi, got '" + text + "'");
    }
    return r;
}

void emit(const Run& run, const shl::SimConfig& cfg, const std::string& seed_source, const fs::path& out,
          shl::Output&& o, std::map<std::string, std::string> extra_files = {}) {
    fs::create_directories(out);
    Json results{{"tool", kToolName},
                 {"version", kToolVersion},
                 {"command", run.command},
                 {"config", shl::to_json(cfg)},
                 {"params", run.params},
                 {"config_digest", shl::config_digest(cfg, run.params)},
                 {"results", std::move(o.results)}};
    std::map<std::string, std::string> files = std::move(extra_files);
    files["results.json"] = results.dump(2) + "\n";
    files["results.csv"] = shl::to_csv(o.table);
    if (cfg.keep_samples) files["samples.ndjson"] = shl::to_ndjson(o.samples);

    Json digests = Json::object();
    for (const auto& [name, content] : files) {
        shl::write_file(out / name, content);
        digests[name] = shl::sha256_hex(content);
    }
    Json phases = run.phases;
    phases["write"] = std::chrono::duration<double>(Clock::now() - run.phase_start).count();
    Json manifest{{"tool", kToolName},
                  {"version", kToolVersion},
                  {"command", run.command},
                  {"config", shl::to_json(cfg)},
                  {"params", run.params},
                  {"master_seed", cfg.master_seed},
                  {"seed_source", seed_source},
                  {"output_sha256", std::move(digests)},
                  {"wall_clock_seconds", std::move(phases)}};
    shl::write_file(out / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << (out / "results.json").string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stationary Hastings-Levitov(0) simulator and estimators"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML file of option values; command-line flags take precedence");

    CommonArgs common;
    app.add_option("--seed", common.seed, "master seed (drawn from entropy and recorded when absent)");
    app.add_option("--samples", common.samples, "Monte Carlo sample count")->check(CLI::PositiveNumber);
    app.add_option("--window", common.window, "window half-width m, or 'auto' for max(64, 8 t ln^2(2+t))");
    app.add_option("--drift-mode", common.drift_mode, "asymptotic | exact_quadrature");
    app.add_option("--threads", common.threads, "worker threads (results do not depend on it)");
    app.add_option("--out", common.out, "output directory");
    app.add_flag("--keep-samples", common.keep_samples, "also write per-sample records to samples.ndjson");

    Run run;
    std::function<void()> action;

    // verify
    shl::VerifyOptions vopt;
    auto* verify = app.add_subcommand("verify", "analytic and quadrature self-checks");
    verify->add_option("--rel-tol", vopt.rel_tol, "quadrature tolerance (check tolerances widen with it)");
    verify->add_option("--branch-samples", vopt.branch_samples, "random inputs for the branch checks");
    verify->add_flag("--inject-wrong-branch", vopt.inject_wrong_branch, "test hook: use the principal root")
        ->group("");

    std::vector<double> t_list;
    auto add_t_list = [&](CLI::App* sub) {
        sub->add_option("--t", t_list, "times, comma separated")->required()->delimiter(',');
    };
    double t_single = 0.0;
    auto add_t_single = [&](CLI::App* sub) { sub->add_option("--t", t_single, "time horizon")->required(); };

    auto* variance = app.add_subcommand("variance", "E|M_t(0)|^2 and its slope in ln t");
    add_t_list(variance);

    std::vector<double> b_list;
    auto* covariance = app.add_subcommand("covariance", "common-randomness covariance of M_t(0), M_t(b)");
    add_t_single(covariance);
    covariance->add_option("--b", b_list, "separations, comma separated")->required()->delimiter(',');

    shl::MaxFluctuationOptions mopt;
    std::string grid_range = "0:1";
    auto* maxfluct = app.add_subcommand("maxfluct", "maximum of Im M_t over a grid");
    add_t_list(maxfluct);
    maxfluct->add_option("--grid-spacing", mopt.spacing, "grid spacing h");
    maxfluct->add_option("--height", mopt.height, "grid height");
    maxfluct->add_flag("--height-log-t", mopt.height_is_log_t, "place the grid at height ln t");
    maxfluct->add_option("--beta", mopt.beta, "exceedance level beta ln t");
    maxfluct->add_option("--grid-range", grid_range, "grid covers [lo t, hi t], given as lo:hi");

    double alpha = 0.5, beta = 2.0;
    auto* expmoment = app.add_subcommand("expmoment", "E exp(alpha Im M_t(0)) and the tail P(Im M_t(0) > beta ln t)");
    add_t_list(expmoment);
    expmoment->add_option("--alpha", alpha, "exponent, 0 < alpha <= 1");
    expmoment->add_option("--beta", beta, "tail level");

    std::vector<double> a_list{3.0};
    auto* lln = app.add_subcommand("lln", "P(Im F_t(0) < pi t/2 - a sqrt(t))");
    add_t_list(lln);
    lln->add_option("--a", a_list, "thresholds, comma separated")->delimiter(',');

    auto* derivmoment = app.add_subcommand("derivmoment", "E|F_t'(i ln t)|^2");
    add_t_list(derivmoment);

    double m_small = 0.0, m_large = 0.0;
    auto* truncation = app.add_subcommand("truncation", "coupled-window truncation error");
    add_t_single(truncation);
    truncation->add_option("--m-small", m_small, "small window half-width")->required();
    truncation->add_option("--m-large", m_large, "large window half-width")->required();

    std::size_t bins = 50;
    auto* hist = app.add_subcommand("histogram", "histograms of Re and Im M_t(0)");
    add_t_single(hist);
    hist->add_option("--bins", bins, "bin count (>= 10)");

    std::size_t maps = 100, pairs = 100;
    auto* koebe = app.add_subcommand("koebe", "distortion ratio over simulated maps");
    add_t_single(koebe);
    koebe->add_option("--maps", maps, "simulated maps");
    koebe->add_option("--pairs", pairs, "pairs per map");

    std::string grid_text;
    bool profile = false;
    auto* render = app.add_subcommand("render", "forward image of a real grid as SVG + CSV");
    add_t_single(render);
    render->add_option("--grid", grid_text, "lo:hi:step")->required();
    render->add_flag("--profile", profile, "also emit the fluctuation profile x -> Im M_t(x)");

    app.failure_message(CLI::FailureMessage::help);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::string seed_source;
    try {
        if (verify->parsed()) {
            const auto checks = shl::run_verification(vopt);
            for (const auto& c : checks) std::cout << shl::format_check(c) << "\n";
            const bool ok = shl::all_passed(checks);
            std::cout << (ok ? "all checks passed" : "some checks FAILED") << "\n";
            return ok ? 0 : 1;
        }

        const shl::SimConfig cfg = make_config(common, seed_source);
        const fs::path out = common.out;
        run.command = app.get_subcommands().front()->get_name();

        if (variance->parsed()) {
            run.params = {{"t", t_list}};
            auto rep = shl::estimate_variance(t_list, cfg);
            run.phase("simulate");
            emit(run, cfg, seed_source, out, shl::to_output(std::move(rep)));
        } else if (covariance->parsed()) {
            run.params = {{"t", t_single}, {"b", b_list}};
            auto rep = shl::estimate_covariance(t_single, b_list, cfg);
            run.phase("simulate");
            emit(run, cfg, seed_source, out, shl::to_output(std::move(rep)));
        } else if (maxfluct->parsed()) {
            std::tie(mopt.range_lo, mopt.range_hi) = parse_range(grid_range);
            run.params = {{"t", t_list},         {"spacing", mopt.spacing}, {"height", mopt.height},
                          {"height_log_t", mopt.height_is_log_t}, {"beta", mopt.beta},
                          {"grid_range", {mopt.range_lo, mopt.range_hi}}};
            auto rep = shl::estimate_max_fluctuation(t_list, mopt, cfg);
            run.phase("simulate");
            emit(run, cfg, seed_source, out, shl::to_output(std::move(rep)));
        } else if (expmoment->parsed()) {
            run.params = {{"t", t_list}, {"alpha", alpha}, {"beta", beta}};
            auto rep = shl::estimate_exp_moment(t_list, alpha, beta, cfg);
            run.phase("simulate");
            for (const auto& c : rep.cells) {
                if (c.noisy) std::cerr << "warning: relative stderr above 0.3 at t=" << c.t << "\n";
            }
            emit(run, cfg, seed_source, out, shl::to_output(std::move(rep)));
        } else if (lln->parsed()) {
            run.params = {{"t", t_list}, {"a", a_list}};
            auto rep = shl::estimate_lln_tail(t_list, a_list, cfg);
            run.phase("simulate");
            emit(run, cfg, seed_source, out, shl::to_output(std::move(rep)));
        } else if (derivmoment->parsed()) {
            run.params = {{"t", t_list}};
            auto rep = shl::estimate_derivative_moment(t_list, cfg);
            run.phase("simulate");
            emit(run, cfg, seed_source, out, shl::to_output(std::move(rep)));
        } else if (truncation->parsed()) {
            run.params = {{"t", t_single}, {"m_small", m_small}, {"m_large", m_large}};
            auto rep = shl::window_truncation_error(t_single, m_small, m_large, cfg);
            run.phase("simulate");
            emit(run, cfg, seed_source, out, shl::to_output(rep));
        } else if (hist->parsed()) {
            run.params = {{"t", t_single}, {"bins", bins}};
            auto rep = shl::histogram(t_single, bins, cfg);
            run.phase("simulate");
            emit(run, cfg, seed_source, out, shl::to_output(std::move(rep)));
        } else if (koebe->parsed()) {
            run.params = {{"t", t_single}, {"maps", maps}, {"pairs", pairs}};
            const auto rep = shl::koebe_check(maps, pairs, t_single, cfg);
            run.phase("simulate");
            shl::Output o;
            o.results = {{"estimator", "koebe"}, {"t", rep.t}, {"maps", rep.maps}, {"pairs", rep.pairs},
                         {"max_ratio", rep.max_ratio}, {"bound", 16.0}};
            o.table.header = {"t", "maps", "pairs", "max_ratio"};
            o.table.rows.push_back({rep.t, static_cast<long long>(rep.maps), static_cast<long long>(rep.pairs), rep.max_ratio});
            emit(run, cfg, seed_source, out, std::move(o));
        } else if (render->parsed()) {
            if (!(t_single >= 0.0)) throw UsageError("--t must be >= 0 for render");
            const shl::GridSpec grid = parse_grid(grid_text);
            run.params = {{"t", t_single}, {"grid", shl::to_json(grid)}, {"profile", profile}};
            const double m = shl::resolve_halfwidth(cfg, t_single);
            const auto stream = shl::sample_arrivals(grid.lo - m, grid.hi + m, t_single, cfg.master_seed,
                                                     shl::derive_stream_id(0, 0));
            const auto xs = grid.abscissae();
            const auto image = shl::render_forward(stream, xs, t_single);
            shl::Output o;
            o.table.header = {"x", "re", "im"};
            std::vector<std::pair<double, double>> poly;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                o.table.rows.push_back({xs[i], image[i].real(), image[i].imag()});
                poly.emplace_back(image[i].real(), image[i].imag());
            }
            std::map<std::string, std::string> extra{{"aggregate.svg", shl::polyline_svg(poly, "forward image")}};
            double max_height = 0.0;
            for (const auto& z : image) max_height = std::max(max_height, z.imag());
            o.results = {{"estimator", "render"},
                         {"arrivals", stream.arrivals.size()},
                         {"window", {stream.window.lo, stream.window.hi}},
                         {"grid_points", xs.size()},
                         {"max_height", max_height}};
            if (profile) {
                std::vector<shl::TrackedPoint> pts;
                for (double x : xs) pts.push_back(shl::TrackedPoint::at({x, 0.0}));
                const double at[] = {t_single};
                const auto evo = shl::evolve(stream, std::move(pts), cfg.drift_mode, at);
                shl::Table prof{{"x", "im_m"}, {}};
                std::vector<std::pair<double, double>> ppoly;
                for (const auto& p : evo.snapshots[0].points) {
                    const double im = shl::fluctuation(p, t_single, cfg.drift_mode).imag();
                    prof.rows.push_back({p.initial.real(), im});
                    ppoly.emplace_back(p.initial.real(), im);
                }
                extra["profile.csv"] = shl::to_csv(prof);
                extra["profile.svg"] = shl::polyline_svg(ppoly, "Im M_t(x)");
            }
            run.phase("simulate");
            emit(run, cfg, seed_source, out, std::move(o), std::move(extra));
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
