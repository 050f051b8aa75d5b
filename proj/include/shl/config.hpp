#pragma once

#include "shl/process.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shl {

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    double spacing = 1.0;
    double height = 0.0;

    std::vector<double> abscissae() const {
        if (!(spacing > 0.0)) throw std::invalid_argument("grid spacing must be positive");
        if (!(hi >= lo)) throw std::invalid_argument("grid needs lo <= hi");
        std::vector<double> xs;
        const auto count = static_cast<std::size_t>(std::floor((hi - lo) / spacing + 1e-9)) + 1;
        xs.reserve(count);
        for (std::size_t k = 0; k < count; ++k) xs.push_back(lo + spacing * static_cast<double>(k));
        return xs;
    }
};

struct SimConfig {
    double t = 1.0;
    std::optional<double> window_halfwidth;  // nullopt: auto_window_halfwidth(t)
    std::vector<double> extra_points;
    std::optional<GridSpec> grid;
    DriftMode drift_mode = DriftMode::asymptotic;
    std::uint64_t master_seed = 0;
    std::size_t n_samples = 1000;
    // Execution knobs; they never change results and are not part of the digest.
    unsigned threads = 1;
    bool keep_samples = false;
};

/// Window half-width for horizon t under `cfg`'s policy. An explicit width
/// must be at least 2t.
inline double resolve_halfwidth(const SimConfig& cfg, double t) {
    if (!cfg.window_halfwidth) return auto_window_halfwidth(t);
    const double m = *cfg.window_halfwidth;
    if (!(m >= 2.0 * t)) {
        throw std::invalid_argument("window half-width " + std::to_string(m) + " is below 2t = " +
                                    std::to_string(2.0 * t));
    }
    return m;
}

inline nlohmann::ordered_json to_json(const GridSpec& g) {
    return {{"lo", g.lo}, {"hi", g.hi}, {"spacing", g.spacing}, {"height", g.height}};
}

inline nlohmann::ordered_json to_json(const SimConfig& cfg) {
    nlohmann::ordered_json j;
    j["t"] = cfg.t;
    j["window_halfwidth"] = cfg.window_halfwidth ? nlohmann::ordered_json(*cfg.window_halfwidth)
                                                 : nlohmann::ordered_json("auto");
    j["extra_points"] = cfg.extra_points;
    j["grid"] = cfg.grid ? to_json(*cfg.grid) : nlohmann::ordered_json(nullptr);
    j["drift_mode"] = std::string(to_string(cfg.drift_mode));
    j["master_seed"] = cfg.master_seed;
    j["n_samples"] = cfg.n_samples;
    return j;
}

inline std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

/// Digest of the configuration plus the parameters of one estimator cell.
inline std::string config_digest(const SimConfig& cfg, const nlohmann::ordered_json& cell = {}) {
    nlohmann::ordered_json j{{"config", to_json(cfg)}, {"cell", cell}};
    return sha256_hex(j.dump());
}

}  // namespace shl
