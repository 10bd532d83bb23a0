#pragma once

// Configuration boundary: JSON (de)serialization with a strict schema
// (unknown keys rejected, field-path diagnostics), the named in-repo
// fixtures, CSV emission with a fixed column order and full-precision
// floats, and run manifests that make every output row re-derivable.
//
// Power and gain fields cross this boundary in dBm / dB; everything
// behind it is linear.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aerocov/model.hpp"
#include "aerocov/version.hpp"

namespace aerocov {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace io_detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                           const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConfigError(path + ": unknown key '" + key + "'");
    }
}

template <class T>
T get_required(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) throw ConfigError(path + ": missing key '" + key + "'");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

template <class T>
T get_or(const json& obj, const char* key, const std::string& path, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

}  // namespace io_detail

inline json scenario_to_json(const Scenario& sc) {
    json j;
    j["users"] = {{"lambda_per_m2", sc.users.lambda}, {"beta_per_m", sc.users.beta}};
    json ch;
    ch["alpha_los"] = sc.channel.alpha_los;
    ch["alpha_nlos"] = sc.channel.alpha_nlos;
    ch["eta_los_db"] = linear_to_db(sc.channel.eta_los);
    ch["eta_nlos_db"] = linear_to_db(sc.channel.eta_nlos);
    ch["m_los"] = sc.channel.m_los;
    ch["m_nlos"] = sc.channel.m_nlos;
    ch["noise_w"] = sc.channel.noise_w;
    ch["env_a"] = sc.channel.env_a;
    ch["env_b"] = sc.channel.env_b;
    if (sc.channel.forced_los_probability) {
        ch["forced_los_probability"] = *sc.channel.forced_los_probability;
    }
    j["channel"] = ch;
    j["tiers"] = json::array();
    for (const auto& t : sc.tiers) {
        j["tiers"].push_back({{"altitude_m", t.altitude_m},
                              {"lambda_per_m2", t.lambda},
                              {"beta_per_m", t.beta},
                              {"power_dbm", watts_to_dbm(t.power_w)}});
    }
    if (sc.deployment_radius_m) j["deployment_radius_m"] = *sc.deployment_radius_m;
    return j;
}

inline Scenario scenario_from_json(const json& j, const std::string& path = "scenario") {
    io_detail::reject_unknown(j, {"users", "channel", "tiers", "deployment_radius_m"}, path);
    Scenario sc;
    {
        const json& u = j.contains("users") ? j.at("users") : json::object();
        io_detail::reject_unknown(u, {"lambda_per_m2", "beta_per_m"}, path + ".users");
        sc.users.lambda = io_detail::get_required<double>(u, "lambda_per_m2", path + ".users");
        sc.users.beta = io_detail::get_required<double>(u, "beta_per_m", path + ".users");
    }
    {
        const json& c = j.contains("channel") ? j.at("channel") : json::object();
        io_detail::reject_unknown(c,
                                  {"alpha_los", "alpha_nlos", "eta_los_db", "eta_nlos_db", "m_los",
                                   "m_nlos", "noise_w", "env_a", "env_b",
                                   "forced_los_probability"},
                                  path + ".channel");
        const std::string cp = path + ".channel";
        sc.channel.alpha_los = io_detail::get_required<double>(c, "alpha_los", cp);
        sc.channel.alpha_nlos = io_detail::get_required<double>(c, "alpha_nlos", cp);
        sc.channel.eta_los = db_to_linear(io_detail::get_required<double>(c, "eta_los_db", cp));
        sc.channel.eta_nlos = db_to_linear(io_detail::get_required<double>(c, "eta_nlos_db", cp));
        sc.channel.m_los = io_detail::get_required<int>(c, "m_los", cp);
        sc.channel.m_nlos = io_detail::get_required<int>(c, "m_nlos", cp);
        sc.channel.noise_w = io_detail::get_required<double>(c, "noise_w", cp);
        sc.channel.env_a = io_detail::get_required<double>(c, "env_a", cp);
        sc.channel.env_b = io_detail::get_required<double>(c, "env_b", cp);
        if (c.contains("forced_los_probability")) {
            sc.channel.forced_los_probability =
                io_detail::get_required<double>(c, "forced_los_probability", cp);
        }
    }
    if (!j.contains("tiers") || !j.at("tiers").is_array() || j.at("tiers").empty()) {
        throw ConfigError(path + ".tiers: at least one tier required");
    }
    std::size_t i = 0;
    for (const auto& tj : j.at("tiers")) {
        const std::string tp = path + ".tiers[" + std::to_string(i++) + "]";
        io_detail::reject_unknown(tj, {"altitude_m", "lambda_per_m2", "beta_per_m", "power_dbm"},
                                  tp);
        TierConfig t;
        t.altitude_m = io_detail::get_required<double>(tj, "altitude_m", tp);
        t.lambda = io_detail::get_required<double>(tj, "lambda_per_m2", tp);
        t.beta = io_detail::get_required<double>(tj, "beta_per_m", tp);
        t.power_w = dbm_to_watts(io_detail::get_required<double>(tj, "power_dbm", tp));
        sc.tiers.push_back(t);
    }
    if (j.contains("deployment_radius_m")) {
        sc.deployment_radius_m =
            io_detail::get_required<double>(j, "deployment_radius_m", path);
    }
    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return sc;
}

// ---------------------------------------------------------------------------
// Named fixtures. The reference parameter set: LoS/NLoS path-loss
// exponents 2 / 3, mean additional gains 0 / -20 dB, Nakagami shapes
// 2 / 1, noise 1e-7 W, LoS-model constants a = 4.88, b = 0.429, user
// density 1e-3 per m^2 decaying at 5e-3 per m. Tier powers follow
// 0.1 * altitude - 3 dBm (2 / 7 / 12 dBm at 50 / 100 / 150 m). The
// homogeneous fixtures deploy on the equal-area disc of the 5 km square
// (radius 2820.95 m).

inline ChannelParams reference_channel() {
    ChannelParams ch;
    ch.alpha_los = 2.0;
    ch.alpha_nlos = 3.0;
    ch.eta_los = db_to_linear(0.0);
    ch.eta_nlos = db_to_linear(-20.0);
    ch.m_los = 2;
    ch.m_nlos = 1;
    ch.noise_w = 1e-7;
    ch.env_a = 4.88;
    ch.env_b = 0.429;
    return ch;
}

inline UserDensity reference_users() { return UserDensity{1e-3, 5e-3}; }

inline double reference_power_dbm(double altitude_m) { return 0.1 * altitude_m - 3.0; }

inline double uniform_region_radius() { return 2820.947917738782; }  // sqrt(25 km^2 / pi)

inline TierConfig reference_tier(double altitude_m, double lambda, double beta) {
    TierConfig t;
    t.altitude_m = altitude_m;
    t.lambda = lambda;
    t.beta = beta;
    t.power_w = dbm_to_watts(reference_power_dbm(altitude_m));
    return t;
}

inline std::vector<std::string> fixture_names() {
    return {"table2-one-tier-50",  "table2-one-tier-100", "table2-one-tier-150",
            "table2-three-tier",   "table2-uniform",      "table3-k1",
            "table3-k2",           "table3-k3",           "table3-k5",
            "fig3-two-tier",       "fig3-uniform"};
}

inline Scenario make_fixture(const std::string& name) {
    Scenario sc;
    sc.users = reference_users();
    sc.channel = reference_channel();
    const double lam = 4e-5;
    if (name == "table2-one-tier-50") {
        sc.tiers = {reference_tier(50, lam, 3.2e-3)};
    } else if (name == "table2-one-tier-100") {
        sc.tiers = {reference_tier(100, lam, 3.2e-3)};
    } else if (name == "table2-one-tier-150") {
        sc.tiers = {reference_tier(150, lam, 3.2e-3)};
    } else if (name == "table2-three-tier") {
        sc.tiers = {reference_tier(50, lam, 4.5e-3), reference_tier(100, lam, 5.8e-3),
                    reference_tier(150, lam, 7.6e-3)};
    } else if (name == "table2-uniform") {
        sc.tiers = {reference_tier(100, 1e-6, 0.0)};
        sc.deployment_radius_m = uniform_region_radius();
    } else if (name == "table3-k1") {
        sc.tiers = {reference_tier(150, lam, 3.2e-3)};
    } else if (name == "table3-k2") {
        sc.tiers = {reference_tier(100, lam, 4.2e-3), reference_tier(150, lam, 5.4e-3)};
    } else if (name == "table3-k3") {
        sc.tiers = {reference_tier(50, lam, 4.5e-3), reference_tier(100, lam, 5.8e-3),
                    reference_tier(150, lam, 7.6e-3)};
    } else if (name == "table3-k5") {
        sc.tiers = {reference_tier(50, lam, 5.4e-3), reference_tier(75, lam, 6.5e-3),
                    reference_tier(100, lam, 7.8e-3), reference_tier(125, lam, 8.2e-3),
                    reference_tier(150, lam, 9.8e-3)};
    } else if (name == "fig3-two-tier") {
        sc.tiers = {reference_tier(50, 4e-6, 2e-3), reference_tier(100, 4e-6, 2e-3)};
    } else if (name == "fig3-uniform") {
        sc.tiers = {reference_tier(50, 4e-6, 0.0), reference_tier(100, 4e-6, 0.0)};
        sc.deployment_radius_m = uniform_region_radius();
    } else {
        throw ConfigError("unknown fixture '" + name + "'");
    }
    return sc;
}

// ---------------------------------------------------------------------------
// CSV with a fixed column order and shortest round-trip decimals.

inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (i) out_ += ',';
            out_ += columns_[i];
        }
        out_ += '\n';
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size()) {
            throw std::invalid_argument("CsvWriter: cell count mismatch");
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ += ',';
            out_ += cells[i];
        }
        out_ += '\n';
    }

    const std::string& str() const { return out_; }

  private:
    std::vector<std::string> columns_;
    std::string out_;
};

// ---------------------------------------------------------------------------
// Run manifest: enough provenance to re-derive any CSV.

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string tool_version = version_string;
    std::uint64_t seed = 0;
    int threads = 1;
    double wall_time_s = 0.0;
    json provenance;  // per-command: tolerances, trial counts, grids

    json to_json() const {
        json j;
        j["command"] = command;
        j["config_hash"] = config_hash;
        j["tool_version"] = tool_version;
        j["seed"] = seed;
        j["threads"] = threads;
        j["wall_time_s"] = wall_time_s;
        j["provenance"] = provenance;
        return j;
    }
};

inline std::string hash_of_config(const json& config) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config.dump())));
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace aerocov
