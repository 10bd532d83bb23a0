#pragma once

// Building blocks of the K-tier aerial network model: distance-decaying
// densities, elevation-based LoS probability, link distances, interferer
// exclusion radii, Nakagami gain transforms and dB/linear conversions.
// All quantities are linear (watts, ratios, per-m^2); dB and dBm exist
// only at the configuration boundary.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aerocov {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// Link classification of an air-to-ground channel.
enum class LinkClass { los, nlos };

inline constexpr LinkClass link_classes[2] = {LinkClass::los, LinkClass::nlos};

inline const char* to_string(LinkClass q) {
    return q == LinkClass::los ? "los" : "nlos";
}

namespace detail {
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}
}  // namespace detail

/// One tier of UAVs: a fixed altitude, an intensity that decays with
/// horizontal distance to the town center as lambda*exp(-beta*z), and a
/// common transmit power. beta = 0 means a homogeneous tier.
struct TierConfig {
    double altitude_m = 100.0;   // h_k
    double lambda = 0.0;         // areal density scale, per m^2
    double beta = 0.0;           // homogeneity decay, per m
    double power_w = 1e-3;       // transmit power, watts

    void validate() const {
        detail::require(altitude_m > 0, "tier altitude must be positive");
        detail::require(lambda >= 0, "tier lambda must be nonnegative");
        detail::require(beta >= 0, "tier beta must be nonnegative");
        detail::require(power_w > 0, "tier power must be positive");
    }
};

/// Ground-user intensity lambda_u*exp(-beta_u*z).
struct UserDensity {
    double lambda = 1e-3;  // per m^2
    double beta = 5e-3;    // per m

    void validate() const {
        detail::require(lambda > 0, "user lambda must be positive");
        detail::require(beta >= 0, "user beta must be nonnegative");
    }
};

/// Channel constants shared by every tier. Nakagami shapes are integer by
/// contract (the coverage series expansions require it).
struct ChannelParams {
    double alpha_los = 2.0;
    double alpha_nlos = 3.0;
    double eta_los = 1.0;     // mean additional gain, linear
    double eta_nlos = 0.01;
    int m_los = 2;            // Nakagami shape parameters
    int m_nlos = 1;
    double noise_w = 1e-7;    // sigma^2
    double env_a = 4.88;      // LoS-model environment constants
    double env_b = 0.429;

    // Test hook: when set, the LoS probability is this constant everywhere.
    std::optional<double> forced_los_probability;

    double alpha(LinkClass q) const { return q == LinkClass::los ? alpha_los : alpha_nlos; }
    double eta(LinkClass q) const { return q == LinkClass::los ? eta_los : eta_nlos; }
    int nakagami_m(LinkClass q) const { return q == LinkClass::los ? m_los : m_nlos; }

    void validate() const {
        detail::require(alpha_los > 0 && alpha_nlos > 0, "path-loss exponents must be positive");
        detail::require(alpha_los < alpha_nlos, "alpha_los must be smaller than alpha_nlos");
        detail::require(eta_los > 0 && eta_nlos > 0, "mean additional gains must be positive");
        detail::require(eta_los > eta_nlos, "eta_los must exceed eta_nlos");
        detail::require(m_los >= 1 && m_nlos >= 1, "Nakagami shapes must be integers >= 1");
        detail::require(noise_w >= 0, "noise power must be nonnegative");
        detail::require(env_a > 0 && env_b > 0, "environment constants must be positive");
        if (forced_los_probability) {
            detail::require(*forced_los_probability >= 0 && *forced_los_probability <= 1,
                            "forced LoS probability must lie in [0,1]");
        }
    }
};

/// A complete evaluable model: users, an ordered list of tiers and the
/// channel. deployment_radius_m, when set, restricts every tier to a disc
/// of that radius around the town center; homogeneous (beta = 0) tiers
/// require it for any plane-wide quantity to stay finite.
struct Scenario {
    UserDensity users;
    std::vector<TierConfig> tiers;
    ChannelParams channel;
    std::optional<double> deployment_radius_m;

    std::size_t tier_count() const { return tiers.size(); }

    double region_radius() const {
        return deployment_radius_m ? *deployment_radius_m : infinity;
    }

    /// Throws on invariant violations; returns non-fatal warnings.
    std::vector<std::string> validate() const {
        detail::require(!tiers.empty(), "scenario requires at least one tier");
        users.validate();
        channel.validate();
        for (const auto& t : tiers) t.validate();
        if (deployment_radius_m) {
            detail::require(*deployment_radius_m > 0, "deployment radius must be positive");
        }
        std::vector<std::string> warnings;
        for (std::size_t i = 0; i < tiers.size(); ++i) {
            for (std::size_t j = i + 1; j < tiers.size(); ++j) {
                const auto& a = tiers[i];
                const auto& b = tiers[j];
                if (a.altitude_m == b.altitude_m && a.lambda == b.lambda &&
                    a.beta == b.beta && a.power_w == b.power_w) {
                    warnings.push_back("tiers " + std::to_string(i) + " and " +
                                       std::to_string(j) +
                                       " are identical duplicates at altitude " +
                                       std::to_string(a.altitude_m) + " m");
                }
            }
        }
        return warnings;
    }
};

/// User intensity at horizontal distance z from the center.
inline double user_density(const UserDensity& users, double z) {
    detail::require(z >= 0, "user_density: z must be nonnegative");
    return users.lambda * std::exp(-users.beta * z);
}

/// UAV intensity of one tier at horizontal distance z from the center.
inline double uav_density(const TierConfig& tier, double z) {
    detail::require(z >= 0, "uav_density: z must be nonnegative");
    return tier.lambda * std::exp(-tier.beta * z);
}

/// Expected number of UAVs of a tier inside a disc of the given radius
/// (planar integral of the intensity). Infinite radius requires beta > 0,
/// where the count is 2*pi*lambda/beta^2.
inline double expected_uav_count(const TierConfig& tier, double radius = infinity) {
    detail::require(radius > 0, "expected_uav_count: radius must be positive");
    if (std::isinf(radius)) {
        detail::require(tier.beta > 0,
                        "expected_uav_count: homogeneous tier over the infinite plane diverges");
        return 2.0 * std::numbers::pi * tier.lambda / (tier.beta * tier.beta);
    }
    if (tier.beta == 0) return std::numbers::pi * radius * radius * tier.lambda;
    const double br = tier.beta * radius;
    const double total = 2.0 * std::numbers::pi * tier.lambda / (tier.beta * tier.beta);
    return total * (1.0 - std::exp(-br) * (1.0 + br));
}

/// Probability that a UAV at the given altitude has a line-of-sight link
/// to a ground point at horizontal distance horiz_dist. The elevation at
/// horiz_dist = 0 is exactly 90 degrees.
inline double los_probability(const ChannelParams& ch, double altitude, double horiz_dist) {
    detail::require(altitude > 0, "los_probability: altitude must be positive");
    detail::require(horiz_dist >= 0, "los_probability: distance must be nonnegative");
    if (ch.forced_los_probability) return *ch.forced_los_probability;
    const double elevation_deg =
        horiz_dist == 0 ? 90.0
                        : (180.0 / std::numbers::pi) * std::atan(altitude / horiz_dist);
    return 1.0 / (1.0 + ch.env_a * std::exp(-ch.env_b * (elevation_deg - ch.env_a)));
}

/// Probability of link class q at the given geometry.
inline double link_class_probability(const ChannelParams& ch, LinkClass q,
                                     double altitude, double horiz_dist) {
    const double p = los_probability(ch, altitude, horiz_dist);
    return q == LinkClass::los ? p : 1.0 - p;
}

/// Horizontal distance between a user at (z_u, 0) and a point at polar
/// coordinates (l, theta) around the center.
inline double horizontal_user_distance(double z_u, double l, double theta) {
    const double dx = l * std::cos(theta) - z_u;
    const double dy = l * std::sin(theta);
    return std::sqrt(dx * dx + dy * dy);
}

/// Euclidean distance between the user and a UAV at (l, theta, h).
inline double user_to_uav_distance(double z_u, double l, double theta, double h) {
    detail::require(z_u >= 0 && l >= 0, "user_to_uav_distance: lengths must be nonnegative");
    const double dx = l * std::cos(theta) - z_u;
    const double dy = l * std::sin(theta);
    return std::sqrt(dx * dx + dy * dy + h * h);
}

/// Minimum Euclidean distance of an interfering UAV of class `interf` in
/// tier k, given association with a class `assoc` UAV in tier j at
/// distance r. The four cases reduce to power-balance radii clamped from
/// below by the interferer tier altitude; mean fading gains are 1 by the
/// Gamma(m, 1/m) normalization, so only eta and rho ratios appear.
inline double exclusion_distance(const ChannelParams& ch, LinkClass assoc, LinkClass interf,
                                 const TierConfig& tier_j, const TierConfig& tier_k, double r) {
    detail::require(r >= tier_j.altitude_m,
                    "exclusion_distance: r must be at least the serving tier altitude");
    const double a_assoc = ch.alpha(assoc);
    const double a_interf = ch.alpha(interf);
    const double gain_ratio = (ch.eta(interf) * tier_k.power_w) / (ch.eta(assoc) * tier_j.power_w);
    const double balance = std::pow(gain_ratio, 1.0 / a_interf) * std::pow(r, a_assoc / a_interf);
    return std::max(tier_k.altitude_m, balance);
}

/// Horizontal radius of the exclusion disc (projection of the exclusion
/// distance onto the interferer tier plane). Zero when the exclusion
/// distance equals the tier altitude.
inline double horizontal_exclusion(const ChannelParams& ch, LinkClass assoc, LinkClass interf,
                                   const TierConfig& tier_j, const TierConfig& tier_k, double r) {
    const double d = exclusion_distance(ch, assoc, interf, tier_j, tier_k, r);
    const double h = tier_k.altitude_m;
    const double gap = (d - h) * (d + h);
    return gap <= 0 ? 0.0 : std::sqrt(gap);
}

/// Laplace transform E[exp(-t*G)] of a Gamma(m, 1/m) power gain:
/// (m / (m + t))^m. Appears pointwise inside the interference transform.
inline double gamma_gain_laplace(int m, double t) {
    detail::require(m >= 1, "gamma_gain_laplace: shape must be a positive integer");
    detail::require(t >= 0, "gamma_gain_laplace: argument must be nonnegative");
    const double base = static_cast<double>(m) / (static_cast<double>(m) + t);
    double out = 1.0;
    for (int i = 0; i < m; ++i) out *= base;
    return out;
}

inline double dbm_to_watts(double p_dbm) { return std::pow(10.0, (p_dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double p_w) { return 10.0 * std::log10(p_w) + 30.0; }
inline double db_to_linear(double x_db) { return std::pow(10.0, x_db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

}  // namespace aerocov
