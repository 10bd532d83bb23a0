#pragma once

// Seeded Monte-Carlo ground truth for the analytic chain: samples
// distance-decaying PPP deployments (thinning of a homogeneous PPP, with
// an inverse-CDF radial sampler as the alternative path), classifies
// LoS/NLoS per link, applies Nakagami fading, associates by strongest
// average received power, and estimates every distribution the analytic
// module computes.
//
// Reproducibility: one root seed; trial i draws from its own substream
// derived by a counter scheme (splitmix64 over (seed, i)), so results are
// bit-identical for a fixed seed regardless of thread count or
// scheduling. Aggregation happens in trial order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "aerocov/model.hpp"
#include "aerocov/parallel.hpp"

namespace aerocov {

struct SimConfig {
    std::uint64_t seed = 20240901u;
    long trials = 10000;
    double sim_radius_m = 0.0;      // 0 = derive from tail_mass_tol
    double tail_mass_tol = 1e-4;    // allowed truncated intensity fraction per tier
    int threads = 1;

    void validate() const {
        detail::require(trials >= 1, "SimConfig: trials must be >= 1");
        detail::require(tail_mass_tol > 0 && tail_mass_tol < 1,
                        "SimConfig: tail_mass_tol must lie in (0,1)");
        if (sim_radius_m != 0) detail::require(sim_radius_m > 0, "SimConfig: radius must be positive");
    }
};

struct McEstimate {
    double mean = 0.0;
    double half_width_95 = 0.0;
    long trials = 0;
    std::uint64_t seed = 0;
};

inline McEstimate bernoulli_estimate(long successes, long trials, std::uint64_t seed) {
    McEstimate e;
    e.trials = trials;
    e.seed = seed;
    e.mean = static_cast<double>(successes) / static_cast<double>(trials);
    e.half_width_95 = 1.96 * std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(trials));
    return e;
}

inline McEstimate mean_estimate(double sum, double sum_sq, long trials, std::uint64_t seed) {
    McEstimate e;
    e.trials = trials;
    e.seed = seed;
    e.mean = sum / trials;
    const double var = std::max(0.0, sum_sq / trials - e.mean * e.mean);
    e.half_width_95 = 1.96 * std::sqrt(var / trials);
    return e;
}

struct UavSample {
    double radius = 0.0;  // horizontal distance to the town center
    double angle = 0.0;
    LinkClass link = LinkClass::los;
};

/// One realized multi-tier deployment (positions plus per-UAV link class
/// with respect to one user).
struct Deployment {
    std::vector<std::vector<UavSample>> tiers;
};

struct Association {
    std::size_t tier = 0;
    LinkClass link = LinkClass::los;
    double distance = 0.0;  // Euclidean
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Substream engine for one trial of one experiment. stream_tag separates
/// experiments sharing a root seed.
inline std::mt19937_64 make_trial_rng(std::uint64_t seed, long trial, std::uint64_t stream_tag = 0) {
    const std::uint64_t a = detail::splitmix64(seed ^ detail::splitmix64(stream_tag));
    return std::mt19937_64(detail::splitmix64(a ^ static_cast<std::uint64_t>(trial) * 0x9e3779b97f4a7c15ULL));
}

/// Radius such that the truncated intensity mass of every tier keeps at
/// least (1 - tol) of its total; capped at 50 km. Homogeneous tiers
/// require a finite deployment region.
inline double sim_radius_for(const Scenario& sc, double tol) {
    const double cap = 50e3;
    const double region = sc.region_radius();
    double radius = 0.0;
    for (const auto& tier : sc.tiers) {
        if (tier.lambda == 0) continue;
        if (tier.beta == 0) {
            detail::require(std::isfinite(region),
                            "sim radius: homogeneous tier requires a deployment radius");
            radius = std::max(radius, region);
            continue;
        }
        // solve exp(-x)(1+x) = tol
        double x = 1.0;
        while (std::exp(-x) * (1.0 + x) > tol && x < 200.0) x += 0.25;
        radius = std::max(radius, std::min({x / tier.beta, cap, region}));
    }
    return radius == 0.0 ? 1.0 : radius;
}

/// Validated simulation radius: explicit radius must retain 1 - tol of
/// every tier's mass inside the deployment region.
inline double resolve_sim_radius(const Scenario& sc, const SimConfig& sim) {
    sim.validate();
    const double region = sc.region_radius();
    if (sim.sim_radius_m == 0) return sim_radius_for(sc, sim.tail_mass_tol);
    const double r = std::min(sim.sim_radius_m, region);
    for (const auto& tier : sc.tiers) {
        if (tier.lambda == 0) continue;
        const double total = expected_uav_count(tier, region);
        const double kept = expected_uav_count(tier, r);
        detail::require(kept / total >= 1.0 - sim.tail_mass_tol,
                        "SimConfig: sim radius truncates more intensity mass than allowed");
    }
    return r;
}

/// Thinning sampler (reference path): draw a homogeneous PPP of intensity
/// lambda over the disc, keep each point with probability exp(-beta l).
template <class Rng>
std::vector<UavSample> sample_tier(const TierConfig& tier, double radius, Rng& rng) {
    std::vector<UavSample> out;
    if (tier.lambda == 0) return out;
    const double area = std::numbers::pi * radius * radius;
    std::poisson_distribution<long> count(tier.lambda * area);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const long n = count(rng);
    out.reserve(static_cast<std::size_t>(n / 4 + 4));
    for (long i = 0; i < n; ++i) {
        const double l = radius * std::sqrt(unit(rng));
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        const double keep = unit(rng);
        if (keep < std::exp(-tier.beta * l)) {
            out.push_back({l, theta, LinkClass::los});
        }
    }
    return out;
}

/// Inverse-CDF radial sampler (alternative path): draw the kept count
/// directly and place radii by inverting the truncated radial mass.
template <class Rng>
std::vector<UavSample> sample_tier_inverse_cdf(const TierConfig& tier, double radius, Rng& rng) {
    std::vector<UavSample> out;
    if (tier.lambda == 0) return out;
    const double mass = expected_uav_count(tier, radius);
    std::poisson_distribution<long> count(mass);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const long n = count(rng);
    out.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        const double u = unit(rng);
        double l;
        if (tier.beta == 0) {
            l = radius * std::sqrt(u);
        } else {
            // solve F(l) = u where F(l) = (1 - e^{-bl}(1+bl)) / (1 - e^{-bR}(1+bR))
            const double b = tier.beta;
            const double norm = -std::expm1(-b * radius) - b * radius * std::exp(-b * radius);
            const double target = u * norm;
            double lo = 0.0, hi = radius;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double val = -std::expm1(-b * mid) - b * mid * std::exp(-b * mid);
                (val < target ? lo : hi) = mid;
            }
            l = 0.5 * (lo + hi);
        }
        const double theta = 2.0 * std::numbers::pi * unit(rng);
        out.push_back({l, theta, LinkClass::los});
    }
    return out;
}

/// Independent Bernoulli link classification per UAV from the LoS model
/// at its horizontal distance to the user.
template <class Rng>
void classify_links(std::vector<UavSample>& uavs, const TierConfig& tier,
                    const ChannelParams& ch, double z_u, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& u : uavs) {
        const double t = horizontal_user_distance(z_u, u.radius, u.angle);
        const double p = los_probability(ch, tier.altitude_m, t);
        u.link = unit(rng) < p ? LinkClass::los : LinkClass::nlos;
    }
}

template <class Rng>
Deployment sample_deployment(const Scenario& sc, double radius, double z_u, Rng& rng) {
    Deployment d;
    d.tiers.resize(sc.tiers.size());
    for (std::size_t k = 0; k < sc.tiers.size(); ++k) {
        d.tiers[k] = sample_tier(sc.tiers[k], radius, rng);
        classify_links(d.tiers[k], sc.tiers[k], sc.channel, z_u, rng);
    }
    return d;
}

/// Nakagami power gain: Gamma(m, 1/m) with unit mean. Integer shape, so
/// the draw is an exact sum of exponentials.
template <class Rng>
double sample_gain(LinkClass q, const ChannelParams& ch, Rng& rng) {
    const int m = ch.nakagami_m(q);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc -= std::log1p(-unit(rng));
    return acc / m;
}

/// Strongest-average-received-power association over the 2K nearest
/// candidates (one per tier per link class). Ties resolve LoS first, then
/// the lowest tier index. Returns nullopt when the deployment is empty.
inline std::optional<Association> associate(const Deployment& d, const Scenario& sc, double z_u) {
    std::optional<Association> best;
    double best_power = -1.0;
    for (std::size_t k = 0; k < d.tiers.size(); ++k) {
        const double h = sc.tiers[k].altitude_m;
        double nearest[2] = {infinity, infinity};
        for (const auto& u : d.tiers[k]) {
            const double t = horizontal_user_distance(z_u, u.radius, u.angle);
            const double r = std::sqrt(t * t + h * h);
            double& slot = nearest[u.link == LinkClass::los ? 0 : 1];
            slot = std::min(slot, r);
        }
        for (LinkClass q : link_classes) {
            const double r = nearest[q == LinkClass::los ? 0 : 1];
            if (!std::isfinite(r)) continue;
            const double power =
                sc.channel.eta(q) * sc.tiers[k].power_w * std::pow(r, -sc.channel.alpha(q));
            const bool wins =
                power > best_power ||
                (power == best_power && best &&
                 (q == LinkClass::los && best->link == LinkClass::nlos));
            if (!best || wins) {
                best = Association{k, q, r};
                best_power = power;
            }
        }
    }
    return best;
}

/// One SINR realization: fresh fading on the serving link and on every
/// interfering UAV (all tiers, both classes). The serving UAV is the
/// nearest UAV of the associated (tier, class).
template <class Rng>
double realize_sinr(const Deployment& d, const Association& assoc, const Scenario& sc,
                    double z_u, Rng& rng) {
    const ChannelParams& ch = sc.channel;
    double interference = 0.0;
    double serving_power = 0.0;
    bool serving_used = false;
    for (std::size_t k = 0; k < d.tiers.size(); ++k) {
        const double h = sc.tiers[k].altitude_m;
        for (const auto& u : d.tiers[k]) {
            const double t = horizontal_user_distance(z_u, u.radius, u.angle);
            const double r = std::sqrt(t * t + h * h);
            const double gain = sample_gain(u.link, ch, rng);
            const double p =
                ch.eta(u.link) * sc.tiers[k].power_w * gain * std::pow(r, -ch.alpha(u.link));
            const bool is_serving =
                !serving_used && k == assoc.tier && u.link == assoc.link && r == assoc.distance;
            if (is_serving) {
                serving_power = p;
                serving_used = true;
            } else {
                interference += p;
            }
        }
    }
    return serving_power / (interference + ch.noise_w);
}

namespace detail {

/// Deterministic trial averaging: per-trial values land in fixed chunks
/// summed in order.
template <class TrialFn>
double average_trials(long trials, int threads, TrialFn&& fn) {
    const long chunk = 4096;
    const long n_chunks = (trials + chunk - 1) / chunk;
    std::vector<double> sums(static_cast<std::size_t>(n_chunks), 0.0);
    parallel_for(static_cast<std::size_t>(n_chunks), threads, [&](std::size_t c) {
        const long lo = static_cast<long>(c) * chunk;
        const long hi = std::min(trials, lo + chunk);
        double s = 0.0;
        for (long i = lo; i < hi; ++i) s += fn(i);
        sums[c] = s;
    });
    double total = 0.0;
    for (double s : sums) total += s;
    return total / trials;
}

}  // namespace detail

/// Fraction of trials whose realized SINR exceeds gamma; a fresh
/// deployment per trial, empty deployments count as not covered.
inline McEstimate estimate_local_coverage(const Scenario& sc, const SimConfig& sim, double z_u,
                                          double gamma) {
    sc.validate();
    const double radius = resolve_sim_radius(sc, sim);
    const double frac = detail::average_trials(sim.trials, sim.threads, [&](long i) {
        auto rng = make_trial_rng(sim.seed, i, 0x10c0u);
        Deployment d = sample_deployment(sc, radius, z_u, rng);
        auto assoc = associate(d, sc, z_u);
        if (!assoc) return 0.0;
        return realize_sinr(d, *assoc, sc, z_u, rng) > gamma ? 1.0 : 0.0;
    });
    return bernoulli_estimate(std::lround(frac * sim.trials), sim.trials, sim.seed);
}

/// Draw a user offset with density proportional to Lambda_u(z) * z
/// (a Gamma(2, 1/beta_u) radial law).
template <class Rng>
double sample_user_offset(const UserDensity& users, Rng& rng) {
    detail::require(users.beta > 0, "overall estimate requires beta_u > 0");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return (-std::log1p(-unit(rng)) - std::log1p(-unit(rng))) / users.beta;
}

/// Coverage averaged over user offsets drawn from the user density.
inline McEstimate estimate_overall_coverage(const Scenario& sc, const SimConfig& sim,
                                            double gamma) {
    sc.validate();
    // radius must serve users far from the center as well
    const double base_radius = resolve_sim_radius(sc, sim);
    const double frac = detail::average_trials(sim.trials, sim.threads, [&](long i) {
        auto rng = make_trial_rng(sim.seed, i, 0x0a11u);
        const double z_u = sample_user_offset(sc.users, rng);
        Deployment d = sample_deployment(sc, base_radius, z_u, rng);
        auto assoc = associate(d, sc, z_u);
        if (!assoc) return 0.0;
        return realize_sinr(d, *assoc, sc, z_u, rng) > gamma ? 1.0 : 0.0;
    });
    return bernoulli_estimate(std::lround(frac * sim.trials), sim.trials, sim.seed);
}

/// Per-trial distance to the nearest class-q UAV of tier k (+inf when the
/// trial has none: the distribution is defective).
inline std::vector<double> empirical_nearest_distance(const Scenario& sc, const SimConfig& sim,
                                                      std::size_t k, LinkClass q, double z_u) {
    sc.validate();
    const double radius = resolve_sim_radius(sc, sim);
    std::vector<double> out(static_cast<std::size_t>(sim.trials), infinity);
    parallel_for(static_cast<std::size_t>(sim.trials), sim.threads, [&](std::size_t i) {
        auto rng = make_trial_rng(sim.seed, static_cast<long>(i), 0xd157u);
        auto uavs = sample_tier(sc.tiers[k], radius, rng);
        classify_links(uavs, sc.tiers[k], sc.channel, z_u, rng);
        const double h = sc.tiers[k].altitude_m;
        double nearest = infinity;
        for (const auto& u : uavs) {
            if (u.link != q) continue;
            const double t = horizontal_user_distance(z_u, u.radius, u.angle);
            nearest = std::min(nearest, std::sqrt(t * t + h * h));
        }
        out[i] = nearest;
    });
    return out;
}

/// Empirical frequency of association with each (tier, class) candidate.
/// Index [k][0] = LoS, [k][1] = NLoS; the last extra row [K][0] counts
/// void trials.
inline std::vector<std::array<McEstimate, 2>> estimate_association_frequency(
    const Scenario& sc, const SimConfig& sim, double z_u) {
    sc.validate();
    const double radius = resolve_sim_radius(sc, sim);
    const std::size_t K = sc.tiers.size();
    std::vector<std::array<long, 2>> counts(K + 1, {0, 0});
    const long chunk = 4096;
    const long n_chunks = (sim.trials + chunk - 1) / chunk;
    std::vector<std::vector<std::array<long, 2>>> partial(
        static_cast<std::size_t>(n_chunks), std::vector<std::array<long, 2>>(K + 1, {0, 0}));
    parallel_for(static_cast<std::size_t>(n_chunks), sim.threads, [&](std::size_t c) {
        const long lo = static_cast<long>(c) * chunk;
        const long hi = std::min(sim.trials, lo + chunk);
        for (long i = lo; i < hi; ++i) {
            auto rng = make_trial_rng(sim.seed, i, 0xa550u);
            Deployment d = sample_deployment(sc, radius, z_u, rng);
            auto assoc = associate(d, sc, z_u);
            if (!assoc) {
                partial[c][K][0]++;
            } else {
                partial[c][assoc->tier][assoc->link == LinkClass::los ? 0 : 1]++;
            }
        }
    });
    for (const auto& p : partial) {
        for (std::size_t k = 0; k <= K; ++k) {
            counts[k][0] += p[k][0];
            counts[k][1] += p[k][1];
        }
    }
    std::vector<std::array<McEstimate, 2>> out(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
        out[k][0] = bernoulli_estimate(counts[k][0], sim.trials, sim.seed);
        out[k][1] = bernoulli_estimate(counts[k][1], sim.trials, sim.seed);
    }
    return out;
}

/// Empirical E[exp(-s I)] conditioned on the association exclusion
/// geometry: interferers of class q2 in tier k keep a horizontal distance
/// of at least the (q1, q2, j, k) exclusion radius from the user
/// (restriction of a PPP equals conditioning on the void event).
inline std::vector<McEstimate> estimate_interference_laplace(
    const Scenario& sc, const SimConfig& sim, std::size_t j, LinkClass q1, double r, double z_u,
    std::span<const double> s_values) {
    sc.validate();
    detail::require(r >= sc.tiers.at(j).altitude_m, "estimate_interference_laplace: r below altitude");
    const double radius = resolve_sim_radius(sc, sim);
    const std::size_t K = sc.tiers.size();
    std::vector<std::vector<double>> excl(K, std::vector<double>(2));
    for (std::size_t k = 0; k < K; ++k) {
        for (LinkClass q2 : link_classes) {
            excl[k][q2 == LinkClass::los ? 0 : 1] =
                horizontal_exclusion(sc.channel, q1, q2, sc.tiers[j], sc.tiers[k], r);
        }
    }
    const std::size_t ns = s_values.size();
    const long chunk = 4096;
    const long n_chunks = (sim.trials + chunk - 1) / chunk;
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(n_chunks),
                                          std::vector<double>(2 * ns, 0.0));
    parallel_for(static_cast<std::size_t>(n_chunks), sim.threads, [&](std::size_t c) {
        const long lo = static_cast<long>(c) * chunk;
        const long hi = std::min(sim.trials, lo + chunk);
        for (long i = lo; i < hi; ++i) {
            auto rng = make_trial_rng(sim.seed, i, 0x1a9ceu);
            double interference = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                auto uavs = sample_tier(sc.tiers[k], radius, rng);
                classify_links(uavs, sc.tiers[k], sc.channel, z_u, rng);
                const double h = sc.tiers[k].altitude_m;
                for (const auto& u : uavs) {
                    const double t = horizontal_user_distance(z_u, u.radius, u.angle);
                    if (t < excl[k][u.link == LinkClass::los ? 0 : 1]) continue;
                    const double d3 = std::sqrt(t * t + h * h);
                    const double gain = sample_gain(u.link, sc.channel, rng);
                    interference += sc.channel.eta(u.link) * sc.tiers[k].power_w * gain *
                                    std::pow(d3, -sc.channel.alpha(u.link));
                }
            }
            for (std::size_t s_i = 0; s_i < ns; ++s_i) {
                const double v = std::exp(-s_values[s_i] * interference);
                sums[c][2 * s_i] += v;
                sums[c][2 * s_i + 1] += v * v;
            }
        }
    });
    std::vector<McEstimate> out(ns);
    for (std::size_t s_i = 0; s_i < ns; ++s_i) {
        double sum = 0.0, sum_sq = 0.0;
        for (const auto& p : sums) {
            sum += p[2 * s_i];
            sum_sq += p[2 * s_i + 1];
        }
        out[s_i] = mean_estimate(sum, sum_sq, sim.trials, sim.seed);
    }
    return out;
}

/// Coverage averaged over users with a caller-supplied per-offset success
/// law (test hook for the overall estimator).
template <class LocalFn>
McEstimate estimate_overall_from_local(const UserDensity& users, const SimConfig& sim,
                                       LocalFn&& local) {
    const double frac = detail::average_trials(sim.trials, sim.threads, [&](long i) {
        auto rng = make_trial_rng(sim.seed, i, 0x0a12u);
        const double z_u = sample_user_offset(users, rng);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        return unit(rng) < local(z_u) ? 1.0 : 0.0;
    });
    return bernoulli_estimate(std::lround(frac * sim.trials), sim.trials, sim.seed);
}

}  // namespace aerocov
