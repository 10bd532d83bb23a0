#pragma once

// Analytical downlink coverage chain for K-tier distance-decaying UAV
// networks: nearest-UAV (per tier, per link class) distance distributions,
// strongest-average-power association probabilities, the conditional
// interference Laplace transform, exact and approximate local coverage,
// and user-density-weighted overall coverage.
//
// Geometry note. Every quantity here is an integral of the class-thinned
// tier intensity  lambda_k * exp(-beta_k * |x|) * P_k^Q(|x - u|)  over a
// disc (or the complement of a disc) centered on the user's ground
// position u. Working in user-centered polar coordinates collapses all
// disc/annulus/complement cases into one radial integral of
//     g(t) = lambda * t * P^Q(t) * ring(t),
// where ring(t) integrates exp(-beta * |x|) over the circle of radius t
// around the user. g and its antiderivative are tabulated once per
// (scenario, z_u) pair and reused by every operation; the tabulation is
// refined until cubic interpolation reproduces direct evaluation.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "aerocov/model.hpp"
#include "aerocov/parallel.hpp"
#include "aerocov/quadrature.hpp"

namespace aerocov {

enum class CoverageMethod { exact, approximate, monte_carlo };

inline const char* to_string(CoverageMethod m) {
    switch (m) {
        case CoverageMethod::exact: return "exact";
        case CoverageMethod::approximate: return "approx";
        default: return "mc";
    }
}

/// One evaluated coverage value.
struct CoveragePoint {
    double z_u = 0.0;
    double gamma = 1.0;  // linear SINR threshold
    double value = 0.0;
    CoverageMethod method = CoverageMethod::approximate;
};

/// Laplace argument of the conditional coverage series:
/// m_Q * gamma * r^alpha_Q / (eta_Q * rho_k).
inline double mu_threshold(const ChannelParams& ch, const TierConfig& tier, LinkClass q,
                           double r, double gamma) {
    detail::require(r > 0, "mu_threshold: r must be positive");
    detail::require(gamma > 0, "mu_threshold: gamma must be positive");
    return ch.nakagami_m(q) * gamma * std::pow(r, ch.alpha(q)) / (ch.eta(q) * tier.power_w);
}

/// SINR threshold equivalent to a rate requirement over a bandwidth.
inline double rate_threshold(double rate_bps, double bandwidth_hz) {
    detail::require(rate_bps >= 0, "rate_threshold: rate must be nonnegative");
    detail::require(bandwidth_hz > 0, "rate_threshold: bandwidth must be positive");
    return std::exp2(rate_bps / bandwidth_hz) - 1.0;
}

/// SINR threshold equivalent to an energy-efficiency requirement; depends
/// on the transmit power, so it is tier-specific.
inline double energy_efficiency_threshold(double eff_bits_per_joule, double power_w,
                                          double bandwidth_hz) {
    detail::require(eff_bits_per_joule >= 0, "energy_efficiency_threshold: eff must be nonnegative");
    detail::require(power_w > 0 && bandwidth_hz > 0,
                    "energy_efficiency_threshold: power and bandwidth must be positive");
    return std::exp2(eff_bits_per_joule * power_w / bandwidth_hz) - 1.0;
}

namespace detail {

inline double clamp_unit(double x) { return std::min(1.0, std::max(0.0, x)); }

inline double clamped_acos(double x) { return std::acos(std::min(1.0, std::max(-1.0, x))); }

/// (d^2)^(-alpha/2) with fast paths for the common exponents.
inline double pathloss_from_d2(double d2, double alpha) {
    if (alpha == 2.0) return 1.0 / d2;
    if (alpha == 3.0) return 1.0 / (d2 * std::sqrt(d2));
    if (alpha == 4.0) return 1.0 / (d2 * d2);
    return std::pow(d2, -0.5 * alpha);
}

/// Gauss-Legendre nodes/weights on [-1, 1], cached per order.
struct GaussRule {
    std::vector<double> x, w;
};

inline const GaussRule& gauss_rule(int n) {
    static const GaussRule rule32 = [] {
        GaussRule r;
        const int n = 32;
        r.x.resize(n);
        r.w.resize(n);
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double p0 = 0.0, p1 = 0.0;
            for (int it = 0; it < 100; ++it) {
                p0 = 1.0;
                p1 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
                }
                const double dp = n * (x * p0 - p1) / (x * x - 1.0);
                const double dx = p0 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            const double dp = n * (x * p0 - p1) / (x * x - 1.0);
            r.x[i] = -x;
            r.x[n - 1 - i] = x;
            r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        return r;
    }();
    (void)n;
    return rule32;
}

/// Cubic Hermite evaluation on one segment.
inline double hermite(double ta, double tb, double ya, double yb, double da, double db, double t) {
    const double h = tb - ta;
    const double s = (t - ta) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return ya * (2 * s3 - 3 * s2 + 1) + yb * (-2 * s3 + 3 * s2) +
           h * (da * (s3 - 2 * s2 + s) + db * (s3 - s2));
}

/// Integral of the Hermite cubic over the full segment.
inline double hermite_integral(double h, double ya, double yb, double da, double db) {
    return 0.5 * h * (ya + yb) + h * h * (da - db) / 12.0;
}

/// Integral of the Hermite cubic over [ta, t].
inline double hermite_partial_integral(double ta, double tb, double ya, double yb, double da,
                                       double db, double t) {
    const double h = tb - ta;
    const double s = (t - ta) / h;
    const double delta = (yb - ya) / h;
    const double c2 = (3 * delta - 2 * da - db) / h;
    const double c3 = (da + db - 2 * delta) / (h * h);
    const double x = t - ta;
    return ya * x + 0.5 * da * x * x + c2 * x * x * x / 3.0 + 0.25 * c3 * x * x * x * x;
}

}  // namespace detail

/// All per-(scenario, user offset) analytic state: one field table per
/// (tier, link class). Construction performs the tabulation; every member
/// evaluation afterwards is cheap. Instances are immutable after
/// construction and safe to share across threads.
class FieldModel {
  public:
    /// spec controls the tabulation accuracy and the default Laplace
    /// integral tolerance. max_horizontal_radius optionally extends the
    /// table domain (needed only for unbounded homogeneous tiers, which
    /// have no natural truncation radius).
    FieldModel(const Scenario& sc, double z_u, const QuadSpec& spec = {},
               double max_horizontal_radius = 0.0)
        : sc_(sc), z_u_(z_u), spec_(spec) {
        detail::require(z_u >= 0, "FieldModel: user offset must be nonnegative");
        sc.validate();
        spec.validate();
        laplace_spec_ = spec.scaled(10.0);
        const double region = sc.region_radius();
        tiers_.resize(sc.tiers.size());
        for (std::size_t k = 0; k < sc.tiers.size(); ++k) {
            build_tier(k, region, max_horizontal_radius);
        }
    }

    const Scenario& scenario() const { return sc_; }
    double user_offset() const { return z_u_; }

    /// Expected number of class-q UAVs of tier k within horizontal
    /// distance t of the user's ground position.
    double disc_mass(std::size_t k, LinkClass q, double t) const {
        return cumulative(tiers_.at(k), cls(q), t);
    }

    /// Expected number of class-q UAVs of tier k over the whole domain.
    double plane_mass(std::size_t k, LinkClass q) const {
        return tiers_.at(k).total[cls(q)];
    }

    /// Smallest horizontal radius holding the given mass (saturates at the
    /// table end).
    double mass_radius(std::size_t k, LinkClass q, double mass) const {
        const TierField& f = tiers_.at(k);
        const int c = cls(q);
        if (mass <= 0) return 0.0;
        if (mass >= f.total[c]) return f.t_hi;
        std::size_t i = std::upper_bound(f.G[c].begin(), f.G[c].end(), mass) - f.G[c].begin();
        if (i == 0) return f.t.front();
        if (i >= f.t.size()) return f.t_hi;
        double lo = f.t[i - 1], hi = f.t[i];
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (cumulative(f, c, mid) < mass ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    /// CDF of the distance to the nearest class-q UAV of tier k. Defective:
    /// saturates at 1 - exp(-plane_mass) as r grows.
    double nearest_uav_cdf(std::size_t k, LinkClass q, double r) const {
        detail::require(r >= 0, "nearest_uav_cdf: r must be nonnegative");
        const double h = sc_.tiers[k].altitude_m;
        if (r <= h) return 0.0;
        const double z = std::sqrt((r - h) * (r + h));
        return -std::expm1(-disc_mass(k, q, z));
    }

    /// Density of the nearest class-q UAV distance (zero at and below the
    /// tier altitude). Equals the derivative of nearest_uav_cdf: the void
    /// factor times the intensity line integral around the boundary circle.
    double nearest_uav_pdf(std::size_t k, LinkClass q, double r) const {
        const TierField& f = tiers_.at(k);
        const int c = cls(q);
        const double h = sc_.tiers[k].altitude_m;
        if (r <= h) return 0.0;
        const double z = std::sqrt((r - h) * (r + h));
        if (z >= f.t_hi) return 0.0;
        const double mass = cumulative(f, c, z);
        const double slope = z > 0 ? point_value(f, c, z) / z : point_slope0(f, c);
        return std::exp(-mass) * r * slope;
    }

    /// Probability that the nearest class-q1 UAV of tier j at distance r
    /// delivers the strongest average power among all 2K candidates:
    /// product of void probabilities of every competitor exclusion disc.
    double association_probability(std::size_t j, LinkClass q1, double r) const {
        detail::require(r >= sc_.tiers.at(j).altitude_m,
                        "association_probability: r must be at least the tier altitude");
        double exponent = 0.0;
        for (std::size_t k = 0; k < tiers_.size(); ++k) {
            for (LinkClass q2 : link_classes) {
                if (k == j && q2 == q1) continue;
                const double z =
                    horizontal_exclusion(sc_.channel, q1, q2, sc_.tiers[j], sc_.tiers[k], r);
                exponent += cumulative(tiers_[k], cls(q2), z);
            }
        }
        return std::exp(-exponent);
    }

    /// Laplace transform E[exp(-s I)] of the interference conditioned on
    /// association with a class-q1 UAV of tier j at distance r. Product
    /// over every (tier, interferer class) of the void functional over the
    /// complement of its exclusion disc.
    double interference_laplace(std::size_t j, LinkClass q1, double s, double r) const {
        return interference_laplace_impl(j, q1, s, r, laplace_spec_);
    }

    /// exp(-sigma^2 s) * interference Laplace transform.
    double total_laplace(std::size_t j, LinkClass q1, double s, double r) const {
        return std::exp(-sc_.channel.noise_w * s) * interference_laplace(j, q1, s, r);
    }

    /// Conditional success probability P[G > mu * (I + sigma^2)] through
    /// the Gamma CCDF series (requires shape <= 4; derivative orders grow
    /// with the shape).
    double conditional_success_exact(std::size_t k, LinkClass q1, double r, double gamma) const {
        const int m = sc_.channel.nakagami_m(q1);
        if (m > 4) {
            throw std::invalid_argument(
                "conditional_success_exact: Nakagami shape above 4 needs derivative orders "
                "beyond the supported cap; use the approximate path");
        }
        const double mu = mu_threshold(sc_.channel, sc_.tiers[k], q1, r, gamma);
        auto lt = [&](double s) {
            return std::exp(-sc_.channel.noise_w * s) *
                   interference_laplace_impl(k, q1, s, r, spec_);
        };
        double sum = lt(mu);
        double coeff = 1.0;  // (-mu)^n / n!
        for (int n = 1; n < m; ++n) {
            coeff *= -mu / n;
            sum += coeff * nth_derivative(lt, mu, n);
        }
        return detail::clamp_unit(sum);
    }

    /// Conditional success probability through the Gamma CDF upper-bound
    /// expansion: sum_n C(m,n) (-1)^(n+1) L_U(n * omega * mu).
    double conditional_success_approx(std::size_t k, LinkClass q1, double r, double gamma) const {
        const int m = sc_.channel.nakagami_m(q1);
        const double omega = std::pow(factorial(m), -1.0 / m);
        const double mu = mu_threshold(sc_.channel, sc_.tiers[k], q1, r, gamma);
        double sum = 0.0;
        double binom = 1.0;
        for (int n = 1; n <= m; ++n) {
            binom = binom * (m - n + 1) / n;
            const double sign = (n % 2 == 1) ? 1.0 : -1.0;
            sum += sign * binom * total_laplace(k, q1, n * omega * mu, r);
        }
        return detail::clamp_unit(sum);
    }

    /// Upper integration limit for the serving-distance integral of tier k
    /// class q: beyond it the residual probability mass is below tail.
    double serving_upper_radius(std::size_t k, LinkClass q, double tail = 1e-5) const {
        const TierField& f = tiers_.at(k);
        const int c = cls(q);
        const double h = sc_.tiers[k].altitude_m;
        const double m_total = f.total[c];
        if (m_total <= 0) return h;
        const double g_cut = -std::log(std::exp(-m_total) + tail);
        const double z = mass_radius(k, q, g_cut);
        return std::sqrt(z * z + h * h);
    }

    /// Local coverage probability with one SINR threshold per tier
    /// (lengths must match the tier count). Sums the serving-distance
    /// integral of pdf * association * conditional success over every
    /// (tier, class) candidate.
    double local_coverage(std::span<const double> gamma_per_tier, CoverageMethod method,
                          const QuadSpec& outer = curve_spec(), int threads = 1) const {
        detail::require(gamma_per_tier.size() == tiers_.size(),
                        "local_coverage: one threshold per tier required");
        detail::require(method != CoverageMethod::monte_carlo,
                        "local_coverage: analytic methods only; use the simulator for MC");
        struct Term {
            std::size_t k;
            LinkClass q;
        };
        std::vector<Term> terms;
        for (std::size_t k = 0; k < tiers_.size(); ++k) {
            for (LinkClass q : link_classes) {
                if (tiers_[k].total[cls(q)] > 1e-300) terms.push_back({k, q});
            }
        }
        std::vector<double> parts(terms.size(), 0.0);
        parallel_for(terms.size(), threads, [&](std::size_t i) {
            parts[i] = serving_integral(terms[i].k, terms[i].q, gamma_per_tier[terms[i].k],
                                        method, outer);
        });
        double total = 0.0;
        for (double p : parts) total += p;
        return detail::clamp_unit(total);
    }

    double local_coverage(double gamma, CoverageMethod method,
                          const QuadSpec& outer = curve_spec(), int threads = 1) const {
        std::vector<double> g(tiers_.size(), gamma);
        return local_coverage(g, method, outer, threads);
    }

    /// Default tolerance for the serving-distance and user integrals of
    /// full coverage runs (unit-level operations use QuadSpec{} instead).
    static QuadSpec curve_spec() {
        QuadSpec s;
        s.rel_tol = 1e-4;
        s.abs_tol = 1e-8;
        return s;
    }

  private:
    struct TierField {
        double beta = 0.0, lambda = 0.0, altitude = 0.0;
        double region = infinity;  // deployment disc radius
        double t_hi = 0.0;
        std::vector<double> t;
        std::array<std::vector<double>, 2> g, dg, G;  // per link class
        std::array<double, 2> total{0.0, 0.0};
    };

    static int cls(LinkClass q) { return q == LinkClass::los ? 0 : 1; }

    static double factorial(int m) {
        double f = 1.0;
        for (int i = 2; i <= m; ++i) f *= i;
        return f;
    }

    struct PointSample {
        double t;
        std::array<double, 2> g, dg;
    };

    /// ring(t): angular integral of exp(-beta |x|) over the user-centered
    /// circle of radius t, restricted to the deployment region; also its
    /// t-derivative.
    static std::array<double, 2> ring_and_deriv(double t, double z_u, double beta, double region) {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        const double prod = t * z_u;
        if (prod < 1e-12) {  // concentric or central circle: distance is constant
            const double d = std::sqrt(t * t + z_u * z_u);
            if (d > region) return {0.0, 0.0};
            const double ring = two_pi * std::exp(-beta * d);
            const double dring = (t < 1e-12) ? 0.0 : -beta * (t / d) * ring;
            return {ring, dring};
        }
        // angular window [omega_c, pi] where the point stays inside the region
        double omega_c = 0.0;
        bool clipped = false;
        if (std::isfinite(region)) {
            const double u = (region * region - z_u * z_u - t * t) / (2.0 * prod);
            if (u >= 1.0) return {0.0, 0.0};  // entire circle outside
            if (u > -1.0) {
                omega_c = detail::clamped_acos(u);
                clipped = true;
            }
        }
        if (beta == 0.0) {
            if (!clipped) return {two_pi, 0.0};
            const double u = (region * region - z_u * z_u - t * t) / (2.0 * prod);
            const double one_m_u2 = 1.0 - u * u;
            const double du_dt = -((region * region - z_u * z_u) / (t * t) + 1.0) / (2.0 * z_u);
            const double domega = one_m_u2 > 1e-12 ? -du_dt / std::sqrt(one_m_u2) : 0.0;
            return {2.0 * (std::numbers::pi - omega_c), -2.0 * domega};
        }
        const auto& rule = detail::gauss_rule(32);
        const double span_max = std::isfinite(region) ? std::min(z_u + t, region) : z_u + t;
        const double variation = beta * (span_max - std::abs(z_u - t));
        const int panels = 1 + static_cast<int>(variation / 10.0);
        const double lo = omega_c, hi = std::numbers::pi;
        const double pw = (hi - lo) / panels;
        double ring = 0.0, dring = 0.0;
        for (int p = 0; p < panels; ++p) {
            const double c = lo + (p + 0.5) * pw;
            const double hph = 0.5 * pw;
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double w = c + hph * rule.x[i];
                const double d2 = t * t + z_u * z_u + 2.0 * prod * std::cos(w);
                const double d = std::sqrt(std::max(d2, 0.0));
                const double e = std::exp(-beta * d);
                ring += rule.w[i] * hph * e;
                if (d > 1e-12) {
                    dring += rule.w[i] * hph * (-beta) * ((t + z_u * std::cos(w)) / d) * e;
                }
            }
        }
        ring *= 2.0;
        dring *= 2.0;
        if (clipped) {
            // boundary sweeps with t; differentiate the window edge numerically
            const double dt = std::max(1e-6, 1e-6 * t);
            const double r_plus = ring_only(t + dt, z_u, beta, region);
            const double r_minus = ring_only(std::max(0.0, t - dt), z_u, beta, region);
            dring = (r_plus - r_minus) / (dt + std::min(t, dt));
        }
        return {ring, dring};
    }

    static double ring_only(double t, double z_u, double beta, double region) {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        const double prod = t * z_u;
        if (prod < 1e-12) {
            const double d = std::sqrt(t * t + z_u * z_u);
            return d > region ? 0.0 : two_pi * std::exp(-beta * d);
        }
        double omega_c = 0.0;
        if (std::isfinite(region)) {
            const double u = (region * region - z_u * z_u - t * t) / (2.0 * prod);
            if (u >= 1.0) return 0.0;
            if (u > -1.0) omega_c = detail::clamped_acos(u);
        }
        const auto& rule = detail::gauss_rule(32);
        const double span_max = std::isfinite(region) ? std::min(z_u + t, region) : z_u + t;
        const double variation = beta * (span_max - std::abs(z_u - t));
        const int panels = 1 + static_cast<int>(variation / 10.0);
        const double lo = omega_c, hi = std::numbers::pi;
        const double pw = (hi - lo) / panels;
        double ring = 0.0;
        for (int p = 0; p < panels; ++p) {
            const double c = lo + (p + 0.5) * pw;
            const double hph = 0.5 * pw;
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double w = c + hph * rule.x[i];
                const double d2 = t * t + z_u * z_u + 2.0 * prod * std::cos(w);
                ring += rule.w[i] * hph * std::exp(-beta * std::sqrt(std::max(d2, 0.0)));
            }
        }
        return 2.0 * ring;
    }

    PointSample sample_point(std::size_t k, double t) const {
        const TierField& f = tiers_[k];
        const ChannelParams& ch = sc_.channel;
        const auto [ring, dring] = ring_and_deriv(t, z_u_, f.beta, f.region);
        const double p = los_probability(ch, f.altitude, t);
        double dp = 0.0;
        if (!ch.forced_los_probability) {
            const double c = 180.0 / std::numbers::pi;
            dp = -p * (1.0 - p) * ch.env_b * c * f.altitude / (t * t + f.altitude * f.altitude);
        }
        PointSample s;
        s.t = t;
        const double lam = f.lambda;
        s.g[0] = lam * t * p * ring;
        s.g[1] = lam * t * (1.0 - p) * ring;
        s.dg[0] = lam * ((p + t * dp) * ring + t * p * dring);
        s.dg[1] = lam * (((1.0 - p) - t * dp) * ring + t * (1.0 - p) * dring);
        return s;
    }

    void build_tier(std::size_t k, double region, double max_horizontal_radius) {
        const TierConfig& tc = sc_.tiers[k];
        TierField& f = tiers_[k];
        f.beta = tc.beta;
        f.lambda = tc.lambda;
        f.altitude = tc.altitude_m;
        f.region = region;

        double r_eff;
        if (tc.beta > 0) {
            r_eff = std::min(region, 33.0 / tc.beta);
        } else if (std::isfinite(region)) {
            r_eff = region;
        } else if (max_horizontal_radius > 0) {
            r_eff = max_horizontal_radius;
        } else if (tc.lambda == 0) {
            r_eff = 1.0;  // empty tier, domain irrelevant
        } else {
            throw std::invalid_argument(
                "FieldModel: homogeneous tier over the infinite plane has no finite mass; "
                "set a deployment radius");
        }
        f.t_hi = std::max(z_u_ + r_eff, 1.0);
        if (max_horizontal_radius > 0) f.t_hi = std::max(f.t_hi, max_horizontal_radius);

        // seed knots: geometric ladder plus region kinks and the z_u corner
        std::vector<double> seeds{0.0, f.t_hi};
        for (double x = std::max(1.0, f.t_hi * 1e-5); x < f.t_hi; x *= 1.6) seeds.push_back(x);
        if (z_u_ > 0 && z_u_ < f.t_hi) seeds.push_back(z_u_);
        if (std::isfinite(region)) {
            for (double x : {std::abs(region - z_u_), region + z_u_}) {
                if (x > 0 && x < f.t_hi) seeds.push_back(x);
            }
        }
        std::sort(seeds.begin(), seeds.end());
        seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

        std::vector<PointSample> nodes;
        nodes.reserve(512);
        double scale = 1e-300;
        for (double s : seeds) {
            PointSample p = sample_point(k, s);
            scale = std::max({scale, std::abs(p.g[0]), std::abs(p.g[1])});
            if (!nodes.empty()) {
                refine_segment(k, nodes.back(), p, nodes, scale, 0);
            }
            nodes.push_back(p);
        }

        const std::size_t n = nodes.size();
        f.t.resize(n);
        for (int c = 0; c < 2; ++c) {
            f.g[c].resize(n);
            f.dg[c].resize(n);
            f.G[c].resize(n);
        }
        for (std::size_t i = 0; i < n; ++i) {
            f.t[i] = nodes[i].t;
            for (int c = 0; c < 2; ++c) {
                f.g[c][i] = nodes[i].g[c];
                f.dg[c][i] = nodes[i].dg[c];
            }
        }
        for (int c = 0; c < 2; ++c) {
            f.G[c][0] = 0.0;
            for (std::size_t i = 1; i < n; ++i) {
                f.G[c][i] = f.G[c][i - 1] +
                            detail::hermite_integral(f.t[i] - f.t[i - 1], f.g[c][i - 1],
                                                     f.g[c][i], f.dg[c][i - 1], f.dg[c][i]);
            }
            f.total[c] = f.G[c][n - 1];
        }
    }

    /// Splits (a, b) until the Hermite interpolant reproduces direct
    /// evaluation at midpoints for both link classes. Appends accepted
    /// interior nodes (in order, excluding the endpoints).
    void refine_segment(std::size_t k, const PointSample& a, const PointSample& b,
                        std::vector<PointSample>& out, double& scale, int depth) const {
        if (depth >= 42 || (b.t - a.t) <= 1e-12 * std::max(1.0, b.t)) return;
        const double tm = 0.5 * (a.t + b.t);
        PointSample m = sample_point(k, tm);
        scale = std::max({scale, std::abs(m.g[0]), std::abs(m.g[1])});
        const double tol = std::max(spec_.rel_tol, 1e-8);
        bool ok = true;
        for (int c = 0; c < 2; ++c) {
            const double pred = detail::hermite(a.t, b.t, a.g[c], b.g[c], a.dg[c], b.dg[c], tm);
            const double allowed = std::max(tol * std::abs(m.g[c]), tol * 1e-2 * scale);
            if (std::abs(pred - m.g[c]) > allowed) {
                ok = false;
                break;
            }
        }
        if (ok) return;
        refine_segment(k, a, m, out, scale, depth + 1);
        out.push_back(m);
        refine_segment(k, m, b, out, scale, depth + 1);
    }

    double point_value(const TierField& f, int c, double t) const {
        if (t <= 0 || t >= f.t_hi) return 0.0;
        const std::size_t i = std::upper_bound(f.t.begin(), f.t.end(), t) - f.t.begin();
        if (i == 0 || i >= f.t.size()) return 0.0;
        return detail::hermite(f.t[i - 1], f.t[i], f.g[c][i - 1], f.g[c][i], f.dg[c][i - 1],
                               f.dg[c][i], t);
    }

    double point_slope0(const TierField& f, int c) const { return f.dg[c].empty() ? 0.0 : f.dg[c][0]; }

    double cumulative(const TierField& f, int c, double t) const {
        if (t <= 0) return 0.0;
        if (t >= f.t_hi) return f.total[c];
        const std::size_t i = std::upper_bound(f.t.begin(), f.t.end(), t) - f.t.begin();
        if (i == 0) return 0.0;
        if (i >= f.t.size()) return f.total[c];
        return f.G[c][i - 1] + detail::hermite_partial_integral(f.t[i - 1], f.t[i], f.g[c][i - 1],
                                                                f.g[c][i], f.dg[c][i - 1],
                                                                f.dg[c][i], t);
    }

    double interference_laplace_impl(std::size_t j, LinkClass q1, double s, double r,
                                     const QuadSpec& lap_spec) const {
        detail::require(s >= 0, "interference_laplace: s must be nonnegative");
        detail::require(r >= sc_.tiers.at(j).altitude_m,
                        "interference_laplace: r must be at least the tier altitude");
        if (s == 0) return 1.0;
        double exponent = 0.0;
        for (std::size_t k = 0; k < tiers_.size(); ++k) {
            const TierField& f = tiers_[k];
            for (LinkClass q2 : link_classes) {
                const int c = cls(q2);
                if (f.total[c] <= 1e-300) continue;
                const double z_excl =
                    horizontal_exclusion(sc_.channel, q1, q2, sc_.tiers[j], sc_.tiers[k], r);
                if (z_excl >= f.t_hi) continue;
                exponent += fading_weighted_mass(k, q2, s, z_excl, lap_spec);
            }
        }
        return std::exp(-exponent);
    }

    /// integral over [z_lo, t_hi] of g(t) * w(s, t) where w is the
    /// fading-averaged non-suppression factor of one interferer.
    double fading_weighted_mass(std::size_t k, LinkClass q2, double s, double z_lo,
                                const QuadSpec& lap_spec) const {
        const TierField& f = tiers_[k];
        const int c = cls(q2);
        const ChannelParams& ch = sc_.channel;
        const double h = f.altitude;
        const double alpha = ch.alpha(q2);
        const int m = ch.nakagami_m(q2);
        const double coupling = s * ch.eta(q2) * sc_.tiers[k].power_w;
        auto integrand = [&](double t) {
            const double g = point_value(f, c, t);
            if (g == 0.0) return 0.0;
            const double x = coupling * detail::pathloss_from_d2(t * t + h * h, alpha);
            return g * (1.0 - gamma_gain_laplace(m, x));
        };
        // transition radius where the fading suppression turns over
        std::vector<double> brk;
        const double c2a = std::pow(coupling / m, 2.0 / alpha);
        if (c2a > h * h) {
            const double tstar = std::sqrt(c2a - h * h);
            for (double fac : {0.3, 1.0, 3.0}) {
                const double x = tstar * fac;
                if (x > z_lo && x < f.t_hi) brk.push_back(x);
            }
        }
        for (double x = std::max(z_lo, 1.0) * 4.0; x < f.t_hi; x *= 4.0) {
            if (x > z_lo) brk.push_back(x);
        }
        if (z_u_ > z_lo && z_u_ < f.t_hi) brk.push_back(z_u_);
        QuadResult res = integrate_1d(integrand, z_lo, f.t_hi, lap_spec, brk);
        if (!res.converged) {
            throw std::runtime_error("interference_laplace: exponent integral did not converge");
        }
        return res.value;
    }

    double serving_integral(std::size_t k, LinkClass q1, double gamma, CoverageMethod method,
                            const QuadSpec& outer) const {
        const double h = sc_.tiers[k].altitude_m;
        const double r_hi = serving_upper_radius(k, q1);
        if (!(r_hi > h)) return 0.0;
        auto integrand = [&](double r) {
            const double f = nearest_uav_pdf(k, q1, r);
            if (f <= 0) return 0.0;
            const double pa = association_probability(k, q1, r);
            if (pa <= 0) return 0.0;
            const double succ = method == CoverageMethod::exact
                                    ? conditional_success_exact(k, q1, r, gamma)
                                    : conditional_success_approx(k, q1, r, gamma);
            return f * pa * succ;
        };
        // seed the subdivision at serving-distance quantiles
        std::vector<double> brk;
        const double m_total = plane_mass(k, q1);
        for (double qtl : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
            const double mass = -std::log1p(-qtl * (-std::expm1(-m_total)));
            const double z = mass_radius(k, q1, mass);
            const double r = std::sqrt(z * z + h * h);
            if (r > h && r < r_hi) brk.push_back(r);
        }
        QuadResult res = integrate_1d(integrand, h, r_hi, outer, brk);
        if (!res.converged) {
            throw std::runtime_error("local_coverage: serving-distance integral did not converge");
        }
        return res.value;
    }

    Scenario sc_;  // owned copy: a FieldModel outlives its construction arguments
    double z_u_;
    QuadSpec spec_;
    QuadSpec laplace_spec_;
    std::vector<TierField> tiers_;
};

// ---------------------------------------------------------------------------
// Free-function surface. Each call builds the field tables for its user
// offset; loops over many (r, s, gamma) at one offset should construct a
// FieldModel directly.

inline double nearest_uav_cdf(const Scenario& sc, std::size_t k, LinkClass q, double r,
                              double z_u, const QuadSpec& spec = {},
                              double max_horizontal_radius = 0.0) {
    double max_r = max_horizontal_radius;
    if (max_r == 0 && !std::isfinite(sc.region_radius()) && sc.tiers.at(k).beta == 0) {
        max_r = z_u + std::sqrt(std::max(r * r - sc.tiers[k].altitude_m * sc.tiers[k].altitude_m,
                                         0.0)) + 1.0;
    }
    return FieldModel(sc, z_u, spec, max_r).nearest_uav_cdf(k, q, r);
}

inline double nearest_uav_pdf(const Scenario& sc, std::size_t k, LinkClass q, double r,
                              double z_u, const QuadSpec& spec = {}) {
    return FieldModel(sc, z_u, spec).nearest_uav_pdf(k, q, r);
}

inline double association_probability(const Scenario& sc, std::size_t j, LinkClass q, double r,
                                      double z_u, const QuadSpec& spec = {}) {
    return FieldModel(sc, z_u, spec).association_probability(j, q, r);
}

inline double interference_laplace(const Scenario& sc, std::size_t j, LinkClass q1, double s,
                                   double r, double z_u, const QuadSpec& spec = {}) {
    return FieldModel(sc, z_u, spec).interference_laplace(j, q1, s, r);
}

inline double local_coverage_exact(const Scenario& sc, double z_u, double gamma,
                                   const QuadSpec& outer = FieldModel::curve_spec(),
                                   int threads = 1) {
    return FieldModel(sc, z_u).local_coverage(gamma, CoverageMethod::exact, outer, threads);
}

inline double local_coverage_approx(const Scenario& sc, double z_u, double gamma,
                                    const QuadSpec& outer = FieldModel::curve_spec(),
                                    int threads = 1) {
    return FieldModel(sc, z_u).local_coverage(gamma, CoverageMethod::approximate, outer, threads);
}

/// User-density-weighted average of an arbitrary local metric:
/// integral of Lambda_u(z) * f(z) * z over the normalizing user mass.
template <class LocalFn>
double overall_from_local(const UserDensity& users, LocalFn&& local,
                          const QuadSpec& outer = FieldModel::curve_spec()) {
    users.validate();
    detail::require(users.beta > 0,
                    "overall coverage requires a decaying user density (beta_u > 0)");
    const double beta = users.beta;
    // residual user mass beyond the truncation point stays below tolerance
    double x = 20.0;
    const double target = std::min(1e-6, 0.1 * outer.rel_tol);
    while (std::exp(-x) * (1.0 + x) > target) x += 1.0;
    const double z_max = x / beta;
    std::vector<double> brk{1.0 / beta, 2.0 / beta, 4.0 / beta};
    QuadResult num = integrate_1d([&](double z) { return std::exp(-beta * z) * z * local(z); },
                                  0.0, z_max, outer, brk);
    if (!num.converged) {
        throw std::runtime_error("overall coverage: user integral did not converge");
    }
    return detail::clamp_unit(num.value * beta * beta);
}

/// Overall coverage probability at one SINR threshold.
inline double overall_coverage(const Scenario& sc, double gamma,
                               CoverageMethod method = CoverageMethod::approximate,
                               const QuadSpec& outer = FieldModel::curve_spec(),
                               int threads = 1) {
    detail::require(gamma > 0, "overall_coverage: gamma must be positive");
    return overall_from_local(
        sc.users,
        [&](double z) {
            FieldModel field(sc, z);
            return field.local_coverage(gamma, method, outer, threads);
        },
        outer);
}

/// Overall coverage with per-tier thresholds (energy-efficiency mode).
inline double overall_coverage_per_tier(const Scenario& sc, std::span<const double> gammas,
                                        CoverageMethod method = CoverageMethod::approximate,
                                        const QuadSpec& outer = FieldModel::curve_spec(),
                                        int threads = 1) {
    return overall_from_local(
        sc.users,
        [&](double z) {
            FieldModel field(sc, z);
            return field.local_coverage(gammas, method, outer, threads);
        },
        outer);
}

}  // namespace aerocov
