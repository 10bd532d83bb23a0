#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "aerocov/model.hpp"

using namespace aerocov;

namespace {

ChannelParams test_channel() {
    ChannelParams ch;
    ch.alpha_los = 2.0;
    ch.alpha_nlos = 3.0;
    ch.eta_los = 1.0;
    ch.eta_nlos = 0.01;
    ch.m_los = 2;
    ch.m_nlos = 1;
    ch.noise_w = 1e-7;
    ch.env_a = 4.88;
    ch.env_b = 0.429;
    return ch;
}

TierConfig tier(double h, double lambda, double beta, double power_w = 1e-3) {
    return TierConfig{h, lambda, beta, power_w};
}

}  // namespace

TEST_CASE("user density evaluates the exponential decay") {
    UserDensity u{1e-3, 5e-3};
    CHECK(user_density(u, 0.0) == doctest::Approx(1e-3));
    CHECK(user_density(UserDensity{1e-3, 0.0}, 1e4) == doctest::Approx(1e-3));
    CHECK(user_density(u, 1000.0) == doctest::Approx(1e-3 * std::exp(-5.0)).epsilon(1e-12));
    CHECK(user_density(u, 1000.0) == doctest::Approx(6.7379e-6).epsilon(1e-4));
    CHECK_THROWS_AS(user_density(u, -1.0), std::invalid_argument);
}

TEST_CASE("uav density evaluates the exponential decay") {
    CHECK(uav_density(tier(100, 4e-5, 0.0), 999.0) == doctest::Approx(4e-5));
    CHECK(uav_density(tier(100, 4e-5, 3.2e-3), 0.0) == doctest::Approx(4e-5));
    CHECK(uav_density(tier(100, 4e-5, 3.2e-3), 1000.0) ==
          doctest::Approx(1.6304e-6).epsilon(1e-4));
    CHECK_THROWS_AS(uav_density(tier(100, 4e-5, 0.0), -0.5), std::invalid_argument);
}

TEST_CASE("densities are nonincreasing in z and positive") {
    UserDensity u{2e-3, 4e-3};
    TierConfig t = tier(80, 1e-5, 2.5e-3);
    double prev_u = infinity, prev_t = infinity;
    for (double z = 0; z <= 5000; z += 100) {
        const double du = user_density(u, z);
        const double dt = uav_density(t, z);
        CHECK(du > 0);
        CHECK(dt > 0);
        CHECK(du <= prev_u);
        CHECK(dt <= prev_t);
        prev_u = du;
        prev_t = dt;
    }
}

TEST_CASE("expected uav count matches the closed forms") {
    CHECK(expected_uav_count(tier(100, 4e-5, 3.2e-3)) == doctest::Approx(24.54).epsilon(1e-3));
    CHECK(expected_uav_count(tier(100, 4e-5, 3.2e-3), 1e-9) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(expected_uav_count(tier(100, 1e-6, 0.0), 2820.9) == doctest::Approx(25.0).epsilon(1e-3));
    CHECK_THROWS_AS(expected_uav_count(tier(100, 1e-6, 0.0)), std::invalid_argument);

    // convergence to the plane total once the tail bound is tiny
    TierConfig t = tier(100, 4e-5, 3.2e-3);
    const double total = expected_uav_count(t);
    double x = 1.0;
    while (std::exp(-x) * (1.0 + x) >= 1e-7) x += 0.01;
    const double radius = x / t.beta;
    CHECK(std::abs(expected_uav_count(t, radius) - total) / total < 1e-6);
}

TEST_CASE("los probability matches scalar evaluations and monotonicity") {
    ChannelParams ch = test_channel();
    CHECK(los_probability(ch, 100.0, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(1.0 - los_probability(ch, 100.0, 0.0) < 1e-15);
    CHECK(los_probability(ch, 100.0, 1000.0) == doctest::Approx(0.2264).epsilon(2e-3));

    double prev = 0.0;
    for (double h = 20; h <= 500; h += 20) {
        const double p = los_probability(ch, h, 800.0);
        CHECK(p >= prev);
        prev = p;
    }
    double prev_z = 1.0;
    for (double z = 1; z <= 5000; z *= 2) {
        const double p = los_probability(ch, 120.0, z);
        CHECK(p > 0);
        CHECK(p < 1);
        CHECK(p < prev_z);
        prev_z = p;
    }

    ch.forced_los_probability = 0.25;
    CHECK(los_probability(ch, 100.0, 12345.0) == doctest::Approx(0.25));
    CHECK(link_class_probability(ch, LinkClass::nlos, 100.0, 12345.0) == doctest::Approx(0.75));
}

TEST_CASE("user-to-uav distance") {
    CHECK(user_to_uav_distance(0, 0, 1.234, 100) == doctest::Approx(100.0));
    CHECK(user_to_uav_distance(300, 300, 0.0, 50) == doctest::Approx(50.0));
    CHECK(user_to_uav_distance(100, 200, std::numbers::pi / 2, 100) ==
          doctest::Approx(std::sqrt(100.0 * 100 + 200.0 * 200 + 100.0 * 100)));
    CHECK(horizontal_user_distance(100, 200, std::numbers::pi / 2) ==
          doctest::Approx(std::sqrt(100.0 * 100 + 200.0 * 200)));
}

TEST_CASE("exclusion distances implement the four power-balance cases") {
    ChannelParams ch = test_channel();
    TierConfig tj = tier(100, 4e-5, 3e-3, 1e-3);
    TierConfig tk = tier(100, 4e-5, 3e-3, 1e-3);

    SUBCASE("same class same power reduces to max(h, r)") {
        CHECK(exclusion_distance(ch, LinkClass::los, LinkClass::los, tj, tk, 500) ==
              doctest::Approx(500.0));
        CHECK(exclusion_distance(ch, LinkClass::los, LinkClass::los, tj, tk, 100) ==
              doctest::Approx(100.0));
    }
    SUBCASE("los association, nlos interferer") {
        // eta ratio 0.01, alpha ratio 2/3: 0.01^(1/3) * 1000^(2/3) = 21.544
        const double d = exclusion_distance(ch, LinkClass::los, LinkClass::nlos, tj, tk, 1000);
        CHECK(d == doctest::Approx(100.0));
        TierConfig low = tier(10, 4e-5, 3e-3, 1e-3);
        const double d2 = exclusion_distance(ch, LinkClass::los, LinkClass::nlos, tj, low, 1000);
        CHECK(d2 == doctest::Approx(21.544).epsilon(1e-3));
    }
    SUBCASE("nlos association, nlos interferer with power ratio 8") {
        TierConfig strong = tier(50, 4e-5, 3e-3, 8e-3);
        TierConfig weak_j = tier(50, 4e-5, 3e-3, 1e-3);
        const double d =
            exclusion_distance(ch, LinkClass::nlos, LinkClass::nlos, weak_j, strong, 200);
        CHECK(d == doctest::Approx(400.0));
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(exclusion_distance(ch, LinkClass::los, LinkClass::los, tj, tk, 99.0),
                        std::invalid_argument);
    }
    SUBCASE("always at least the interferer altitude; equality case is exact") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 200; ++i) {
            TierConfig a = tier(20 + 200 * u(rng), 1e-5, 1e-3, 1e-4 + 1e-2 * u(rng));
            TierConfig b = tier(20 + 200 * u(rng), 1e-5, 1e-3, 1e-4 + 1e-2 * u(rng));
            const double r = a.altitude_m + 2000 * u(rng);
            for (LinkClass q1 : link_classes) {
                for (LinkClass q2 : link_classes) {
                    CHECK(exclusion_distance(ch, q1, q2, a, b, r) >= b.altitude_m);
                }
            }
            const double same = exclusion_distance(ch, LinkClass::nlos, LinkClass::nlos, a,
                                                   TierConfig{a.altitude_m, 1e-5, 1e-3, a.power_w},
                                                   r);
            CHECK(same == doctest::Approx(std::max(a.altitude_m, r)).epsilon(1e-12));
        }
    }
}

TEST_CASE("horizontal exclusion projects the exclusion distance") {
    ChannelParams ch = test_channel();
    TierConfig tj = tier(100, 4e-5, 3e-3, 1e-3);
    TierConfig tk = tier(100, 4e-5, 3e-3, 1e-3);
    CHECK(horizontal_exclusion(ch, LinkClass::los, LinkClass::los, tj, tk, 100.0) ==
          doctest::Approx(0.0));
    CHECK(horizontal_exclusion(ch, LinkClass::los, LinkClass::los, tj, tk, 500.0) ==
          doctest::Approx(std::sqrt(500.0 * 500 - 100.0 * 100)));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        TierConfig b = tier(20 + 300 * u(rng), 1e-5, 1e-3, 1e-4 + 1e-2 * u(rng));
        const double r = tj.altitude_m + 3000 * u(rng);
        for (LinkClass q1 : link_classes) {
            for (LinkClass q2 : link_classes) {
                CHECK(horizontal_exclusion(ch, q1, q2, tj, b, r) >= 0.0);
            }
        }
    }
}

TEST_CASE("gamma gain laplace transform") {
    CHECK(gamma_gain_laplace(1, 1.0) == doctest::Approx(0.5));
    CHECK(gamma_gain_laplace(7, 0.0) == doctest::Approx(1.0));
    CHECK(gamma_gain_laplace(2, 2.0) == doctest::Approx(0.25));

    // completely monotone on a grid: positive, decreasing, convex
    for (int m : {1, 2, 3, 4}) {
        double prev = 2.0, prev_diff = 0.0;
        bool first = true;
        for (int i = 0; i <= 120; ++i) {
            const double t = 0.1 * i;
            const double v = gamma_gain_laplace(m, t);
            CHECK(v > 0);
            CHECK(v <= 1.0);
            CHECK(v < prev);
            if (!first) {
                const double diff = v - prev;
                if (prev_diff != 0.0) CHECK(diff >= prev_diff);  // differences increase: convex
                prev_diff = diff;
            }
            first = false;
            prev = v;
        }
    }
}

TEST_CASE("db conversions") {
    CHECK(dbm_to_watts(0.0) == doctest::Approx(1e-3));
    CHECK(dbm_to_watts(12.0) == doctest::Approx(0.015849).epsilon(1e-4));
    CHECK(db_to_linear(0.0) == doctest::Approx(1.0));
    CHECK(db_to_linear(-20.0) == doctest::Approx(0.01));
    CHECK(watts_to_dbm(dbm_to_watts(7.3)) == doctest::Approx(7.3));
}

TEST_CASE("scenario validation flags duplicate tiers and bad parameters") {
    Scenario sc;
    sc.users = UserDensity{1e-3, 5e-3};
    sc.channel = test_channel();
    sc.tiers = {tier(100, 4e-5, 3.2e-3), tier(100, 4e-5, 3.2e-3)};
    const auto warnings = sc.validate();
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("duplicate") != std::string::npos);

    sc.tiers[1].altitude_m = 150;
    CHECK(sc.validate().empty());

    Scenario bad = sc;
    bad.channel.alpha_los = 3.5;  // violates alpha_los < alpha_nlos
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = sc;
    bad.channel.eta_nlos = 2.0;  // violates eta_los > eta_nlos
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = sc;
    bad.tiers.clear();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
