#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "aerocov/model.hpp"
#include "aerocov/quadrature.hpp"

using namespace aerocov;

TEST_CASE("polynomials integrate exactly") {
    CHECK(integrate_1d([](double x) { return x * x; }, 0, 1).value ==
          doctest::Approx(1.0 / 3).epsilon(1e-12));
    // the 15-point rule is exact for polynomials well past degree 10
    auto poly = [](double x) { return 1 + x - 3 * x * x + 0.5 * std::pow(x, 7) - std::pow(x, 10); };
    const double exact = 2 + 2.0 / 2 - 3 * 8.0 / 3 + 0.5 * 256.0 / 8 - 2048.0 / 11;
    CHECK(integrate_1d(poly, 0, 2).value == doctest::Approx(exact).epsilon(1e-13));
}

TEST_CASE("standard integrals converge") {
    CHECK(integrate_1d([](double x) { return std::sin(x); }, 0, std::numbers::pi).value ==
          doctest::Approx(2.0).epsilon(1e-10));
    QuadResult r = integrate_1d([](double x) { return 1.0 / std::sqrt(x); }, 0, 1);
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("interval splitting is consistent") {
    auto f = [](double x) { return std::exp(-x) * std::cos(3 * x); };
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 4.9);
    QuadResult whole = integrate_1d(f, 0, 5);
    for (int i = 0; i < 25; ++i) {
        const double mid = u(rng);
        QuadResult left = integrate_1d(f, 0, mid);
        QuadResult right = integrate_1d(f, mid, 5);
        const double err_budget =
            2 * (whole.error_estimate + left.error_estimate + right.error_estimate) + 1e-12;
        CHECK(std::abs(left.value + right.value - whole.value) <= err_budget);
    }
}

TEST_CASE("non-convergence is reported, not silent") {
    QuadSpec tight;
    tight.rel_tol = 1e-13;
    tight.abs_tol = 1e-300;
    tight.max_subdivisions = 3;
    QuadResult r = integrate_1d([](double x) { return 1.0 / std::sqrt(x); }, 0, 1, tight);
    CHECK_FALSE(r.converged);
}

TEST_CASE("semi-infinite integrals with exponential tails") {
    CHECK(integrate_semi_infinite([](double x) { return std::exp(-x); }, 0).value ==
          doctest::Approx(1.0).epsilon(1e-8));
    CHECK(integrate_semi_infinite([](double x) { return x * std::exp(-x); }, 0).value ==
          doctest::Approx(1.0).epsilon(1e-8));
    const double beta = 0.0032, lam = 4e-5;
    QuadResult r = integrate_semi_infinite(
        [&](double x) { return std::exp(-beta * x) * 2 * std::numbers::pi * lam * x; }, 0, {},
        1.0 / beta);
    CHECK(r.value == doctest::Approx(2 * std::numbers::pi * lam / (beta * beta)).epsilon(1e-7));
    CHECK(r.value == doctest::Approx(24.54).epsilon(1e-3));
}

TEST_CASE("semi-infinite truncation is stable once the tail triggers") {
    auto f = [](double x) { return (1 + x) * std::exp(-0.5 * x); };
    QuadSpec spec;
    QuadResult r1 = integrate_semi_infinite(f, 0, spec, 2.0);
    QuadResult r2 = integrate_semi_infinite(f, 0, spec, 4.0);  // doubled initial span
    CHECK(r1.value == doctest::Approx(r2.value).epsilon(1e-8));
}

TEST_CASE("nested 2d integration") {
    auto one = [](double, double) { return 1.0; };
    CHECK(integrate_2d_nested(one, 0, 1, [](double) { return std::pair{0.0, 1.0}; }).value ==
          doctest::Approx(1.0).epsilon(1e-10));

    SUBCASE("empty theta interval contributes zero") {
        CHECK(integrate_2d_nested(one, 0, 1, [](double) { return std::pair{1.0, 1.0}; }).value ==
              doctest::Approx(0.0));
        CHECK(integrate_2d_nested(one, 0, 1, [](double) { return std::pair{2.0, 1.0}; }).value ==
              doctest::Approx(0.0));
    }

    SUBCASE("wedge construction reproduces a disc area checked against MC") {
        // area of { (l, theta): l < R, |theta| < acos(l/R) } in polar measure
        const double R = 2.0;
        auto measure = [](double l, double) { return l; };
        QuadResult area = integrate_2d_nested(
            measure, 0, R,
            [&](double l) {
                const double half = std::acos(std::min(1.0, l / R));
                return std::pair{-half, half};
            },
            QuadSpec{});
        // MC oracle over the bounding box x in [-R, R], y in [-R, R]
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> u(-R, R);
        long hits = 0;
        const long n = 400000;
        for (long i = 0; i < n; ++i) {
            const double x = u(rng), y = u(rng);
            const double l = std::hypot(x, y);
            if (l >= R || l == 0) continue;
            const double theta = std::atan2(y, x);
            if (std::abs(theta) < std::acos(l / R)) ++hits;
        }
        const double mc = 4.0 * R * R * static_cast<double>(hits) / n;
        CHECK(area.value == doctest::Approx(mc).epsilon(0.01));
    }
}

TEST_CASE("nth derivative with Richardson extrapolation") {
    auto f = [](double s) { return std::exp(-s); };
    CHECK(nth_derivative(f, 0.0, 2) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(nth_derivative([](double s) { return s * s * s; }, 2.0, 3) ==
          doctest::Approx(6.0).epsilon(1e-6));
    // symbolic oracle: d/dt (2/(2+t))^2 at t=1 is -2 * 4 / 27
    auto gl = [](double t) { return gamma_gain_laplace(2, t); };
    CHECK(nth_derivative(gl, 1.0, 1) == doctest::Approx(-8.0 / 27).epsilon(1e-8));

    SUBCASE("order zero returns the function value exactly") {
        CHECK(nth_derivative(f, 1.25, 0) == f(1.25));
    }
    SUBCASE("orders above four are rejected with guidance") {
        CHECK_THROWS_WITH_AS(nth_derivative(f, 0.0, 5),
                             doctest::Contains("approximate"), std::invalid_argument);
    }
    SUBCASE("fourth derivative of exp at 0") {
        CHECK(nth_derivative(f, 0.0, 4) == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("breakpoints seed the subdivision") {
    // integrand with a sharp feature at x = 3; breakpoint helps but the
    // result must match either way
    auto f = [](double x) { return 1.0 / (1e-4 + (x - 3.0) * (x - 3.0)); };
    const double brk[] = {3.0};
    QuadResult with = integrate_1d(f, 0, 10, {}, brk);
    QuadResult without = integrate_1d(f, 0, 10);
    CHECK(with.converged);
    CHECK(with.value == doctest::Approx(without.value).epsilon(1e-6));
    CHECK(with.value == doctest::Approx(100.0 * (std::atan(700.0) + std::atan(300.0))).epsilon(1e-6));
}
