#pragma once

// Adaptive numerical integration and differentiation used by the whole
// analytical chain. The workhorse is a Gauss-Kronrod 7/15 rule with
// bisection refinement; all Kronrod nodes are interior, so integrable
// endpoint singularities (1/sqrt style) are handled by grading the
// subdivision toward the endpoint rather than by substitution.
//
// Integrand callbacks must be reentrant: callers may evaluate the same
// integrand from several threads at once.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace aerocov {

struct QuadSpec {
    double rel_tol = 1e-6;
    double abs_tol = 1e-12;
    int max_subdivisions = 2000;
    double tail_epsilon = 1e-7;  // semi-infinite truncation control

    void validate() const {
        if (!(rel_tol > 0 && rel_tol < 1) || !(abs_tol > 0) || max_subdivisions <= 0 ||
            !(tail_epsilon > 0)) {
            throw std::invalid_argument("QuadSpec: tolerances and limits must be positive, rel_tol < 1");
        }
    }

    QuadSpec scaled(double factor) const {
        QuadSpec s = *this;
        s.rel_tol *= factor;
        s.abs_tol *= factor;
        return s;
    }
};

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    long evaluations = 0;
    bool converged = true;

    QuadResult& operator+=(const QuadResult& other) {
        value += other.value;
        error_estimate += other.error_estimate;
        evaluations += other.evaluations;
        converged = converged && other.converged;
        return *this;
    }
};

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
inline constexpr double gk_nodes[8] = {
    0.000000000000000000e+00, 2.077849550078984676e-01, 4.058451513773971669e-01,
    5.860872354676911303e-01, 7.415311855993944399e-01, 8.648644233597690728e-01,
    9.491079123427585245e-01, 9.914553711208126392e-01};
inline constexpr double gk_wk[8] = {
    2.094821410847278280e-01, 2.044329400752988924e-01, 1.903505780647854099e-01,
    1.690047266392679028e-01, 1.406532597155259187e-01, 1.047900103222501838e-01,
    6.309209262997855329e-02, 2.293532201052922496e-02};
inline constexpr double gk_wg[4] = {
    4.179591836734693878e-01, 3.818300505051189449e-01, 2.797053914892766679e-01,
    1.294849661688696933e-01};

template <class F>
inline QuadResult gk15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double vals[15];
    vals[0] = f(c);
    for (int i = 1; i < 8; ++i) {
        const double dx = h * gk_nodes[i];
        vals[2 * i - 1] = f(c + dx);
        vals[2 * i] = f(c - dx);
    }
    double kron = gk_wk[0] * vals[0];
    double gauss = gk_wg[0] * vals[0];
    double resabs = gk_wk[0] * std::abs(vals[0]);
    for (int i = 1; i < 8; ++i) {
        const double fs = vals[2 * i - 1] + vals[2 * i];
        kron += gk_wk[i] * fs;
        resabs += gk_wk[i] * (std::abs(vals[2 * i - 1]) + std::abs(vals[2 * i]));
        if (i % 2 == 0) gauss += gk_wg[i / 2] * fs;
    }
    const double mean = 0.5 * kron;
    double resasc = gk_wk[0] * std::abs(vals[0] - mean);
    for (int i = 1; i < 8; ++i) {
        resasc += gk_wk[i] * (std::abs(vals[2 * i - 1] - mean) + std::abs(vals[2 * i] - mean));
    }
    const double ah = std::abs(h);
    resabs *= ah;
    resasc *= ah;
    QuadResult r;
    r.value = kron * h;
    r.evaluations = 15;
    // QUADPACK error model: sharpen |K - G| against the integrand variation.
    double err = std::abs((kron - gauss) * h);
    if (resasc != 0.0 && err != 0.0) {
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    }
    const double round_floor = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
    r.error_estimate = std::max(err, round_floor);
    return r;
}

struct Segment {
    double a, b, value, error;
};

}  // namespace detail

/// Adaptive integral of f over [a, b]. Optional interior breakpoints seed
/// the initial subdivision (useful when the caller knows where the
/// integrand changes character). Non-convergence is reported through
/// converged=false, never silently.
template <class F>
QuadResult integrate_1d(F&& f, double a, double b, const QuadSpec& spec = {},
                        std::span<const double> breakpoints = {}) {
    spec.validate();
    if (!(a <= b)) throw std::invalid_argument("integrate_1d: requires a <= b");
    QuadResult total;
    if (a == b) return total;

    std::vector<double> knots;
    knots.push_back(a);
    for (double x : breakpoints) {
        if (x > a && x < b) knots.push_back(x);
    }
    knots.push_back(b);
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    std::vector<detail::Segment> heap;
    heap.reserve(64);
    double sum = 0.0, err = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        QuadResult r = detail::gk15(f, knots[i], knots[i + 1]);
        total.evaluations += r.evaluations;
        heap.push_back({knots[i], knots[i + 1], r.value, r.error_estimate});
        sum += r.value;
        err += r.error_estimate;
    }

    auto worse = [](const detail::Segment& x, const detail::Segment& y) { return x.error < y.error; };
    std::make_heap(heap.begin(), heap.end(), worse);

    int splits = 0;
    while (err > std::max(spec.abs_tol, spec.rel_tol * std::abs(sum)) &&
           splits < spec.max_subdivisions) {
        std::pop_heap(heap.begin(), heap.end(), worse);
        detail::Segment seg = heap.back();
        heap.pop_back();
        const double mid = 0.5 * (seg.a + seg.b);
        if (mid <= seg.a || mid >= seg.b) {  // interval exhausted at machine precision
            heap.push_back({seg.a, seg.b, seg.value, 0.0});
            std::push_heap(heap.begin(), heap.end(), worse);
            err -= seg.error;
            continue;
        }
        QuadResult left = detail::gk15(f, seg.a, mid);
        QuadResult right = detail::gk15(f, mid, seg.b);
        total.evaluations += left.evaluations + right.evaluations;
        sum += left.value + right.value - seg.value;
        err += left.error_estimate + right.error_estimate - seg.error;
        heap.push_back({seg.a, mid, left.value, left.error_estimate});
        std::push_heap(heap.begin(), heap.end(), worse);
        heap.push_back({mid, seg.b, right.value, right.error_estimate});
        std::push_heap(heap.begin(), heap.end(), worse);
        ++splits;
    }

    // Recompute the sums in segment order for a scheduling-independent result.
    std::sort(heap.begin(), heap.end(),
              [](const detail::Segment& x, const detail::Segment& y) { return x.a < y.a; });
    sum = 0.0;
    err = 0.0;
    for (const auto& s : heap) {
        sum += s.value;
        err += s.error;
    }
    total.value = sum;
    total.error_estimate = err;
    total.converged = err <= std::max(spec.abs_tol, spec.rel_tol * std::abs(sum));
    return total;
}

/// Integral of f over [a, +inf) for integrands with an (eventually)
/// exponentially decaying tail. Successive geometric segments are added
/// until two consecutive segments each contribute less than
/// tail_epsilon of the accumulated integral. scale_hint, when positive,
/// sets the width of the first segment (e.g. a decay length).
template <class F>
QuadResult integrate_semi_infinite(F&& f, double a, const QuadSpec& spec = {},
                                   double scale_hint = 0.0) {
    spec.validate();
    const double width0 = scale_hint > 0 ? scale_hint : std::max(1.0, std::abs(a));
    QuadResult total;
    double lo = a;
    double width = width0;
    int quiet = 0;
    const int max_segments = 200;
    for (int i = 0; i < max_segments; ++i) {
        const double hi = lo + width;
        QuadResult seg = integrate_1d(f, lo, hi, spec.scaled(0.5));
        total += seg;
        lo = hi;
        width *= 2.0;
        const double floor = std::max(spec.abs_tol, spec.tail_epsilon * std::abs(total.value));
        quiet = std::abs(seg.value) <= floor ? quiet + 1 : 0;
        if (quiet >= 2) {
            total.converged = total.error_estimate <=
                              std::max(spec.abs_tol, spec.rel_tol * std::abs(total.value));
            return total;
        }
    }
    total.converged = false;
    return total;
}

/// Iterated 2D integral: outer variable l over [l_lo, l_hi], inner
/// variable theta over the (possibly empty) interval returned by
/// theta_bounds(l). The error budget is split between the two levels.
template <class F2, class TB>
QuadResult integrate_2d_nested(F2&& f, double l_lo, double l_hi, TB&& theta_bounds,
                               const QuadSpec& spec = {},
                               std::span<const double> outer_breakpoints = {}) {
    spec.validate();
    QuadSpec inner_spec = spec.scaled(0.1);
    long inner_evals = 0;
    bool inner_ok = true;
    auto outer = [&](double l) {
        auto [t_lo, t_hi] = theta_bounds(l);
        if (!(t_lo < t_hi)) return 0.0;
        QuadResult r = integrate_1d([&](double th) { return f(l, th); }, t_lo, t_hi, inner_spec);
        inner_evals += r.evaluations;
        inner_ok = inner_ok && r.converged;
        return r.value;
    };
    QuadResult res = integrate_1d(outer, l_lo, l_hi, spec, outer_breakpoints);
    res.evaluations += inner_evals;
    res.converged = res.converged && inner_ok;
    return res;
}

/// n-th derivative of f at s0 by central finite differences with
/// Richardson extrapolation over three step sizes. Supports n <= 4; the
/// step defaults to max(|s0|, 1) * 1e-3. Orders above 4 are rejected --
/// use the series-free approximate coverage path instead of stacking
/// high-order derivatives.
template <class F>
double nth_derivative(F&& f, double s0, int n, double h0 = 0.0) {
    if (n < 0) throw std::invalid_argument("nth_derivative: order must be nonnegative");
    if (n > 4) {
        throw std::invalid_argument(
            "nth_derivative: orders above 4 are not supported; use the approximate "
            "coverage path for large shape parameters");
    }
    if (n == 0) return f(s0);
    // Higher orders divide by h^n: widen the default step so cancellation
    // noise stays below the extrapolated truncation error.
    const double order_widening = n <= 2 ? 1.0 : (n == 3 ? 30.0 : 100.0);
    const double h_base = h0 > 0 ? h0 : std::max(std::abs(s0), 1.0) * 1e-3 * order_widening;

    auto stencil = [&](double h) -> double {
        switch (n) {
            case 1: return (f(s0 + h) - f(s0 - h)) / (2.0 * h);
            case 2: return (f(s0 + h) - 2.0 * f(s0) + f(s0 - h)) / (h * h);
            case 3:
                return (f(s0 + 2.0 * h) - 2.0 * f(s0 + h) + 2.0 * f(s0 - h) - f(s0 - 2.0 * h)) /
                       (2.0 * h * h * h);
            default:
                return (f(s0 + 2.0 * h) - 4.0 * f(s0 + h) + 6.0 * f(s0) - 4.0 * f(s0 - h) +
                        f(s0 - 2.0 * h)) /
                       (h * h * h * h);
        }
    };

    // Central stencils have even error expansions: eliminate h^2, then h^4.
    const double d0 = stencil(h_base);
    const double d1 = stencil(h_base / 2.0);
    const double d2 = stencil(h_base / 4.0);
    const double r1 = (4.0 * d1 - d0) / 3.0;
    const double r2 = (4.0 * d2 - d1) / 3.0;
    return (16.0 * r2 - r1) / 15.0;
}

}  // namespace aerocov
