#pragma once

// Deployment optimization: maximize overall coverage over the per-tier
// homogeneity parameters under a UAV-count cap and a minimum local
// coverage floor. Two engines: exhaustive grid search (feasibility map
// included) and a count-preserving alternate-maximization heuristic that
// trades expected UAV counts between tiers.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "aerocov/coverage.hpp"
#include "aerocov/model.hpp"
#include "aerocov/parallel.hpp"

namespace aerocov {

enum class Infeasibility { none, count_cap, floor_violation };

inline const char* to_string(Infeasibility r) {
    switch (r) {
        case Infeasibility::none: return "feasible";
        case Infeasibility::count_cap: return "count_cap";
        default: return "floor_violation";
    }
}

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OptProblem {
    Scenario scenario;                    // template; tier betas are the start point
    double gamma1 = db_to_linear(-8.0);   // overall objective threshold
    double gamma2 = db_to_linear(-20.0);  // local floor threshold
    std::optional<double> floor = 0.95;   // nullopt disables the floor constraint
    double n_max = 1000.0;                // expected-UAV-count cap
    std::vector<double> z_grid;           // floor checkpoints; empty = derive
    std::vector<std::vector<double>> beta_grid;  // per tier, for grid_search
    int max_rounds = 3;                   // alternate maximization rounds
    int max_steps = 6;                    // coordinate steps per round
    QuadSpec outer = FieldModel::curve_spec();
    int threads = 1;

    void validate() const {
        scenario.validate();
        detail::require(gamma1 > 0 && gamma2 > 0, "OptProblem: thresholds must be positive");
        if (floor) detail::require(*floor > 0 && *floor < 1, "OptProblem: floor must lie in (0,1)");
        detail::require(n_max > 0, "OptProblem: n_max must be positive");
        if (!z_grid.empty()) {
            detail::require(z_grid.front() == 0.0, "OptProblem: z grid must include 0");
            detail::require(z_grid.size() >= 2, "OptProblem: z grid needs a far checkpoint");
        }
    }
};

struct GridCell {
    std::vector<double> betas;
    double value = 0.0;  // objective when feasible, else 0
    Infeasibility reason = Infeasibility::none;
    double count = 0.0;          // achieved expected UAV count
    double worst_local = 0.0;    // minimum local coverage over the z grid
    double worst_z = 0.0;
};

struct OptResult {
    std::vector<double> best_betas;
    double best_value = 0.0;
    std::vector<GridCell> map;
    long evaluations = 0;
    bool found_feasible = false;
};

/// Floor checkpoints: zero plus log-spaced offsets out to the radius that
/// holds 99.9% of the user mass.
inline std::vector<double> default_floor_grid(const UserDensity& users, int points = 25) {
    detail::require(users.beta > 0, "floor grid requires beta_u > 0");
    double x = 5.0;
    while (std::exp(-x) * (1.0 + x) > 1e-3) x += 0.01;
    const double z_far = x / users.beta;
    std::vector<double> grid{0.0};
    const double z_lo = z_far / 200.0;
    for (int i = 0; i < points - 1; ++i) {
        grid.push_back(z_lo * std::pow(z_far / z_lo, static_cast<double>(i) / (points - 2)));
    }
    return grid;
}

struct CountCheck {
    bool feasible = false;
    double count = 0.0;
};

/// Total expected UAV count against the cap; homogeneous tiers integrate
/// over the configured finite region.
inline CountCheck count_constraint(const Scenario& sc, double n_max) {
    CountCheck c;
    for (const auto& tier : sc.tiers) {
        c.count += expected_uav_count(tier, sc.region_radius());
    }
    c.feasible = c.count <= n_max;
    return c;
}

struct FloorCheck {
    bool feasible = false;
    double worst_value = 1.0;
    double worst_z = 0.0;
    long evaluations = 0;
};

/// Minimum local coverage across the checkpoint grid against the floor.
/// Checks far offsets first: the common failure mode is edge starvation.
inline FloorCheck floor_constraint(const Scenario& sc, double gamma2, double floor,
                                   std::vector<double> z_grid,
                                   const QuadSpec& outer = FieldModel::curve_spec(),
                                   int threads = 1) {
    if (z_grid.empty()) z_grid = default_floor_grid(sc.users);
    std::sort(z_grid.rbegin(), z_grid.rend());
    FloorCheck fc;
    for (double z : z_grid) {
        FieldModel field(sc, z);
        const double v = field.local_coverage(gamma2, CoverageMethod::approximate, outer, threads);
        ++fc.evaluations;
        if (v < fc.worst_value) {
            fc.worst_value = v;
            fc.worst_z = z;
        }
        if (v < floor) {
            fc.feasible = false;
            return fc;
        }
    }
    fc.feasible = true;
    return fc;
}

namespace detail {

inline Scenario with_betas(const Scenario& base, const std::vector<double>& betas) {
    Scenario sc = base;
    require(betas.size() == sc.tiers.size(), "beta vector size mismatch");
    for (std::size_t k = 0; k < betas.size(); ++k) sc.tiers[k].beta = betas[k];
    return sc;
}

/// beta achieving a target expected count at fixed lambda over the region
/// (count is strictly decreasing in beta).
inline double beta_for_count(double lambda, double region, double target) {
    require(target > 0, "beta_for_count: target must be positive");
    double lo = 1e-9, hi = 10.0;
    auto count = [&](double b) {
        TierConfig t;
        t.altitude_m = 1.0;
        t.lambda = lambda;
        t.beta = b;
        t.power_w = 1.0;
        return expected_uav_count(t, region);
    };
    require(count(lo) >= target, "beta_for_count: target exceeds the near-homogeneous count");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (count(mid) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct ObjectiveCache {
    std::map<std::string, double> values;
    long evaluations = 0;

    static std::string key(const std::vector<double>& betas) {
        std::string k;
        char buf[32];
        for (double b : betas) {
            std::snprintf(buf, sizeof buf, "%.12e;", b);
            k += buf;
        }
        return k;
    }
};

}  // namespace detail

/// Evaluates a grid cell: constraints first (count cap, then floor), then
/// the overall-coverage objective.
inline GridCell evaluate_candidate(const OptProblem& p, const std::vector<double>& betas,
                                   long* evaluations = nullptr) {
    GridCell cell;
    cell.betas = betas;
    Scenario sc = detail::with_betas(p.scenario, betas);
    const CountCheck cc = count_constraint(sc, p.n_max);
    cell.count = cc.count;
    if (!cc.feasible) {
        cell.reason = Infeasibility::count_cap;
        return cell;
    }
    if (p.floor) {
        const FloorCheck fc =
            floor_constraint(sc, p.gamma2, *p.floor, p.z_grid, p.outer, 1);
        cell.worst_local = fc.worst_value;
        cell.worst_z = fc.worst_z;
        if (evaluations) *evaluations += fc.evaluations;
        if (!fc.feasible) {
            cell.reason = Infeasibility::floor_violation;
            return cell;
        }
    }
    cell.value = overall_coverage(sc, p.gamma1, CoverageMethod::approximate, p.outer, 1);
    if (evaluations) ++*evaluations;
    return cell;
}

/// Exhaustive search over the cartesian beta grid. Returns the argmax with
/// the full feasibility map; ties resolve to the lexicographically
/// smallest beta vector. Throws InfeasibleError when nothing is feasible.
inline OptResult grid_search(const OptProblem& p) {
    p.validate();
    detail::require(p.beta_grid.size() == p.scenario.tiers.size(),
                    "grid_search: one beta list per tier required");
    for (const auto& axis : p.beta_grid) {
        detail::require(!axis.empty(), "grid_search: empty beta axis");
    }
    std::vector<std::size_t> shape;
    std::size_t total = 1;
    for (const auto& axis : p.beta_grid) {
        shape.push_back(axis.size());
        total *= axis.size();
    }
    std::vector<GridCell> map(total);
    std::vector<long> evals(total, 0);
    parallel_for(total, p.threads, [&](std::size_t idx) {
        std::vector<double> betas(shape.size());
        std::size_t rest = idx;
        for (std::size_t k = shape.size(); k-- > 0;) {
            betas[k] = p.beta_grid[k][rest % shape[k]];
            rest /= shape[k];
        }
        map[idx] = evaluate_candidate(p, betas, &evals[idx]);
    });

    OptResult res;
    res.map = std::move(map);
    for (long e : evals) res.evaluations += e;
    for (const auto& cell : res.map) {
        if (cell.reason != Infeasibility::none) continue;
        const bool better =
            !res.found_feasible || cell.value > res.best_value ||
            (cell.value == res.best_value &&
             std::lexicographical_compare(cell.betas.begin(), cell.betas.end(),
                                          res.best_betas.begin(), res.best_betas.end()));
        if (better) {
            res.best_betas = cell.betas;
            res.best_value = cell.value;
            res.found_feasible = true;
        }
    }
    if (!res.found_feasible) {
        throw InfeasibleError("grid_search: every grid point violates a constraint");
    }
    return res;
}

/// Count-preserving alternate maximization. Tier betas move in pairs: a
/// coordinate pass over k = 2..K proposes shifting a fraction of the
/// expected count between tier k and one earlier tier (either direction),
/// accepting the best improving proposal; the step fraction shrinks each
/// round. lambda stays fixed; the total expected count never changes, so
/// a feasible start stays feasible against the cap. The objective
/// sequence is nondecreasing and the result is never worse than the
/// start.
inline OptResult alternate_maximization(const OptProblem& p) {
    p.validate();
    const std::size_t K = p.scenario.tiers.size();
    const double region = p.scenario.region_radius();

    std::vector<double> betas(K);
    std::vector<double> counts(K);
    for (std::size_t k = 0; k < K; ++k) {
        betas[k] = p.scenario.tiers[k].beta;
        counts[k] = expected_uav_count(p.scenario.tiers[k], region);
    }

    detail::ObjectiveCache cache;
    auto objective = [&](const std::vector<double>& b) {
        const std::string key = detail::ObjectiveCache::key(b);
        if (auto it = cache.values.find(key); it != cache.values.end()) return it->second;
        const Scenario sc = detail::with_betas(p.scenario, b);
        const double v =
            overall_coverage(sc, p.gamma1, CoverageMethod::approximate, p.outer, p.threads);
        ++cache.evaluations;
        cache.values.emplace(key, v);
        return v;
    };
    auto feasible = [&](const std::vector<double>& b) {
        const Scenario sc = detail::with_betas(p.scenario, b);
        if (!count_constraint(sc, p.n_max).feasible) return false;
        if (p.floor &&
            !floor_constraint(sc, p.gamma2, *p.floor, p.z_grid, p.outer, p.threads).feasible) {
            return false;
        }
        return true;
    };

    if (!feasible(betas)) {
        throw InfeasibleError("alternate_maximization: infeasible starting point");
    }

    OptResult res;
    double best = objective(betas);
    res.map.push_back({betas, best, Infeasibility::none,
                       count_constraint(detail::with_betas(p.scenario, betas), p.n_max).count,
                       0.0, 0.0});

    double step = 0.4;
    for (int round = 0; round < p.max_rounds; ++round, step *= 0.5) {
        bool round_improved = false;
        for (std::size_t k = 1; k < K; ++k) {
            for (int s = 0; s < p.max_steps; ++s) {
                double prop_best = best;
                std::vector<double> prop_betas;
                std::vector<double> prop_counts;
                for (std::size_t j = 0; j < k; ++j) {
                    for (int dir = 0; dir < 2; ++dir) {
                        const std::size_t donor = dir == 0 ? j : k;
                        const std::size_t recv = dir == 0 ? k : j;
                        const double delta = step * counts[donor];
                        if (counts[donor] - delta < 1e-3) continue;
                        std::vector<double> nb = betas;
                        std::vector<double> nc = counts;
                        nc[donor] -= delta;
                        nc[recv] += delta;
                        nb[donor] = detail::beta_for_count(p.scenario.tiers[donor].lambda,
                                                           region, nc[donor]);
                        nb[recv] = detail::beta_for_count(p.scenario.tiers[recv].lambda,
                                                          region, nc[recv]);
                        if (!feasible(nb)) continue;
                        const double v = objective(nb);
                        if (v > prop_best + 1e-9) {
                            prop_best = v;
                            prop_betas = nb;
                            prop_counts = nc;
                        }
                    }
                }
                if (prop_betas.empty()) break;
                betas = prop_betas;
                counts = prop_counts;
                best = prop_best;
                round_improved = true;
                res.map.push_back(
                    {betas, best, Infeasibility::none,
                     count_constraint(detail::with_betas(p.scenario, betas), p.n_max).count, 0.0,
                     0.0});
            }
        }
        if (!round_improved && round > 0) break;
    }

    res.best_betas = betas;
    res.best_value = best;
    res.found_feasible = true;
    res.evaluations = cache.evaluations;
    return res;
}

struct SliceRow {
    double beta = 0.0;
    double count = 0.0;
    Infeasibility reason = Infeasibility::none;
    double value = 0.0;
};

/// 1D sweep of one tier's beta with every other tier fixed; evaluates the
/// objective even where a constraint fails (the map marks the reason).
/// rescale_lambda holds the swept tier's expected count constant by
/// adjusting its lambda.
inline std::vector<SliceRow> slice_sweep(const OptProblem& p, std::size_t tier_index,
                                         const std::vector<double>& beta_values,
                                         bool rescale_lambda = false) {
    p.validate();
    detail::require(tier_index < p.scenario.tiers.size(), "slice_sweep: tier index out of range");
    const double region = p.scenario.region_radius();
    const double base_count = expected_uav_count(p.scenario.tiers[tier_index], region);
    std::vector<SliceRow> rows(beta_values.size());
    parallel_for(beta_values.size(), p.threads, [&](std::size_t i) {
        Scenario sc = p.scenario;
        sc.tiers[tier_index].beta = beta_values[i];
        if (rescale_lambda) {
            const double unit_count = expected_uav_count(
                TierConfig{sc.tiers[tier_index].altitude_m, 1.0, beta_values[i],
                           sc.tiers[tier_index].power_w},
                region);
            sc.tiers[tier_index].lambda = base_count / unit_count;
        }
        SliceRow row;
        row.beta = beta_values[i];
        const CountCheck cc = count_constraint(sc, p.n_max);
        row.count = cc.count;
        if (!cc.feasible) {
            row.reason = Infeasibility::count_cap;
        } else if (p.floor) {
            const FloorCheck fc = floor_constraint(sc, p.gamma2, *p.floor, p.z_grid, p.outer, 1);
            if (!fc.feasible) row.reason = Infeasibility::floor_violation;
        }
        row.value = overall_coverage(sc, p.gamma1, CoverageMethod::approximate, p.outer, 1);
        rows[i] = row;
    });
    return rows;
}

}  // namespace aerocov
