#include "cbm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace cbm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double exponential_gap(RngStream& rng, double lambda) {
    if (lambda <= 0.0) return kInf;
    return -std::log1p(-rng.next_uniform()) / lambda;
}

struct Accumulator {
    const ModelSpec& model;
    double profit = 0.0;

    // Utility of holding state r over [t1, t2): G(r)(e^{-d t1} - e^{-d t2})/d.
    void utility(double r, double t1, double t2) {
        const double g = evaluate_utility(model.utility, std::min(std::max(r, 0.0), model.ceiling),
                                          model.ceiling);
        profit += g * (std::exp(-model.delta * t1) - std::exp(-model.delta * t2)) / model.delta;
    }
    void cost(double c, double t) { profit -= c * std::exp(-model.delta * t); }
};

// Core path loop. `consult` returns the action for a continuous state (table
// policies); `next_scheduled` returns the next calendar intervention time
// (fixed-interval policies; kInf when unused).
template <typename Consult, typename NextScheduled>
PathResult run_path(const ModelSpec& model, double r0, RngStream& rng, double t_max,
                    bool collect_events, Consult consult, NextScheduled next_scheduled,
                    bool consult_at_start) {
    if (!(r0 > 0.0) || !(r0 <= model.ceiling))
        throw DomainError("initial state must lie in (0, ceiling]");
    PathResult result;
    Accumulator acc{model};
    double t = 0.0;
    double state = r0;

    auto record = [&](PathEvent e) {
        if (collect_events) result.events.push_back(e);
    };

    auto intervene_if_asked = [&](double now) {
        const PolicyAction* a = consult(state);
        if (a == nullptr || !a->intervene) return;
        const double c = cost_value(model.cost, state, a->zeta, model.ceiling);
        acc.cost(c, now);
        state = std::min(state + a->zeta, model.ceiling);
        ++result.interventions;
        record({PathEvent::Kind::Intervention, now, 0.0, a->zeta, c, state});
        // One intervention per instant; a target still inside the
        // intervention region is only flagged.
        const PolicyAction* again = consult(state);
        if (again != nullptr && again->intervene) result.flagged = true;
    };

    if (consult_at_start) intervene_if_asked(0.0);

    double next_shock = t + exponential_gap(rng, model.lambda);
    while (true) {
        const double sched = next_scheduled(t);
        const double t_next = std::min(next_shock, sched);
        if (t_next > t_max) {
            acc.utility(state, t, t_max);
            result.lifetime = t_max;
            result.capped = true;
            break;
        }
        acc.utility(state, t, t_next);
        t = t_next;
        if (next_shock <= sched) {
            const double size = model.shocks.quantile(rng.next_uniform());
            state -= size;
            if (state <= model.threshold) {
                record({PathEvent::Kind::Failure, t, size, 0.0, 0.0, state});
                result.failed = true;
                result.lifetime = t;
                break;
            }
            record({PathEvent::Kind::Shock, t, size, 0.0, 0.0, state});
            intervene_if_asked(t);
            next_shock = t + exponential_gap(rng, model.lambda);
        } else {
            // Scheduled restoration to the ceiling.
            const double zeta = model.ceiling - state;
            const double c = cost_value(model.cost, state, zeta, model.ceiling);
            acc.cost(c, t);
            state = model.ceiling;
            ++result.interventions;
            record({PathEvent::Kind::Intervention, t, 0.0, zeta, c, state});
        }
    }
    result.profit = acc.profit;
    return result;
}

struct Totals {
    std::vector<double> profits;
    std::vector<double> lifetimes;
    std::int64_t capped = 0;
    std::int64_t flagged = 0;
    std::int64_t interventions = 0;
};

template <typename PathFn>
SimulationReport aggregate(const ModelSpec& model, double r0, std::int64_t paths,
                           std::uint64_t seed, double epsilon_tail, int threads,
                           PathFn path_fn) {
    if (paths < 2) throw ValidationError("estimate_profit requires paths >= 2");
    if (!(epsilon_tail > 0.0)) throw ValidationError("epsilon_tail must be > 0");
    // validate up front: worker threads must not throw
    if (!(r0 > 0.0) || !(r0 <= model.ceiling))
        throw DomainError("initial state must lie in (0, ceiling]");
    const double t_max = horizon_for_tail_bound(model, epsilon_tail);

    Totals totals;
    totals.profits.resize(static_cast<size_t>(paths));
    totals.lifetimes.resize(static_cast<size_t>(paths));
    std::vector<std::int64_t> capped(static_cast<size_t>(paths), 0);
    std::vector<std::int64_t> flagged(static_cast<size_t>(paths), 0);
    std::vector<std::int64_t> interventions(static_cast<size_t>(paths), 0);

    auto run_range = [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t k = begin; k < end; ++k) {
            RngStream rng(path_stream_seed(seed, static_cast<std::uint64_t>(k)));
            PathResult r = path_fn(rng, t_max);
            totals.profits[static_cast<size_t>(k)] = r.profit;
            totals.lifetimes[static_cast<size_t>(k)] = r.lifetime;
            capped[static_cast<size_t>(k)] = r.capped ? 1 : 0;
            flagged[static_cast<size_t>(k)] = r.flagged ? 1 : 0;
            interventions[static_cast<size_t>(k)] = r.interventions;
        }
    };

    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(
                                      std::min<std::int64_t>(paths, 64))));
    if (workers == 1) {
        run_range(0, paths);
    } else {
        std::vector<std::thread> pool;
        const std::int64_t chunk = (paths + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const std::int64_t begin = static_cast<std::int64_t>(w) * chunk;
            const std::int64_t end = std::min(paths, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(run_range, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    SimulationReport report;
    report.initial_state = r0;
    report.paths = paths;
    report.seed = seed;
    report.rng_algorithm = kRngAlgorithm;
    report.discount_truncation_bound = epsilon_tail;
    report.t_max = t_max;
    const bool all_equal =
        std::all_of(totals.profits.begin(), totals.profits.end(),
                    [&](double x) { return x == totals.profits.front(); });
    if (all_equal) {
        // degenerate deterministic runs: mean and zero spread are exact
        report.mean_profit = totals.profits.front();
        report.std_error = 0.0;
    } else {
        report.mean_profit = pairwise_sum(totals.profits) / static_cast<double>(paths);
        std::vector<double> sq(static_cast<size_t>(paths));
        for (std::int64_t k = 0; k < paths; ++k) {
            const double d = totals.profits[static_cast<size_t>(k)] - report.mean_profit;
            sq[static_cast<size_t>(k)] = d * d;
        }
        const double var = pairwise_sum(sq) / static_cast<double>(paths - 1);
        report.std_error = std::sqrt(var / static_cast<double>(paths));
    }
    report.mean_lifetime = pairwise_sum(totals.lifetimes) / static_cast<double>(paths);
    for (std::int64_t k = 0; k < paths; ++k) {
        report.capped_paths += capped[static_cast<size_t>(k)];
        report.flagged_paths += flagged[static_cast<size_t>(k)];
        totals.interventions += interventions[static_cast<size_t>(k)];
    }
    report.interventions_per_path =
        static_cast<double>(totals.interventions) / static_cast<double>(paths);
    return report;
}

} // namespace

int nearest_node(const Grid& grid, double r) {
    if (r <= 0.0) return 0;
    const double q = r / grid.h;
    double lo = std::floor(q);
    const double frac = q - lo;
    int j = static_cast<int>(lo) + (frac > 0.5 ? 1 : 0); // exact midpoint -> lower
    return std::min(std::max(j, 0), grid.n);
}

const PolicyAction& policy_lookup(const Policy& policy, double r) {
    return policy.actions[static_cast<size_t>(nearest_node(policy.grid, r))];
}

double horizon_for_tail_bound(const ModelSpec& model, double epsilon_tail) {
    if (!(epsilon_tail > 0.0)) throw ValidationError("epsilon_tail must be > 0");
    const double bound = model.value_upper_bound();
    if (bound <= epsilon_tail) return 0.0;
    return std::log(bound / epsilon_tail) / model.delta;
}

Policy do_nothing_policy(const ModelSpec& model, const Grid& grid) {
    Policy p;
    p.grid = grid;
    p.ceiling = model.ceiling;
    p.actions.assign(static_cast<size_t>(grid.n) + 1, PolicyAction{});
    p.boundary = 0.0;
    p.region_tol = 0.0;
    return p;
}

Policy shift_boundary(const Policy& policy, const ValueFunction& vf, const ModelSpec& model,
                      double d) {
    Policy shifted = policy;
    const double new_boundary = policy.boundary + d;
    for (int j = 1; j <= shifted.grid.n; ++j) {
        auto& action = shifted.actions[static_cast<size_t>(j)];
        if (shifted.grid.node(j) <= new_boundary) {
            const auto [mv, best_i] =
                apply_intervention_operator(vf.values, vf.grid, model.cost, j);
            (void)mv;
            action.intervene = true;
            action.zeta = shifted.grid.node(best_i);
            action.target = shifted.grid.node(j + best_i);
        } else {
            action = PolicyAction{};
        }
    }
    shifted.boundary = std::max(new_boundary, 0.0);
    return shifted;
}

Policy shift_targets(const Policy& policy, double d) {
    Policy shifted = policy;
    for (int j = 1; j <= shifted.grid.n; ++j) {
        auto& action = shifted.actions[static_cast<size_t>(j)];
        if (!action.intervene) continue;
        const double r = shifted.grid.node(j);
        double zeta = action.zeta + d;
        zeta = std::min(std::max(zeta, 0.0), shifted.ceiling - r);
        action.zeta = zeta;
        action.target = r + zeta;
    }
    return shifted;
}

static void check_policy_grid(const ModelSpec& model, const Policy& policy) {
    if (policy.grid.n < 1 || std::abs(policy.grid.node(policy.grid.n) - model.ceiling) >
                                 1e-9 * std::max(1.0, model.ceiling))
        throw ConfigError("policy grid does not span the model ceiling");
}

PathResult sample_path(const ModelSpec& model, const Policy& policy, double r0,
                       RngStream& rng, double t_max, bool collect_events) {
    check_policy_grid(model, policy);
    return run_path(
        model, r0, rng, t_max, collect_events,
        [&](double state) -> const PolicyAction* { return &policy_lookup(policy, state); },
        [](double) { return kInf; }, /*consult_at_start=*/true);
}

PathResult sample_path_fixed_interval(const ModelSpec& model, double interval, double r0,
                                      RngStream& rng, double t_max, bool collect_events) {
    if (!(interval > 0.0)) throw ValidationError("fixed intervention interval must be > 0");
    // next multiple of `interval` strictly past t; a counter (not division)
    // so the comparison sees the exact same product the loop advanced to
    return run_path(
        model, r0, rng, t_max, collect_events,
        [](double) -> const PolicyAction* { return nullptr; },
        [&, m = std::int64_t{1}](double t) mutable {
            while (static_cast<double>(m) * interval <= t) ++m;
            return static_cast<double>(m) * interval;
        },
        /*consult_at_start=*/false);
}

SimulationReport estimate_profit(const ModelSpec& model, const Policy& policy, double r0,
                                 std::int64_t paths, std::uint64_t seed, double epsilon_tail,
                                 int threads) {
    check_policy_grid(model, policy);
    return aggregate(model, r0, paths, seed, epsilon_tail, threads,
                     [&](RngStream& rng, double t_max) {
                         return sample_path(model, policy, r0, rng, t_max, false);
                     });
}

SimulationReport estimate_profit_fixed_interval(const ModelSpec& model, double interval,
                                                double r0, std::int64_t paths,
                                                std::uint64_t seed, double epsilon_tail,
                                                int threads) {
    return aggregate(model, r0, paths, seed, epsilon_tail, threads,
                     [&](RngStream& rng, double t_max) {
                         return sample_path_fixed_interval(model, interval, r0, rng, t_max,
                                                           false);
                     });
}

LifetimeStats uncontrolled_failure_time_stats(const ModelSpec& model, double r0,
                                              std::int64_t paths, std::uint64_t seed) {
    if (paths < 2) throw ValidationError("failure-time statistics require paths >= 2");
    if (!(model.lambda > 0.0))
        throw DomainError("uncontrolled failure time is infinite when lambda = 0");
    if (!(r0 > 0.0) || !(r0 <= model.ceiling))
        throw DomainError("initial state must lie in (0, ceiling]");

    std::vector<double> taus(static_cast<size_t>(paths));
    for (std::int64_t k = 0; k < paths; ++k) {
        RngStream rng(path_stream_seed(seed, static_cast<std::uint64_t>(k)));
        double t = 0.0;
        double state = r0;
        std::int64_t shocks = 0;
        while (state > model.threshold) {
            if (++shocks > 100'000'000)
                throw Error("uncontrolled path exceeded the per-path shock budget; "
                            "shock sizes are too small relative to the state");
            t += exponential_gap(rng, model.lambda);
            state -= model.shocks.quantile(rng.next_uniform());
        }
        taus[static_cast<size_t>(k)] = t;
    }

    LifetimeStats stats;
    stats.paths = paths;
    stats.mean = pairwise_sum(taus) / static_cast<double>(paths);
    std::vector<double> sq(static_cast<size_t>(paths));
    for (std::int64_t k = 0; k < paths; ++k) {
        const double d = taus[static_cast<size_t>(k)] - stats.mean;
        sq[static_cast<size_t>(k)] = d * d;
    }
    stats.std_error =
        std::sqrt(pairwise_sum(sq) / static_cast<double>(paths - 1) / static_cast<double>(paths));
    std::sort(taus.begin(), taus.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(paths - 1);
        const auto lo = static_cast<size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        if (lo + 1 >= taus.size()) return taus.back();
        return taus[lo] * (1.0 - frac) + taus[lo + 1] * frac;
    };
    stats.min = taus.front();
    stats.q25 = quantile(0.25);
    stats.median = quantile(0.5);
    stats.q75 = quantile(0.75);
    stats.max = taus.back();
    return stats;
}

double pairwise_sum(const std::vector<double>& x) {
    struct Impl {
        static double sum(const double* p, size_t count) {
            if (count <= 8) {
                double s = 0.0;
                for (size_t i = 0; i < count; ++i) s += p[i];
                return s;
            }
            const size_t half = count / 2;
            return sum(p, half) + sum(p + half, count - half);
        }
    };
    return x.empty() ? 0.0 : Impl::sum(x.data(), x.size());
}

} // namespace cbm
