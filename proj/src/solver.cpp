#include "cbm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cbm {

namespace {

// G tabulated once per solve; the last node is clamped to the ceiling so a
// 1-ulp overshoot of n*h cannot trip the utility domain check.
std::vector<double> tabulate_utility(const ModelSpec& model, const Grid& grid) {
    std::vector<double> g(static_cast<size_t>(grid.n) + 1);
    for (int j = 0; j <= grid.n; ++j)
        g[static_cast<size_t>(j)] =
            evaluate_utility(model.utility, std::min(grid.node(j), model.ceiling), model.ceiling);
    return g;
}

std::vector<double> sweep_impl(const std::vector<double>& values, const Grid& grid,
                               const ModelSpec& model, const std::vector<double>& g) {
    const int n = grid.n;
    std::vector<double> next(static_cast<size_t>(n) + 1);
    next[0] = 0.0;
    for (int j = 1; j <= n; ++j) {
        double acc = 0.0;
        for (int i = 0; i <= j; ++i) // fixed left-to-right reduction
            acc += values[static_cast<size_t>(j - i)] * grid.density[static_cast<size_t>(i)];
        const double gen = (g[static_cast<size_t>(j)] + model.lambda * acc) /
                           (model.lambda + model.delta);
        const double mv = apply_intervention_operator(values, grid, model.cost, j).first;
        next[static_cast<size_t>(j)] = std::max(gen, mv);
    }
    return next;
}

} // namespace

std::pair<double, int> apply_intervention_operator(const std::vector<double>& values,
                                                   const Grid& grid, const CostSpec& cost,
                                                   int j) {
    // Admissible targets are j..n; the i <= n-j bound keeps r + zeta <= O.
    double best = -std::numeric_limits<double>::infinity();
    int best_i = 0;
    for (int i = 0; i + j <= grid.n; ++i) {
        const double v = values[static_cast<size_t>(j + i)] - cost_at_nodes(cost, grid, j, i);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    return {best, best_i};
}

double apply_generator_value(const std::vector<double>& values, const Grid& grid,
                             const ModelSpec& model, int j) {
    const double g = evaluate_utility(model.utility, std::min(grid.node(j), model.ceiling),
                                      model.ceiling);
    double acc = 0.0;
    for (int i = 0; i <= j; ++i)
        acc += values[static_cast<size_t>(j - i)] * grid.density[static_cast<size_t>(i)];
    return (g + model.lambda * acc) / (model.lambda + model.delta);
}

std::vector<double> jacobi_sweep(const std::vector<double>& values, const Grid& grid,
                                 const ModelSpec& model) {
    return sweep_impl(values, grid, model, tabulate_utility(model, grid));
}

ValueFunction solve(const ModelSpec& model, const Grid& grid, const SolveOptions& options) {
    validate_on_grid(model, grid);
    if (!(options.epsilon > 0.0))
        throw ValidationError("solve epsilon must be > 0");
    if (options.max_iter < 1)
        throw ValidationError("solve max_iter must be >= 1");

    const size_t size = static_cast<size_t>(grid.n) + 1;
    std::vector<double> current;
    const bool from_zero = options.initial.empty();
    if (from_zero) {
        current.assign(size, 0.0);
    } else {
        if (options.initial.size() != size)
            throw ValidationError("initial vector has " + std::to_string(options.initial.size()) +
                                  " entries, grid needs " + std::to_string(size));
        current = options.initial;
        current[0] = 0.0;
    }

    const auto g = tabulate_utility(model, grid);
    bool monotone = from_zero;
    double gap = std::numeric_limits<double>::infinity();
    int iter = 0;
    while (iter < options.max_iter) {
        std::vector<double> next = sweep_impl(current, grid, model, g);
        ++iter;
        gap = 0.0;
        for (size_t j = 0; j < size; ++j) {
            gap = std::max(gap, std::abs(next[j] - current[j]));
            if (from_zero && next[j] < current[j]) monotone = false;
        }
        current = std::move(next);
        if (options.observer) options.observer(iter, current);
        if (from_zero && !monotone)
            throw Error("value iteration from zero lost monotonicity at iteration " +
                        std::to_string(iter));
        if (gap < options.epsilon) {
            ValueFunction vf;
            vf.grid = grid;
            vf.values = std::move(current);
            vf.iterations = iter;
            vf.final_sup_norm_delta = gap;
            vf.tolerance = options.epsilon;
            vf.monotone_iterates = monotone;
            return vf;
        }
    }
    throw ConvergenceError("value iteration did not converge within " +
                               std::to_string(options.max_iter) + " sweeps; final gap " +
                               std::to_string(gap),
                           iter, gap);
}

Policy extract_policy(const ValueFunction& vf, const ModelSpec& model, double region_tol) {
    const Grid& grid = vf.grid;
    Policy policy;
    policy.grid = grid;
    policy.ceiling = model.ceiling;
    policy.region_tol = region_tol;
    policy.actions.assign(static_cast<size_t>(grid.n) + 1, PolicyAction{});

    int run_end = 0;
    bool run_alive = true;
    for (int j = 1; j <= grid.n; ++j) {
        const auto [mv, best_i] = apply_intervention_operator(vf.values, grid, model.cost, j);
        auto& action = policy.actions[static_cast<size_t>(j)];
        if (vf.values[static_cast<size_t>(j)] - mv <= region_tol) {
            action.intervene = true;
            action.zeta = grid.node(best_i);
            action.target = grid.node(j + best_i);
            if (run_alive) run_end = j;
        } else {
            run_alive = false;
        }
    }
    policy.boundary = grid.node(run_end);
    return policy;
}

ResidualReport qvi_residuals(const ValueFunction& vf, const ModelSpec& model) {
    const Grid& grid = vf.grid;
    const int n = grid.n;
    const auto g = tabulate_utility(model, grid);
    ResidualReport report;
    report.dynkin.resize(static_cast<size_t>(n) + 1);
    report.intervention.resize(static_cast<size_t>(n) + 1);
    report.qvi.resize(static_cast<size_t>(n) + 1);
    report.tolerance = 10.0 * vf.tolerance * (model.lambda + model.delta);

    double max_abs_qvi = 0.0;
    double min_dynkin = std::numeric_limits<double>::infinity();
    double min_intervention = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= n; ++j) {
        double acc = 0.0;
        for (int i = 0; i <= j; ++i)
            acc += vf.values[static_cast<size_t>(j - i)] * grid.density[static_cast<size_t>(i)];
        const double av = model.lambda * (acc - vf.values[static_cast<size_t>(j)]);
        const double dynkin =
            model.delta * vf.values[static_cast<size_t>(j)] - av - g[static_cast<size_t>(j)];
        const double mv = apply_intervention_operator(vf.values, grid, model.cost, j).first;
        const double intervention = vf.values[static_cast<size_t>(j)] - mv;
        report.dynkin[static_cast<size_t>(j)] = dynkin;
        report.intervention[static_cast<size_t>(j)] = intervention;
        report.qvi[static_cast<size_t>(j)] = std::min(dynkin, intervention);
        if (j >= 1) { // node 0 is the boundary condition, not a QVI node
            max_abs_qvi = std::max(max_abs_qvi, std::abs(report.qvi[static_cast<size_t>(j)]));
            min_dynkin = std::min(min_dynkin, dynkin);
            min_intervention = std::min(min_intervention, intervention);
        }
    }
    report.max_abs_qvi = max_abs_qvi;
    report.min_dynkin = min_dynkin;
    report.min_intervention = min_intervention;
    report.pass = max_abs_qvi <= report.tolerance && min_dynkin >= -report.tolerance &&
                  min_intervention >= -report.tolerance;
    return report;
}

} // namespace cbm
