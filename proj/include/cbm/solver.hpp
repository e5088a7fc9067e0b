#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "cbm/model.hpp"

namespace cbm {

/// Converged value vector over grid nodes plus convergence metadata.
/// Invariants: values[0] == 0; 0 <= values[j] <= G(O)/delta;
/// final_sup_norm_delta < tolerance.
struct ValueFunction {
    Grid grid;
    std::vector<double> values;
    int iterations = 0;
    double final_sup_norm_delta = 0.0;
    double tolerance = 0.0;
    /// True when the run started from the zero vector and every sweep was
    /// component-wise non-decreasing (checked, not assumed).
    bool monotone_iterates = false;
};

struct PolicyAction {
    bool intervene = false;
    double zeta = 0.0;   // grid multiple
    double target = 0.0; // r + zeta
};

/// Per-node action table. Node 0 is the cemetery state and carries no action.
struct Policy {
    Grid grid;
    double ceiling = 0.0;
    std::vector<PolicyAction> actions;
    /// r of the last node of the contiguous Intervene run starting at node 1
    /// (0 when node 1 does not intervene).
    double boundary = 0.0;
    double region_tol = 0.0;
};

/// Pointwise QVI residuals. Both branches must be >= -tol and their minimum
/// ~0 at every node >= 1 for a certified solution; node 0 is reported but
/// excluded from the verdict.
struct ResidualReport {
    std::vector<double> dynkin;       // delta*V - AV - G
    std::vector<double> intervention; // V - MV
    std::vector<double> qvi;          // min of the two
    double max_abs_qvi = 0.0;         // over nodes >= 1
    double min_dynkin = 0.0;          // over nodes >= 1
    double min_intervention = 0.0;    // over nodes >= 1
    double tolerance = 0.0;
    bool pass = false;
};

struct SolveOptions {
    double epsilon = 1e-8;
    int max_iter = 10000;
    /// Starting vector; empty means zeros. Monotonicity of iterates is only
    /// asserted for the zero start.
    std::vector<double> initial;
    /// Called after each sweep with (iteration index, current iterate).
    std::function<void(int, const std::vector<double>&)> observer;
};

/// Best immediate intervention at node j: max over i in 0..n-j of
/// values[j+i] - C(jh, ih). Returns (best value, smallest maximizing i).
std::pair<double, int> apply_intervention_operator(const std::vector<double>& values,
                                                   const Grid& grid, const CostSpec& cost,
                                                   int j);

/// No-intervention branch at node j:
/// (G(jh) + lambda * sum_{i=0..j} values[j-i] * p_i) / (lambda + delta).
/// Shock mass past node j lands at or below the failure threshold and
/// contributes 0.
double apply_generator_value(const std::vector<double>& values, const Grid& grid,
                             const ModelSpec& model, int j);

/// One Jacobi sweep: new[j] = max(generator, intervention) for j >= 1,
/// new[0] = 0. The new vector depends only on the old one.
std::vector<double> jacobi_sweep(const std::vector<double>& values, const Grid& grid,
                                 const ModelSpec& model);

/// Iterates jacobi_sweep until the sup-norm gap between consecutive iterates
/// drops below epsilon. Throws ConvergenceError when max_iter is exhausted.
ValueFunction solve(const ModelSpec& model, const Grid& grid, const SolveOptions& options = {});

/// Classify each node: Intervene iff V[j] - MV[j] <= region_tol, with the
/// action from apply_intervention_operator.
Policy extract_policy(const ValueFunction& vf, const ModelSpec& model, double region_tol);

ResidualReport qvi_residuals(const ValueFunction& vf, const ModelSpec& model);

} // namespace cbm
