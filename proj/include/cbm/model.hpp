#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cbm/errors.hpp"

namespace cbm {

/// Law of a single shock size. Support is (0, inf); cdf(0) == 0 always.
struct ShockDistribution {
    enum class Kind { Lognormal, Exponential, Tabulated };

    Kind kind = Kind::Exponential;
    double location = 0.0; // lognormal, log-space
    double scale = 0.0;    // lognormal, log-space
    double rate = 0.0;     // exponential
    std::vector<std::pair<double, double>> atoms; // tabulated (size, probability), sorted by size

    static ShockDistribution lognormal_log(double location, double scale);
    /// Standard moment matching: scale^2 = ln(1 + (sd/mean)^2), location = ln(mean) - scale^2/2.
    static ShockDistribution lognormal_moments(double mean, double sd);
    static ShockDistribution exponential(double rate);
    static ShockDistribution tabulated(std::vector<std::pair<double, double>> atoms);

    double cdf(double x) const;
    /// Inverse CDF; u must lie strictly inside (0,1). Used for path sampling.
    double quantile(double u) const;
    void validate() const;
};

/// Utility rate G: non-negative, non-decreasing, concave on [0, O], G(0) = 0.
struct UtilitySpec {
    enum class Kind { ExponentialAversion, Tabulated };

    Kind kind = Kind::ExponentialAversion;
    double profit_scale = 0.0; // C in G(r) = (C/alpha)(1 - exp(-alpha r))
    double aversion = 0.0;     // alpha
    std::vector<double> table; // values at uniformly spaced nodes spanning [0, ceiling]

    static UtilitySpec exponential_aversion(double profit_scale, double aversion);
    static UtilitySpec tabulated(std::vector<double> values);
};

/// Intervention cost C(r, zeta) > 0, non-decreasing in both arguments.
struct CostSpec {
    enum class Kind { Quadratic, Tabulated };

    Kind kind = Kind::Quadratic;
    double fixed = 0.0;                     // K in C(r, zeta) = r + zeta^2 + K
    std::vector<std::vector<double>> table; // [state node][action steps], square over grid nodes

    static CostSpec quadratic(double fixed);
    static CostSpec tabulated(std::vector<std::vector<double>> values);
};

/// Full problem instance. Immutable after construction; share freely.
struct ModelSpec {
    double lambda = 0.0; // shock intensity; 0 is the degenerate no-shock case
    ShockDistribution shocks;
    UtilitySpec utility;
    CostSpec cost;
    double delta = 0.0;    // discount rate, > 0
    double ceiling = 0.0;  // O, > 0
    double threshold = 0.0; // failure level k*, fixed at 0

    /// Field-level checks (does not need a grid).
    void validate() const;
    /// G(ceiling)/delta, the a-priori upper bound on any value function.
    double value_upper_bound() const;
};

/// Uniform grid r_j = j*h, j = 0..n, with the discretized shock density p_0..p_n.
struct Grid {
    double h = 0.0;
    int n = 0;
    std::vector<double> density;

    double node(int j) const { return static_cast<double>(j) * h; }
    int size() const { return n + 1; }
};

double evaluate_utility(const UtilitySpec& spec, double r, double ceiling);

/// Checked evaluation: requires 0 <= r <= ceiling and 0 <= zeta <= ceiling - r.
double evaluate_cost(const CostSpec& spec, double r, double zeta, double ceiling);

/// Unchecked evaluation used by the simulator, where the applied grid action
/// may overshoot the admissible set by less than h/2 (state is clamped, the
/// booked cost is not). Identical to evaluate_cost on admissible inputs.
double cost_value(const CostSpec& spec, double r, double zeta, double ceiling);

/// Cost of moving from node j by i grid steps; table lookup for tabulated specs.
double cost_at_nodes(const CostSpec& spec, const Grid& grid, int j, int i);

/// Midpoint binning: p_0 = F(h/2), p_i = F((i+1/2)h) - F((i-1/2)h).
/// The deficit 1 - sum(p) is the mass of shocks jumping past the whole grid.
std::vector<double> discretize_shock_density(const ShockDistribution& shocks, double h, int n);

/// h must divide ceiling to within 0.5 ulp of an integer node count.
Grid build_grid(const ModelSpec& model, double h);

/// Shape checks that need node values: G non-decreasing/concave/G(0)=0,
/// C strictly positive and non-decreasing on admissible node pairs,
/// tabulated tables sized to the grid.
void validate_on_grid(const ModelSpec& model, const Grid& grid);

} // namespace cbm
