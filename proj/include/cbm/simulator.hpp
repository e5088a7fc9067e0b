#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cbm/model.hpp"
#include "cbm/rng.hpp"
#include "cbm/solver.hpp"

namespace cbm {

/// One timeline entry of a simulated path. Times are non-decreasing; an
/// intervention triggered by a shock shares the shock's timestamp and
/// follows it in the event list.
struct PathEvent {
    enum class Kind { Shock, Intervention, Failure };
    Kind kind = Kind::Shock;
    double time = 0.0;
    double size = 0.0;        // Shock: shock magnitude
    double zeta = 0.0;        // Intervention
    double cost = 0.0;        // Intervention: undiscounted cost booked
    double state_after = 0.0; // Failure records the overshoot (state <= 0)
};

struct PathResult {
    double profit = 0.0;   // discounted benefits minus discounted costs
    double lifetime = 0.0; // failure time, or t_max when capped
    bool failed = false;
    bool capped = false;   // reached t_max alive
    bool flagged = false;  // post-intervention state still asked to intervene
    int interventions = 0;
    std::vector<PathEvent> events; // filled only when requested
};

struct SimulationReport {
    double initial_state = 0.0;
    std::int64_t paths = 0;
    double mean_profit = 0.0;
    double std_error = 0.0; // sample std / sqrt(paths)
    double mean_lifetime = 0.0;
    std::int64_t capped_paths = 0;
    std::int64_t flagged_paths = 0;
    double interventions_per_path = 0.0;
    double discount_truncation_bound = 0.0; // epsilon_tail
    double t_max = 0.0;
    std::uint64_t seed = 0;
    std::string rng_algorithm; // kRngAlgorithm
};

struct LifetimeStats {
    std::int64_t paths = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double min = 0.0;
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double max = 0.0;
};

/// Nearest grid node with exact midpoints resolved to the lower node.
/// Shared by the simulator and the query command.
int nearest_node(const Grid& grid, double r);

/// Action at the nearest node of r; node 0 (cemetery) never acts.
const PolicyAction& policy_lookup(const Policy& policy, double r);

/// Truncation horizon: exp(-delta*t_max) * G(O)/delta == epsilon_tail.
double horizon_for_tail_bound(const ModelSpec& model, double epsilon_tail);

Policy do_nothing_policy(const ModelSpec& model, const Grid& grid);

/// Shift the intervention boundary by d: nodes inside the new boundary act
/// with the MV-maximizing action recomputed from vf; nodes outside do not act.
Policy shift_boundary(const Policy& policy, const ValueFunction& vf, const ModelSpec& model,
                      double d);

/// Shift every intervention target by d (zeta adjusted, clamped admissible).
Policy shift_targets(const Policy& policy, double d);

/// Simulate one controlled path: exponential(lambda) arrivals, i.i.d. shock
/// sizes, policy consulted at t=0 and immediately after each shock (shock
/// first, then policy; at most one intervention per instant). Utility accrues
/// as G(r)(e^{-delta t1}-e^{-delta t2})/delta per constant segment; each
/// intervention books e^{-delta t} C(state_before, zeta). Stops at failure
/// (state <= 0) or t_max.
PathResult sample_path(const ModelSpec& model, const Policy& policy, double r0,
                       RngStream& rng, double t_max, bool collect_events = false);

/// Fixed-interval variant: no state feedback; at times k*interval the state
/// is restored to the ceiling.
PathResult sample_path_fixed_interval(const ModelSpec& model, double interval, double r0,
                                      RngStream& rng, double t_max,
                                      bool collect_events = false);

/// Average sample_path over `paths` streams (stream k seeded with seed ^ k).
/// Aggregation uses fixed-order pairwise summation, so the report is
/// bit-identical for any thread count.
SimulationReport estimate_profit(const ModelSpec& model, const Policy& policy, double r0,
                                 std::int64_t paths, std::uint64_t seed, double epsilon_tail,
                                 int threads = 1);

SimulationReport estimate_profit_fixed_interval(const ModelSpec& model, double interval,
                                                double r0, std::int64_t paths,
                                                std::uint64_t seed, double epsilon_tail,
                                                int threads = 1);

/// Failure time of the uncontrolled process (runs to failure, no horizon).
LifetimeStats uncontrolled_failure_time_stats(const ModelSpec& model, double r0,
                                              std::int64_t paths, std::uint64_t seed);

/// Fixed-order pairwise sum; deterministic regardless of scheduling.
double pairwise_sum(const std::vector<double>& x);

} // namespace cbm
