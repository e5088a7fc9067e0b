#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cbm/io.hpp"
#include "cbm/model.hpp"
#include "cbm/simulator.hpp"
#include "cbm/solver.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw cbm::IoError("cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Write-to-temp then rename so error paths never leave partial files.
void write_file_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw cbm::IoError("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw cbm::IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw cbm::IoError("cannot move artifact into place at '" + path + "': " + ec.message());
    }
}

cbm::RunArtifact load_artifact_file(const std::string& path) {
    return cbm::load_artifact(read_file(path));
}

double interpolate_value(const cbm::ValueFunction& vf, double r) {
    const auto& grid = vf.grid;
    if (r <= 0.0) return vf.values.front();
    const double q = std::min(r / grid.h, static_cast<double>(grid.n));
    const auto lo = std::min(static_cast<size_t>(q), static_cast<size_t>(grid.n) - 1);
    const double frac = q - static_cast<double>(lo);
    return vf.values[lo] * (1.0 - frac) + vf.values[lo + 1] * frac;
}

struct SolveArgs {
    std::string config_path;
    std::string out_path;
    std::optional<double> h;
    std::optional<double> epsilon;
    std::optional<int> max_iter;
};

int cmd_solve(const SolveArgs& args) {
    cbm::ParsedConfig config = cbm::parse_model_config(read_file(args.config_path));
    if (args.h) config.h = *args.h;
    if (args.epsilon) config.epsilon = *args.epsilon;
    if (args.max_iter) config.max_iter = *args.max_iter;

    const cbm::Grid grid = cbm::build_grid(config.model, config.h);
    cbm::SolveOptions options;
    options.epsilon = config.epsilon;
    options.max_iter = config.max_iter;

    const auto start = std::chrono::steady_clock::now();
    const cbm::ValueFunction vf = cbm::solve(config.model, grid, options);
    const cbm::Policy policy = cbm::extract_policy(vf, config.model, 10.0 * config.epsilon);
    const cbm::ResidualReport residuals = cbm::qvi_residuals(vf, config.model);
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);

    cbm::RunArtifact artifact;
    artifact.model = config.model;
    artifact.shocks_source = config.shocks_source;
    artifact.vf = vf;
    artifact.policy = policy;
    artifact.residuals = residuals;
    artifact.wall_time_seconds = elapsed.count();
    write_file_atomic(args.out_path, cbm::save_artifact(artifact));

    std::cout << "interpretation: " << config.shocks_source;
    if (config.model.shocks.kind == cbm::ShockDistribution::Kind::Lognormal)
        std::cout << " -> location=" << cbm::format_number(config.model.shocks.location)
                  << " scale=" << cbm::format_number(config.model.shocks.scale);
    std::cout << "\n";
    std::cout << "grid: h=" << cbm::format_number(grid.h) << " n=" << grid.n << "\n";
    std::cout << "iterations: " << vf.iterations << " (final_gap="
              << cbm::format_number(vf.final_sup_norm_delta)
              << ", epsilon=" << cbm::format_number(vf.tolerance) << ")\n";
    std::cout << "boundary: " << cbm::format_number(policy.boundary) << "\n";
    std::cout << "max_qvi_residual: " << cbm::format_number(residuals.max_abs_qvi)
              << " (tolerance " << cbm::format_number(residuals.tolerance)
              << (residuals.pass ? ", certified" : ", NOT certified") << ")\n";
    std::cout << "artifact: " << args.out_path << "\n";
    std::cerr << "solve wall time: " << elapsed.count() << " s\n";
    return 0;
}

struct QueryArgs {
    std::string artifact_path;
    double state = 0.0;
};

int cmd_query(const QueryArgs& args) {
    const cbm::RunArtifact artifact = load_artifact_file(args.artifact_path);
    const double r = args.state;
    if (r < 0.0 || r > artifact.model.ceiling)
        throw cbm::DomainError("state " + cbm::format_number(r) + " outside [0, " +
                               cbm::format_number(artifact.model.ceiling) + "]");
    const int node = cbm::nearest_node(artifact.policy.grid, r);
    const auto& action = artifact.policy.actions[static_cast<size_t>(node)];
    const double value = interpolate_value(artifact.vf, r);
    const char* region = node == 0 ? "cemetery" : (action.intervene ? "A" : "B");
    const double zeta = action.intervene ? action.zeta : 0.0;
    const double target = action.intervene ? std::min(r + zeta, artifact.model.ceiling) : r;

    std::cerr << "state " << cbm::format_number(r) << " -> nearest node " << node << " (r_j="
              << cbm::format_number(artifact.policy.grid.node(node)) << "), region " << region
              << "\n";
    if (action.intervene)
        std::cerr << "intervene by zeta=" << cbm::format_number(zeta) << " toward "
                  << cbm::format_number(target) << "; expected value "
                  << cbm::format_number(value) << "\n";
    else
        std::cerr << "no intervention; expected value " << cbm::format_number(value) << "\n";

    std::cout << "region=" << region << " zeta=" << cbm::format_number(zeta)
              << " target=" << cbm::format_number(target)
              << " value=" << cbm::format_number(value) << "\n";
    return 0;
}

struct SimulateArgs {
    std::string artifact_path;
    double state = 0.0;
    std::int64_t paths = 100000;
    std::uint64_t seed = 1;
    std::string policy = "solved";
    double epsilon_tail = 1e-6;
    int threads = 1;
};

void print_report(const cbm::SimulationReport& report, const std::string& policy_name) {
    std::cout << "policy: " << policy_name << "\n";
    std::cout << "r0: " << cbm::format_number(report.initial_state) << "\n";
    std::cout << "paths: " << report.paths << "\n";
    std::cout << "seed: " << report.seed << "\n";
    std::cout << "rng: " << report.rng_algorithm << "\n";
    std::cout << "t_max: " << cbm::format_number(report.t_max) << " (epsilon_tail="
              << cbm::format_number(report.discount_truncation_bound) << ")\n";
    std::cout << "mean_profit: " << cbm::format_number(report.mean_profit) << "\n";
    std::cout << "std_error: " << cbm::format_number(report.std_error) << "\n";
    std::cout << "mean_lifetime: " << cbm::format_number(report.mean_lifetime)
              << " (capped_paths=" << report.capped_paths << ")\n";
    std::cout << "interventions_per_path: " << cbm::format_number(report.interventions_per_path)
              << "\n";
    std::cout << "flagged_paths: " << report.flagged_paths << "\n";
}

int cmd_simulate(const SimulateArgs& args) {
    const cbm::RunArtifact artifact = load_artifact_file(args.artifact_path);
    const cbm::ModelSpec& model = artifact.model;

    cbm::Policy policy;
    std::string policy_name = args.policy;
    if (args.policy == "solved") {
        policy = artifact.policy;
    } else if (args.policy == "none") {
        policy = cbm::do_nothing_policy(model, artifact.vf.grid);
    } else if (args.policy.rfind("shifted:", 0) == 0) {
        const std::string amount = args.policy.substr(8);
        char* end = nullptr;
        const double d = std::strtod(amount.c_str(), &end);
        if (amount.empty() || end != amount.c_str() + amount.size() || !std::isfinite(d))
            throw cbm::ValidationError("invalid boundary shift in --policy '" + args.policy + "'");
        policy = cbm::shift_boundary(artifact.policy, artifact.vf, model, d);
    } else {
        throw cbm::ValidationError("unknown --policy '" + args.policy +
                                   "' (expected solved, none, or shifted:<d>)");
    }

    const auto start = std::chrono::steady_clock::now();
    const cbm::SimulationReport report = cbm::estimate_profit(
        model, policy, args.state, args.paths, args.seed, args.epsilon_tail, args.threads);
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);

    print_report(report, policy_name);
    if (args.policy == "solved") {
        const double v = interpolate_value(artifact.vf, args.state);
        std::cout << "artifact_value: " << cbm::format_number(v) << "\n";
        std::cout << "abs_gap: " << cbm::format_number(std::abs(report.mean_profit - v)) << "\n";
    }
    if (args.policy == "none") {
        const cbm::LifetimeStats stats =
            cbm::uncontrolled_failure_time_stats(model, args.state, args.paths, args.seed);
        std::cout << "failure_time_mean: " << cbm::format_number(stats.mean)
                  << " (std_error=" << cbm::format_number(stats.std_error) << ")\n";
        std::cout << "failure_time_quantiles: min=" << cbm::format_number(stats.min)
                  << " q25=" << cbm::format_number(stats.q25)
                  << " median=" << cbm::format_number(stats.median)
                  << " q75=" << cbm::format_number(stats.q75)
                  << " max=" << cbm::format_number(stats.max) << "\n";
    }
    std::cerr << "simulate wall time: " << elapsed.count() << " s\n";
    return 0;
}

struct ExportArgs {
    std::string artifact_path;
    std::string which;
    std::string out_path;
};

int cmd_export(const ExportArgs& args) {
    const cbm::RunArtifact artifact = load_artifact_file(args.artifact_path);
    cbm::PlotKind kind;
    if (args.which == "value_function") kind = cbm::PlotKind::ValueFunction;
    else if (args.which == "policy") kind = cbm::PlotKind::PolicyMap;
    else if (args.which == "residuals") kind = cbm::PlotKind::Residuals;
    else
        throw cbm::ValidationError("unknown --which '" + args.which +
                                   "' (expected value_function, policy, or residuals)");
    const std::string csv = cbm::export_plot_data(artifact, kind);
    write_file_atomic(args.out_path, csv);
    const auto rows = std::count(csv.begin(), csv.end(), '\n');
    std::cout << "wrote " << args.out_path << " (" << rows << " lines)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Condition-based maintenance policy solver for compound Poisson shock deterioration"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "Print help and exit"); // keep --h free for grid spacing

    SolveArgs solve_args;
    auto* solve = app.add_subcommand("solve", "Solve the impulse-control QVI and write an artifact");
    solve->set_help_flag("--help", "Print help and exit");
    solve->add_option("--config", solve_args.config_path, "Model configuration file")->required();
    solve->add_option("--out", solve_args.out_path, "Artifact output path")->required();
    double h_flag = 0, eps_flag = 0;
    int max_iter_flag = 0;
    auto* h_opt = solve->add_option("--h", h_flag, "Override grid spacing");
    auto* eps_opt = solve->add_option("--epsilon", eps_flag, "Override stopping tolerance");
    auto* iter_opt = solve->add_option("--max-iter", max_iter_flag, "Override sweep limit");

    QueryArgs query_args;
    auto* query = app.add_subcommand("query", "Look up the policy and value at a state");
    query->add_option("--artifact", query_args.artifact_path, "Artifact file")->required();
    query->add_option("--state", query_args.state, "State r in [0, ceiling]")->required();

    SimulateArgs sim_args;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of expected profit");
    simulate->add_option("--artifact", sim_args.artifact_path, "Artifact file")->required();
    simulate->add_option("--state", sim_args.state, "Initial state r0")->required();
    simulate->add_option("--paths", sim_args.paths, "Number of simulated paths");
    simulate->add_option("--seed", sim_args.seed, "Base seed (stream k uses seed XOR k)");
    simulate->add_option("--policy", sim_args.policy, "solved | none | shifted:<d>");
    simulate->add_option("--epsilon-tail", sim_args.epsilon_tail, "Discount truncation bound");
    simulate->add_option("--threads", sim_args.threads, "Worker threads (result is thread-count independent)");

    ExportArgs export_args;
    auto* exporter = app.add_subcommand("export", "Export plot data as CSV");
    exporter->add_option("--artifact", export_args.artifact_path, "Artifact file")->required();
    exporter->add_option("--which", export_args.which, "value_function | policy | residuals")->required();
    exporter->add_option("--out", export_args.out_path, "CSV output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*solve) {
            if (*h_opt) solve_args.h = h_flag;
            if (*eps_opt) solve_args.epsilon = eps_flag;
            if (*iter_opt) solve_args.max_iter = max_iter_flag;
            return cmd_solve(solve_args);
        }
        if (*query) return cmd_query(query_args);
        if (*simulate) return cmd_simulate(sim_args);
        if (*exporter) return cmd_export(export_args);
    } catch (const cbm::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "final gap: " << cbm::format_number(e.final_gap) << " after " << e.iterations
                  << " iterations\n";
        return 2;
    } catch (const cbm::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const cbm::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
