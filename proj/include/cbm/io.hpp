#pragma once

#include <string>

#include "cbm/model.hpp"
#include "cbm/solver.hpp"

namespace cbm {

/// Result of parsing a model configuration document.
struct ParsedConfig {
    ModelSpec model;
    double h = 0.005;
    double epsilon = 1e-8;
    int max_iter = 10000;
    /// The shock parameterization actually written in the config, echoed
    /// into artifacts (e.g. "lognormal_moments mean=0.3 sd=1").
    std::string shocks_source;
};

/// Everything a solve run produces. wall_time_seconds is runtime metadata
/// and is never serialized: repeated runs with identical inputs must yield
/// byte-identical artifacts.
struct RunArtifact {
    ModelSpec model;
    std::string shocks_source;
    ValueFunction vf;
    Policy policy;
    ResidualReport residuals;
    double wall_time_seconds = 0.0;
};

enum class PlotKind { ValueFunction, PolicyMap, Residuals };

/// Parse the key/value configuration format (bare keys plus [section] and
/// [section.subsection] headers, '#' comments). Unknown keys are rejected;
/// errors name the offending field and line.
ParsedConfig parse_model_config(const std::string& text);

/// Single self-describing text document, version-tagged, numbers printed
/// with up to 17 significant digits (lossless). serialize -> parse ->
/// serialize is byte-identical.
std::string save_artifact(const RunArtifact& artifact);
RunArtifact load_artifact(const std::string& text);

/// CSV with a header row, rows ordered by r ascending.
std::string export_plot_data(const RunArtifact& artifact, PlotKind which);

/// %.17g formatting used across artifacts and CSV exports.
std::string format_number(double x);

} // namespace cbm
