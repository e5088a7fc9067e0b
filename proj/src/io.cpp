#include "cbm/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <vector>

namespace cbm {

namespace {

constexpr const char* kArtifactHeader = "cbm-artifact v1";

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& text, const std::string& field, int line) {
    const std::string t = trim(text);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
        throw ConfigError("line " + std::to_string(line) + ": field '" + field +
                          "' expects a finite number, got '" + t + "'");
    return v;
}

long parse_int(const std::string& text, const std::string& field, int line) {
    const std::string t = trim(text);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size())
        throw ConfigError("line " + std::to_string(line) + ": field '" + field +
                          "' expects an integer, got '" + t + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(trim(cur));
    return out;
}

// Key/value document with [section] headers; keys become section-qualified
// dotted names. Tracks consumption so unknown keys can be rejected.
class KeyValueDoc {
public:
    KeyValueDoc(const std::string& text, bool strip_comments) {
        std::istringstream in(text);
        std::string raw;
        int line = 0;
        std::string section;
        while (std::getline(in, raw)) {
            ++line;
            if (strip_comments) {
                const auto hash = raw.find('#');
                if (hash != std::string::npos) raw.erase(hash);
            }
            const std::string s = trim(raw);
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw ConfigError("line " + std::to_string(line) + ": malformed section header '" + s + "'");
                section = trim(s.substr(1, s.size() - 2));
                if (section.empty())
                    throw ConfigError("line " + std::to_string(line) + ": empty section name");
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(line) + ": expected 'key = value', got '" + s + "'");
            std::string key = trim(s.substr(0, eq));
            const std::string value = trim(s.substr(eq + 1));
            if (key.empty())
                throw ConfigError("line " + std::to_string(line) + ": empty key");
            if (!section.empty()) key = section + "." + key;
            if (entries_.count(key))
                throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
            entries_[key] = {value, line, false};
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::string require(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end())
            throw ConfigError("missing required field '" + key + "'");
        it->second.consumed = true;
        return it->second.value;
    }

    std::string optional(const std::string& key, const std::string& fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.consumed = true;
        return it->second.value;
    }

    int line_of(const std::string& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    double require_double(const std::string& key) { return parse_double(require(key), key, line_of(key)); }

    void reject_unconsumed() const {
        for (const auto& [key, e] : entries_)
            if (!e.consumed)
                throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + key + "'");
    }

private:
    struct Entry {
        std::string value;
        int line = 0;
        bool consumed = false;
    };
    std::map<std::string, Entry> entries_;
};

ShockDistribution parse_shocks(KeyValueDoc& doc, std::string& source_out) {
    const std::string kind = doc.require("shocks.kind");
    const int kind_line = doc.line_of("shocks.kind");
    // source echoes the raw config text of the parameterization actually used
    if (kind == "lognormal_log") {
        const std::string location = doc.require("shocks.params.location");
        const std::string scale = doc.require("shocks.params.scale");
        source_out = "lognormal_log location=" + location + " scale=" + scale;
        return ShockDistribution::lognormal_log(
            parse_double(location, "shocks.params.location", doc.line_of("shocks.params.location")),
            parse_double(scale, "shocks.params.scale", doc.line_of("shocks.params.scale")));
    }
    if (kind == "lognormal_moments") {
        const std::string mean = doc.require("shocks.params.mean");
        const std::string sd = doc.require("shocks.params.sd");
        source_out = "lognormal_moments mean=" + mean + " sd=" + sd;
        return ShockDistribution::lognormal_moments(
            parse_double(mean, "shocks.params.mean", doc.line_of("shocks.params.mean")),
            parse_double(sd, "shocks.params.sd", doc.line_of("shocks.params.sd")));
    }
    if (kind == "exponential") {
        const std::string rate = doc.require("shocks.params.rate");
        source_out = "exponential rate=" + rate;
        return ShockDistribution::exponential(
            parse_double(rate, "shocks.params.rate", doc.line_of("shocks.params.rate")));
    }
    if (kind == "tabulated") {
        const std::string values = doc.require("shocks.params.values");
        const int line = doc.line_of("shocks.params.values");
        std::vector<std::pair<double, double>> atoms;
        for (const std::string& item : split(values, ',')) {
            if (item.empty()) continue;
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw ConfigError("line " + std::to_string(line) +
                                  ": field 'shocks.params.values' expects 'size:probability' pairs");
            atoms.emplace_back(parse_double(item.substr(0, colon), "shocks.params.values", line),
                               parse_double(item.substr(colon + 1), "shocks.params.values", line));
        }
        source_out = "tabulated values=" + trim(values);
        return ShockDistribution::tabulated(std::move(atoms));
    }
    throw ConfigError("line " + std::to_string(kind_line) + ": field 'shocks.kind' must be one of "
                      "lognormal_log, lognormal_moments, exponential, tabulated; got '" + kind + "'");
}

UtilitySpec parse_utility(KeyValueDoc& doc) {
    const std::string kind = doc.require("utility.kind");
    const int kind_line = doc.line_of("utility.kind");
    if (kind == "exponential_aversion")
        return UtilitySpec::exponential_aversion(doc.require_double("utility.params.C"),
                                                 doc.require_double("utility.params.alpha"));
    if (kind == "tabulated") {
        const std::string values = doc.require("utility.params.values");
        const int line = doc.line_of("utility.params.values");
        std::vector<double> table;
        for (const std::string& item : split(values, ','))
            if (!item.empty()) table.push_back(parse_double(item, "utility.params.values", line));
        return UtilitySpec::tabulated(std::move(table));
    }
    throw ConfigError("line " + std::to_string(kind_line) +
                      ": field 'utility.kind' must be exponential_aversion or tabulated; got '" +
                      kind + "'");
}

CostSpec parse_cost(KeyValueDoc& doc) {
    const std::string kind = doc.require("cost.kind");
    const int kind_line = doc.line_of("cost.kind");
    if (kind == "quadratic") {
        const double fixed = doc.require_double("cost.params.K");
        if (fixed < 0.0)
            throw ConfigError("line " + std::to_string(doc.line_of("cost.params.K")) +
                              ": field 'cost.params.K' must be >= 0 (cost positivity), got " +
                              format_number(fixed));
        return CostSpec::quadratic(fixed);
    }
    if (kind == "tabulated") {
        const std::string rows = doc.require("cost.params.rows");
        const int line = doc.line_of("cost.params.rows");
        std::vector<std::vector<double>> table;
        for (const std::string& row : split(rows, ';')) {
            std::vector<double> r;
            for (const std::string& item : split(row, ','))
                if (!item.empty()) r.push_back(parse_double(item, "cost.params.rows", line));
            if (!r.empty()) table.push_back(std::move(r));
        }
        return CostSpec::tabulated(std::move(table));
    }
    throw ConfigError("line " + std::to_string(kind_line) +
                      ": field 'cost.kind' must be quadratic or tabulated; got '" + kind + "'");
}

std::string shock_kind_name(ShockDistribution::Kind kind) {
    switch (kind) {
    case ShockDistribution::Kind::Lognormal: return "lognormal";
    case ShockDistribution::Kind::Exponential: return "exponential";
    case ShockDistribution::Kind::Tabulated: return "tabulated";
    }
    return "?";
}

} // namespace

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

ParsedConfig parse_model_config(const std::string& text) {
    KeyValueDoc doc(text, /*strip_comments=*/true);
    ParsedConfig out;

    out.model.lambda = doc.require_double("lambda");
    out.model.delta = doc.require_double("delta");
    out.model.ceiling = doc.require_double("ceiling");
    if (doc.has("threshold")) out.model.threshold = doc.require_double("threshold");
    out.model.shocks = parse_shocks(doc, out.shocks_source);
    out.model.utility = parse_utility(doc);
    out.model.cost = parse_cost(doc);
    out.h = parse_double(doc.optional("grid.h", "0.005"), "grid.h", doc.line_of("grid.h"));
    out.epsilon = parse_double(doc.optional("solver.epsilon", "1e-8"), "solver.epsilon",
                               doc.line_of("solver.epsilon"));
    out.max_iter = static_cast<int>(parse_int(doc.optional("solver.max_iter", "10000"),
                                              "solver.max_iter", doc.line_of("solver.max_iter")));
    doc.reject_unconsumed();

    if (!(out.epsilon > 0.0))
        throw ConfigError("field 'solver.epsilon' must be > 0, got " + format_number(out.epsilon));
    if (out.max_iter < 1)
        throw ConfigError("field 'solver.max_iter' must be >= 1, got " + std::to_string(out.max_iter));
    try {
        out.model.validate();
        // h divisibility and grid-shaped invariants are checked by build_grid
        // plus validate_on_grid at solve time; validate h eagerly here so the
        // error names the field.
        build_grid(out.model, out.h);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("configuration invalid: ") + e.what());
    }
    return out;
}

std::string save_artifact(const RunArtifact& a) {
    std::ostringstream os;
    const auto& grid = a.vf.grid;
    os << kArtifactHeader << "\n";

    os << "[model]\n";
    os << "lambda = " << format_number(a.model.lambda) << "\n";
    os << "delta = " << format_number(a.model.delta) << "\n";
    os << "ceiling = " << format_number(a.model.ceiling) << "\n";
    os << "threshold = " << format_number(a.model.threshold) << "\n";
    os << "shocks.kind = " << shock_kind_name(a.model.shocks.kind) << "\n";
    os << "shocks.source = " << a.shocks_source << "\n";
    switch (a.model.shocks.kind) {
    case ShockDistribution::Kind::Lognormal:
        os << "shocks.location = " << format_number(a.model.shocks.location) << "\n";
        os << "shocks.scale = " << format_number(a.model.shocks.scale) << "\n";
        break;
    case ShockDistribution::Kind::Exponential:
        os << "shocks.rate = " << format_number(a.model.shocks.rate) << "\n";
        break;
    case ShockDistribution::Kind::Tabulated: {
        os << "shocks.atoms = ";
        for (size_t i = 0; i < a.model.shocks.atoms.size(); ++i) {
            if (i) os << ",";
            os << format_number(a.model.shocks.atoms[i].first) << ":"
               << format_number(a.model.shocks.atoms[i].second);
        }
        os << "\n";
        break;
    }
    }
    if (a.model.utility.kind == UtilitySpec::Kind::ExponentialAversion) {
        os << "utility.kind = exponential_aversion\n";
        os << "utility.C = " << format_number(a.model.utility.profit_scale) << "\n";
        os << "utility.alpha = " << format_number(a.model.utility.aversion) << "\n";
    } else {
        os << "utility.kind = tabulated\n";
        os << "utility.values = ";
        for (size_t i = 0; i < a.model.utility.table.size(); ++i) {
            if (i) os << ",";
            os << format_number(a.model.utility.table[i]);
        }
        os << "\n";
    }
    if (a.model.cost.kind == CostSpec::Kind::Quadratic) {
        os << "cost.kind = quadratic\n";
        os << "cost.K = " << format_number(a.model.cost.fixed) << "\n";
    } else {
        os << "cost.kind = tabulated\n";
        os << "cost.rows = ";
        for (size_t r = 0; r < a.model.cost.table.size(); ++r) {
            if (r) os << ";";
            for (size_t c = 0; c < a.model.cost.table[r].size(); ++c) {
                if (c) os << ",";
                os << format_number(a.model.cost.table[r][c]);
            }
        }
        os << "\n";
    }

    os << "[grid]\n";
    os << "h = " << format_number(grid.h) << "\n";
    os << "n = " << grid.n << "\n";

    os << "[solve]\n";
    os << "iterations = " << a.vf.iterations << "\n";
    os << "epsilon = " << format_number(a.vf.tolerance) << "\n";
    os << "final_gap = " << format_number(a.vf.final_sup_norm_delta) << "\n";
    os << "region_tol = " << format_number(a.policy.region_tol) << "\n";
    os << "residual_tol = " << format_number(a.residuals.tolerance) << "\n";
    os << "boundary = " << format_number(a.policy.boundary) << "\n";

    os << "[value_table]\n";
    os << "r,V\n";
    for (int j = 0; j <= grid.n; ++j)
        os << format_number(grid.node(j)) << "," << format_number(a.vf.values[static_cast<size_t>(j)])
           << "\n";

    os << "[policy_table]\n";
    os << "r,region,zeta_star,target\n";
    for (int j = 0; j <= grid.n; ++j) {
        const auto& act = a.policy.actions[static_cast<size_t>(j)];
        const char* region = j == 0 ? "cemetery" : (act.intervene ? "A" : "B");
        const double target = act.intervene ? act.target : grid.node(j);
        os << format_number(grid.node(j)) << "," << region << "," << format_number(act.zeta)
           << "," << format_number(target) << "\n";
    }

    os << "[residual_table]\n";
    os << "r,dynkin,intervention\n";
    for (int j = 0; j <= grid.n; ++j)
        os << format_number(grid.node(j)) << ","
           << format_number(a.residuals.dynkin[static_cast<size_t>(j)]) << ","
           << format_number(a.residuals.intervention[static_cast<size_t>(j)]) << "\n";

    os << "end\n";
    return os.str();
}

namespace {

struct TableRows {
    std::vector<std::vector<std::string>> rows;
    int first_line = 0;
};

// Splits the artifact into the key/value preamble and the three tables.
struct ArtifactScan {
    std::string preamble;
    std::map<std::string, TableRows> tables;
};

ArtifactScan scan_artifact(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) throw IoError("empty artifact document");
    ++lineno;
    if (trim(line) != kArtifactHeader) {
        const std::string t = trim(line);
        if (t.rfind("cbm-artifact", 0) == 0)
            throw IoError("incompatible artifact version: '" + t + "' (expected '" +
                          kArtifactHeader + "')");
        throw IoError("not a cbm artifact document");
    }
    ArtifactScan scan;
    std::string current_table;
    bool saw_end = false;
    std::ostringstream preamble;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s == "end") {
            saw_end = true;
            break;
        }
        if (s == "[value_table]" || s == "[policy_table]" || s == "[residual_table]") {
            current_table = s.substr(1, s.size() - 2);
            scan.tables[current_table].first_line = lineno;
            continue;
        }
        if (!current_table.empty() && s.front() != '[') {
            scan.tables[current_table].rows.push_back(split(s, ','));
            continue;
        }
        current_table.clear();
        preamble << line << "\n";
    }
    if (!saw_end) throw IoError("artifact integrity error: missing 'end' terminator");
    scan.preamble = preamble.str();
    return scan;
}

const TableRows& require_table(const ArtifactScan& scan, const std::string& name, size_t rows) {
    auto it = scan.tables.find(name);
    if (it == scan.tables.end())
        throw IoError("artifact integrity error: missing " + name);
    // header row + data rows
    if (it->second.rows.size() != rows + 1)
        throw IoError("artifact integrity error: " + name + " has " +
                      std::to_string(it->second.rows.size() ? it->second.rows.size() - 1 : 0) +
                      " rows, expected " + std::to_string(rows));
    return it->second;
}

double table_double(const std::vector<std::string>& row, size_t col, const std::string& table,
                    size_t rowno) {
    if (col >= row.size())
        throw IoError("artifact integrity error: " + table + " row " + std::to_string(rowno) +
                      " is short");
    const std::string t = trim(row[col]);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
        throw IoError("artifact integrity error: " + table + " row " + std::to_string(rowno) +
                      " has non-numeric entry '" + t + "'");
    return v;
}

} // namespace

RunArtifact load_artifact(const std::string& text) {
    const ArtifactScan scan = scan_artifact(text);
    KeyValueDoc doc(scan.preamble, /*strip_comments=*/false);
    RunArtifact a;
    try {
        a.model.lambda = doc.require_double("model.lambda");
        a.model.delta = doc.require_double("model.delta");
        a.model.ceiling = doc.require_double("model.ceiling");
        a.model.threshold = doc.require_double("model.threshold");
        const std::string shock_kind = doc.require("model.shocks.kind");
        a.shocks_source = doc.require("model.shocks.source");
        if (shock_kind == "lognormal") {
            a.model.shocks = ShockDistribution::lognormal_log(
                doc.require_double("model.shocks.location"),
                doc.require_double("model.shocks.scale"));
        } else if (shock_kind == "exponential") {
            a.model.shocks = ShockDistribution::exponential(doc.require_double("model.shocks.rate"));
        } else if (shock_kind == "tabulated") {
            std::vector<std::pair<double, double>> atoms;
            for (const std::string& item : split(doc.require("model.shocks.atoms"), ',')) {
                const auto colon = item.find(':');
                if (colon == std::string::npos)
                    throw IoError("artifact integrity error: malformed shocks.atoms entry '" + item + "'");
                atoms.emplace_back(std::strtod(item.substr(0, colon).c_str(), nullptr),
                                   std::strtod(item.substr(colon + 1).c_str(), nullptr));
            }
            a.model.shocks = ShockDistribution::tabulated(std::move(atoms));
        } else {
            throw IoError("artifact integrity error: unknown shocks.kind '" + shock_kind + "'");
        }
        const std::string utility_kind = doc.require("model.utility.kind");
        if (utility_kind == "exponential_aversion") {
            a.model.utility = UtilitySpec::exponential_aversion(
                doc.require_double("model.utility.C"), doc.require_double("model.utility.alpha"));
        } else if (utility_kind == "tabulated") {
            std::vector<double> values;
            for (const std::string& item : split(doc.require("model.utility.values"), ','))
                values.push_back(std::strtod(item.c_str(), nullptr));
            a.model.utility = UtilitySpec::tabulated(std::move(values));
        } else {
            throw IoError("artifact integrity error: unknown utility.kind '" + utility_kind + "'");
        }
        const std::string cost_kind = doc.require("model.cost.kind");
        if (cost_kind == "quadratic") {
            a.model.cost = CostSpec::quadratic(doc.require_double("model.cost.K"));
        } else if (cost_kind == "tabulated") {
            std::vector<std::vector<double>> table;
            for (const std::string& row : split(doc.require("model.cost.rows"), ';')) {
                std::vector<double> r;
                for (const std::string& item : split(row, ','))
                    r.push_back(std::strtod(item.c_str(), nullptr));
                table.push_back(std::move(r));
            }
            a.model.cost = CostSpec::tabulated(std::move(table));
        } else {
            throw IoError("artifact integrity error: unknown cost.kind '" + cost_kind + "'");
        }

        const double h = doc.require_double("grid.h");
        const long n = parse_int(doc.require("grid.n"), "grid.n", doc.line_of("grid.n"));
        a.model.validate();
        Grid grid = build_grid(a.model, h);
        if (grid.n != n)
            throw IoError("artifact integrity error: grid.n=" + std::to_string(n) +
                          " inconsistent with h and ceiling");

        a.vf.grid = grid;
        a.vf.iterations = static_cast<int>(
            parse_int(doc.require("solve.iterations"), "solve.iterations", 0));
        a.vf.tolerance = doc.require_double("solve.epsilon");
        a.vf.final_sup_norm_delta = doc.require_double("solve.final_gap");
        a.vf.monotone_iterates = true;
        a.policy.grid = grid;
        a.policy.ceiling = a.model.ceiling;
        a.policy.region_tol = doc.require_double("solve.region_tol");
        a.policy.boundary = doc.require_double("solve.boundary");
        a.residuals.tolerance = doc.require_double("solve.residual_tol");
        doc.reject_unconsumed();

        const size_t size = static_cast<size_t>(grid.n) + 1;
        const TableRows& values = require_table(scan, "value_table", size);
        const TableRows& policy = require_table(scan, "policy_table", size);
        const TableRows& residuals = require_table(scan, "residual_table", size);

        a.vf.values.resize(size);
        a.policy.actions.assign(size, PolicyAction{});
        a.residuals.dynkin.resize(size);
        a.residuals.intervention.resize(size);
        a.residuals.qvi.resize(size);

        double prev_r = -1.0;
        for (size_t j = 0; j < size; ++j) {
            const auto& vrow = values.rows[j + 1];
            const double r = table_double(vrow, 0, "value_table", j + 1);
            if (r <= prev_r)
                throw IoError("artifact integrity error: value_table r not strictly increasing");
            prev_r = r;
            a.vf.values[j] = table_double(vrow, 1, "value_table", j + 1);

            const auto& prow = policy.rows[j + 1];
            if (prow.size() != 4)
                throw IoError("artifact integrity error: policy_table row " + std::to_string(j + 1) +
                              " is malformed");
            const std::string region = trim(prow[1]);
            auto& action = a.policy.actions[j];
            if (region == "A") {
                action.intervene = true;
                action.zeta = table_double(prow, 2, "policy_table", j + 1);
                action.target = table_double(prow, 3, "policy_table", j + 1);
            } else if (region == "B" || (region == "cemetery" && j == 0)) {
                action = PolicyAction{};
            } else {
                throw IoError("artifact integrity error: policy_table region '" + region +
                              "' at row " + std::to_string(j + 1));
            }

            const auto& rrow = residuals.rows[j + 1];
            a.residuals.dynkin[j] = table_double(rrow, 1, "residual_table", j + 1);
            a.residuals.intervention[j] = table_double(rrow, 2, "residual_table", j + 1);
            a.residuals.qvi[j] = std::min(a.residuals.dynkin[j], a.residuals.intervention[j]);
        }
        double max_abs_qvi = 0.0, min_dynkin = 0.0, min_intervention = 0.0;
        if (size > 1) {
            min_dynkin = a.residuals.dynkin[1];
            min_intervention = a.residuals.intervention[1];
            for (size_t j = 1; j < size; ++j) {
                max_abs_qvi = std::max(max_abs_qvi, std::abs(a.residuals.qvi[j]));
                min_dynkin = std::min(min_dynkin, a.residuals.dynkin[j]);
                min_intervention = std::min(min_intervention, a.residuals.intervention[j]);
            }
        }
        a.residuals.max_abs_qvi = max_abs_qvi;
        a.residuals.min_dynkin = min_dynkin;
        a.residuals.min_intervention = min_intervention;
        a.residuals.pass = max_abs_qvi <= a.residuals.tolerance &&
                           min_dynkin >= -a.residuals.tolerance &&
                           min_intervention >= -a.residuals.tolerance;
    } catch (const IoError&) {
        throw;
    } catch (const Error& e) {
        throw IoError(std::string("artifact integrity error: ") + e.what());
    }
    return a;
}

std::string export_plot_data(const RunArtifact& a, PlotKind which) {
    std::ostringstream os;
    const Grid& grid = a.vf.grid;
    switch (which) {
    case PlotKind::ValueFunction:
        os << "r,V\n";
        for (int j = 0; j <= grid.n; ++j)
            os << format_number(grid.node(j)) << ","
               << format_number(a.vf.values[static_cast<size_t>(j)]) << "\n";
        break;
    case PlotKind::PolicyMap:
        os << "r,region,zeta_star,target\n";
        for (int j = 0; j <= grid.n; ++j) {
            const auto& act = a.policy.actions[static_cast<size_t>(j)];
            const char* region = j == 0 ? "cemetery" : (act.intervene ? "A" : "B");
            const double target = act.intervene ? act.target : grid.node(j);
            os << format_number(grid.node(j)) << "," << region << ","
               << format_number(act.zeta) << "," << format_number(target) << "\n";
        }
        break;
    case PlotKind::Residuals:
        os << "r,dynkin_residual,intervention_residual,qvi_residual\n";
        for (int j = 0; j <= grid.n; ++j)
            os << format_number(grid.node(j)) << ","
               << format_number(a.residuals.dynkin[static_cast<size_t>(j)]) << ","
               << format_number(a.residuals.intervention[static_cast<size_t>(j)]) << ","
               << format_number(a.residuals.qvi[static_cast<size_t>(j)]) << "\n";
        break;
    }
    return os.str();
}

} // namespace cbm
