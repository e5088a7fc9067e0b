#include "cbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cbm {

namespace {

bool finite(double x) { return std::isfinite(x); }

std::string num(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

// Standard normal CDF via the complementary error function.
double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Acklam's rational approximation to the standard normal quantile,
// refined with one Halley step; good to ~1e-15 over (0,1).
double normal_quantile(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, x;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement against erfc-based CDF.
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

} // namespace

ShockDistribution ShockDistribution::lognormal_log(double location, double scale) {
    ShockDistribution d;
    d.kind = Kind::Lognormal;
    d.location = location;
    d.scale = scale;
    d.validate();
    return d;
}

ShockDistribution ShockDistribution::lognormal_moments(double mean, double sd) {
    if (!(mean > 0.0) || !(sd > 0.0) || !finite(mean) || !finite(sd))
        throw ValidationError("lognormal moments require mean > 0 and sd > 0, got mean=" +
                              num(mean) + " sd=" + num(sd));
    const double s2 = std::log(1.0 + (sd / mean) * (sd / mean));
    ShockDistribution d;
    d.kind = Kind::Lognormal;
    d.scale = std::sqrt(s2);
    d.location = std::log(mean) - 0.5 * s2;
    d.validate();
    return d;
}

ShockDistribution ShockDistribution::exponential(double rate) {
    ShockDistribution d;
    d.kind = Kind::Exponential;
    d.rate = rate;
    d.validate();
    return d;
}

ShockDistribution ShockDistribution::tabulated(std::vector<std::pair<double, double>> atoms) {
    ShockDistribution d;
    d.kind = Kind::Tabulated;
    d.atoms = std::move(atoms);
    std::sort(d.atoms.begin(), d.atoms.end());
    d.validate();
    return d;
}

void ShockDistribution::validate() const {
    switch (kind) {
    case Kind::Lognormal:
        if (!finite(location) || !finite(scale) || !(scale > 0.0))
            throw ValidationError("lognormal shocks require finite location and scale > 0");
        break;
    case Kind::Exponential:
        if (!finite(rate) || !(rate > 0.0))
            throw ValidationError("exponential shocks require rate > 0, got " + num(rate));
        break;
    case Kind::Tabulated: {
        if (atoms.empty())
            throw ValidationError("tabulated shocks require at least one (size, probability) atom");
        double sum = 0.0;
        for (const auto& [size, prob] : atoms) {
            if (!finite(size) || !(size > 0.0))
                throw ValidationError("tabulated shock sizes must be strictly positive, got " + num(size));
            if (!finite(prob) || prob < 0.0)
                throw ValidationError("tabulated shock probabilities must be non-negative, got " + num(prob));
            sum += prob;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw ValidationError("tabulated shock probabilities must sum to 1 within 1e-12, got " + num(sum));
        if (!std::is_sorted(atoms.begin(), atoms.end()))
            throw ValidationError("tabulated shock atoms must be sorted by size");
        break;
    }
    }
}

double ShockDistribution::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    switch (kind) {
    case Kind::Lognormal:
        return normal_cdf((std::log(x) - location) / scale);
    case Kind::Exponential:
        return -std::expm1(-rate * x);
    case Kind::Tabulated: {
        double sum = 0.0;
        for (const auto& [size, prob] : atoms) {
            if (size <= x) sum += prob;
            else break;
        }
        return sum;
    }
    }
    return 0.0;
}

double ShockDistribution::quantile(double u) const {
    if (!(u > 0.0) || !(u < 1.0))
        throw DomainError("quantile argument must lie in (0,1), got " + num(u));
    switch (kind) {
    case Kind::Lognormal:
        return std::exp(location + scale * normal_quantile(u));
    case Kind::Exponential:
        return -std::log1p(-u) / rate;
    case Kind::Tabulated: {
        double cum = 0.0;
        for (const auto& [size, prob] : atoms) {
            cum += prob;
            if (u <= cum) return size;
        }
        return atoms.back().first; // u above total mass by rounding
    }
    }
    return 0.0;
}

UtilitySpec UtilitySpec::exponential_aversion(double profit_scale, double aversion) {
    if (!finite(profit_scale) || !finite(aversion) || profit_scale < 0.0 || !(aversion > 0.0))
        throw ValidationError("exponential_aversion utility requires C >= 0 and alpha > 0");
    UtilitySpec u;
    u.kind = Kind::ExponentialAversion;
    u.profit_scale = profit_scale;
    u.aversion = aversion;
    return u;
}

UtilitySpec UtilitySpec::tabulated(std::vector<double> values) {
    if (values.size() < 2)
        throw ValidationError("tabulated utility requires at least two node values");
    for (double v : values)
        if (!finite(v)) throw ValidationError("tabulated utility values must be finite");
    UtilitySpec u;
    u.kind = Kind::Tabulated;
    u.table = std::move(values);
    return u;
}

CostSpec CostSpec::quadratic(double fixed) {
    if (!finite(fixed) || fixed < 0.0)
        throw ValidationError("quadratic cost requires K >= 0, got " + num(fixed));
    CostSpec c;
    c.kind = Kind::Quadratic;
    c.fixed = fixed;
    return c;
}

CostSpec CostSpec::tabulated(std::vector<std::vector<double>> values) {
    if (values.size() < 2)
        throw ValidationError("tabulated cost requires at least a 2x2 matrix");
    for (const auto& row : values) {
        if (row.size() != values.size())
            throw ValidationError("tabulated cost matrix must be square over grid nodes");
        for (double v : row)
            if (!finite(v)) throw ValidationError("tabulated cost values must be finite");
    }
    CostSpec c;
    c.kind = Kind::Tabulated;
    c.table = std::move(values);
    return c;
}

void ModelSpec::validate() const {
    if (!finite(lambda) || lambda < 0.0)
        throw ValidationError("lambda must be finite and >= 0, got " + num(lambda));
    if (!finite(delta) || !(delta > 0.0))
        throw ValidationError("delta must be > 0, got " + num(delta));
    if (!finite(ceiling) || !(ceiling > 0.0))
        throw ValidationError("ceiling must be > 0, got " + num(ceiling));
    if (threshold != 0.0)
        throw ValidationError("threshold k* is fixed at 0; shift the state variable instead");
    shocks.validate();
}

double ModelSpec::value_upper_bound() const {
    return evaluate_utility(utility, ceiling, ceiling) / delta;
}

double evaluate_utility(const UtilitySpec& spec, double r, double ceiling) {
    if (!(r >= 0.0) || !(r <= ceiling))
        throw DomainError("utility argument outside [0, ceiling]: r=" + num(r));
    switch (spec.kind) {
    case UtilitySpec::Kind::ExponentialAversion:
        return spec.profit_scale / spec.aversion * (-std::expm1(-spec.aversion * r));
    case UtilitySpec::Kind::Tabulated: {
        const auto m = spec.table.size() - 1;
        const double pos = r / ceiling * static_cast<double>(m);
        const auto lo = std::min(static_cast<size_t>(pos), m - 1);
        const double frac = pos - static_cast<double>(lo);
        return spec.table[lo] * (1.0 - frac) + spec.table[lo + 1] * frac;
    }
    }
    return 0.0;
}

double cost_value(const CostSpec& spec, double r, double zeta, double ceiling) {
    switch (spec.kind) {
    case CostSpec::Kind::Quadratic:
        return r + zeta * zeta + spec.fixed;
    case CostSpec::Kind::Tabulated: {
        const auto m = spec.table.size() - 1;
        auto clamp01 = [&](double x) {
            return std::min(std::max(x / ceiling * static_cast<double>(m), 0.0),
                            static_cast<double>(m));
        };
        const double pr = clamp01(r);
        const double pz = clamp01(zeta);
        const auto jr = std::min(static_cast<size_t>(pr), m - 1);
        const auto jz = std::min(static_cast<size_t>(pz), m - 1);
        const double fr = pr - static_cast<double>(jr);
        const double fz = pz - static_cast<double>(jz);
        return spec.table[jr][jz] * (1.0 - fr) * (1.0 - fz) +
               spec.table[jr + 1][jz] * fr * (1.0 - fz) +
               spec.table[jr][jz + 1] * (1.0 - fr) * fz +
               spec.table[jr + 1][jz + 1] * fr * fz;
    }
    }
    return 0.0;
}

double evaluate_cost(const CostSpec& spec, double r, double zeta, double ceiling) {
    if (!(r >= 0.0) || !(r <= ceiling))
        throw DomainError("cost argument outside [0, ceiling]: r=" + num(r));
    if (!(zeta >= 0.0) || zeta > ceiling - r)
        throw DomainError("intervention zeta=" + num(zeta) + " outside admissible [0, " +
                          num(ceiling - r) + "] at r=" + num(r));
    return cost_value(spec, r, zeta, ceiling);
}

double cost_at_nodes(const CostSpec& spec, const Grid& grid, int j, int i) {
    if (spec.kind == CostSpec::Kind::Tabulated)
        return spec.table[static_cast<size_t>(j)][static_cast<size_t>(i)];
    const double r = grid.node(j);
    const double zeta = grid.node(i);
    return r + zeta * zeta + spec.fixed;
}

std::vector<double> discretize_shock_density(const ShockDistribution& shocks, double h, int n) {
    std::vector<double> p(static_cast<size_t>(n) + 1);
    p[0] = shocks.cdf(0.5 * h);
    double prev = p[0];
    for (int i = 1; i <= n; ++i) {
        const double cur = shocks.cdf((static_cast<double>(i) + 0.5) * h);
        p[static_cast<size_t>(i)] = cur - prev;
        prev = cur;
    }
    return p;
}

Grid build_grid(const ModelSpec& model, double h) {
    if (!finite(h) || !(h > 0.0))
        throw ConfigError("grid spacing h must be > 0, got " + num(h));
    const double ratio = model.ceiling / h;
    const double rounded = std::round(ratio);
    // 0.5-ulp divisibility test on the node count.
    if (std::abs(ratio - rounded) > 0.5 * std::abs(ratio) * std::numeric_limits<double>::epsilon() ||
        rounded < 1.0)
        throw ConfigError("grid spacing h=" + num(h) + " does not divide ceiling=" +
                          num(model.ceiling) + " into an integer number of intervals");
    Grid g;
    g.h = h;
    g.n = static_cast<int>(rounded);
    g.density = discretize_shock_density(model.shocks, h, g.n);
    return g;
}

void validate_on_grid(const ModelSpec& model, const Grid& grid) {
    model.validate();
    const int n = grid.n;
    if (model.utility.kind == UtilitySpec::Kind::Tabulated &&
        model.utility.table.size() != static_cast<size_t>(n) + 1)
        throw ValidationError("tabulated utility has " + std::to_string(model.utility.table.size()) +
                              " values but the grid has " + std::to_string(n + 1) + " nodes");
    if (model.cost.kind == CostSpec::Kind::Tabulated &&
        model.cost.table.size() != static_cast<size_t>(n) + 1)
        throw ValidationError("tabulated cost matrix has " + std::to_string(model.cost.table.size()) +
                              " rows but the grid has " + std::to_string(n + 1) + " nodes");

    // G(0) = 0 exactly; non-decreasing; concave (second differences <= 1e-12).
    std::vector<double> g(static_cast<size_t>(n) + 1);
    for (int j = 0; j <= n; ++j)
        g[static_cast<size_t>(j)] = evaluate_utility(model.utility, grid.node(j), model.ceiling);
    if (g[0] != 0.0)
        throw ValidationError("utility must satisfy G(0) = 0 exactly, got " + num(g[0]));
    for (int j = 0; j < n; ++j)
        if (g[static_cast<size_t>(j)] > g[static_cast<size_t>(j) + 1])
            throw ValidationError("utility must be non-decreasing; violated between nodes " +
                                  std::to_string(j) + " and " + std::to_string(j + 1));
    for (int j = 1; j < n; ++j) {
        const double second = g[static_cast<size_t>(j) + 1] - 2.0 * g[static_cast<size_t>(j)] +
                              g[static_cast<size_t>(j) - 1];
        if (second > 1e-12)
            throw ValidationError("utility must be concave; second difference " + num(second) +
                                  " at node " + std::to_string(j));
    }

    // C > 0 on every admissible node pair, non-decreasing in each argument.
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i + j <= n; ++i) {
            const double c = cost_at_nodes(model.cost, grid, j, i);
            if (!(c > 0.0))
                throw ValidationError("cost must be strictly positive; C(" + num(grid.node(j)) +
                                      ", " + num(grid.node(i)) + ") = " + num(c));
            if (i > 0 && c < cost_at_nodes(model.cost, grid, j, i - 1))
                throw ValidationError("cost must be non-decreasing in zeta; violated at node (" +
                                      std::to_string(j) + ", " + std::to_string(i) + ")");
            if (j > 0 && c < cost_at_nodes(model.cost, grid, j - 1, i))
                throw ValidationError("cost must be non-decreasing in r; violated at node (" +
                                      std::to_string(j) + ", " + std::to_string(i) + ")");
        }
    }

    const auto& p = grid.density;
    double sum = 0.0;
    for (double w : p) {
        if (w < 0.0) throw ValidationError("shock density weights must be non-negative");
        sum += w;
    }
    if (sum > 1.0 + 1e-12)
        throw ValidationError("shock density weights sum to " + num(sum) + " > 1");
}

} // namespace cbm
