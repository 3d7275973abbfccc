#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppdest/align.hpp"
#include "ppdest/bootstrap.hpp"
#include "ppdest/numerics.hpp"
#include "ppdest/ppd.hpp"
#include "ppdest/shapefit.hpp"
#include "ppdest/simulate.hpp"
#include "ppdest/types.hpp"

namespace ppdest {

/// Raised for malformed configuration (maps to exit code 1 in the CLI).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 17 significant digits: doubles survive a write/read round trip exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    int rows() const { return columns.empty() ? 0 : static_cast<int>(columns.front().size()); }
};

inline void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (std::size_t c = 0; c < table.header.size(); ++c)
        out << (c ? "," : "") << table.header[c];
    out << "\n";
    const int rows = table.rows();
    for (int r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            out << (c ? "," : "") << format_double(table.columns[c][r]);
        out << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) table.header.push_back(cell);
    }
    if (table.header.empty()) throw DataError(path + ": empty header");
    table.columns.resize(table.header.size());
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col >= table.columns.size())
                throw DataError(path + ": row " + std::to_string(row) + " has too many columns");
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
                table.columns[col].push_back(v);
            } catch (const std::exception&) {
                throw DataError(path + ": row " + std::to_string(row) + ", column " +
                                std::to_string(col + 1) + ": not a number: '" + cell + "'");
            }
            ++col;
        }
        if (col != table.columns.size())
            throw DataError(path + ": row " + std::to_string(row) + " has " + std::to_string(col) +
                            " columns, expected " + std::to_string(table.columns.size()));
    }
    if (table.rows() == 0) throw DataError(path + ": no data rows");
    return table;
}

/// Ingest a wide table of curves: first column is an increasing abscissa, the
/// rest are functions; everything is resampled onto the uniform grid.
inline FunctionSet function_set_from_csv(const CsvTable& table, const Grid& grid,
                                         const std::string& origin) {
    if (table.columns.size() < 2)
        throw DataError(origin + ": need a time column plus at least one function column");
    const std::vector<double>& ts = table.columns.front();
    if (static_cast<int>(ts.size()) < 2) throw DataError(origin + ": need at least two rows");
    for (std::size_t r = 1; r < ts.size(); ++r)
        if (ts[r] <= ts[r - 1])
            throw DataError(origin + ": time column must be strictly increasing (row " +
                            std::to_string(r + 2) + ")");
    const double t0 = ts.front(), span = ts.back() - ts.front();
    std::vector<double> unit(ts.size());
    for (std::size_t r = 0; r < ts.size(); ++r) unit[r] = (ts[r] - t0) / span;

    std::vector<FunctionSample> fs;
    fs.reserve(table.columns.size() - 1);
    for (std::size_t c = 1; c < table.columns.size(); ++c) {
        std::vector<double> v(grid.num_points);
        for (int j = 0; j < grid.num_points; ++j)
            v[j] = interp_sorted(unit, table.columns[c], grid.point(j));
        fs.emplace_back(grid, std::move(v));
    }
    return FunctionSet(grid, std::move(fs));
}

inline CsvTable function_set_to_csv(const FunctionSet& data,
                                    const std::vector<std::string>& names) {
    CsvTable t;
    t.header.push_back("t");
    t.columns.push_back(data.grid.points());
    for (int i = 0; i < data.size(); ++i) {
        t.header.push_back(names.empty() ? "f" + std::to_string(i + 1) : names[i]);
        t.columns.push_back(data.functions[i].values);
    }
    return t;
}

struct RunConfig {
    int grid_points = 100;
    int n = 100;
    AlignConfig align;
    PpdConfig ppd;
    FitConfig fit;
    int bootstrap_replicates = 100;
    double bootstrap_alpha = 0.05;
    double noise_sigma_a = 0.05;
    double noise_sigma_eps_rel = 0.03;
    double noise_warp_strength = 0.3;
    int noise_modes = 4;
    std::vector<double> kappa_grid = {0.01, 0.1, 1.0};
    std::uint64_t seed = 42;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) ok = true;
        if (!ok) throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
void maybe_read(const nlohmann::json& obj, const char* key, T& target) {
    if (obj.contains(key)) target = obj.at(key).get<T>();
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig cfg;
    detail::reject_unknown_keys(
        j, {"grid", "n", "align", "ppd", "fit", "bootstrap", "noise", "l2", "seed"}, "top level");
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        detail::reject_unknown_keys(g, {"num_points"}, "grid");
        detail::maybe_read(g, "num_points", cfg.grid_points);
    }
    detail::maybe_read(j, "n", cfg.n);
    detail::maybe_read(j, "seed", cfg.seed);
    if (j.contains("align")) {
        const auto& a = j.at("align");
        detail::reject_unknown_keys(a, {"lambda", "dp_max_step", "tol", "max_iter"}, "align");
        detail::maybe_read(a, "lambda", cfg.align.lambda);
        detail::maybe_read(a, "dp_max_step", cfg.align.dp_max_step);
        detail::maybe_read(a, "tol", cfg.align.tol);
        detail::maybe_read(a, "max_iter", cfg.align.max_iter);
    }
    if (j.contains("ppd")) {
        const auto& p = j.at("ppd");
        detail::reject_unknown_keys(
            p, {"lambda_grid", "lambda_max", "lambda_step", "tau", "theta", "track_radius",
               "boundary_margin"},
            "ppd");
        if (p.contains("lambda_grid")) {
            cfg.ppd.lambda_grid = p.at("lambda_grid").get<std::vector<double>>();
        } else if (p.contains("lambda_max") || p.contains("lambda_step")) {
            double lmax = 0.2, lstep = 0.005;
            detail::maybe_read(p, "lambda_max", lmax);
            detail::maybe_read(p, "lambda_step", lstep);
            if (lstep <= 0.0 || lmax < 0.0) throw ConfigError("config: bad ppd lambda range");
            cfg.ppd.lambda_grid.clear();
            for (int i = 0;; ++i) {
                const double v = i * lstep;
                if (v > lmax + 1e-12) break;
                cfg.ppd.lambda_grid.push_back(v);
            }
        }
        detail::maybe_read(p, "tau", cfg.ppd.tau);
        detail::maybe_read(p, "theta", cfg.ppd.theta);
        detail::maybe_read(p, "track_radius", cfg.ppd.track_radius);
        detail::maybe_read(p, "boundary_margin", cfg.ppd.boundary_margin);
    }
    if (j.contains("fit")) {
        const auto& f = j.at("fit");
        detail::reject_unknown_keys(f, {"rho", "basis_size", "max_evals", "step_tol", "restarts"},
                                    "fit");
        detail::maybe_read(f, "rho", cfg.fit.rho);
        detail::maybe_read(f, "basis_size", cfg.fit.basis_size);
        detail::maybe_read(f, "max_evals", cfg.fit.max_evals);
        detail::maybe_read(f, "step_tol", cfg.fit.step_tol);
        detail::maybe_read(f, "restarts", cfg.fit.restarts);
    }
    if (j.contains("bootstrap")) {
        const auto& b = j.at("bootstrap");
        detail::reject_unknown_keys(b, {"replicates", "alpha"}, "bootstrap");
        detail::maybe_read(b, "replicates", cfg.bootstrap_replicates);
        detail::maybe_read(b, "alpha", cfg.bootstrap_alpha);
    }
    if (j.contains("noise")) {
        const auto& nm = j.at("noise");
        detail::reject_unknown_keys(nm, {"sigma_a", "sigma_eps_rel", "warp_strength", "modes"},
                                    "noise");
        detail::maybe_read(nm, "sigma_a", cfg.noise_sigma_a);
        detail::maybe_read(nm, "sigma_eps_rel", cfg.noise_sigma_eps_rel);
        detail::maybe_read(nm, "warp_strength", cfg.noise_warp_strength);
        detail::maybe_read(nm, "modes", cfg.noise_modes);
    }
    if (j.contains("l2")) {
        const auto& l = j.at("l2");
        detail::reject_unknown_keys(l, {"kappa_grid"}, "l2");
        detail::maybe_read(l, "kappa_grid", cfg.kappa_grid);
    }

    if (cfg.grid_points < 3) throw ConfigError("config: grid.num_points must be >= 3");
    if (cfg.n < 1) throw ConfigError("config: n must be >= 1");
    if (cfg.ppd.lambda_grid.empty()) throw ConfigError("config: ppd lambda grid is empty");
    try {
        ppdest::detail::validate_ppd_config(cfg.ppd);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (cfg.align.lambda < 0.0) throw ConfigError("config: align.lambda must be >= 0");
    if (cfg.bootstrap_replicates < 2) throw ConfigError("config: bootstrap.replicates must be >= 2");
    if (cfg.bootstrap_alpha <= 0.0 || cfg.bootstrap_alpha >= 1.0)
        throw ConfigError("config: bootstrap.alpha must be in (0,1)");
    if (cfg.noise_sigma_a < 0.0 || cfg.noise_sigma_eps_rel < 0.0 || cfg.noise_warp_strength < 0.0)
        throw ConfigError("config: noise parameters must be >= 0");
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
    }
    return parse_config(j);
}

inline Scenario scenario_from_config(ScenarioId id, const RunConfig& cfg) {
    Scenario scn = make_scenario(id, cfg.n, cfg.grid_points, cfg.seed);
    scn.noise.sigma_a = cfg.noise_sigma_a;
    scn.noise.warp_strength = cfg.noise_warp_strength;
    scn.noise.modes = cfg.noise_modes;
    const FunctionSample g = scenario_signal(id, scn.grid);
    double lo = g.values.front(), hi = g.values.front();
    for (double v : g.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    scn.noise.sigma_eps = cfg.noise_sigma_eps_rel * (hi - lo);
    return scn;
}

}  // namespace ppdest
