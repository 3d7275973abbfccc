#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ppdest/align.hpp"
#include "ppdest/ppd.hpp"
#include "ppdest/rng.hpp"
#include "ppdest/shapefit.hpp"
#include "ppdest/types.hpp"
#include "ppdest/warpcoord.hpp"

namespace ppdest {

/// Noise components of the observation model f_i = a_i (g ∘ gamma_i) + eps_i.
struct NoiseModel {
    double sigma_a = 0.05;       // scaling noise, a_i ~ N(1, sigma_a^2) truncated positive
    double sigma_eps = 0.03;     // additive-noise amplitude (signal units)
    int modes = 4;               // random Fourier modes in eps_i
    double warp_strength = 0.3;  // phase-noise magnitude
};

enum class ScenarioId { Bimodal = 1, Sawtooth = 2, FlatMiddle = 3, BroadUnimodal = 4, MixtureA, MixtureB };

inline ScenarioId scenario_id_from_string(const std::string& s) {
    if (s == "1") return ScenarioId::Bimodal;
    if (s == "2") return ScenarioId::Sawtooth;
    if (s == "3") return ScenarioId::FlatMiddle;
    if (s == "4") return ScenarioId::BroadUnimodal;
    if (s == "mixture-A") return ScenarioId::MixtureA;
    if (s == "mixture-B") return ScenarioId::MixtureB;
    throw std::invalid_argument("unknown scenario: " + s);
}

struct Scenario {
    ScenarioId id = ScenarioId::Bimodal;
    int n = 100;
    Grid grid{100};
    NoiseModel noise;
    std::uint64_t seed = 0;
};

namespace detail {

inline double gaussian_bump(double t, double center, double width) {
    const double d = (t - center) / width;
    return std::exp(-0.5 * d * d);
}

/// Compactly supported C2 bump: (1-u^2)^3 inside |u|<1, exactly zero outside.
inline double compact_bump(double t, double center, double radius) {
    const double u = (t - center) / radius;
    if (u <= -1.0 || u >= 1.0) return 0.0;
    const double w = 1.0 - u * u;
    return w * w * w;
}

inline double piecewise_linear(double t, const std::vector<double>& xs,
                               const std::vector<double>& ys) {
    return interp_sorted(xs, ys, t);
}

inline double trimodal_signal(double t) {
    return 0.7 * gaussian_bump(t, 0.2, 0.06) + gaussian_bump(t, 0.5, 0.06) +
           0.8 * gaussian_bump(t, 0.8, 0.06);
}

inline double bimodal_signal(double t) {
    return 0.8 * gaussian_bump(t, 0.3, 0.08) + gaussian_bump(t, 0.7, 0.08);
}

inline double signal_value(ScenarioId id, double t) {
    switch (id) {
        case ScenarioId::Bimodal:
        case ScenarioId::MixtureA:
            return bimodal_signal(t);
        case ScenarioId::Sawtooth:
            return piecewise_linear(t, {0.0, 0.25, 0.5, 0.75, 1.0}, {0.0, 1.0, 0.2, 1.0, 0.0});
        case ScenarioId::FlatMiddle:
            return compact_bump(t, 0.15, 0.09) + compact_bump(t, 0.85, 0.09);
        case ScenarioId::BroadUnimodal:
            return gaussian_bump(t, 0.5, 0.15);
        case ScenarioId::MixtureB:
            return trimodal_signal(t);
    }
    throw std::invalid_argument("signal_value: bad scenario id");
}

inline FunctionSample sample_signal(ScenarioId id, const Grid& grid) {
    std::vector<double> v(grid.num_points);
    for (int j = 0; j < grid.num_points; ++j) v[j] = signal_value(id, grid.point(j));
    return FunctionSample(grid, std::move(v));
}

}  // namespace detail

/// The true signal underlying a scenario (the majority component for mixtures).
inline FunctionSample scenario_signal(ScenarioId id, const Grid& grid) {
    return detail::sample_signal(id, grid);
}

/// Scenario with the documented noise defaults; sigma_eps scales with the
/// signal range.
inline Scenario make_scenario(ScenarioId id, int n, int grid_points, std::uint64_t seed) {
    Scenario scn{id, n, Grid(grid_points), NoiseModel{}, seed};
    const FunctionSample g = scenario_signal(id, scn.grid);
    double lo = g.values.front(), hi = g.values.front();
    for (double v : g.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    scn.noise.sigma_eps = 0.03 * (hi - lo);
    return scn;
}

/// Random boundary-preserving warp with identity mean: a Gaussian tangent
/// vector over the first four Fourier basis elements, mapped through the
/// sphere exponential and square-integrated.
inline Warping random_warping(double strength, Rng& rng, const Grid& grid) {
    if (strength < 0.0) throw std::invalid_argument("random_warping: strength must be >= 0");
    double z[4];
    for (double& x : z) x = rng.normal();
    std::vector<double> v(grid.num_points, 0.0);
    if (strength > 0.0) {
        for (int j = 0; j < grid.num_points; ++j) {
            const double t = grid.point(j);
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += z[k] * detail::fourier_basis(k, t);
            v[j] = strength * acc;
        }
    }
    return detail::warp_from_tangent(std::move(v), grid, 1.5707963267948966 - 1e-6);
}

struct GeneratedData {
    FunctionSet data;
    FunctionSample g_true;
};

/// Draw n observations f_i = a_i (g ∘ gamma_i) + eps_i, deterministically from
/// the scenario seed. Mixtures draw the first 80% of curves from the majority
/// signal and the rest from the contaminating one.
inline GeneratedData generate(const Scenario& scn) {
    const Grid& grid = scn.grid;
    const FunctionSample g_true = scenario_signal(scn.id, grid);
    const bool mixture = scn.id == ScenarioId::MixtureA || scn.id == ScenarioId::MixtureB;
    const int majority = (scn.n * 4) / 5;
    const FunctionSample g_minor =
        mixture ? detail::sample_signal(
                      scn.id == ScenarioId::MixtureA ? ScenarioId::MixtureB : ScenarioId::MixtureA,
                      grid)
                : g_true;

    std::vector<FunctionSample> fs;
    fs.reserve(scn.n);
    for (int i = 0; i < scn.n; ++i) {
        Rng rng(Rng::derive(scn.seed, static_cast<std::uint64_t>(i)));
        double a = 1.0;
        do {
            a = 1.0 + scn.noise.sigma_a * rng.normal();
        } while (a <= 0.0);
        const Warping gamma = random_warping(scn.noise.warp_strength, rng, grid);

        std::vector<double> zs(2 * scn.noise.modes);
        for (double& z : zs) z = rng.normal();

        const FunctionSample& base = (mixture && i >= majority) ? g_minor : g_true;
        FunctionSample warped = warp_function(base, gamma);
        std::vector<double> values(grid.num_points);
        for (int j = 0; j < grid.num_points; ++j) {
            const double t = grid.point(j);
            double eps = 0.0;
            for (int mode = 1; mode <= scn.noise.modes; ++mode) {
                const double arg = 3.14159265358979323846 * mode * t;
                eps += zs[2 * (mode - 1)] / mode * std::sin(arg) +
                       zs[2 * (mode - 1) + 1] / mode * std::cos(arg);
            }
            values[j] = a * warped.values[j] + scn.noise.sigma_eps * eps;
        }
        fs.emplace_back(grid, std::move(values));
    }
    return GeneratedData{FunctionSet(grid, std::move(fs)), g_true};
}

inline double rmse(const FunctionSample& a, const FunctionSample& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("rmse: mismatched grids");
    double acc = 0.0;
    for (std::size_t j = 0; j < a.values.size(); ++j) {
        const double d = a.values[j] - b.values[j];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.values.size()));
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty input");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct ExperimentConfig {
    AlignConfig align;
    PpdConfig ppd;
    FitConfig fit;
    std::vector<double> kappa_grid;
};

struct RepRecord {
    int rep = 0;
    bool failed = false;
    std::string error;
    int m = 0;
    double lambda_star = 0.0;
    bool ppd_flagged = false;
    double rmse_unaligned = 0.0;  // cross-sectional mean
    double rmse_elastic = 0.0;    // lambda = 0 aligned mean
    double rmse_fit = 0.0;        // peak-constrained estimate
    std::vector<double> rmse_l2;  // one entry per kappa
    double fit_initial_objective = 0.0;
    double fit_final_objective = 0.0;
    bool fit_descent_ok = false;
    bool fit_m_match = false;
    bool fit_converged = false;
    double secs_ppd = 0.0;
    double secs_l2 = 0.0;
    double secs_fit = 0.0;
};

struct ExperimentReport {
    std::vector<double> kappa_grid;
    std::vector<RepRecord> rows;

    std::vector<double> column(double RepRecord::* field) const {
        std::vector<double> out;
        for (const RepRecord& r : rows)
            if (!r.failed) out.push_back(r.*field);
        return out;
    }
};

/// One replication: generate, estimate with every method, score against the
/// truth.
inline RepRecord run_replication(const Scenario& scn, int rep, const ExperimentConfig& cfg) {
    using clock = std::chrono::steady_clock;
    RepRecord row;
    row.rep = rep;
    Scenario rep_scn = scn;
    rep_scn.seed = Rng::derive(scn.seed, 0x5EED0000ull + static_cast<std::uint64_t>(rep));
    try {
        GeneratedData gen = generate(rep_scn);

        const FunctionSample g_inf = cross_sectional_mean(gen.data);
        row.rmse_unaligned = rmse(g_inf, gen.g_true);

        const auto t0 = clock::now();
        PpdResult ppd = build_ppd(gen.data, cfg.align, cfg.ppd);
        row.secs_ppd = std::chrono::duration<double>(clock::now() - t0).count();
        row.m = ppd.m;
        row.lambda_star = ppd.lambda_star;
        row.ppd_flagged = ppd.flagged;
        row.rmse_elastic = rmse(ppd.means.front().second, gen.g_true);

        const auto t1 = clock::now();
        for (double kappa : cfg.kappa_grid) {
            L2Config l2;
            l2.kappa = kappa;
            row.rmse_l2.push_back(rmse(penalized_l2_align(gen.data, l2).mean, gen.g_true));
        }
        row.secs_l2 = std::chrono::duration<double>(clock::now() - t1).count();

        const auto t2 = clock::now();
        AlignConfig star_cfg = cfg.align;
        star_cfg.lambda = ppd.lambda_star;
        AlignmentResult star = multiple_align(gen.data, star_cfg);
        FunctionSample g_init = initial_estimate(
            simplify_template(extract_template(star.mean), ppd.m), scn.grid);
        FitResult fit = fit_shape(star.aligned, g_init, cfg.fit);
        row.secs_fit = std::chrono::duration<double>(clock::now() - t2).count();

        row.rmse_fit = rmse(fit.estimate, gen.g_true);
        row.fit_initial_objective = fit.initial_objective;
        row.fit_final_objective = fit.final_objective;
        row.fit_descent_ok = fit.final_objective <= fit.initial_objective + 1e-10;
        row.fit_m_match = extract_template(fit.estimate).m() == ppd.m;
        row.fit_converged = fit.converged;
    } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
    }
    return row;
}

inline ExperimentReport run_experiment(const Scenario& scn, int reps, const ExperimentConfig& cfg) {
    if (reps < 1) throw std::invalid_argument("run_experiment: reps must be >= 1");
    ExperimentReport report;
    report.kappa_grid = cfg.kappa_grid;
    report.rows.reserve(reps);
    for (int r = 0; r < reps; ++r) report.rows.push_back(run_replication(scn, r, cfg));
    return report;
}

}  // namespace ppdest
