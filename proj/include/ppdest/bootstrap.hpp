#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "ppdest/align.hpp"
#include "ppdest/parallel.hpp"
#include "ppdest/rng.hpp"
#include "ppdest/shapefit.hpp"
#include "ppdest/types.hpp"

namespace ppdest {

struct BootstrapConfig {
    int replicates = 100;  // B
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

struct ConfidenceBand {
    Grid grid;
    std::vector<double> lower;
    std::vector<double> upper;
    double alpha = 0.05;
    int replicates = 0;
    int dropped = 0;
    bool few_replicates_warning = false;  // raised when B*alpha/2 < 1
};

/// Linear interpolation between order statistics at rank p(B-1)+1.
inline double quantile_linear(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = p * static_cast<double>(n - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo > n - 2) lo = n - 2;
    const double w = pos - static_cast<double>(lo);
    return sorted[lo] + w * (sorted[lo + 1] - sorted[lo]);
}

/// Pointwise band from replicate estimates. Exposed separately so the quantile
/// and drop accounting can be tested without running the full pipeline.
inline ConfidenceBand band_from_replicates(const Grid& grid,
                                           const std::vector<std::vector<double>>& estimates,
                                           int requested, double alpha) {
    const int dropped = requested - static_cast<int>(estimates.size());
    if (estimates.empty() || dropped > requested / 5)
        throw NumericError("bootstrap_band: more than 20% of replicates failed");
    ConfidenceBand band{grid, {}, {}, alpha, requested, dropped, false};
    band.lower.resize(grid.num_points);
    band.upper.resize(grid.num_points);
    std::vector<double> column(estimates.size());
    for (int j = 0; j < grid.num_points; ++j) {
        for (std::size_t r = 0; r < estimates.size(); ++r) column[r] = estimates[r][j];
        std::sort(column.begin(), column.end());
        band.lower[j] = quantile_linear(column, alpha / 2.0);
        band.upper[j] = quantile_linear(column, 1.0 - alpha / 2.0);
    }
    return band;
}

/// Resample-with-replacement band around the peak-constrained estimate.
/// g_init and lambda_star stay fixed across replicates; replicate j draws its
/// randomness from (seed, j), so execution order cannot change the band.
inline ConfidenceBand bootstrap_band(const FunctionSet& data, const FunctionSample& g_init,
                                     double lambda_star, const AlignConfig& acfg,
                                     const FitConfig& fcfg, const BootstrapConfig& bcfg) {
    const int n = data.size();
    if (n < 2) throw std::invalid_argument("bootstrap_band: need at least two functions");
    if (bcfg.replicates < 2) throw std::invalid_argument("bootstrap_band: need B >= 2");
    if (bcfg.alpha <= 0.0 || bcfg.alpha >= 1.0)
        throw std::invalid_argument("bootstrap_band: alpha must be in (0,1)");

    AlignConfig align_cfg = acfg;
    align_cfg.lambda = lambda_star;

    std::vector<std::optional<std::vector<double>>> slots(bcfg.replicates);
    parallel_for(static_cast<std::size_t>(bcfg.replicates), [&](std::size_t j) {
        Rng rng(Rng::derive(bcfg.seed, j));
        std::vector<FunctionSample> resample;
        resample.reserve(n);
        for (int i = 0; i < n; ++i)
            resample.push_back(data.functions[rng.below(static_cast<std::uint64_t>(n))]);
        try {
            FunctionSet boot(data.grid, std::move(resample));
            AlignmentResult aligned = multiple_align(boot, align_cfg);
            FitResult fr = fit_shape(aligned.aligned, g_init, fcfg);
            for (double v : fr.estimate.values)
                if (!std::isfinite(v)) return;  // replicate dropped
            slots[j] = std::move(fr.estimate.values);
        } catch (const std::exception&) {
            // replicate dropped; accounted for below
        }
    });

    std::vector<std::vector<double>> estimates;
    estimates.reserve(bcfg.replicates);
    for (auto& s : slots)
        if (s.has_value()) estimates.push_back(std::move(*s));

    ConfidenceBand band = band_from_replicates(data.grid, estimates, bcfg.replicates, bcfg.alpha);
    band.few_replicates_warning = bcfg.replicates * bcfg.alpha / 2.0 < 1.0;
    return band;
}

}  // namespace ppdest
