#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ppdest/numerics.hpp"
#include "ppdest/types.hpp"

namespace ppdest {

inline Srvf to_srvf(const FunctionSample& f) {
    std::vector<double> d = derivative(f);
    std::vector<double> q(d.size());
    for (std::size_t j = 0; j < d.size(); ++j) {
        const double s = d[j] > 0.0 ? 1.0 : (d[j] < 0.0 ? -1.0 : 0.0);
        q[j] = s * std::sqrt(std::fabs(d[j]));
    }
    return Srvf(f.grid, std::move(q));
}

/// Inverse of to_srvf given the starting value: f(t) = f0 + integral of q|q|.
inline FunctionSample from_srvf(const Srvf& q, double f0) {
    std::vector<double> integrand(q.values.size());
    for (std::size_t j = 0; j < integrand.size(); ++j)
        integrand[j] = q.values[j] * std::fabs(q.values[j]);
    std::vector<double> f = cumulative_trapezoid(integrand, q.grid.spacing());
    for (double& x : f) x += f0;
    return FunctionSample(q.grid, std::move(f));
}

/// f composed with gamma. A bitwise-identity gamma returns f unchanged.
inline FunctionSample warp_function(const FunctionSample& f, const Warping& gamma) {
    if (!(f.grid == gamma.grid)) throw std::invalid_argument("warp_function: mismatched grids");
    if (gamma.is_identity()) return f;
    std::vector<double> out(f.values.size());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = interp_uniform(f.values, gamma.values[j]);
    return FunctionSample(f.grid, std::move(out));
}

/// Group action on SRVFs: (q ∘ gamma) · sqrt(gamma').
inline Srvf warp_srvf(const Srvf& q, const Warping& gamma) {
    if (!(q.grid == gamma.grid)) throw std::invalid_argument("warp_srvf: mismatched grids");
    if (gamma.is_identity()) return q;
    std::vector<double> gd = derivative(gamma.values, gamma.grid.spacing());
    std::vector<double> out(q.values.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double slope = std::max(0.0, gd[j]);
        out[j] = interp_uniform(q.values, gamma.values[j]) * std::sqrt(slope);
    }
    return Srvf(q.grid, std::move(out));
}

/// outer ∘ inner sampled on the shared grid.
inline Warping compose(const Warping& outer, const Warping& inner) {
    if (!(outer.grid == inner.grid)) throw std::invalid_argument("compose: mismatched grids");
    std::vector<double> out(inner.values.size());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = interp_uniform(outer.values, inner.values[j]);
    out.front() = 0.0;
    out.back() = 1.0;
    return Warping(inner.grid, std::move(out));
}

/// Monotone pseudo-inverse sampled on the grid. Increments below 1e-12 are
/// clamped before inversion; a flat run longer than one grid cell raises the
/// degenerate flag (the result is still returned).
inline Warping invert_warping(const Warping& gamma, bool* degenerate = nullptr) {
    if (degenerate) *degenerate = false;
    if (gamma.is_identity()) return gamma;

    const int n = gamma.grid.num_points;
    constexpr double kMinStep = 1e-12;
    int consecutive_flat = 0;
    std::vector<double> x(gamma.values);
    for (int j = 1; j < n; ++j) {
        if (gamma.values[j] - gamma.values[j - 1] < kMinStep) {
            if (++consecutive_flat >= 2 && degenerate) *degenerate = true;
        } else {
            consecutive_flat = 0;
        }
        if (x[j] < x[j - 1] + kMinStep) x[j] = x[j - 1] + kMinStep;
    }
    if (x.back() > 1.0) {
        const double scale = 1.0 / x.back();
        for (double& v : x) v *= scale;
    }
    x.front() = 0.0;
    x.back() = 1.0;

    std::vector<double> inv(n);
    const std::vector<double> t = gamma.grid.points();
    for (int j = 0; j < n; ++j) inv[j] = interp_sorted(x, t, gamma.grid.point(j));
    inv.front() = 0.0;
    inv.back() = 1.0;
    return Warping(gamma.grid, std::move(inv));
}

}  // namespace ppdest
