#pragma once

#include <cmath>
#include <vector>

#include "ppdest/numerics.hpp"
#include "ppdest/types.hpp"

namespace ppdest {

/// Finite-dimensional coordinates of a warping: sqrt(gamma') lies on the unit
/// sphere in L2, and the tangent vector at the constant function 1 is expanded
/// in a Fourier basis of the orthogonal complement of constants.
struct WarpCoefficients {
    std::vector<double> c;
    int size() const { return static_cast<int>(c.size()); }
};

namespace detail {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;

/// Orthonormal basis element k (0-based): sqrt(2)sin(2*pi*j*t), sqrt(2)cos(2*pi*j*t)
/// interleaved, j = k/2 + 1. All are orthogonal to the constant function.
inline double fourier_basis(int k, double t) {
    const int j = k / 2 + 1;
    const double arg = kTwoPi * j * t;
    return (k % 2 == 0) ? kSqrt2 * std::sin(arg) : kSqrt2 * std::cos(arg);
}

/// Exponential map at psi=1 followed by square-integration; the tangent values
/// are given on the grid. Norms at or beyond the injectivity radius are pulled
/// back to pi - 1e-3.
inline Warping warp_from_tangent(std::vector<double> v, const Grid& grid, double norm_cap) {
    const double h = grid.spacing();
    double norm = l2_norm(v, h);
    if (norm < 1e-12) return Warping::identity(grid);
    if (norm > norm_cap) {
        const double scale = norm_cap / norm;
        for (double& x : v) x *= scale;
        norm = norm_cap;
    }
    const double c = std::cos(norm), s = std::sin(norm);
    std::vector<double> psi_sq(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double psi = c + s * (v[j] / norm);
        psi_sq[j] = psi * psi;
    }
    std::vector<double> g = cumulative_trapezoid(psi_sq, h);
    const double total = g.back();
    if (total <= 0.0) return Warping::identity(grid);
    for (double& x : g) x /= total;
    g.front() = 0.0;
    g.back() = 1.0;
    return Warping(grid, std::move(g));
}

}  // namespace detail

inline Warping decode_warping(const WarpCoefficients& coef, const Grid& grid) {
    std::vector<double> v(grid.num_points, 0.0);
    bool all_zero = true;
    for (double ck : coef.c)
        if (ck != 0.0) all_zero = false;
    if (all_zero) return Warping::identity(grid);
    for (int j = 0; j < grid.num_points; ++j) {
        const double t = grid.point(j);
        double acc = 0.0;
        for (int k = 0; k < coef.size(); ++k) acc += coef.c[k] * detail::fourier_basis(k, t);
        v[j] = acc;
    }
    return detail::warp_from_tangent(std::move(v), grid, 3.14159265358979323846 - 1e-3);
}

inline WarpCoefficients encode_warping(const Warping& gamma, int K) {
    if (K < 1) throw std::invalid_argument("encode_warping: K must be >= 1");
    const Grid& grid = gamma.grid;
    const double h = grid.spacing();
    std::vector<double> gd = derivative(gamma.values, h);
    std::vector<double> psi(gd.size());
    for (std::size_t j = 0; j < gd.size(); ++j) psi[j] = std::sqrt(std::max(0.0, gd[j]));

    std::vector<double> prod(psi);
    double inner = trapezoid(prod, h);
    inner = std::min(1.0, std::max(-1.0, inner));
    const double theta = std::acos(inner);

    std::vector<double> v(psi.size());
    if (theta < 1e-9) {
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = psi[j] - 1.0;
    } else {
        const double scale = theta / std::sin(theta);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = scale * (psi[j] - inner);
    }

    WarpCoefficients coef;
    coef.c.resize(K);
    std::vector<double> integrand(v.size());
    for (int k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < v.size(); ++j)
            integrand[j] = v[j] * detail::fourier_basis(k, grid.point(static_cast<int>(j)));
        coef.c[k] = trapezoid(integrand, h);
    }
    return coef;
}

}  // namespace ppdest
