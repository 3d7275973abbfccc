#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ppdest/types.hpp"

namespace ppdest {

/// Central differences at interior points, second-order one-sided at the ends.
inline std::vector<double> derivative(const std::vector<double>& v, double h) {
    const int n = static_cast<int>(v.size());
    if (n < 3) throw std::invalid_argument("derivative: grid too small");
    std::vector<double> d(n);
    const double inv2h = 1.0 / (2.0 * h);
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv2h;
    for (int j = 1; j < n - 1; ++j) d[j] = (v[j + 1] - v[j - 1]) * inv2h;
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * inv2h;
    return d;
}

inline std::vector<double> derivative(const FunctionSample& f) {
    return derivative(f.values, f.grid.spacing());
}

/// Second differences at interior points, second-order one-sided at the ends.
inline std::vector<double> second_derivative(const std::vector<double>& v, double h) {
    const int n = static_cast<int>(v.size());
    if (n < 4) throw std::invalid_argument("second_derivative: grid too small");
    std::vector<double> d(n);
    const double invh2 = 1.0 / (h * h);
    d[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) * invh2;
    for (int j = 1; j < n - 1; ++j) d[j] = (v[j - 1] - 2.0 * v[j] + v[j + 1]) * invh2;
    d[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) * invh2;
    return d;
}

inline double trapezoid(const std::vector<double>& v, double h) {
    double s = 0.0;
    for (double x : v) s += x;
    s -= 0.5 * (v.front() + v.back());
    return s * h;
}

inline std::vector<double> cumulative_trapezoid(const std::vector<double>& v, double h) {
    std::vector<double> out(v.size());
    out[0] = 0.0;
    for (std::size_t j = 1; j < v.size(); ++j)
        out[j] = out[j - 1] + 0.5 * h * (v[j - 1] + v[j]);
    return out;
}

inline double l2_norm(const std::vector<double>& v, double h) {
    double s = 0.0;
    for (double x : v) s += x * x;
    s -= 0.5 * (v.front() * v.front() + v.back() * v.back());
    return std::sqrt(std::max(0.0, s * h));
}

inline double l2_norm(const FunctionSample& f) { return l2_norm(f.values, f.grid.spacing()); }
inline double l2_norm(const Srvf& q) { return l2_norm(q.values, q.grid.spacing()); }

/// Linear interpolation of values sampled on the uniform grid, at x in [0,1].
inline double interp_uniform(const std::vector<double>& values, double x) {
    const int n = static_cast<int>(values.size());
    if (x <= 0.0) return values.front();
    if (x >= 1.0) return values.back();
    const double pos = x * (n - 1);
    int i = static_cast<int>(pos);
    if (i > n - 2) i = n - 2;
    const double w = pos - i;
    return values[i] + w * (values[i + 1] - values[i]);
}

/// Linear interpolation against sorted (non-decreasing) abscissae.
inline double interp_sorted(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
    const double dx = xs[i + 1] - xs[i];
    if (dx <= 0.0) return ys[i];
    const double w = (x - xs[i]) / dx;
    return ys[i] + w * (ys[i + 1] - ys[i]);
}

}  // namespace ppdest
