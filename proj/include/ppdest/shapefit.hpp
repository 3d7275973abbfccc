#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "ppdest/numerics.hpp"
#include "ppdest/ppd.hpp"
#include "ppdest/rng.hpp"
#include "ppdest/types.hpp"
#include "ppdest/warpcoord.hpp"

namespace ppdest {

enum class ExtremumKind { Peak, Valley, EndpointMin, EndpointMax };

inline bool is_maximum(ExtremumKind k) {
    return k == ExtremumKind::Peak || k == ExtremumKind::EndpointMax;
}

struct Extremum {
    ExtremumKind kind;
    double location;
    double height;
};

/// Ordered extrema of an estimate: interior peaks/valleys plus both endpoints,
/// alternating between maxima and minima along the list.
struct ShapeTemplate {
    std::vector<Extremum> extrema;

    int M() const { return static_cast<int>(extrema.size()); }
    int m() const {
        int count = 0;
        for (const Extremum& e : extrema)
            if (e.kind == ExtremumKind::Peak) ++count;
        return count;
    }
    std::vector<double> heights() const {
        std::vector<double> s(extrema.size());
        for (std::size_t i = 0; i < extrema.size(); ++i) s[i] = extrema[i].height;
        return s;
    }
};

struct FitConfig {
    double rho = 1e-8;       // smoothness weight
    int basis_size = 10;     // warp coefficient count K
    int max_evals = 5000;    // objective evaluation budget across restarts
    double step_tol = 1e-8;
    int restarts = 3;
};

namespace detail {

inline void validate_template(const ShapeTemplate& tpl) {
    const auto& e = tpl.extrema;
    if (e.size() < 2) throw std::invalid_argument("ShapeTemplate: need at least two extrema");
    if (e.front().location != 0.0 || e.back().location != 1.0)
        throw std::invalid_argument("ShapeTemplate: endpoints must sit at 0 and 1");
    for (std::size_t i = 1; i < e.size(); ++i) {
        if (e[i].location <= e[i - 1].location)
            throw std::invalid_argument("ShapeTemplate: locations must be strictly increasing");
        if (is_maximum(e[i].kind) == is_maximum(e[i - 1].kind))
            throw std::invalid_argument("ShapeTemplate: kinds must alternate");
    }
}

inline void validate_heights(const ShapeTemplate& tpl, const std::vector<double>& s) {
    const auto& e = tpl.extrema;
    if (s.size() != e.size()) throw std::invalid_argument("height vector: wrong length");
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (is_maximum(e[i].kind)) continue;
        if (i > 0 && s[i] >= s[i - 1])
            throw std::invalid_argument("height vector: minimum not below left neighbor");
        if (i + 1 < e.size() && s[i] >= s[i + 1])
            throw std::invalid_argument("height vector: minimum not below right neighbor");
    }
}

/// Monotone cubic Hermite segments. Interior extrema get zero slope (they are
/// the only stationary points); boundary knots get 1.5x the segment secant,
/// which stays strictly inside the monotone region for cubics and lets the
/// estimate carry nonzero slopes at the ends of the interval.
inline double evaluate_template(const std::vector<double>& locations,
                                const std::vector<double>& heights, double t) {
    const int M = static_cast<int>(locations.size());
    if (t <= 0.0) return heights.front();
    if (t >= 1.0) return heights.back();
    int lo = 0, hi = M - 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (locations[mid] <= t)
            lo = mid;
        else
            hi = mid;
    }
    const double u = (t - locations[lo]) / (locations[hi] - locations[lo]);
    const double alpha = lo == 0 ? 1.5 : 0.0;
    const double beta = hi == M - 1 ? 1.5 : 0.0;
    const double shape = u * u * (3.0 - 2.0 * u) + alpha * (u - 2.0 * u * u + u * u * u) +
                         beta * (u * u * u - u * u);
    return heights[lo] + (heights[hi] - heights[lo]) * shape;
}

inline std::vector<double> template_locations(const ShapeTemplate& tpl) {
    std::vector<double> x(tpl.extrema.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = tpl.extrema[i].location;
    return x;
}

}  // namespace detail

/// Ordered peaks and valleys with both endpoints classified by comparison with
/// the nearest interior extremum. Non-alternating detections (a safety case)
/// drop the weaker by curvature.
inline ShapeTemplate extract_template(const FunctionSample& g) {
    const int T = g.grid.num_points;
    if (T < 3) throw std::invalid_argument("extract_template: fewer than 3 grid points");
    const double h = g.grid.spacing();

    struct Interior {
        bool maximum;
        int index;
        double location;
        double height;
    };
    std::vector<Interior> interior;
    if (T >= 5) {
        FunctionSample neg(g.grid, [&] {
            std::vector<double> v(g.values);
            for (double& x : v) x = -x;
            return v;
        }());
        for (const DetectedPeak& p : find_internal_peaks(g))
            interior.push_back({true, p.index, p.location, p.height});
        for (const DetectedPeak& p : find_internal_peaks(neg))
            interior.push_back({false, p.index, p.location, -p.height});
        std::sort(interior.begin(), interior.end(),
                  [](const Interior& a, const Interior& b) { return a.location < b.location; });

        const std::vector<double> g2 = second_derivative(g.values, h);
        bool changed = true;
        while (changed && interior.size() > 1) {
            changed = false;
            for (std::size_t i = 1; i < interior.size(); ++i) {
                if (interior[i].maximum != interior[i - 1].maximum) continue;
                const double left = std::fabs(g2[interior[i - 1].index]);
                const double right = std::fabs(g2[interior[i].index]);
                interior.erase(interior.begin() + (right > left ? i - 1 : i));
                changed = true;
                break;
            }
        }
    }

    ShapeTemplate tpl;
    if (interior.empty()) {
        const bool rising = g.values.back() >= g.values.front();
        tpl.extrema.push_back({rising ? ExtremumKind::EndpointMin : ExtremumKind::EndpointMax, 0.0,
                               g.values.front()});
        tpl.extrema.push_back({rising ? ExtremumKind::EndpointMax : ExtremumKind::EndpointMin, 1.0,
                               g.values.back()});
        return tpl;
    }

    tpl.extrema.push_back({interior.front().maximum ? ExtremumKind::EndpointMin
                                                    : ExtremumKind::EndpointMax,
                           0.0, g.values.front()});
    for (const Interior& e : interior)
        tpl.extrema.push_back(
            {e.maximum ? ExtremumKind::Peak : ExtremumKind::Valley, e.location, e.height});
    tpl.extrema.push_back({interior.back().maximum ? ExtremumKind::EndpointMin
                                                   : ExtremumKind::EndpointMax,
                           1.0, g.values.back()});
    detail::validate_template(tpl);
    return tpl;
}

/// Reduce a template to exactly target_m interior peaks by repeatedly removing
/// the least prominent peak together with the higher of its flanking minima.
/// Used to put the initial estimate into the selected shape class: the mean at
/// lambda* may still carry insignificant micro-extrema that the peak count
/// from the persistence step has already rejected.
inline ShapeTemplate simplify_template(const ShapeTemplate& tpl, int target_m) {
    detail::validate_template(tpl);
    if (target_m < 0) throw std::invalid_argument("simplify_template: target_m must be >= 0");
    if (tpl.m() <= target_m) return tpl;

    std::vector<Extremum> interior(tpl.extrema.begin() + 1, tpl.extrema.end() - 1);
    const Extremum front = tpl.extrema.front();
    const Extremum back = tpl.extrema.back();

    auto peak_count = [&] {
        int c = 0;
        for (const Extremum& e : interior)
            if (e.kind == ExtremumKind::Peak) ++c;
        return c;
    };
    auto min_height_beside = [&](int i) {
        // flanking minimum heights; endpoints stand in when the peak is first/last
        const double left = i > 0 ? interior[i - 1].height : front.height;
        const double right = i + 1 < static_cast<int>(interior.size()) ? interior[i + 1].height
                                                                       : back.height;
        return std::pair<double, double>{left, right};
    };

    while (peak_count() > target_m) {
        int weakest = -1;
        double weakest_prominence = std::numeric_limits<double>::infinity();
        for (int i = 0; i < static_cast<int>(interior.size()); ++i) {
            if (interior[i].kind != ExtremumKind::Peak) continue;
            const auto [left, right] = min_height_beside(i);
            const double prominence = interior[i].height - std::max(left, right);
            if (prominence < weakest_prominence) {
                weakest_prominence = prominence;
                weakest = i;
            }
        }
        const bool has_left = weakest > 0;
        const bool has_right = weakest + 1 < static_cast<int>(interior.size());
        if (has_left && has_right) {
            const int drop =
                interior[weakest - 1].height >= interior[weakest + 1].height ? weakest - 1
                                                                             : weakest + 1;
            const int first = std::min(drop, weakest);
            interior.erase(interior.begin() + first, interior.begin() + first + 2);
        } else if (has_left) {
            interior.erase(interior.begin() + weakest - 1, interior.begin() + weakest + 1);
        } else if (has_right) {
            interior.erase(interior.begin() + weakest, interior.begin() + weakest + 2);
        } else {
            interior.erase(interior.begin() + weakest);
        }
        // drop any leftover non-alternating or height-inverted neighbors
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t i = 1; i < interior.size(); ++i) {
                const Extremum& a = interior[i - 1];
                const Extremum& b = interior[i];
                const bool amax = is_maximum(a.kind), bmax = is_maximum(b.kind);
                std::size_t drop;
                if (amax == bmax) {
                    const bool later_wins = amax ? b.height >= a.height : b.height <= a.height;
                    drop = later_wins ? i - 1 : i;
                } else {
                    const double mx = amax ? a.height : b.height;
                    const double mn = amax ? b.height : a.height;
                    if (mn < mx) continue;
                    drop = amax ? i - 1 : i;  // a maximum at or below a neighboring minimum
                }
                interior.erase(interior.begin() + drop);
                changed = true;
                break;
            }
        }
        // endpoints cannot be removed; drop interior extrema they dominate
        while (!interior.empty()) {
            const bool fmax = is_maximum(interior.front().kind);
            if ((fmax && interior.front().height <= front.height) ||
                (!fmax && interior.front().height >= front.height)) {
                interior.erase(interior.begin());
                continue;
            }
            const bool bmax = is_maximum(interior.back().kind);
            if ((bmax && interior.back().height <= back.height) ||
                (!bmax && interior.back().height >= back.height)) {
                interior.pop_back();
                continue;
            }
            break;
        }
    }

    ShapeTemplate out;
    if (interior.empty()) {
        const bool rising = back.height >= front.height;
        out.extrema.push_back(
            {rising ? ExtremumKind::EndpointMin : ExtremumKind::EndpointMax, 0.0, front.height});
        out.extrema.push_back(
            {rising ? ExtremumKind::EndpointMax : ExtremumKind::EndpointMin, 1.0, back.height});
        return out;
    }
    out.extrema.push_back({is_maximum(interior.front().kind) ? ExtremumKind::EndpointMin
                                                             : ExtremumKind::EndpointMax,
                           0.0, front.height});
    for (const Extremum& e : interior) out.extrema.push_back(e);
    out.extrema.push_back({is_maximum(interior.back().kind) ? ExtremumKind::EndpointMin
                                                            : ExtremumKind::EndpointMax,
                           1.0, back.height});
    detail::validate_template(out);
    return out;
}

/// Smooth monotone interpolation through the template extrema; reproduces the
/// template heights exactly and has exactly m interior peaks.
inline FunctionSample initial_estimate(const ShapeTemplate& tpl, const Grid& grid) {
    detail::validate_template(tpl);
    const std::vector<double> x = detail::template_locations(tpl);
    const std::vector<double> s = tpl.heights();
    detail::validate_heights(tpl, s);
    std::vector<double> out(grid.num_points);
    for (int j = 0; j < grid.num_points; ++j)
        out[j] = detail::evaluate_template(x, s, grid.point(j));
    return FunctionSample(grid, std::move(out));
}

/// Penalized squared-error criterion: sum of squared L2 distances between
/// f_s ∘ gamma and each aligned function, plus rho times the integrated squared
/// second derivative of the composed path.
inline double shape_objective(const WarpCoefficients& c, const std::vector<double>& s,
                              const ShapeTemplate& tpl, const FunctionSet& data,
                              const FitConfig& cfg) {
    detail::validate_template(tpl);
    detail::validate_heights(tpl, s);
    const Grid& grid = data.grid;
    const double h = grid.spacing();
    const std::vector<double> x = detail::template_locations(tpl);

    const Warping gamma = decode_warping(c, grid);
    std::vector<double> F(grid.num_points);
    for (int j = 0; j < grid.num_points; ++j)
        F[j] = detail::evaluate_template(x, s, gamma.values[j]);

    double data_term = 0.0;
    const int T = grid.num_points;
    for (const FunctionSample& f : data.functions) {
        double acc = 0.0;
        for (int j = 0; j < T; ++j) {
            const double d = F[j] - f.values[j];
            const double sq = d * d;
            acc += (j == 0 || j == T - 1) ? 0.5 * sq : sq;
        }
        data_term += acc * h;
    }

    double smooth_term = 0.0;
    if (cfg.rho > 0.0) {
        const std::vector<double> F2 = second_derivative(F, h);
        double acc = 0.0;
        for (int j = 0; j < T; ++j) {
            const double sq = F2[j] * F2[j];
            acc += (j == 0 || j == T - 1) ? 0.5 * sq : sq;
        }
        smooth_term = cfg.rho * acc * h;
    }
    return data_term + smooth_term;
}

struct FitResult {
    FunctionSample estimate;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    int evaluations = 0;
    bool converged = false;
    std::vector<double> heights;
    WarpCoefficients coefficients;
};

namespace detail {

struct MinimizeOutcome {
    std::vector<double> point;
    double value = 0.0;
    bool converged = false;
};

/// BFGS with forward-difference gradients and Armijo backtracking. The budget
/// counter is shared across calls so restarts split one allowance.
inline MinimizeOutcome minimize_bfgs(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> theta, int& evals_left, double tol) {
    const int D = static_cast<int>(theta.size());
    MinimizeOutcome out;
    double fx = f(theta);
    --evals_left;

    std::vector<std::vector<double>> H(D, std::vector<double>(D, 0.0));
    for (int i = 0; i < D; ++i) H[i][i] = 1.0;

    std::vector<double> grad(D), grad_new(D), dir(D), theta_new(D), sv(D), yv(D);
    auto gradient = [&](const std::vector<double>& p, double fp, std::vector<double>& gout) {
        std::vector<double> pp(p);
        for (int i = 0; i < D; ++i) {
            const double step = 1e-6 * (1.0 + std::fabs(p[i]));
            pp[i] = p[i] + step;
            gout[i] = (f(pp) - fp) / step;
            pp[i] = p[i];
            --evals_left;
        }
    };

    gradient(theta, fx, grad);
    int stall = 0;
    while (evals_left > D + 2) {
        for (int i = 0; i < D; ++i) {
            double acc = 0.0;
            for (int j = 0; j < D; ++j) acc -= H[i][j] * grad[j];
            dir[i] = acc;
        }
        double slope = 0.0;
        for (int i = 0; i < D; ++i) slope += dir[i] * grad[i];
        if (slope >= 0.0) {  // not a descent direction: reset to steepest descent
            for (int i = 0; i < D; ++i) {
                std::fill(H[i].begin(), H[i].end(), 0.0);
                H[i][i] = 1.0;
                dir[i] = -grad[i];
            }
            slope = 0.0;
            for (int i = 0; i < D; ++i) slope += dir[i] * grad[i];
            if (slope >= 0.0) break;
        }

        double alpha = 1.0;
        double fnew = fx;
        bool accepted = false;
        for (int ls = 0; ls < 40 && evals_left > 0; ++ls) {
            for (int i = 0; i < D; ++i) theta_new[i] = theta[i] + alpha * dir[i];
            fnew = f(theta_new);
            --evals_left;
            if (std::isfinite(fnew) && fnew <= fx + 1e-4 * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;

        gradient(theta_new, fnew, grad_new);
        double sy = 0.0, step_inf = 0.0;
        for (int i = 0; i < D; ++i) {
            sv[i] = theta_new[i] - theta[i];
            yv[i] = grad_new[i] - grad[i];
            sy += sv[i] * yv[i];
            step_inf = std::max(step_inf, std::fabs(sv[i]));
        }
        const double df = fx - fnew;
        theta.swap(theta_new);
        fx = fnew;
        grad.swap(grad_new);

        if (sy > 1e-12) {
            // standard inverse-Hessian update
            const double rho_bfgs = 1.0 / sy;
            std::vector<double> Hy(D, 0.0);
            for (int i = 0; i < D; ++i) {
                double acc = 0.0;
                for (int j = 0; j < D; ++j) acc += H[i][j] * yv[j];
                Hy[i] = acc;
            }
            double yHy = 0.0;
            for (int i = 0; i < D; ++i) yHy += yv[i] * Hy[i];
            for (int i = 0; i < D; ++i)
                for (int j = 0; j < D; ++j)
                    H[i][j] += (sy + yHy) * rho_bfgs * rho_bfgs * sv[i] * sv[j] -
                               rho_bfgs * (Hy[i] * sv[j] + sv[i] * Hy[j]);
        }

        if (df <= tol * (1.0 + std::fabs(fx)) && step_inf <= tol * (1.0 + std::fabs(theta[0]))) {
            if (++stall >= 2) {
                out.converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }
    out.point = std::move(theta);
    out.value = fx;
    return out;
}

}  // namespace detail

/// Peak-constrained refinement: optimize the warp coefficients and the extrema
/// heights of the template extracted from g_init against the aligned data.
/// Heights stay feasible through an exp-gap parametrization, so the returned
/// estimate always has the template's interior peak count.
inline FitResult fit_shape(const FunctionSet& data_aligned, const FunctionSample& g_init,
                           const FitConfig& cfg) {
    if (cfg.rho < 0.0) throw std::invalid_argument("FitConfig: rho must be >= 0");
    if (cfg.basis_size < 1) throw std::invalid_argument("FitConfig: basis_size must be >= 1");
    if (!(g_init.grid == data_aligned.grid))
        throw std::invalid_argument("fit_shape: mismatched grids");

    const ShapeTemplate tpl = extract_template(g_init);
    const int K = cfg.basis_size;
    const int M = tpl.M();
    const std::vector<double> s0 = tpl.heights();

    std::vector<int> max_pos, min_pos;
    for (int i = 0; i < M; ++i)
        (is_maximum(tpl.extrema[i].kind) ? max_pos : min_pos).push_back(i);

    double scale = 0.0;
    for (double v : s0) scale = std::max(scale, std::fabs(v));
    const double gap_floor = 1e-9 * (1.0 + scale);

    auto heights_from = [&](const std::vector<double>& theta) {
        std::vector<double> s(M, 0.0);
        for (std::size_t i = 0; i < max_pos.size(); ++i) s[max_pos[i]] = theta[K + i];
        for (std::size_t i = 0; i < min_pos.size(); ++i) {
            const int p = min_pos[i];
            double nb = std::numeric_limits<double>::infinity();
            if (p > 0) nb = std::min(nb, s[p - 1]);
            if (p + 1 < M) nb = std::min(nb, s[p + 1]);
            const double w = std::min(theta[K + max_pos.size() + i], 700.0);
            s[p] = nb - (gap_floor + std::exp(w));
        }
        return s;
    };

    std::vector<double> theta0(K + M, 0.0);
    for (std::size_t i = 0; i < max_pos.size(); ++i) theta0[K + i] = s0[max_pos[i]];
    for (std::size_t i = 0; i < min_pos.size(); ++i) {
        const int p = min_pos[i];
        double nb = std::numeric_limits<double>::infinity();
        if (p > 0) nb = std::min(nb, s0[p - 1]);
        if (p + 1 < M) nb = std::min(nb, s0[p + 1]);
        const double gap = std::max(nb - s0[p] - gap_floor, gap_floor);
        theta0[K + max_pos.size() + i] = std::log(gap);
    }

    int evals_left = cfg.max_evals;
    auto objective = [&](const std::vector<double>& theta) {
        WarpCoefficients c;
        c.c.assign(theta.begin(), theta.begin() + K);
        return shape_objective(c, heights_from(theta), tpl, data_aligned, cfg);
    };

    const double f0 = objective(theta0);
    --evals_left;

    Rng jitter(0x9E3779B97F4A7C15ull);
    std::vector<double> best_theta = theta0;
    double best_value = f0;
    bool converged = false;
    const int runs = std::max(1, cfg.restarts);
    for (int run = 0; run < runs && evals_left > K + M + 2; ++run) {
        std::vector<double> start = theta0;
        if (run > 0) {
            for (int i = 0; i < K; ++i) start[i] += 0.1 * jitter.normal();
            for (std::size_t i = 0; i < max_pos.size(); ++i)
                start[K + i] += 0.02 * (1.0 + scale) * jitter.normal();
            for (std::size_t i = 0; i < min_pos.size(); ++i)
                start[K + max_pos.size() + i] += 0.2 * jitter.normal();
        }
        auto run_out = detail::minimize_bfgs(objective, std::move(start), evals_left, cfg.step_tol);
        if (run_out.value < best_value) {
            best_value = run_out.value;
            best_theta = std::move(run_out.point);
        }
        converged = converged || run_out.converged;
    }

    WarpCoefficients c_best;
    c_best.c.assign(best_theta.begin(), best_theta.begin() + K);
    const std::vector<double> s_best = heights_from(best_theta);
    const Warping gamma = decode_warping(c_best, data_aligned.grid);
    const std::vector<double> x = detail::template_locations(tpl);
    std::vector<double> est(data_aligned.grid.num_points);
    for (int j = 0; j < data_aligned.grid.num_points; ++j)
        est[j] = detail::evaluate_template(x, s_best, gamma.values[j]);

    FitResult out{FunctionSample(data_aligned.grid, std::move(est)),
                  f0,
                  best_value,
                  cfg.max_evals - evals_left,
                  converged,
                  s_best,
                  std::move(c_best)};
    return out;
}

}  // namespace ppdest
