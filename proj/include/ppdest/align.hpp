#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "ppdest/numerics.hpp"
#include "ppdest/parallel.hpp"
#include "ppdest/srvf.hpp"
#include "ppdest/types.hpp"

namespace ppdest {

/// Settings for penalized elastic alignment.
struct AlignConfig {
    double lambda = 0.0;                             // elasticity penalty weight
    int dp_max_step = 7;                             // lattice moves span slopes [1/7, 7]
    std::vector<std::pair<int, int>> dp_slope_set;   // empty: all reduced pairs up to dp_max_step
    double tol = 1e-4;                               // stop when ||q_bar - q_bar*||^2 <= tol
    int max_iter = 20;
};

/// Settings for the penalized-L2 baseline. The roughness form is fixed to the
/// first-order penalty used throughout: integral of (1 - sqrt(gamma'))^2.
struct L2Config {
    double kappa = 0.0;
    double tol = 1e-4;
    int max_iter = 20;
    int dp_max_step = 7;
    std::vector<std::pair<int, int>> dp_slope_set;
};

struct AlignmentResult {
    double lambda;
    FunctionSet aligned;
    std::vector<Warping> warpings;
    FunctionSample mean;
    int iterations = 0;
    double final_eps = 0.0;
    bool converged = false;
    std::vector<double> objective_trace;  // summed pairwise costs per template iteration
};

struct PairwiseResult {
    Warping warp;
    double cost = 0.0;
};

namespace detail {

inline std::vector<std::pair<int, int>> reduced_slope_set(int max_step) {
    if (max_step < 1) throw std::invalid_argument("AlignConfig: dp_max_step must be >= 1");
    std::vector<std::pair<int, int>> set;
    set.emplace_back(1, 1);
    for (int a = 1; a <= max_step; ++a)
        for (int b = 1; b <= max_step; ++b)
            if (!(a == 1 && b == 1) && std::gcd(a, b) == 1) set.emplace_back(a, b);
    std::sort(set.begin() + 1, set.end());
    return set;
}

inline std::vector<std::pair<int, int>> resolve_slope_set(const std::vector<std::pair<int, int>>& given,
                                                          int max_step) {
    if (given.empty()) return reduced_slope_set(max_step);
    bool has_diagonal = false;
    for (auto [a, b] : given) {
        if (a < 1 || b < 1) throw std::invalid_argument("slope set: steps must be positive");
        if (std::gcd(a, b) != 1) throw std::invalid_argument("slope set: pairs must be gcd-reduced");
        if (a == 1 && b == 1) has_diagonal = true;
    }
    if (!has_diagonal) throw std::invalid_argument("slope set: must contain (1,1)");
    std::vector<std::pair<int, int>> set = given;
    std::stable_sort(set.begin(), set.end(), [](auto& l, auto& r) {
        const bool li = l.first == 1 && l.second == 1;
        const bool ri = r.first == 1 && r.second == 1;
        if (li != ri) return li;
        return l < r;
    });
    return set;
}

struct DpMove {
    int dx = 0, dy = 0;
    double jacobian = 1.0;   // sqrt(dy/dx) applied to the warped values, or 1 for the L2 cost
    double penalty = 0.0;    // lambda * (1 - sqrt(dy/dx))^2 * dx * h
    struct Sample {
        int lo;
        double frac;
        double weight;  // trapezoid weight, h folded in
    };
    std::vector<Sample> samples;
};

inline std::vector<DpMove> build_moves(const std::vector<std::pair<int, int>>& set, double h,
                                       double lambda, bool use_jacobian) {
    std::vector<DpMove> moves;
    moves.reserve(set.size());
    for (auto [a, b] : set) {
        DpMove mv;
        mv.dx = a;
        mv.dy = b;
        const double slope = static_cast<double>(b) / a;
        const double root = std::sqrt(slope);
        mv.jacobian = use_jacobian ? root : 1.0;
        mv.penalty = lambda * (1.0 - root) * (1.0 - root) * a * h;
        mv.samples.resize(a + 1);
        for (int r = 0; r <= a; ++r) {
            const double pos = static_cast<double>(r) * b / a;
            int lo = static_cast<int>(pos);
            if (lo > b) lo = b;
            mv.samples[r].lo = lo;
            mv.samples[r].frac = pos - lo;
            mv.samples[r].weight = (r == 0 || r == a) ? 0.5 * h : h;
        }
        moves.push_back(std::move(mv));
    }
    return moves;
}

/// Cost of the lattice edge ending at node (j,k) via mv. `cur` must be padded
/// with one trailing copy of its last value. The arithmetic here must stay in
/// exact lockstep with the row scan in pairwise_dp.
inline double edge_cost(const std::vector<double>& ref, const std::vector<double>& cur_padded,
                        int j, int k, const DpMove& mv) {
    const int j0 = j - mv.dx;
    const int k0 = k - mv.dy;
    double acc = 0.0;
    for (std::size_t r = 0; r < mv.samples.size(); ++r) {
        const auto& s = mv.samples[r];
        const double lo = cur_padded[k0 + s.lo];
        const double hi = cur_padded[k0 + s.lo + 1];
        const double interp = lo + s.frac * (hi - lo);
        const double diff = ref[j0 + static_cast<int>(r)] - mv.jacobian * interp;
        acc += s.weight * (diff * diff);
    }
    return acc + mv.penalty;
}

struct DpOutcome {
    std::vector<double> warp_values;
    std::vector<double> slope_root;  // sqrt of path slope per column, side-averaged at corners
    double cost = 0.0;
};

inline DpOutcome pairwise_dp(const std::vector<double>& ref, const std::vector<double>& cur,
                             const std::vector<DpMove>& moves, double h) {
    const int T = static_cast<int>(ref.size());
    const double INF = std::numeric_limits<double>::infinity();

    std::vector<double> padded(cur);
    padded.push_back(cur.back());

    int max_step = 1;
    for (const auto& mv : moves) max_step = std::max({max_step, mv.dx, mv.dy});
    auto row_lo = [&](int j) {
        return std::max((j + max_step - 1) / max_step, (T - 1) - (T - 1 - j) * max_step);
    };
    auto row_hi = [&](int j) {
        return std::min(j * max_step, (T - 1) - ((T - 1 - j) + max_step - 1) / max_step);
    };

    std::vector<double> dp(static_cast<std::size_t>(T) * T, INF);
    std::vector<std::uint8_t> from(static_cast<std::size_t>(T) * T, 0);
    std::vector<double> tmp(T);
    dp[0] = 0.0;

    for (int j = 1; j < T; ++j) {
        double* row = dp.data() + static_cast<std::size_t>(j) * T;
        const int klo = row_lo(j), khi = row_hi(j);
        if (klo > khi) continue;
        for (std::size_t mi = 0; mi < moves.size(); ++mi) {
            const DpMove& mv = moves[mi];
            if (mv.dx > j) continue;
            const int kbeg = std::max(klo, mv.dy);
            if (kbeg > khi) continue;
            const double* prow = dp.data() + static_cast<std::size_t>(j - mv.dx) * T;
            std::fill(tmp.begin() + kbeg, tmp.begin() + khi + 1, 0.0);
            for (std::size_t r = 0; r < mv.samples.size(); ++r) {
                const auto& s = mv.samples[r];
                const double rv = ref[j - mv.dx + static_cast<int>(r)];
                const double frac = s.frac, w = s.weight, jac = mv.jacobian;
                const double* base = padded.data() + (kbeg - mv.dy + s.lo);
                double* out = tmp.data() + kbeg;
                const int count = khi - kbeg + 1;
                for (int k = 0; k < count; ++k) {
                    const double lo = base[k];
                    const double hi = base[k + 1];
                    const double interp = lo + frac * (hi - lo);
                    const double diff = rv - jac * interp;
                    out[k] += w * (diff * diff);
                }
            }
            const double pen = mv.penalty;
            for (int k = kbeg; k <= khi; ++k) {
                const double cand = prow[k - mv.dy] + (tmp[k] + pen);
                if (cand < row[k]) {
                    row[k] = cand;
                    from[static_cast<std::size_t>(j) * T + k] = static_cast<std::uint8_t>(mi);
                }
            }
        }
    }

    const double total = dp[static_cast<std::size_t>(T) * T - 1];
    if (!std::isfinite(total)) throw NumericError("pairwise alignment: no admissible lattice path");

    DpOutcome out;
    out.cost = total;
    out.warp_values.assign(T, 0.0);
    std::vector<double> left(T, -1.0), right(T, -1.0);
    int j = T - 1, k = T - 1;
    while (j > 0) {
        const DpMove& mv = moves[from[static_cast<std::size_t>(j) * T + k]];
        const int j0 = j - mv.dx, k0 = k - mv.dy;
        const double root = std::sqrt(static_cast<double>(mv.dy) / mv.dx);
        for (int r = 1; r <= mv.dx; ++r) {
            out.warp_values[j0 + r] = (k0 + static_cast<double>(r) * mv.dy / mv.dx) / (T - 1);
            left[j0 + r] = root;
        }
        for (int r = 0; r < mv.dx; ++r) right[j0 + r] = root;
        j = j0;
        k = k0;
    }
    out.warp_values.front() = 0.0;
    out.warp_values.back() = 1.0;
    out.slope_root.assign(T, 1.0);
    for (int jj = 0; jj < T; ++jj) {
        if (left[jj] < 0.0)
            out.slope_root[jj] = right[jj];
        else if (right[jj] < 0.0)
            out.slope_root[jj] = left[jj];
        else
            out.slope_root[jj] = 0.5 * (left[jj] + right[jj]);
    }
    return out;
}

/// Warped SRVF in the lattice cost's own discretization: interpolated values
/// scaled by the path's slope roots. Updating the template with the mean of
/// these makes each template step the exact minimizer of the summed lattice
/// costs, so the per-iteration objective cannot increase.
inline std::vector<double> dp_warped_srvf(const std::vector<double>& q, const DpOutcome& out) {
    std::vector<double> y(q.size());
    for (std::size_t j = 0; j < q.size(); ++j)
        y[j] = interp_uniform(q, out.warp_values[j]) * out.slope_root[j];
    return y;
}

inline std::vector<double> mean_columns(const std::vector<const std::vector<double>*>& rows) {
    const std::size_t T = rows.front()->size();
    std::vector<double> mean(T, 0.0);
    for (const auto* r : rows)
        for (std::size_t j = 0; j < T; ++j) mean[j] += (*r)[j];
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& x : mean) x *= inv;
    return mean;
}

inline double sq_l2_distance(const std::vector<double>& a, const std::vector<double>& b, double h) {
    std::vector<double> d(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) d[j] = a[j] - b[j];
    const double n = l2_norm(d, h);
    return n * n;
}

inline int closest_to_mean_index(const std::vector<std::vector<double>>& vals, double h) {
    std::vector<const std::vector<double>*> ptrs;
    ptrs.reserve(vals.size());
    for (const auto& v : vals) ptrs.push_back(&v);
    const std::vector<double> mean = mean_columns(ptrs);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const double d = sq_l2_distance(vals[i], mean, h);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

}  // namespace detail

inline FunctionSample cross_sectional_mean(const FunctionSet& data) {
    std::vector<const std::vector<double>*> rows;
    rows.reserve(data.functions.size());
    for (const auto& f : data.functions) rows.push_back(&f.values);
    return FunctionSample(data.grid, detail::mean_columns(rows));
}

/// Penalized elastic alignment of q to q_ref over the lattice of monotone paths.
inline PairwiseResult pairwise_align(const Srvf& q_ref, const Srvf& q, const AlignConfig& cfg) {
    if (!(q_ref.grid == q.grid)) throw std::invalid_argument("pairwise_align: mismatched grids");
    if (cfg.lambda < 0.0) throw std::invalid_argument("pairwise_align: lambda must be >= 0");
    const auto set = detail::resolve_slope_set(cfg.dp_slope_set, cfg.dp_max_step);
    if (set.size() > 255) throw std::invalid_argument("pairwise_align: slope set too large");
    const auto moves = detail::build_moves(set, q.grid.spacing(), cfg.lambda, true);
    auto out = detail::pairwise_dp(q_ref.values, q.values, moves, q.grid.spacing());
    return PairwiseResult{Warping(q.grid, std::move(out.warp_values)), out.cost};
}

/// Iterative multiple alignment: template starts at the sample SRVF closest to
/// the SRVF mean, each round re-aligns every original function to the template
/// and the template moves to the mean of the aligned SRVFs; after convergence
/// the template is centered by the inverse mean warp and one final pass aligns
/// everything to it.
inline AlignmentResult multiple_align(const FunctionSet& data, const AlignConfig& cfg) {
    const int n = data.size();
    if (n < 2) throw std::invalid_argument("multiple_align: need at least two functions");
    const Grid grid = data.grid;
    const double h = grid.spacing();
    if (cfg.lambda < 0.0) throw std::invalid_argument("multiple_align: lambda must be >= 0");
    if (cfg.tol <= 0.0) throw std::invalid_argument("multiple_align: tol must be > 0");
    if (cfg.max_iter < 1) throw std::invalid_argument("multiple_align: max_iter must be >= 1");
    const auto set = detail::resolve_slope_set(cfg.dp_slope_set, cfg.dp_max_step);
    const auto moves = detail::build_moves(set, h, cfg.lambda, true);

    std::vector<std::vector<double>> q(n);
    for (int i = 0; i < n; ++i) q[i] = to_srvf(data.functions[i]).values;

    std::vector<double> tpl = q[detail::closest_to_mean_index(q, h)];

    std::vector<std::vector<double>> warp_vals(n), aligned_q(n);
    std::vector<double> costs(n);
    std::vector<double> trace;
    double eps = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::vector<double> tpl_next = tpl;

    for (int it = 0; it < cfg.max_iter; ++it) {
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
            auto out = detail::pairwise_dp(tpl, q[i], moves, h);
            costs[i] = out.cost;
            aligned_q[i] = detail::dp_warped_srvf(q[i], out);
            warp_vals[i] = std::move(out.warp_values);
        });
        trace.push_back(std::accumulate(costs.begin(), costs.end(), 0.0));

        std::vector<const std::vector<double>*> rows;
        rows.reserve(n);
        for (const auto& v : aligned_q) rows.push_back(&v);
        tpl_next = detail::mean_columns(rows);
        eps = detail::sq_l2_distance(tpl, tpl_next, h);
        iterations = it + 1;
        if (eps <= cfg.tol) {
            converged = true;
            break;
        }
        tpl = tpl_next;
    }

    // Center the template by the inverse mean warp, then run one final pass.
    std::vector<const std::vector<double>*> wrows;
    wrows.reserve(n);
    for (const auto& w : warp_vals) wrows.push_back(&w);
    Warping mean_warp(grid, detail::mean_columns(wrows));
    Warping mean_warp_inv = invert_warping(mean_warp);
    std::vector<double> tpl_centered = warp_srvf(Srvf(grid, tpl_next), mean_warp_inv).values;

    std::vector<FunctionSample> aligned;
    aligned.reserve(n);
    std::vector<Warping> warps;
    warps.reserve(n);
    std::vector<std::vector<double>> final_warps(n), final_fn(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        auto out = detail::pairwise_dp(tpl_centered, q[i], moves, h);
        Warping w(grid, std::move(out.warp_values));
        final_fn[i] = warp_function(data.functions[i], w).values;
        final_warps[i] = std::move(w.values);
    });
    for (int i = 0; i < n; ++i) {
        warps.emplace_back(grid, std::move(final_warps[i]));
        aligned.emplace_back(grid, std::move(final_fn[i]));
    }

    FunctionSet aligned_set(grid, std::move(aligned));
    FunctionSample mean = cross_sectional_mean(aligned_set);
    return AlignmentResult{cfg.lambda, std::move(aligned_set), std::move(warps),
                           std::move(mean),  iterations,        eps,
                           converged,        std::move(trace)};
}

/// Penalized-L2 baseline: the same template iteration but the lattice cost uses
/// raw function values with no Jacobian factor, the template is the
/// cross-sectional mean, and each round re-aligns the currently aligned
/// functions with the warps composed (which is what lets the kappa=0
/// degeneracy run all the way into pinching).
inline AlignmentResult penalized_l2_align(const FunctionSet& data, const L2Config& cfg) {
    const int n = data.size();
    if (n < 2) throw std::invalid_argument("penalized_l2_align: need at least two functions");
    if (cfg.kappa < 0.0 || !std::isfinite(cfg.kappa))
        throw std::invalid_argument("penalized_l2_align: kappa must be finite and >= 0");
    if (cfg.max_iter < 1) throw std::invalid_argument("penalized_l2_align: max_iter must be >= 1");
    const Grid grid = data.grid;
    const double h = grid.spacing();
    const auto set = detail::resolve_slope_set(cfg.dp_slope_set, cfg.dp_max_step);
    const auto moves = detail::build_moves(set, h, cfg.kappa, false);

    std::vector<std::vector<double>> fvals(n);
    for (int i = 0; i < n; ++i) fvals[i] = data.functions[i].values;

    std::vector<double> tpl = fvals[detail::closest_to_mean_index(fvals, h)];
    std::vector<Warping> warps(n, Warping::identity(grid));
    std::vector<std::vector<double>> cur = fvals;
    std::vector<double> costs(n);
    std::vector<double> trace;
    double eps = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::vector<double> tpl_next = tpl;

    auto align_pass = [&](const std::vector<double>& target) {
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
            auto out = detail::pairwise_dp(target, cur[i], moves, h);
            costs[i] = out.cost;
            Warping step(grid, std::move(out.warp_values));
            warps[i] = compose(warps[i], step);
            cur[i] = warp_function(data.functions[i], warps[i]).values;
        });
    };

    for (int it = 0; it < cfg.max_iter; ++it) {
        align_pass(tpl);
        trace.push_back(std::accumulate(costs.begin(), costs.end(), 0.0));
        std::vector<const std::vector<double>*> rows;
        rows.reserve(n);
        for (const auto& v : cur) rows.push_back(&v);
        tpl_next = detail::mean_columns(rows);
        eps = detail::sq_l2_distance(tpl, tpl_next, h);
        iterations = it + 1;
        if (eps <= cfg.tol) {
            converged = true;
            break;
        }
        tpl = tpl_next;
    }

    std::vector<const std::vector<double>*> wrows;
    wrows.reserve(n);
    for (const auto& w : warps) wrows.push_back(&w.values);
    Warping mean_warp(grid, detail::mean_columns(wrows));
    Warping mean_warp_inv = invert_warping(mean_warp);
    std::vector<double> tpl_centered =
        warp_function(FunctionSample(grid, tpl_next), mean_warp_inv).values;
    align_pass(tpl_centered);

    std::vector<FunctionSample> aligned;
    aligned.reserve(n);
    for (int i = 0; i < n; ++i) aligned.emplace_back(grid, cur[i]);
    FunctionSet aligned_set(grid, std::move(aligned));
    FunctionSample mean = cross_sectional_mean(aligned_set);
    return AlignmentResult{cfg.kappa, std::move(aligned_set), std::move(warps),
                           std::move(mean), iterations,       eps,
                           converged,       std::move(trace)};
}

/// Minimum discrete warp slope across the result; values near zero flag the
/// degenerate collapse of function mass.
inline double pinching_score(const AlignmentResult& result) {
    const double h = result.mean.grid.spacing();
    double score = std::numeric_limits<double>::infinity();
    for (const auto& w : result.warpings)
        for (std::size_t j = 1; j < w.values.size(); ++j)
            score = std::min(score, (w.values[j] - w.values[j - 1]) / h);
    return score;
}

}  // namespace ppdest
