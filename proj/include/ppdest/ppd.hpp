#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "ppdest/align.hpp"
#include "ppdest/numerics.hpp"
#include "ppdest/parallel.hpp"
#include "ppdest/types.hpp"

namespace ppdest {

struct PpdConfig {
    std::vector<double> lambda_grid = default_lambda_grid();
    double tau = 0.03;             // significance threshold on normalized curvature
    double theta = 0.28;           // relative-persistence threshold
    double track_radius = 0.05;    // max peak displacement between adjacent lambdas
    double boundary_margin = 0.05; // peaks this close to 0 or 1 count as boundary peaks

    static std::vector<double> default_lambda_grid() {
        std::vector<double> g(41);
        for (int i = 0; i < 41; ++i) g[i] = i * 0.005;
        return g;
    }
};

struct DetectedPeak {
    int index;
    double location;
    double height;
};

struct PeakObservation {
    double lambda;
    int lambda_index;
    double location;
    double height;
    double strength;
    bool significant;
};

struct PeakTrack {
    int label = 0;
    std::vector<PeakObservation> observations;
    double persistence = 0.0;
};

struct PpdResult {
    PpdConfig config;
    std::vector<std::pair<double, FunctionSample>> means;  // (lambda, g_hat_lambda)
    std::vector<PeakTrack> tracks;
    int m = 0;
    double lambda_star = 0.0;
    int lambda_star_index = 0;
    std::vector<int> persistent_labels;
    bool flagged = false;  // true when no grid lambda has exactly m significant peaks
};

/// Strict interior local maxima; a maximal constant run flanked by lower values
/// counts once, at the run midpoint. Boundary peaks are ignored.
inline std::vector<DetectedPeak> find_internal_peaks(const FunctionSample& g) {
    const int T = g.grid.num_points;
    if (T < 5) throw std::invalid_argument("find_internal_peaks: need at least 5 grid points");
    const std::vector<double>& v = g.values;
    std::vector<DetectedPeak> peaks;
    int i = 0;
    while (i < T) {
        int j = i;
        while (j + 1 < T && v[j + 1] == v[i]) ++j;
        if (i > 0 && j < T - 1 && v[i - 1] < v[i] && v[j + 1] < v[i]) {
            const int idx = (i + j) / 2;
            peaks.push_back({idx, 0.5 * (g.grid.point(i) + g.grid.point(j)), v[i]});
        }
        i = j + 1;
    }
    return peaks;
}

/// Normalized curvature -g''(t0)/||g''|| at an interior peak index.
inline double peak_strength(const FunctionSample& g, int t0_index) {
    const int T = g.grid.num_points;
    if (t0_index < 1 || t0_index > T - 2)
        throw std::invalid_argument("peak_strength: index must be interior");
    const std::vector<double> g2 = second_derivative(g.values, g.grid.spacing());
    const double norm = l2_norm(g2, g.grid.spacing());
    if (norm == 0.0) return 0.0;
    return -g2[t0_index] / norm;
}

namespace detail {

/// Observation weight in the persistence measure: half the gap to each
/// neighboring grid value (the discrete analogue of interval length).
inline double lambda_measure(const std::vector<double>& grid, int gi) {
    double w = 0.0;
    if (gi > 0) w += 0.5 * (grid[gi] - grid[gi - 1]);
    if (gi + 1 < static_cast<int>(grid.size())) w += 0.5 * (grid[gi + 1] - grid[gi]);
    return w;
}

/// Greedy nearest-location linking of per-lambda observations into tracks.
/// Unmatched observations start new tracks; labels follow creation order
/// (location order at the first lambda, then order of birth).
inline std::vector<PeakTrack> link_tracks(const std::vector<std::vector<PeakObservation>>& per_lambda,
                                          double radius) {
    struct State {
        PeakTrack track;
        double last_location = 0.0;
    };
    std::vector<State> states;

    for (const auto& obs : per_lambda) {
        struct Pair {
            double dist;
            int track;
            int ob;
        };
        std::vector<Pair> pairs;
        for (int ti = 0; ti < static_cast<int>(states.size()); ++ti)
            for (int oi = 0; oi < static_cast<int>(obs.size()); ++oi) {
                const double d = std::fabs(states[ti].last_location - obs[oi].location);
                if (d <= radius) pairs.push_back({d, ti, oi});
            }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& l, const Pair& r) {
            if (l.dist != r.dist) return l.dist < r.dist;
            if (l.track != r.track) return l.track < r.track;
            return l.ob < r.ob;
        });
        std::vector<bool> track_used(states.size(), false), ob_used(obs.size(), false);
        for (const auto& p : pairs) {
            if (track_used[p.track] || ob_used[p.ob]) continue;
            track_used[p.track] = true;
            ob_used[p.ob] = true;
            states[p.track].track.observations.push_back(obs[p.ob]);
            states[p.track].last_location = obs[p.ob].location;
        }
        for (int oi = 0; oi < static_cast<int>(obs.size()); ++oi) {
            if (ob_used[oi]) continue;
            State s;
            s.track.label = static_cast<int>(states.size()) + 1;
            s.track.observations.push_back(obs[oi]);
            s.last_location = obs[oi].location;
            states.push_back(std::move(s));
        }
    }

    std::vector<PeakTrack> tracks;
    tracks.reserve(states.size());
    for (auto& s : states) tracks.push_back(std::move(s.track));
    return tracks;
}

struct TrackSelection {
    std::vector<PeakTrack> tracks;
    int m = 0;
    std::vector<int> persistent_labels;
    int lambda_star_index = 0;
    bool flagged = false;
};

/// Tracking, persistence, peak-count selection and lambda* from per-lambda
/// observations. Factored out of build_ppd so the rules can be tested on
/// constructed observation ladders.
inline TrackSelection select_tracks(const std::vector<std::vector<PeakObservation>>& per_lambda,
                                    const std::vector<double>& lambda_grid, double theta,
                                    double track_radius) {
    TrackSelection sel;
    sel.tracks = link_tracks(per_lambda, track_radius);
    for (PeakTrack& tr : sel.tracks) {
        tr.persistence = 0.0;
        for (const PeakObservation& ob : tr.observations)
            if (ob.significant) tr.persistence += lambda_measure(lambda_grid, ob.lambda_index);
    }

    double top = 0.0;
    for (const PeakTrack& tr : sel.tracks) top = std::max(top, tr.persistence);
    if (top > 0.0) {
        for (const PeakTrack& tr : sel.tracks)
            if (tr.persistence / top > theta) sel.persistent_labels.push_back(tr.label);
    }
    sel.m = static_cast<int>(sel.persistent_labels.size());

    const int G = static_cast<int>(lambda_grid.size());
    std::vector<int> sig_count(G, 0);
    for (const auto& obs : per_lambda)
        for (const PeakObservation& ob : obs)
            if (ob.significant) ++sig_count[ob.lambda_index];

    int star = -1;
    for (int gi = 0; gi < G; ++gi)
        if (sig_count[gi] == sel.m) {
            star = gi;
            break;
        }
    if (star < 0) {
        sel.flagged = true;
        int best_gap = std::numeric_limits<int>::max();
        for (int gi = 0; gi < G; ++gi) {
            const int gap = std::abs(sig_count[gi] - sel.m);
            if (gap < best_gap) {
                best_gap = gap;
                star = gi;
            }
        }
    }
    sel.lambda_star_index = star;
    return sel;
}

inline void validate_ppd_config(const PpdConfig& cfg) {
    if (cfg.lambda_grid.empty()) throw std::invalid_argument("PpdConfig: empty lambda grid");
    if (cfg.lambda_grid.front() != 0.0)
        throw std::invalid_argument("PpdConfig: lambda grid must start at 0");
    for (std::size_t i = 1; i < cfg.lambda_grid.size(); ++i)
        if (cfg.lambda_grid[i] <= cfg.lambda_grid[i - 1])
            throw std::invalid_argument("PpdConfig: lambda grid must be strictly increasing");
    if (cfg.tau < 0.0) throw std::invalid_argument("PpdConfig: tau must be >= 0");
    if (cfg.theta <= 0.0 || cfg.theta >= 1.0)
        throw std::invalid_argument("PpdConfig: theta must be in (0,1)");
    if (cfg.track_radius <= 0.0) throw std::invalid_argument("PpdConfig: track_radius must be > 0");
    if (cfg.boundary_margin < 0.0 || cfg.boundary_margin >= 0.5)
        throw std::invalid_argument("PpdConfig: boundary_margin must be in [0, 0.5)");
}

}  // namespace detail

/// Align at every lambda on the grid, track significant peaks of the per-lambda
/// means, and select the internal peak count m and the smallest lambda whose
/// mean shows exactly m significant peaks.
inline PpdResult build_ppd(const FunctionSet& data, const AlignConfig& acfg, const PpdConfig& pcfg) {
    detail::validate_ppd_config(pcfg);
    if (data.size() < 2) throw std::invalid_argument("build_ppd: need at least two functions");

    const int G = static_cast<int>(pcfg.lambda_grid.size());
    std::vector<std::optional<FunctionSample>> mean_slots(G);
    parallel_for(static_cast<std::size_t>(G), [&](std::size_t gi) {
        AlignConfig cfg = acfg;
        cfg.lambda = pcfg.lambda_grid[gi];
        mean_slots[gi].emplace(multiple_align(data, cfg).mean);
    });

    PpdResult result;
    result.config = pcfg;
    result.means.reserve(G);

    std::vector<std::vector<PeakObservation>> per_lambda(G);
    for (int gi = 0; gi < G; ++gi) {
        const FunctionSample& mean = *mean_slots[gi];
        for (const DetectedPeak& p : find_internal_peaks(mean)) {
            // peaks hugging the interval ends are boundary artifacts, not
            // internal structure; they are excluded from the diagram
            if (p.location < pcfg.boundary_margin || p.location > 1.0 - pcfg.boundary_margin)
                continue;
            PeakObservation ob;
            ob.lambda = pcfg.lambda_grid[gi];
            ob.lambda_index = gi;
            ob.location = p.location;
            ob.height = p.height;
            ob.strength = peak_strength(mean, p.index);
            ob.significant = ob.strength > pcfg.tau;
            per_lambda[gi].push_back(ob);
        }
        result.means.emplace_back(pcfg.lambda_grid[gi], mean);
    }

    detail::TrackSelection sel =
        detail::select_tracks(per_lambda, pcfg.lambda_grid, pcfg.theta, pcfg.track_radius);
    result.tracks = std::move(sel.tracks);
    result.m = sel.m;
    result.persistent_labels = std::move(sel.persistent_labels);
    result.flagged = sel.flagged;
    result.lambda_star_index = sel.lambda_star_index;
    result.lambda_star = pcfg.lambda_grid[sel.lambda_star_index];
    return result;
}

struct PpdBarRow {
    int label = 0;
    std::vector<std::pair<double, double>> intervals;  // maximal significant lambda runs
    double persistence = 0.0;
    bool persistent = false;
};

inline std::vector<PpdBarRow> ppd_barchart(const PpdResult& ppd) {
    std::vector<PpdBarRow> rows;
    rows.reserve(ppd.tracks.size());
    for (const PeakTrack& tr : ppd.tracks) {
        PpdBarRow row;
        row.label = tr.label;
        row.persistence = tr.persistence;
        row.persistent = std::find(ppd.persistent_labels.begin(), ppd.persistent_labels.end(),
                                   tr.label) != ppd.persistent_labels.end();
        int run_begin = -1, prev_index = -2;
        for (const PeakObservation& ob : tr.observations) {
            if (!ob.significant) continue;
            if (ob.lambda_index != prev_index + 1 || run_begin < 0) {
                if (run_begin >= 0)
                    row.intervals.emplace_back(ppd.config.lambda_grid[run_begin],
                                               ppd.config.lambda_grid[prev_index]);
                run_begin = ob.lambda_index;
            }
            prev_index = ob.lambda_index;
        }
        if (run_begin >= 0)
            row.intervals.emplace_back(ppd.config.lambda_grid[run_begin],
                                       ppd.config.lambda_grid[prev_index]);
        rows.push_back(std::move(row));
    }
    return rows;
}

struct PpdSurface {
    std::vector<double> lambdas;
    std::vector<double> ts;
    std::vector<std::vector<double>> values;  // one row per lambda
    struct TrackLine {
        int label = 0;
        std::vector<std::pair<double, double>> points;  // (lambda, location)
    };
    std::vector<TrackLine> tracks;
};

inline PpdSurface ppd_surface(const PpdResult& ppd) {
    PpdSurface s;
    s.lambdas.reserve(ppd.means.size());
    for (const auto& [lambda, mean] : ppd.means) {
        s.lambdas.push_back(lambda);
        s.values.push_back(mean.values);
    }
    s.ts = ppd.means.front().second.grid.points();
    for (const PeakTrack& tr : ppd.tracks) {
        PpdSurface::TrackLine line;
        line.label = tr.label;
        for (const PeakObservation& ob : tr.observations)
            line.points.emplace_back(ob.lambda, ob.location);
        s.tracks.push_back(std::move(line));
    }
    return s;
}

}  // namespace ppdest
