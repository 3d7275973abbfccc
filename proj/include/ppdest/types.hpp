#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ppdest {

/// Raised when input data (files, columns, samples) is malformed.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a numerical procedure cannot produce a usable result.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Uniform grid t_j = j/(T-1) on the unit interval.
struct Grid {
    int num_points = 0;

    explicit Grid(int n) : num_points(n) {
        if (n < 3) throw std::invalid_argument("Grid: need at least 3 points");
    }

    double spacing() const { return 1.0 / (num_points - 1); }
    double point(int j) const { return static_cast<double>(j) / (num_points - 1); }

    std::vector<double> points() const {
        std::vector<double> t(num_points);
        for (int j = 0; j < num_points; ++j) t[j] = point(j);
        return t;
    }

    bool operator==(const Grid&) const = default;
};

namespace detail {

inline void require_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

inline void require_size(const std::vector<double>& v, const Grid& g, const char* what) {
    if (static_cast<int>(v.size()) != g.num_points)
        throw std::invalid_argument(std::string(what) + ": length does not match grid");
}

}  // namespace detail

/// One real-valued function sampled on a shared uniform grid.
struct FunctionSample {
    Grid grid;
    std::vector<double> values;

    FunctionSample(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        detail::require_size(values, grid, "FunctionSample");
        detail::require_finite(values, "FunctionSample");
    }
};

/// Square-root velocity representation of a FunctionSample.
struct Srvf {
    Grid grid;
    std::vector<double> values;

    Srvf(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        detail::require_size(values, grid, "Srvf");
        detail::require_finite(values, "Srvf");
    }
};

/// Discretized boundary-preserving monotone reparametrization of [0,1].
struct Warping {
    Grid grid;
    std::vector<double> values;

    Warping(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        detail::require_size(values, grid, "Warping");
        detail::require_finite(values, "Warping");
        if (values.front() != 0.0 || values.back() != 1.0)
            throw std::invalid_argument("Warping: endpoints must be 0 and 1");
        for (std::size_t j = 1; j < values.size(); ++j) {
            if (values[j] < values[j - 1])
                throw std::invalid_argument("Warping: monotonicity violated");
            if (values[j] < 0.0 || values[j] > 1.0)
                throw std::invalid_argument("Warping: value outside [0,1]");
        }
    }

    static Warping identity(Grid g) { return Warping(g, g.points()); }

    bool is_identity() const {
        for (int j = 0; j < grid.num_points; ++j)
            if (values[j] != grid.point(j)) return false;
        return true;
    }
};

/// A set of functions sharing one grid.
struct FunctionSet {
    Grid grid;
    std::vector<FunctionSample> functions;

    FunctionSet(Grid g, std::vector<FunctionSample> fs) : grid(g), functions(std::move(fs)) {
        if (functions.empty()) throw std::invalid_argument("FunctionSet: need at least one function");
        for (const auto& f : functions)
            if (!(f.grid == grid)) throw std::invalid_argument("FunctionSet: mismatched grids");
    }

    int size() const { return static_cast<int>(functions.size()); }
};

}  // namespace ppdest
