#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qmem/spinwave.hpp"

namespace qmem {

enum class FitModel {
    exponential,         // A exp(-t/tau) [+ C]
    double_exponential,  // f exp(-t/tau1) + (1-f) exp(-t/tau2)
};

struct FitResult {
    FitModel model = FitModel::exponential;
    std::vector<std::string> names;
    std::vector<double> params;
    std::vector<double> errors;  // 1 sigma; NaN when n <= number of parameters
    double rss = 0.0;            // (weighted) residual sum of squares at the optimum
    double initial_rss = 0.0;    // at the initializer
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;     // double exponential with tau1, tau2 within 10 %
    bool collapsed = false;      // double exponential reduced to a single one

    double value(const std::string& name) const;
    double error(const std::string& name) const;
    double evaluate(double t) const;
};

struct FitOptions {
    std::span<const double> weights{};  // optional per-point weights
    bool offset = false;                // exponential only: add a constant term
    int max_iterations = 200;
    double tolerance = 1e-8;            // relative parameter change
};

// Least-squares A exp(-t/tau), Gauss-Newton with Levenberg damping from a
// log-linear initializer. Needs >= 3 points, t >= 0 and at least two y > 0.
FitResult fit_exponential(std::span<const double> t, std::span<const double> y, const FitOptions& options = {});

// f exp(-t/tau1) + (1-f) exp(-t/tau2) with tau1 < tau2, best of three
// starts. Needs >= 6 points.
FitResult fit_double_exponential(std::span<const double> t, std::span<const double> y,
                                 const FitOptions& options = {});

enum class ExtremumKind { min, max };

struct Extremum {
    double time = 0.0;
    double value = 0.0;
    ExtremumKind kind = ExtremumKind::min;
    double prominence = 0.0;
};

struct ExtremaReport {
    std::vector<Extremum> extrema;
    double noise_floor = 0.0;

    std::size_t size() const { return extrema.size(); }
};

// Centered moving average (window shrinks symmetrically at the ends).
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

// Local extrema of the smoothed curve. Adjacent extrema closer in value than
// noise_floor are cancelled pairwise, smallest difference first (curve end
// points act as fixed neighbours). Times and values come from the parabola
// through the three points around each surviving extremum.
ExtremaReport find_extrema(std::span<const double> times, std::span<const double> values, std::size_t window,
                           double noise_floor);

inline ExtremaReport find_extrema(const EfficiencyCurve& curve, std::size_t window, double noise_floor) {
    return find_extrema(curve.times, curve.overlap, window, noise_floor);
}

}  // namespace qmem
