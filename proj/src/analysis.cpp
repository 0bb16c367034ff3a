#include "qmem/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "qmem/errors.hpp"

namespace qmem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// model(t, params, gradient) -> value; gradient sized like params.
using Model = std::function<double(double, const Eigen::VectorXd&, Eigen::Ref<Eigen::VectorXd>)>;

struct Problem {
    std::span<const double> t;
    std::span<const double> y;
    std::span<const double> w;  // empty = unit weights
    Model model;
    std::vector<bool> positive;  // parameters that must stay > 0
    std::vector<std::pair<double, double>> bounds;  // (lo, hi) per parameter; NaN = free

    double weight(std::size_t i) const { return w.empty() ? 1.0 : w[i]; }
};

struct LmOutcome {
    Eigen::VectorXd params;
    Eigen::VectorXd errors;
    double rss = 0.0;
    double initial_rss = 0.0;
    int iterations = 0;
    bool converged = false;
};

double residual_sum(const Problem& pb, const Eigen::VectorXd& p) {
    Eigen::VectorXd grad(p.size());
    double rss = 0.0;
    for (std::size_t i = 0; i < pb.t.size(); ++i) {
        const double r = pb.y[i] - pb.model(pb.t[i], p, grad);
        rss += pb.weight(i) * r * r;
    }
    return rss;
}

bool admissible(const Problem& pb, const Eigen::VectorXd& p) {
    for (Eigen::Index k = 0; k < p.size(); ++k) {
        if (!std::isfinite(p[k])) return false;
        if (pb.positive[k] && !(p[k] > 0.0)) return false;
        const auto [lo, hi] = pb.bounds[k];
        if (!std::isnan(lo) && p[k] < lo) return false;
        if (!std::isnan(hi) && p[k] > hi) return false;
    }
    return true;
}

LmOutcome levenberg_marquardt(const Problem& pb, Eigen::VectorXd p, int max_iterations, double tolerance) {
    const auto n = static_cast<Eigen::Index>(pb.t.size());
    const Eigen::Index m = p.size();
    Eigen::MatrixXd J(n, m);
    Eigen::VectorXd r(n), grad(m), wv(n);
    for (Eigen::Index i = 0; i < n; ++i) wv[i] = pb.weight(static_cast<std::size_t>(i));

    auto linearize = [&](const Eigen::VectorXd& q) {
        double rss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double f = pb.model(pb.t[i], q, grad);
            r[i] = pb.y[i] - f;
            J.row(i) = grad.transpose();
            rss += wv[i] * r[i] * r[i];
        }
        return rss;
    };

    LmOutcome out;
    double rss = linearize(p);
    out.initial_rss = rss;
    double lambda = 1e-3;
    int it = 0;
    for (; it < max_iterations; ++it) {
        const Eigen::MatrixXd A = J.transpose() * wv.asDiagonal() * J;
        const Eigen::VectorXd g = J.transpose() * wv.asDiagonal() * r;
        bool stepped = false;
        while (lambda < 1e16) {
            Eigen::MatrixXd D = A;
            for (Eigen::Index k = 0; k < m; ++k) D(k, k) += lambda * std::max(A(k, k), 1e-300);
            const Eigen::VectorXd delta = D.ldlt().solve(g);
            const Eigen::VectorXd trial = p + delta;
            if (!delta.allFinite() || !admissible(pb, trial)) {
                lambda *= 10.0;
                continue;
            }
            const double trial_rss = residual_sum(pb, trial);
            if (trial_rss <= rss) {
                double rel = 0.0;
                for (Eigen::Index k = 0; k < m; ++k)
                    rel = std::max(rel, std::abs(delta[k]) / std::max(std::abs(trial[k]), 1e-300));
                p = trial;
                rss = linearize(p);
                lambda = std::max(lambda / 10.0, 1e-12);
                stepped = true;
                if (rel < tolerance) out.converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (out.converged) {
            ++it;
            break;
        }
        if (!stepped) {
            // No admissible descent direction left: numerically at the optimum.
            out.converged = true;
            break;
        }
    }
    out.iterations = it;
    out.params = p;
    out.rss = rss;

    out.errors = Eigen::VectorXd::Constant(m, kNaN);
    if (n > m) {
        const Eigen::MatrixXd A = J.transpose() * wv.asDiagonal() * J;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (lu.isInvertible()) {
            const double s2 = rss / static_cast<double>(n - m);
            const Eigen::MatrixXd cov = lu.inverse() * s2;
            for (Eigen::Index k = 0; k < m; ++k) out.errors[k] = std::sqrt(std::max(0.0, cov(k, k)));
        }
    }
    return out;
}

void check_points(std::span<const double> t, std::span<const double> y, const FitOptions& opt, std::size_t min_points) {
    if (t.size() != y.size()) throw InvalidArgument("fit: t and y sizes differ");
    if (t.size() < min_points)
        throw InvalidArgument("fit: need at least " + std::to_string(min_points) + " points, got " +
                              std::to_string(t.size()));
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || t[i] < 0.0) throw InvalidArgument("fit: times must be finite and non-negative");
        if (!std::isfinite(y[i])) throw InvalidArgument("fit: values must be finite");
    }
    if (!opt.weights.empty()) {
        if (opt.weights.size() != t.size()) throw InvalidArgument("fit: weight count differs from point count");
        for (double w : opt.weights) {
            if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("fit: weights must be positive");
        }
    }
}

// ln y = ln A - t / tau over points with y > 0.
std::pair<double, double> log_linear(std::span<const double> t, std::span<const double> y, std::size_t begin,
                                     std::size_t end) {
    double st = 0, sl = 0, stt = 0, stl = 0;
    int count = 0;
    for (std::size_t i = begin; i < end; ++i) {
        if (!(y[i] > 0.0)) continue;
        const double l = std::log(y[i]);
        st += t[i];
        sl += l;
        stt += t[i] * t[i];
        stl += t[i] * l;
        ++count;
    }
    if (count < 2) return {kNaN, kNaN};
    const double denom = count * stt - st * st;
    if (denom == 0.0) return {kNaN, kNaN};
    const double slope = (count * stl - st * sl) / denom;
    const double intercept = (sl - slope * st) / count;
    return {std::exp(intercept), slope < 0.0 ? -1.0 / slope : kNaN};
}

double time_span(std::span<const double> t) {
    const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
    return std::max(*hi - *lo, std::max(*hi, 1e-300));
}

FitResult to_result(FitModel model, std::vector<std::string> names, const LmOutcome& lm) {
    FitResult res;
    res.model = model;
    res.names = std::move(names);
    res.params.assign(lm.params.data(), lm.params.data() + lm.params.size());
    res.errors.assign(lm.errors.data(), lm.errors.data() + lm.errors.size());
    res.rss = lm.rss;
    res.initial_rss = lm.initial_rss;
    res.iterations = lm.iterations;
    res.converged = lm.converged;
    return res;
}

double exp_model(double t, const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> g, bool offset) {
    const double e = std::exp(-t / p[1]);
    g[0] = e;
    g[1] = p[0] * e * t / (p[1] * p[1]);
    if (offset) g[2] = 1.0;
    return p[0] * e + (offset ? p[2] : 0.0);
}

double dexp_model(double t, const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> g) {
    const double e1 = std::exp(-t / p[1]);
    const double e2 = std::exp(-t / p[2]);
    g[0] = e1 - e2;
    g[1] = p[0] * e1 * t / (p[1] * p[1]);
    g[2] = (1.0 - p[0]) * e2 * t / (p[2] * p[2]);
    return p[0] * e1 + (1.0 - p[0]) * e2;
}

}  // namespace

double FitResult::value(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return params[i];
    throw InvalidArgument("FitResult: no parameter named " + name);
}

double FitResult::error(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return errors[i];
    throw InvalidArgument("FitResult: no parameter named " + name);
}

double FitResult::evaluate(double t) const {
    if (model == FitModel::exponential) {
        const double c = params.size() > 2 ? params[2] : 0.0;
        return params[0] * std::exp(-t / params[1]) + c;
    }
    return params[0] * std::exp(-t / params[1]) + (1.0 - params[0]) * std::exp(-t / params[2]);
}

FitResult fit_exponential(std::span<const double> t, std::span<const double> y, const FitOptions& opt) {
    check_points(t, y, opt, 3);
    auto [a0, tau0] = log_linear(t, y, 0, t.size());
    if (std::isnan(a0)) throw InvalidArgument("fit: need at least two positive values to initialize");
    if (std::isnan(tau0)) tau0 = time_span(t);

    const bool offset = opt.offset;
    Problem pb{t, y, opt.weights,
               [offset](double tt, const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> g) {
                   return exp_model(tt, p, g, offset);
               },
               {false, true}, {{kNaN, kNaN}, {kNaN, kNaN}}};
    Eigen::VectorXd p0(offset ? 3 : 2);
    p0[0] = a0;
    p0[1] = tau0;
    if (offset) {
        p0[2] = 0.0;
        pb.positive.push_back(false);
        pb.bounds.push_back({kNaN, kNaN});
    }
    const LmOutcome lm = levenberg_marquardt(pb, p0, opt.max_iterations, opt.tolerance);
    std::vector<std::string> names{"A", "tau"};
    if (offset) names.push_back("C");
    return to_result(FitModel::exponential, std::move(names), lm);
}

FitResult fit_double_exponential(std::span<const double> t, std::span<const double> y, const FitOptions& opt) {
    check_points(t, y, opt, 6);
    const double span = time_span(t);

    // Start 0: slow tail from the late half, fast part from what is left early.
    std::vector<std::size_t> order(t.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });
    std::vector<double> ts(t.size()), ys(t.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        ts[i] = t[order[i]];
        ys[i] = y[order[i]];
    }
    const std::size_t half = ts.size() / 2;
    auto [b_slow, tau_slow] = log_linear(ts, ys, half, ts.size());
    if (std::isnan(tau_slow) || std::isnan(b_slow)) {
        tau_slow = span;
        b_slow = 0.5;
    }
    std::vector<double> early(half);
    for (std::size_t i = 0; i < half; ++i) early[i] = ys[i] - b_slow * std::exp(-ts[i] / tau_slow);
    auto [a_fast, tau_fast] = log_linear(std::span(ts).first(half), early, 0, half);
    if (std::isnan(tau_fast) || tau_fast >= tau_slow) tau_fast = tau_slow / 5.0;
    const double f0 = std::clamp(1.0 - b_slow, 0.05, 0.95);

    const std::array<std::array<double, 3>, 3> starts{{
        {f0, tau_fast, tau_slow},
        {0.5, span / 8.0, span / 1.5},
        {0.2, span / 30.0, 2.0 * span},
    }};

    Problem pb{t, y, opt.weights, dexp_model, {false, true, true}, {{0.0, 1.0}, {kNaN, kNaN}, {kNaN, kNaN}}};
    LmOutcome best;
    bool have_best = false;
    for (const auto& s : starts) {
        Eigen::VectorXd p0(3);
        p0 << s[0], s[1], s[2];
        const LmOutcome lm = levenberg_marquardt(pb, p0, opt.max_iterations, opt.tolerance);
        if (!have_best || lm.rss < best.rss) {
            best = lm;
            have_best = true;
        }
    }

    FitResult res = to_result(FitModel::double_exponential, {"f", "tau1", "tau2"}, best);
    if (res.params[1] > res.params[2]) {
        std::swap(res.params[1], res.params[2]);
        std::swap(res.errors[1], res.errors[2]);
        res.params[0] = 1.0 - res.params[0];
    }

    // A single decay explains the data as well: report it as tau2 with f = 0.
    Problem single{t, y, opt.weights,
                   [](double tt, const Eigen::VectorXd& p, Eigen::Ref<Eigen::VectorXd> g) {
                       const double e = std::exp(-tt / p[0]);
                       g[0] = e * tt / (p[0] * p[0]);
                       return e;
                   },
                   {true}, {{kNaN, kNaN}}};
    Eigen::VectorXd q0(1);
    q0[0] = res.params[2];
    const LmOutcome one = levenberg_marquardt(single, q0, opt.max_iterations, opt.tolerance);
    double scale = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) scale += y[i] * y[i];
    if (one.converged && one.rss <= res.rss * (1.0 + 1e-6) + 1e-20 * scale) {
        res.params = {0.0, one.params[0], one.params[0]};
        res.errors = {kNaN, one.errors[0], one.errors[0]};
        res.rss = one.rss;
        res.collapsed = true;
        res.converged = true;
        return res;
    }
    res.degenerate = std::abs(res.params[2] - res.params[1]) < 0.1 * res.params[2];
    return res;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
    const std::size_t n = values.size();
    std::vector<double> out(n);
    const std::size_t half = window / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t h = std::min({half, i, n - 1 - i});
        double s = 0.0;
        for (std::size_t j = i - h; j <= i + h; ++j) s += values[j];
        out[i] = s / static_cast<double>(2 * h + 1);
    }
    return out;
}

ExtremaReport find_extrema(std::span<const double> times, std::span<const double> values, std::size_t window,
                           double noise_floor) {
    if (times.size() != values.size()) throw InvalidArgument("find_extrema: times and values sizes differ");
    if (times.size() < 5) throw InvalidArgument("find_extrema: need at least 5 points");
    if (window == 0 || window % 2 == 0) throw InvalidArgument("find_extrema: smoothing window must be odd");
    if (!(noise_floor >= 0.0)) throw InvalidArgument("find_extrema: noise floor must be non-negative");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw InvalidArgument("find_extrema: times must increase");
    }

    ExtremaReport report;
    report.noise_floor = noise_floor;
    const std::vector<double> s = moving_average(values, window);
    const std::size_t n = s.size();

    // Raw extrema at sign changes of the discrete derivative; a flat run
    // between two opposite slopes yields its middle point.
    struct Node {
        std::size_t index;
        double time;
        double value;
        int kind;  // -1 min, +1 max, 0 curve end
    };
    std::vector<Node> nodes;
    nodes.push_back({0, times[0], s[0], 0});
    int last_sign = 0;
    std::size_t run_start = 0;  // first point after the last non-zero slope
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double d = s[i + 1] - s[i];
        const int sign = (d > 0.0) - (d < 0.0);
        if (sign == 0) continue;
        if (last_sign != 0 && sign != last_sign) {
            const std::size_t idx = (run_start + i) / 2;
            if (idx > 0 && idx + 1 < n) nodes.push_back({idx, times[idx], s[idx], last_sign > 0 ? 1 : -1});
        }
        last_sign = sign;
        run_start = i + 1;
    }
    nodes.push_back({n - 1, times[n - 1], s[n - 1], 0});

    // Cancel the closest adjacent pair until every gap exceeds the floor.
    for (;;) {
        double smallest = std::numeric_limits<double>::infinity();
        std::size_t at = 0;
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            if (nodes[i].kind == 0 && nodes[i + 1].kind == 0) continue;
            const double gap = std::abs(nodes[i + 1].value - nodes[i].value);
            if (gap < smallest) {
                smallest = gap;
                at = i;
            }
        }
        if (!(smallest < noise_floor)) break;
        if (nodes[at].kind != 0 && nodes[at + 1].kind != 0) {
            nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(at), nodes.begin() + static_cast<std::ptrdiff_t>(at) + 2);
        } else {
            nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(nodes[at].kind != 0 ? at : at + 1));
        }
    }

    for (std::size_t k = 1; k + 1 < nodes.size(); ++k) {
        const Node& nd = nodes[k];
        const std::size_t i = nd.index;
        // Parabola through (t[i-1], s[i-1]), (t[i], s[i]), (t[i+1], s[i+1]).
        const double x0 = times[i - 1], x1 = times[i], x2 = times[i + 1];
        const double y0 = s[i - 1], y1 = s[i], y2 = s[i + 1];
        const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
        const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
        const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
        const double c = y1 - a * x1 * x1 - b * x1;
        Extremum e;
        e.kind = nd.kind > 0 ? ExtremumKind::max : ExtremumKind::min;
        if (a != 0.0) {
            e.time = std::clamp(-b / (2.0 * a), x0, x2);
            e.value = a * e.time * e.time + b * e.time + c;
        } else {
            e.time = x1;
            e.value = y1;
        }
        e.prominence = std::min(std::abs(nd.value - nodes[k - 1].value), std::abs(nd.value - nodes[k + 1].value));
        report.extrema.push_back(e);
    }
    return report;
}

}  // namespace qmem
