#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qmem/analysis.hpp"
#include "qmem/commands.hpp"
#include "qmem/errors.hpp"
#include "qmem/rng.hpp"
#include "qmem/scenario.hpp"
#include "qmem/trap_model.hpp"

using namespace qmem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Detail {
public:
    template <typename T>
    Detail& operator<<(const T& v) {
        s_ << v;
        return *this;
    }
    std::string str() const { return s_.str(); }

private:
    std::ostringstream s_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v, int decimals = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

// First minimum of the smoothed overlap with its depth 1 - R.
struct Dip {
    bool found = false;
    double time = 0.0;
    double depth = 0.0;
};

Dip first_dip(const ExtremaReport& rep) {
    for (const auto& e : rep.extrema) {
        if (e.kind == ExtremumKind::min) return {true, e.time, 1.0 - e.value};
    }
    return {};
}

// ---------------------------------------------------------------------------

Outcome overlap_oracle() {
    const double sigma = 32.5e-6;
    const GridSpec grid{};
    const double h = ScenarioConfig{}.bandwidth;
    // Atom spread chosen so the kernel-smoothed density has width sigma.
    const double s_atoms = std::sqrt(sigma * sigma - h * h);
    const std::size_t n = 100000;
    std::vector<double> masses(n, 1.0 / n);
    auto cloud = [&](std::uint64_t stream, double dx) {
        CounterRng rng(2024, stream);
        std::vector<Vec2> p(n);
        for (auto& q : p) q = {dx + s_atoms * rng.normal(), s_atoms * rng.normal()};
        return density_from_masses(masses, p, grid, h);
    };
    Outcome out;
    Detail d;
    const auto u0 = cloud(0, 0.0);
    std::uint64_t stream = 1;
    for (double f : {0.0, 0.5, 1.0, 2.0}) {
        const auto t0 = std::chrono::steady_clock::now();
        const double r = mode_overlap(u0, cloud(stream++, f * sigma));
        const double dt = seconds_since(t0);
        const double expected = oracle::gaussian_overlap(f * sigma, sigma);
        const bool ok = std::abs(r - expected) <= 0.01 * expected && dt < 10.0;
        out.pass = out.pass && ok;
        d << "d/sigma=" << f << " R=" << fmt(r, 4) << " exact=" << fmt(expected, 4) << " (" << fmt(dt, 1) << " s)  ";
    }
    out.detail = d.str();
    return out;
}

struct BreathingRuns {
    ScenarioResult centered;
    ExtremaReport centered_extrema;
    double centered_seconds = 0.0;
    ScenarioResult offset;
    ExtremaReport offset_extrema;
};

ExtremaReport extrema_of(const ScenarioResult& r, const ScenarioConfig& c) {
    return find_extrema(r.curve.times, r.curve.overlap, c.smoothing_window, r.noise_floor);
}

Outcome breathing_revival(BreathingRuns& runs) {
    const ScenarioConfig c = preset("centered");
    const auto t0 = std::chrono::steady_clock::now();
    runs.centered = run_scenario(c);
    runs.centered_seconds = seconds_since(t0);
    runs.centered_extrema = extrema_of(runs.centered, c);
    const auto& ex = runs.centered_extrema.extrema;

    Outcome out;
    Detail d;
    const double expected[] = {2.0e-3, 3.2e-3, 5.0e-3, 8.2e-3};
    const ExtremumKind kinds[] = {ExtremumKind::min, ExtremumKind::max, ExtremumKind::min, ExtremumKind::max};
    d << "extrema(ms)=";
    for (std::size_t i = 0; i < ex.size(); ++i)
        d << (ex[i].kind == ExtremumKind::min ? "min@" : "max@") << fmt(ex[i].time * 1e3, 2) << " ";
    if (ex.size() < 4) {
        out.pass = false;
    } else {
        for (int i = 0; i < 4; ++i) {
            if (ex[i].kind != kinds[i] || std::abs(ex[i].time - expected[i]) > 0.6e-3) out.pass = false;
        }
    }

    const Dip dip = first_dip(runs.centered_extrema);
    const auto smooth = moving_average(runs.centered.curve.overlap, c.smoothing_window);
    double lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < smooth.size(); ++i) {
        if (runs.centered.curve.times[i] >= 20e-3 - 1e-12) {
            lo = std::min(lo, smooth[i]);
            hi = std::max(hi, smooth[i]);
        }
    }
    const double amplitude = 0.5 * (hi - lo);
    const bool quiet = dip.found && hi >= lo && amplitude < 0.05 * dip.depth;
    const bool fast = runs.centered_seconds < 60.0;
    out.pass = out.pass && quiet && fast;
    d << "| first-dip depth=" << fmt(dip.depth, 4) << " late amplitude=" << fmt(amplitude, 4)
      << " limit=" << fmt(0.05 * dip.depth, 4) << " | runtime=" << fmt(runs.centered_seconds, 1) << " s";
    out.detail = d.str();
    return out;
}

Outcome offset_enhancement(BreathingRuns& runs) {
    const ScenarioConfig c = preset("offset60");
    runs.offset = run_scenario(c);
    runs.offset_extrema = extrema_of(runs.offset, c);
    const Dip off = first_dip(runs.offset_extrema);
    const Dip cen = first_dip(runs.centered_extrema);
    Outcome out;
    out.pass = off.found && cen.found && off.depth > cen.depth;
    out.detail = (Detail() << "offset60 first dip " << fmt(off.depth, 4) << " at " << fmt(off.time * 1e3, 2)
                           << " ms vs centered " << fmt(cen.depth, 4) << " at " << fmt(cen.time * 1e3, 2) << " ms")
                     .str();
    return out;
}

Outcome gravity_ablation() {
    ScenarioConfig c = preset("centered");
    c.gravity_on = false;
    const ScenarioResult r = run_scenario(c);
    // The noise floor already is twice the mean jackknife standard error.
    const ExtremaReport rep = find_extrema(r.curve.times, r.curve.overlap, c.smoothing_window, 0.0);
    Outcome out;
    Detail d;
    double worst = 0.0;
    for (const auto& e : rep.extrema) {
        if (e.prominence > r.noise_floor) {
            out.pass = false;
            d << (e.kind == ExtremumKind::min ? "min@" : "max@") << fmt(e.time * 1e3, 2)
              << "ms prominence=" << fmt(e.prominence, 4) << " ";
        }
        worst = std::max(worst, e.prominence);
    }
    d << "| largest prominence=" << fmt(worst, 4) << " noise floor=" << fmt(r.noise_floor, 4);
    out.detail = d.str();
    return out;
}

Outcome compensation_power() {
    CompensationSpec spec;
    const double p = optimal_compensation_power(spec) * 1e6;
    spec.include_d1 = false;
    const double p2 = optimal_compensation_power(spec) * 1e6;
    Outcome out;
    out.pass = p >= 2.5 && p <= 4.6;
    out.detail = (Detail() << "P_comp=" << fmt(p, 3) << " uW (D2 only " << fmt(p2, 3) << " uW), window [2.5, 4.6] uW")
                     .str();
    return out;
}

Outcome spinwave_wavelength() {
    const auto [kw, ks] = collinear_wavevectors(780.241e-9);
    const auto wv = spinwave_wavevector(kw, ks);
    const double lambda = wv.wavelength.value_or(0.0);
    const bool lambda_ok = std::abs(lambda - 4.39e-2) <= 0.02 * 4.39e-2;

    // Axial coherence over 100 ms; a 1/e time beyond 100 ms means C stays above 1/e.
    const TrapGeometry trap;
    auto atoms = sample_thermal_ensemble(4000, trap, 15e-6, 9.81, 6, SpatialModel::uniform);
    auto rec = assign_excitation(atoms, ModeSpec::signal(), ModeSpec::write_read(), wv.delta_k);
    double lowest = 1.0;
    for (int step = 0; step < 20; ++step) {
        evolve_phases_along(rec, atoms, 5e-3, 5e-6, trap, 9.81, ShiftField::zero());
        lowest = std::min(lowest, motional_coherence(rec));
    }
    const double free_flight = oracle::free_flight_dephasing_time(norm(wv.delta_k), 15e-6);
    Outcome out;
    out.pass = lambda_ok && lowest > std::exp(-1.0);
    out.detail = (Detail() << "wavelength=" << fmt(lambda * 100, 3) << " cm | min phi2 coherence over 100 ms="
                           << fmt(lowest, 4) << " (free-flight 1/e time " << fmt(free_flight * 1e3, 0) << " ms)")
                     .str();
    return out;
}

Outcome dephasing_calibration() {
    const RingPotential ring;
    DephasingEnsemble ens;
    Outcome out;
    Detail d;

    const auto pre = dephasing_time(ring, ens);
    const bool pre_ok = pre && *pre >= 0.85e-3 / 3.0 && *pre <= 0.85e-3 * 3.0;
    d << "tau(20 um)=" << (pre ? fmt(*pre * 1e3, 3) : std::string("inf")) << " ms vs 0.85 ms x/3 | ";

    bool cal_ok = false;
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const WallCalibration cal = calibrate_wall_width(0.67e-3, ring, ens);
        RingPotential tuned = ring;
        tuned.wall_width = cal.wall_width;
        const auto again = dephasing_time(tuned, ens);
        cal_ok = again && std::abs(*again - 0.67e-3) <= 0.10 * 0.67e-3;
        d << "w*=" << fmt(cal.wall_width * 1e6, 2) << " um tau=" << (again ? fmt(*again * 1e3, 3) : std::string("inf"))
          << " ms (" << cal.evaluations << " evaluations, " << fmt(seconds_since(t0), 1) << " s) | ";
    } catch (const CalibrationFailure& e) {
        d << "calibration failed: " << e.what() << " | ";
    }

    const double t67 = residual_lifetime(0.67e-3, 0.01).value_or(0.0);
    const double t28 = residual_lifetime(0.67e-3, 0.024).value_or(0.0);
    const bool res_ok = std::abs(t67 - 67e-3) < 1e-9 && std::abs(t28 - 28e-3) <= 0.5e-3;
    d << "residual eps=1% " << fmt(t67 * 1e3, 2) << " ms, eps=2.4% " << fmt(t28 * 1e3, 2) << " ms";
    out.pass = pre_ok && cal_ok && res_ok;
    out.detail = d.str();
    return out;
}

Outcome fit_recovery() {
    Outcome out;
    Detail d;
    CounterRng rng(808, 0);
    for (double tau : {0.67e-3, 1.44e-3, 28e-3}) {
        std::vector<double> t(50), estimates;
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = (100.0 / 28.0) * tau * static_cast<double>(i) / 49.0;
        for (int rep = 0; rep < 100; ++rep) {
            std::vector<double> y;
            for (double x : t) y.push_back(std::exp(-x / tau) + 0.02 * rng.normal());
            const FitResult f = fit_exponential(t, y);
            estimates.push_back(f.converged ? f.value("tau") : std::nan(""));
        }
        const double m = median(estimates);
        const bool ok = std::abs(m - tau) <= 0.05 * tau;
        out.pass = out.pass && ok;
        d << "tau=" << fmt(tau * 1e3, 2) << "ms median=" << fmt(m * 1e3, 3) << " ";
    }

    std::vector<double> t(40), t1, t2;
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 1.5 * static_cast<double>(i) / 39.0;
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> y;
        for (double x : t) y.push_back(oracle::survival(x, 0.5, 0.16, 0.58) + 0.05 * rng.normal());
        const FitResult f = fit_double_exponential(t, y);
        t1.push_back(f.value("tau1"));
        t2.push_back(f.value("tau2"));
    }
    const double m1 = median(t1), m2 = median(t2);
    const bool ok = std::abs(m1 - 0.16) <= 0.016 && std::abs(m2 - 0.58) <= 0.058;
    out.pass = out.pass && ok;
    d << "| dexp medians " << fmt(m1 * 1e3, 1) << "/" << fmt(m2 * 1e3, 1) << " ms";
    out.detail = d.str();
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "qmem_acceptance";
    fs::create_directories(dir);
    Outcome out;
    Detail d;
    for (const auto& name : preset_names()) {
        std::vector<std::string> csv, svg;
        for (unsigned workers : {1u, 1u, 4u}) {
            SimulateArgs args;
            args.preset = name;
            args.seed = 7;
            args.atoms = 5000;
            args.workers = workers;
            const fs::path c = dir / (name + ".csv"), s = dir / (name + ".svg");
            args.out = c.string();
            args.svg = s.string();
            std::ostringstream sink, err;
            const int code = cmd_simulate(args, sink, err);
            if (code != kExitOk) {
                out.pass = false;
                d << name << " exit " << code << " " << err.str();
            }
            csv.push_back(slurp(c));
            svg.push_back(slurp(s));
        }
        const bool same = csv[0] == csv[1] && csv[0] == csv[2] && svg[0] == svg[1] && svg[0] == svg[2] &&
                          !csv[0].empty() && !svg[0].empty();
        out.pass = out.pass && same;
        d << name << (same ? " identical " : " DIFFERS ");
    }
    d << "(5000 atoms, 2 runs at 1 worker + 1 at 4 workers)";
    out.detail = d.str();
    return out;
}

Outcome invariant_suite() {
    Outcome out;
    Detail d;
    auto require = [&](bool ok, const std::string& what) {
        if (!ok) {
            out.pass = false;
            d << "FAILED " << what << "; ";
        }
    };
    const TrapGeometry trap;

    // Weight normalization and density integrals over random ensembles and modes.
    CounterRng rng(99, 1);
    int cases = 0;
    for (int k = 0; k < 10; ++k) {
        const auto atoms = sample_thermal_ensemble(3000, trap, 15e-6, 9.81, 100 + k);
        const Vec2 centre{rng.uniform(-40e-6, 40e-6), rng.uniform(-40e-6, 40e-6)};
        const auto rec = assign_excitation(atoms, ModeSpec::signal(centre), ModeSpec::write_read());
        double s = 0.0;
        for (double w : rec.weights) s += w * w;
        require(std::abs(s - 1.0) < 1e-12, "weight normalization");
        std::vector<Vec2> pos;
        for (const auto& a : atoms) pos.push_back(a.position.transverse());
        const auto u = density_estimate(rec, pos, GridSpec{}, 10e-6);
        require(std::abs(u.integral() - 1.0) < 1e-9, "unit integral");
        const auto other = sample_thermal_ensemble(3000, trap, 15e-6, 9.81, 200 + k);
        std::vector<Vec2> pos2;
        for (const auto& a : other) pos2.push_back(a.position.transverse());
        const auto v = density_estimate(assign_excitation(other, ModeSpec::signal(), ModeSpec::write_read()), pos2,
                                        GridSpec{}, 10e-6);
        const double r1 = mode_overlap(u, v), r2 = mode_overlap(v, u);
        require(r1 >= 0.0 && r1 <= 1.0 && std::abs(r1 - r2) <= 1e-14, "0 <= R <= 1 and symmetry");
        require(std::abs(mode_overlap(u, u) - 1.0) < 1e-12, "R(U, U) = 1");
        ++cases;
    }
    d << cases << " weight/density/overlap cases; ";

    // Soft-wall energy over 100 ms.
    const RingPotential ring;
    const TrapGeometry soft = TrapGeometry::soft_ring(ring);
    const auto& k = default_constants();
    auto energy = [&](const AtomState& a) {
        return 0.5 * norm2(a.velocity) + k.k_B * potential_at(a.position.transverse(), ring) / k.m_atom;
    };
    auto cold = sample_thermal_ensemble(200, soft, 15e-6, 0.0, 55, SpatialModel::uniform);
    for (auto& a : cold) a.velocity.z = 0.0;
    std::vector<double> e0;
    for (const auto& a : cold) e0.push_back(energy(a));
    propagate_in_place(cold, 100e-3, 5e-6, soft, 0.0);
    double drift = 0.0;
    for (std::size_t i = 0; i < cold.size(); ++i)
        if (cold[i].alive) drift = std::max(drift, std::abs(energy(cold[i]) - e0[i]) / e0[i]);
    require(drift < 1e-3, "soft-wall energy drift");
    d << "max soft-wall drift " << drift << "; ";

    // Barometric ratio at y = -50 um vs +50 um.
    const auto cloud = sample_thermal_ensemble(400000, trap, 15e-6, 9.81, 77);
    double low = 0, high = 0;
    for (const auto& a : cloud) {
        if (std::abs(a.position.y + 50e-6) < 5e-6) low += 1;
        if (std::abs(a.position.y - 50e-6) < 5e-6) high += 1;
    }
    const double ratio = low / high, expected = std::exp(100e-6 / oracle::scale_height(15e-6, 9.81));
    require(std::abs(ratio - expected) < 3.0 * ratio * std::sqrt(1.0 / low + 1.0 / high), "barometric ratio");
    d << "barometric " << fmt(ratio, 3) << " vs " << fmt(expected, 3) << "; ";

    // Coherence bounds.
    const auto atoms = sample_thermal_ensemble(1000, soft, 15e-6, 9.81, 31);
    bool bounds = true;
    for (double eps : {1.0, 0.1, 3.0}) {
        const auto probe = coherence_probe(atoms, soft, 9.81, ShiftField::from_trap(ring, 775e-9).scaled(eps), 5e-6,
                                           50e-6, 3e-3, false);
        bounds = bounds && std::abs(probe.coherence.front() - 1.0) < 1e-12;
        for (double c : probe.coherence) bounds = bounds && c >= 0.0 && c <= 1.0;
    }
    require(bounds, "C(0) = 1 and 0 <= C <= 1");
    d << "coherence bounds ok";
    out.detail = d.str();
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        const char* label;
        std::function<Outcome()> run;
    };
    BreathingRuns runs;
    const std::vector<Criterion> criteria{
        {"1 overlap oracle", overlap_oracle},
        {"2 breathing revival", [&] { return breathing_revival(runs); }},
        {"3 offset enhancement", [&] { return offset_enhancement(runs); }},
        {"4 gravity ablation", gravity_ablation},
        {"5 compensation power", compensation_power},
        {"6 spin-wave wavelength", spinwave_wavelength},
        {"7 dephasing calibration", dephasing_calibration},
        {"8 fit recovery", fit_recovery},
        {"9 determinism", determinism},
        {"10 invariant suite", invariant_suite},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.label << "  [" << fmt(seconds_since(t0), 1)
                  << " s]  " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
