#include "qmem/spinwave.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "qmem/errors.hpp"

namespace qmem {

void ModeSpec::validate() const {
    if (!(waist > 0.0) || !std::isfinite(waist)) throw InvalidArgument("mode waist must be positive");
    if (!std::isfinite(center.x) || !std::isfinite(center.y)) throw InvalidArgument("mode center must be finite");
}

void GridSpec::validate() const {
    if (nx == 0 || ny == 0) throw InvalidArgument("grid resolution must be at least 1");
    if (!(x_max > x_min) || !(y_max > y_min)) throw InvalidArgument("grid extents must be increasing");
}

void SurvivalParams::validate() const {
    if (!(fast_fraction >= 0.0 && fast_fraction <= 1.0))
        throw InvalidArgument("survival: fast fraction must lie in [0, 1]");
    if (!(tau_fast > 0.0) || !(tau_slow > 0.0)) throw InvalidArgument("survival: time constants must be positive");
}

std::vector<double> SpinWaveRecord::probabilities() const {
    std::vector<double> p(weights.size());
    std::transform(weights.begin(), weights.end(), p.begin(), [](double w) { return w * w; });
    return p;
}

double DensityGrid::integral() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * cell_area();
}

Vec2 DensityGrid::mean() const {
    Vec2 m{};
    double total = 0.0;
    for (std::size_t iy = 0; iy < spec.ny; ++iy) {
        for (std::size_t ix = 0; ix < spec.nx; ++ix) {
            const double v = at(ix, iy);
            m.x += v * spec.x_center(ix);
            m.y += v * spec.y_center(iy);
            total += v;
        }
    }
    return m * (1.0 / total);
}

Vec2 DensityGrid::variance() const {
    const Vec2 m = mean();
    Vec2 var{};
    double total = 0.0;
    for (std::size_t iy = 0; iy < spec.ny; ++iy) {
        for (std::size_t ix = 0; ix < spec.nx; ++ix) {
            const double v = at(ix, iy);
            const double dx = spec.x_center(ix) - m.x;
            const double dy = spec.y_center(iy) - m.y;
            var.x += v * dx * dx;
            var.y += v * dy * dy;
            total += v;
        }
    }
    return var * (1.0 / total);
}

WavevectorResult spinwave_wavevector(Vec3 write_k, Vec3 signal_k) {
    for (double c : {write_k.x, write_k.y, write_k.z, signal_k.x, signal_k.y, signal_k.z}) {
        if (!std::isfinite(c)) throw InvalidArgument("spinwave_wavevector: wave vectors must be finite");
    }
    WavevectorResult out;
    out.delta_k = write_k - signal_k;
    const double magnitude = norm(out.delta_k);
    if (magnitude > 0.0) out.wavelength = 2.0 * std::numbers::pi / magnitude;
    return out;
}

std::pair<Vec3, Vec3> collinear_wavevectors(double write_wavelength, const PhysicalConstants& k) {
    const double omega_w = k.omega_of(write_wavelength);
    const double omega_s = omega_w - k.omega_hf();
    return {Vec3{0.0, 0.0, omega_w / k.c}, Vec3{0.0, 0.0, omega_s / k.c}};
}

double raw_excitation_weight(Vec2 r, const ModeSpec& signal) {
    return std::exp(-norm2(r - signal.center) / (signal.waist * signal.waist));
}

SpinWaveRecord assign_excitation(std::span<const AtomState> atoms, const ModeSpec& signal, const ModeSpec& write,
                                 Vec3 delta_k, double creation_time) {
    signal.validate();
    write.validate();
    if (atoms.empty()) throw InvalidArgument("assign_excitation: no atoms");
    SpinWaveRecord rec;
    const std::size_t n = atoms.size();
    rec.weights.resize(n);
    rec.light_phase.assign(n, 0.0);
    rec.motion_phase.assign(n, 0.0);
    rec.origins.resize(n);
    rec.delta_k = delta_k;
    rec.creation_time = creation_time;

    double largest = 0.0;
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        rec.origins[j] = atoms[j].position;
        const double w = atoms[j].alive ? raw_excitation_weight(atoms[j].position.transverse(), signal) : 0.0;
        rec.weights[j] = w;
        largest = std::max(largest, w);
        sum_sq += w * w;
    }
    if (largest < 1e-30 || sum_sq == 0.0)
        throw EmptyModeError("assign_excitation: the signal mode does not overlap the atoms");
    const double scale = 1.0 / std::sqrt(sum_sq);
    for (double& w : rec.weights) w *= scale;
    return rec;
}

SpinWaveRecord evolve_phases(const SpinWaveRecord& record, const TrajectorySet& traj, const ShiftField& field,
                             const ExecutionPolicy& policy) {
    if (traj.n_atoms != record.n_atoms())
        throw InvalidArgument("evolve_phases: trajectory and record atom counts differ");
    if (traj.n_samples == 0) throw InvalidArgument("evolve_phases: empty trajectories");
    SpinWaveRecord out = record;
    parallel_for(traj.n_atoms, policy, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            double phi = 0.0;
            double f_prev = field(traj.at(j, 0).transverse());
            std::size_t last_alive = 0;
            for (std::size_t s = 1; s < traj.n_samples; ++s) {
                if (!traj.alive_at(j, s)) break;
                const double f_now = field(traj.at(j, s).transverse());
                phi += 0.5 * traj.dt * (f_prev + f_now);
                f_prev = f_now;
                last_alive = s;
            }
            out.light_phase[j] += phi;
            out.motion_phase[j] = dot(record.delta_k, traj.at(j, last_alive) - record.origins[j]);
        }
    });
    return out;
}

void evolve_phases_along(SpinWaveRecord& record, std::span<AtomState> atoms, double duration, double dt,
                         const TrapGeometry& trap, double gravity, const ShiftField& field,
                         const ExecutionPolicy& policy, const PhysicalConstants& k) {
    if (atoms.size() != record.n_atoms())
        throw InvalidArgument("evolve_phases: atom and record counts differ");
    if (!(dt > 0.0)) throw InvalidArgument("evolve_phases: dt must be positive");
    if (!(duration >= 0.0)) throw InvalidArgument("evolve_phases: duration must be non-negative");
    if (dt > max_stable_step(atoms, trap))
        throw ConfigurationError("dt", "sub-step exceeds 1/10 of the fastest wall-crossing time");
    if (duration == 0.0) return;
    auto full = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
    double tail = duration - static_cast<double>(full) * dt;
    if (tail < 1e-9 * dt) tail = 0.0;
    const bool track_light = !(field.offset == 0.0 && (field.shift_per_kelvin == 0.0 || field.scale == 0.0));

    parallel_for(atoms.size(), policy, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            AtomState& a = atoms[j];
            if (!a.alive) continue;
            double phi = 0.0;
            double f_prev = track_light ? field(a.position.transverse()) : 0.0;
            Vec3 last_alive = a.position;
            auto step = [&](double h) {
                advance_atom(a, h, trap, gravity, k);
                if (a.alive) last_alive = a.position;
                if (track_light && a.alive) {
                    const double f_now = field(a.position.transverse());
                    phi += 0.5 * h * (f_prev + f_now);
                    f_prev = f_now;
                }
            };
            for (std::size_t s = 0; s < full && a.alive; ++s) step(dt);
            if (tail > 0.0 && a.alive) step(tail);
            record.light_phase[j] += phi;
            record.motion_phase[j] = dot(record.delta_k, last_alive - record.origins[j]);
        }
    });
}

namespace {

double weighted_coherence(const SpinWaveRecord& rec, bool include_light) {
    std::complex<double> sum{0.0, 0.0};
    for (std::size_t j = 0; j < rec.n_atoms(); ++j) {
        const double p = rec.weights[j] * rec.weights[j];
        if (p == 0.0) continue;
        const double phi = include_light ? rec.phase(j) : rec.motion_phase[j];
        sum += p * std::polar(1.0, phi);
    }
    return std::min(1.0, std::abs(sum));
}

// Cell integrals of a unit Gaussian centred at `center` for the cells of an
// axis [lo, lo + n*d). Fills weights for cells [first, first + count) and
// returns their sum.
double axis_kernel(double center, double h, double lo, double d, std::size_t n, std::vector<double>& out,
                   std::size_t& first) {
    const double reach = 5.0 * h;
    const double a = std::floor((center - reach - lo) / d);
    const double b = std::ceil((center + reach - lo) / d);
    const long long i0 = std::max<long long>(0, static_cast<long long>(a));
    const long long i1 = std::min<long long>(static_cast<long long>(n), static_cast<long long>(b));
    out.clear();
    first = 0;
    if (i1 <= i0) return 0.0;
    first = static_cast<std::size_t>(i0);
    const double inv = 1.0 / (std::numbers::sqrt2 * h);
    double prev = std::erf((lo + static_cast<double>(i0) * d - center) * inv);
    double sum = 0.0;
    for (long long i = i0; i < i1; ++i) {
        const double next = std::erf((lo + static_cast<double>(i + 1) * d - center) * inv);
        const double v = 0.5 * (next - prev);
        out.push_back(v);
        sum += v;
        prev = next;
    }
    return sum;
}

// Adds the kernels of atoms [begin, end) into `grid`; returns the mass that
// landed on the grid.
double accumulate_kernels(std::span<const double> masses, std::span<const Vec2> positions, const GridSpec& spec,
                          double h, std::size_t begin, std::size_t end, std::vector<double>& grid) {
    std::vector<double> kx, ky;
    kx.reserve(64);
    ky.reserve(64);
    double inside = 0.0;
    const double dx = spec.dx(), dy = spec.dy();
    for (std::size_t j = begin; j < end; ++j) {
        const double m = masses[j];
        if (m == 0.0) continue;
        std::size_t fx = 0, fy = 0;
        const double sx = axis_kernel(positions[j].x, h, spec.x_min, dx, spec.nx, kx, fx);
        if (kx.empty()) continue;
        const double sy = axis_kernel(positions[j].y, h, spec.y_min, dy, spec.ny, ky, fy);
        if (ky.empty()) continue;
        inside += m * sx * sy;
        for (std::size_t a = 0; a < ky.size(); ++a) {
            const double row_mass = m * ky[a];
            double* row = grid.data() + (fy + a) * spec.nx + fx;
            for (std::size_t b = 0; b < kx.size(); ++b) row[b] += row_mass * kx[b];
        }
    }
    return inside;
}

void check_inputs(std::span<const double> masses, std::span<const Vec2> positions, const GridSpec& grid,
                  double bandwidth) {
    grid.validate();
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
        throw InvalidArgument("density_estimate: bandwidth must be positive");
    if (masses.size() != positions.size())
        throw InvalidArgument("density_estimate: weight and position counts differ");
}

void check_coverage(double inside, double total) {
    if (!(total > 0.0)) throw InvalidArgument("density_estimate: total weight must be positive");
    const double fraction = inside / total;
    if (fraction < 0.99) {
        throw GridCoverageError("density_estimate: " + std::to_string(100.0 * (1.0 - fraction)) +
                                    " % of the weight falls outside the grid",
                                fraction);
    }
}

DensityGrid normalized(const GridSpec& spec, std::vector<double> mass) {
    double sum = 0.0;
    for (double v : mass) sum += v;
    if (!(sum > 0.0)) throw NumericalError("density_estimate: no weight on the grid");
    const double scale = 1.0 / (sum * spec.cell_area());
    for (double& v : mass) v *= scale;
    return DensityGrid{spec, std::move(mass)};
}

}  // namespace

double spin_coherence(const SpinWaveRecord& record) { return weighted_coherence(record, true); }
double motional_coherence(const SpinWaveRecord& record) { return weighted_coherence(record, false); }

DensityGrid density_from_masses(std::span<const double> masses, std::span<const Vec2> positions,
                                const GridSpec& grid, double bandwidth) {
    check_inputs(masses, positions, grid, bandwidth);
    double total = 0.0;
    for (double m : masses) total += m;
    std::vector<double> acc(grid.nx * grid.ny, 0.0);
    const double inside = accumulate_kernels(masses, positions, grid, bandwidth, 0, masses.size(), acc);
    check_coverage(inside, total);
    return normalized(grid, std::move(acc));
}

DensityGrid density_estimate(const SpinWaveRecord& record, std::span<const Vec2> positions, const GridSpec& grid,
                             double bandwidth) {
    if (positions.size() != record.n_atoms())
        throw InvalidArgument("density_estimate: position and record atom counts differ");
    const auto masses = record.probabilities();
    return density_from_masses(masses, positions, grid, bandwidth);
}

GroupedDensity grouped_density(std::span<const double> masses, std::span<const Vec2> positions,
                               const GridSpec& grid, double bandwidth, std::size_t groups,
                               const ExecutionPolicy& policy) {
    check_inputs(masses, positions, grid, bandwidth);
    if (groups == 0) throw InvalidArgument("grouped_density: need at least one group");
    const std::size_t n = masses.size();
    GroupedDensity out;
    out.spec = grid;
    out.group_mass.assign(groups, std::vector<double>(grid.nx * grid.ny, 0.0));
    out.group_total.assign(groups, 0.0);
    std::vector<double> inside(groups, 0.0);
    parallel_for(groups, policy, [&](std::size_t gb, std::size_t ge) {
        for (std::size_t g = gb; g < ge; ++g) {
            const std::size_t begin = g * n / groups;
            const std::size_t end = (g + 1) * n / groups;
            for (std::size_t j = begin; j < end; ++j) out.group_total[g] += masses[j];
            inside[g] = accumulate_kernels(masses, positions, grid, bandwidth, begin, end, out.group_mass[g]);
        }
    });
    double total_inside = 0.0, total = 0.0;
    for (std::size_t g = 0; g < groups; ++g) {
        total_inside += inside[g];
        total += out.group_total[g];
    }
    check_coverage(total_inside, total);
    return out;
}

DensityGrid GroupedDensity::combined() const {
    std::vector<double> sum(spec.nx * spec.ny, 0.0);
    for (const auto& g : group_mass) {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += g[i];
    }
    return normalized(spec, std::move(sum));
}

DensityGrid GroupedDensity::leave_out(std::size_t skip) const {
    if (skip >= group_mass.size()) throw InvalidArgument("GroupedDensity::leave_out: group index out of range");
    std::vector<double> sum(spec.nx * spec.ny, 0.0);
    for (std::size_t g = 0; g < group_mass.size(); ++g) {
        if (g == skip) continue;
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += group_mass[g][i];
    }
    return normalized(spec, std::move(sum));
}

double mode_overlap(const DensityGrid& u0, const DensityGrid& ut) {
    if (!(u0.spec == ut.spec) || u0.values.size() != ut.values.size())
        throw InvalidArgument("mode_overlap: density grids differ");
    double s = 0.0;
    for (std::size_t i = 0; i < u0.values.size(); ++i) s += std::sqrt(u0.values[i] * ut.values[i]);
    const double amp = s * u0.cell_area();
    return std::clamp(amp * amp, 0.0, 1.0);
}

double atom_survival(double t, const SurvivalParams& p) {
    p.validate();
    return p.fast_fraction * std::exp(-t / p.tau_fast) + (1.0 - p.fast_fraction) * std::exp(-t / p.tau_slow);
}

EfficiencyCurve efficiency_total(std::span<const double> times, std::span<const double> overlap, double tau_dephase,
                                 const SurvivalParams& survival) {
    if (!(tau_dephase > 0.0) || !std::isfinite(tau_dephase))
        throw InvalidArgument("efficiency_total: tau_dephase must be positive");
    if (times.size() != overlap.size()) throw InvalidArgument("efficiency_total: times and overlap sizes differ");
    if (times.empty()) throw InvalidArgument("efficiency_total: empty curve");
    survival.validate();
    for (double r : overlap) {
        if (!(r >= 0.0 && r <= 1.0)) throw InvalidArgument("efficiency_total: overlap values must lie in [0, 1]");
    }

    EfficiencyCurve c;
    c.times.assign(times.begin(), times.end());
    const double t0 = times.front();
    const double r0 = overlap.front();
    if (!(r0 > 0.0)) throw NumericalError("efficiency_total: zero overlap at the first time point");
    const double s0 = atom_survival(t0, survival);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double dt = times[i] - t0;
        const double r = std::min(1.0, overlap[i] / r0);
        const double d = std::exp(-dt / tau_dephase);
        const double l = std::min(1.0, atom_survival(times[i], survival) / s0);
        c.overlap.push_back(r);
        c.dephasing.push_back(d);
        c.loss.push_back(l);
        c.total.push_back(r * d * l);
    }
    return c;
}

}  // namespace qmem
