#include "qmem/trap_model.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "qmem/errors.hpp"

namespace qmem {

double potential_at(Vec2 r, const RingPotential& ring) {
    const double rho = norm(r);
    if (rho >= ring.ring_radius) return ring.peak_depth;
    const double d = rho - ring.ring_radius;
    return ring.peak_depth * std::exp(-2.0 * d * d / (ring.wall_width * ring.wall_width));
}

double potential_radial_slope(double r, const RingPotential& ring) {
    if (r >= ring.ring_radius) return 0.0;
    const double w2 = ring.wall_width * ring.wall_width;
    const double d = r - ring.ring_radius;
    return ring.peak_depth * std::exp(-2.0 * d * d / w2) * (-4.0 * d / w2);
}

double endcap_potential(double z, double half_length, const RingPotential& ring) {
    const double d = std::abs(z) - half_length;
    if (d >= 0.0) return ring.endcap_depth;
    return ring.endcap_depth * std::exp(-2.0 * d * d / (ring.wall_width * ring.wall_width));
}

double endcap_slope(double z, double half_length, const RingPotential& ring) {
    const double d = std::abs(z) - half_length;
    if (d >= 0.0) return 0.0;
    const double w2 = ring.wall_width * ring.wall_width;
    const double mag = ring.endcap_depth * std::exp(-2.0 * d * d / w2) * (-4.0 * d / w2);
    return z >= 0.0 ? mag : -mag;
}

double detuning_from_D2(double wavelength, const PhysicalConstants& k) {
    return k.omega_of(wavelength) - k.omega_D2();
}

double detuning_from_D1(double wavelength, const PhysicalConstants& k) {
    return k.omega_of(wavelength) - k.omega_D1();
}

double differential_shift(double potential_energy, const PhysicalConstants& k, double trap_detuning) {
    if (trap_detuning == 0.0 || !std::isfinite(trap_detuning))
        throw SingularInput("differential_shift: trap detuning must be finite and non-zero");
    return (potential_energy / k.hbar) * (k.omega_hf() / trap_detuning);
}

ShiftField ShiftField::from_trap(const RingPotential& ring, double trap_wavelength, const PhysicalConstants& k) {
    ShiftField f;
    f.ring = ring;
    f.shift_per_kelvin = differential_shift(k.k_B, k, detuning_from_D2(trap_wavelength, k));
    return f;
}

void CompensationSpec::validate() const {
    if (!std::isfinite(trap_power) || trap_power < 0.0)
        throw InvalidArgument("compensation: trap power must be finite and non-negative");
    if (!std::isfinite(trap_wavelength) || !(trap_wavelength > 0.0))
        throw InvalidArgument("compensation: trap wavelength must be positive");
    if (!(residual_fraction >= 0.0 && residual_fraction <= 1.0))
        throw InvalidArgument("compensation: residual fraction must lie in [0, 1]");
}

double optimal_compensation_power(const CompensationSpec& spec, const PhysicalConstants& k) {
    spec.validate();
    const double delta2 = detuning_from_D2(spec.trap_wavelength, k);
    if (delta2 <= 10.0 * k.gamma_D2) {
        throw ModelDomainError("compensation: trap light must be blue of D2 by more than 10 linewidths "
                               "(detuning " + std::to_string(delta2 / (2e9 * std::numbers::pi)) + " GHz)");
    }
    // Trap differential shift ~ P_trap * omega_hf * sum_l s_l / Delta_l^2 with
    // line strengths s_D2 = 2/3, s_D1 = 1/3. The compensation beam at
    // +-omega_hf/2 from the two D2 hyperfine components gives
    // P_comp * s_D2 * 4 / omega_hf of the opposite sign.
    const double ratio = k.omega_hf() / (2.0 * delta2);
    double d1_factor = 1.0;
    if (spec.include_d1) {
        const double delta1 = detuning_from_D1(spec.trap_wavelength, k);
        d1_factor += 0.5 * (delta2 * delta2) / (delta1 * delta1);
    }
    return spec.trap_power * ratio * ratio * d1_factor;
}

std::optional<double> residual_lifetime(double tau_uncompensated, double epsilon) {
    if (!(tau_uncompensated > 0.0) || !std::isfinite(tau_uncompensated))
        throw InvalidArgument("residual_lifetime: tau must be positive");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("residual_lifetime: epsilon must lie in [0, 1]");
    if (epsilon == 0.0) return std::nullopt;
    return tau_uncompensated / epsilon;
}

TrajectorySet record_trajectories(std::span<const AtomState> atoms, double duration, double dt,
                                  const TrapGeometry& trap, double gravity, const ExecutionPolicy& policy,
                                  const PhysicalConstants& k) {
    if (!(dt > 0.0)) throw InvalidArgument("record_trajectories: dt must be positive");
    if (!(duration >= 0.0)) throw InvalidArgument("record_trajectories: duration must be non-negative");
    const double limit = max_stable_step(atoms, trap);
    if (dt > limit) throw ConfigurationError("dt", "sub-step exceeds 1/10 of the fastest wall-crossing time");
    TrajectorySet set;
    set.dt = dt;
    set.n_atoms = atoms.size();
    set.n_samples = static_cast<std::size_t>(std::llround(duration / dt)) + 1;
    set.positions.resize(set.n_atoms * set.n_samples);
    set.alive.resize(set.n_atoms * set.n_samples);
    parallel_for(set.n_atoms, policy, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            AtomState a = atoms[i];
            for (std::size_t s = 0; s < set.n_samples; ++s) {
                if (s > 0) advance_atom(a, dt, trap, gravity, k);
                set.positions[i * set.n_samples + s] = a.position;
                set.alive[i * set.n_samples + s] = a.alive ? 1 : 0;
            }
        }
    });
    return set;
}

namespace {

double coherence_from_phases(std::span<const double> phases, std::span<const std::uint8_t> alive) {
    std::complex<double> sum{0.0, 0.0};
    std::size_t count = 0;
    for (std::size_t i = 0; i < phases.size(); ++i) {
        if (!alive[i]) continue;
        sum += std::polar(1.0, phases[i]);
        ++count;
    }
    if (count == 0) return 0.0;
    return std::min(1.0, std::abs(sum) / static_cast<double>(count));
}

}  // namespace

std::vector<double> ensemble_coherence(const TrajectorySet& traj, const ShiftField& field,
                                       std::span<const double> times, const ExecutionPolicy& policy) {
    if (traj.n_atoms == 0 || traj.n_samples == 0)
        throw InvalidArgument("ensemble_coherence: empty ensemble");
    std::vector<std::size_t> index(times.size());
    std::size_t last = 0;
    for (std::size_t q = 0; q < times.size(); ++q) {
        const double steps = times[q] / traj.dt;
        const auto s = static_cast<long long>(std::llround(steps));
        if (s < 0 || std::abs(steps - static_cast<double>(s)) > 1e-6 || static_cast<std::size_t>(s) >= traj.n_samples)
            throw InvalidArgument("ensemble_coherence: requested time is not on the trajectory sample grid");
        index[q] = static_cast<std::size_t>(s);
        last = std::max(last, index[q]);
    }

    // phase[q * n_atoms + atom], alive likewise
    std::vector<double> phase(times.size() * traj.n_atoms, 0.0);
    std::vector<std::uint8_t> alive(times.size() * traj.n_atoms, 0);
    parallel_for(traj.n_atoms, policy, [&](std::size_t begin, std::size_t end) {
        std::vector<double> cumulative(last + 1);
        for (std::size_t a = begin; a < end; ++a) {
            double phi = 0.0;
            double f_prev = field(traj.at(a, 0).transverse());
            cumulative[0] = 0.0;
            for (std::size_t s = 1; s <= last; ++s) {
                if (traj.alive_at(a, s)) {
                    const double f_now = field(traj.at(a, s).transverse());
                    phi += 0.5 * traj.dt * (f_prev + f_now);
                    f_prev = f_now;
                }
                cumulative[s] = phi;
            }
            for (std::size_t q = 0; q < times.size(); ++q) {
                phase[q * traj.n_atoms + a] = cumulative[index[q]];
                alive[q * traj.n_atoms + a] = traj.alive_at(a, index[q]) ? 1 : 0;
            }
        }
    });

    std::vector<double> out(times.size());
    for (std::size_t q = 0; q < times.size(); ++q) {
        out[q] = coherence_from_phases(std::span(phase).subspan(q * traj.n_atoms, traj.n_atoms),
                                       std::span(alive).subspan(q * traj.n_atoms, traj.n_atoms));
    }
    return out;
}

std::optional<double> one_over_e_time(std::span<const double> times, std::span<const double> coherence) {
    const double threshold = std::exp(-1.0);
    for (std::size_t i = 1; i < times.size() && i < coherence.size(); ++i) {
        if (coherence[i] < threshold) {
            const double c0 = coherence[i - 1], c1 = coherence[i];
            const double frac = (c0 - threshold) / (c0 - c1);
            return times[i - 1] + frac * (times[i] - times[i - 1]);
        }
    }
    return std::nullopt;
}

CoherenceProbe coherence_probe(std::vector<AtomState> atoms, const TrapGeometry& trap, double gravity,
                               const ShiftField& field, double dt, double sample_interval, double t_max,
                               bool stop_at_one_over_e, const ExecutionPolicy& policy, const PhysicalConstants& k) {
    if (atoms.empty()) throw InvalidArgument("coherence_probe: empty ensemble");
    if (!(dt > 0.0) || !(sample_interval > 0.0) || !(t_max > 0.0))
        throw InvalidArgument("coherence_probe: dt, sample interval and t_max must be positive");
    const auto sub_steps = static_cast<std::size_t>(std::ceil(sample_interval / dt - 1e-9));
    const double h = sample_interval / static_cast<double>(sub_steps);
    if (h > max_stable_step(atoms, trap))
        throw ConfigurationError("dt", "sub-step exceeds 1/10 of the fastest wall-crossing time");

    const std::size_t n = atoms.size();
    std::vector<double> phase(n, 0.0);
    std::vector<std::uint8_t> alive(n, 1);
    for (std::size_t i = 0; i < n; ++i) alive[i] = atoms[i].alive ? 1 : 0;

    CoherenceProbe probe;
    probe.times.push_back(0.0);
    probe.coherence.push_back(coherence_from_phases(phase, alive));
    const auto samples = static_cast<std::size_t>(std::floor(t_max / sample_interval + 1e-9));
    for (std::size_t q = 1; q <= samples; ++q) {
        parallel_for(n, policy, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                AtomState& a = atoms[i];
                if (!a.alive) continue;
                double f_prev = field(a.position.transverse());
                for (std::size_t s = 0; s < sub_steps && a.alive; ++s) {
                    advance_atom(a, h, trap, gravity, k);
                    if (!a.alive) break;
                    const double f_now = field(a.position.transverse());
                    phase[i] += 0.5 * h * (f_prev + f_now);
                    f_prev = f_now;
                }
                alive[i] = a.alive ? 1 : 0;
            }
        });
        probe.times.push_back(static_cast<double>(q) * sample_interval);
        probe.coherence.push_back(coherence_from_phases(phase, alive));
        if (stop_at_one_over_e && probe.coherence.back() < std::exp(-1.0)) break;
    }
    probe.one_over_e_time = one_over_e_time(probe.times, probe.coherence);
    return probe;
}

std::optional<double> dephasing_time(const RingPotential& ring, const DephasingEnsemble& ens,
                                     const ExecutionPolicy& policy, const PhysicalConstants& k) {
    ring.validate();
    const TrapGeometry trap = TrapGeometry::soft_ring(ring, ens.trap_length);
    auto atoms = sample_thermal_ensemble(ens.n_atoms, trap, ens.temperature, ens.gravity, ens.seed, ens.spatial,
                                         policy, k);
    const ShiftField field = ShiftField::from_trap(ring, ens.trap_wavelength, k).scaled(ens.epsilon);
    const double dt = std::min(ens.dt, 0.999 * max_stable_step(atoms, trap));
    return coherence_probe(std::move(atoms), trap, ens.gravity, field, dt, ens.sample_interval, ens.t_max, true,
                           policy, k)
        .one_over_e_time;
}

WallCalibration calibrate_wall_width(double target_tau, const RingPotential& ring, const DephasingEnsemble& ens,
                                     double width_lo, double width_hi, double tolerance,
                                     const ExecutionPolicy& policy, const PhysicalConstants& k) {
    if (!(target_tau > 0.0) || !std::isfinite(target_tau))
        throw InvalidArgument("calibrate_wall_width: target tau must be positive");
    if (!(width_lo > 0.0 && width_hi > width_lo))
        throw InvalidArgument("calibrate_wall_width: invalid width bracket");

    constexpr double kInf = std::numeric_limits<double>::infinity();
    WallCalibration cal;
    auto tau_at = [&](double width) {
        RingPotential r = ring;
        r.wall_width = width;
        ++cal.evaluations;
        return dephasing_time(r, ens, policy, k).value_or(kInf);
    };

    // Geometric scan, stopped at the first width whose tau is below the
    // target. Over the scanned branch tau must not increase with the width
    // beyond 2 % jitter.
    constexpr int kScan = 8;
    for (int i = 0; i < kScan; ++i) {
        const double w = width_lo * std::pow(width_hi / width_lo, static_cast<double>(i) / (kScan - 1));
        cal.scan_widths.push_back(w);
        cal.scan_taus.push_back(tau_at(w));
        if (i > 0 && cal.scan_taus[i] > cal.scan_taus[i - 1] * 1.02) {
            throw CalibrationFailure("calibrate_wall_width: dephasing time is not monotone in the wall width",
                                     cal.scan_taus.front(), cal.scan_taus.back());
        }
        if (cal.scan_taus[i] <= target_tau) break;
    }
    if (target_tau > cal.scan_taus.front() || target_tau < cal.scan_taus.back()) {
        throw CalibrationFailure("calibrate_wall_width: target " + std::to_string(target_tau) +
                                     " s is outside the bracket [" + std::to_string(cal.scan_taus.back()) + ", " +
                                     std::to_string(cal.scan_taus.front()) + "] s",
                                 cal.scan_taus.front(), cal.scan_taus.back());
    }
    if (cal.scan_taus.size() == 1) {
        cal.wall_width = cal.scan_widths[0];
        cal.tau = cal.scan_taus[0];
        return cal;
    }

    const std::size_t seg = cal.scan_taus.size() - 1;
    double lo = cal.scan_widths[seg - 1], hi = cal.scan_widths[seg];
    const double tau_lo = cal.scan_taus[seg - 1], tau_hi = cal.scan_taus[seg];

    double best_w = std::abs(tau_lo - target_tau) < std::abs(tau_hi - target_tau) ? lo : hi;
    double best_tau = best_w == lo ? tau_lo : tau_hi;
    for (int it = 0; it < 40; ++it) {
        if (std::abs(best_tau - target_tau) <= tolerance * target_tau) break;
        if (hi - lo < 1e-3 * lo) break;
        const double mid = 0.5 * (lo + hi);
        const double tau_mid = tau_at(mid);
        if (std::abs(tau_mid - target_tau) < std::abs(best_tau - target_tau)) {
            best_w = mid;
            best_tau = tau_mid;
        }
        if (tau_mid > target_tau) lo = mid;
        else hi = mid;
    }
    cal.wall_width = best_w;
    cal.tau = best_tau;
    return cal;
}

}  // namespace qmem
