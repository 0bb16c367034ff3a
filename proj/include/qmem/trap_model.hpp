#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qmem/constants.hpp"
#include "qmem/parallel.hpp"
#include "qmem/phys_core.hpp"
#include "qmem/trap_geometry.hpp"
#include "qmem/vec.hpp"

namespace qmem {

// ---------------------------------------------------------------------------
// Optical potential

// Hollow-beam potential (K) at transverse position r.
double potential_at(Vec2 r, const RingPotential& ring);

// dU/d|r| (K/m) of the ring potential; zero outside the ring radius.
double potential_radial_slope(double r, const RingPotential& ring);

// Light-sheet potential (K) at axial coordinate z for an end-cap pair at
// +-half_length, same Gaussian flank shape as the ring.
double endcap_potential(double z, double half_length, const RingPotential& ring);
double endcap_slope(double z, double half_length, const RingPotential& ring);

// ---------------------------------------------------------------------------
// Differential light shift

// Detuning (rad/s) of light at `wavelength` from the D2 line; positive = blue.
double detuning_from_D2(double wavelength, const PhysicalConstants& k = default_constants());
double detuning_from_D1(double wavelength, const PhysicalConstants& k = default_constants());

// Differential shift (rad/s) of the clock transition for a far-detuned trap
// of depth U (J): (U / hbar) * (omega_hf / detuning). Throws SingularInput at
// zero detuning.
double differential_shift(double potential_energy, const PhysicalConstants& k, double trap_detuning);

// delta_omega(r) = offset + scale * shift_per_kelvin * U_ring(r).
// `scale` is the compensation residual epsilon (1 = uncompensated).
struct ShiftField {
    RingPotential ring{};
    double shift_per_kelvin = 0.0;  // rad/s per K of ring potential
    double scale = 1.0;
    double offset = 0.0;            // rad/s, uniform part

    double operator()(Vec2 r) const {
        if (shift_per_kelvin == 0.0 || scale == 0.0) return offset;
        return offset + scale * shift_per_kelvin * potential_at(r, ring);
    }

    ShiftField scaled(double epsilon) const {
        ShiftField f = *this;
        f.scale *= epsilon;
        return f;
    }

    static ShiftField zero() { return {}; }
    static ShiftField constant(double delta_omega) {
        ShiftField f;
        f.offset = delta_omega;
        return f;
    }
    // Field of the hollow beam at the given trap wavelength (D2-only shift).
    static ShiftField from_trap(const RingPotential& ring, double trap_wavelength,
                                const PhysicalConstants& k = default_constants());
};

// ---------------------------------------------------------------------------
// Compensation beam

struct CompensationSpec {
    double trap_power = 1.9;            // W
    double trap_wavelength = 775e-9;    // m
    double residual_fraction = 0.01;    // epsilon, relative intensity mismatch
    // Add the trap's D1 contribution to the differential shift that the
    // compensation beam must cancel. Off gives the pure D2 two-level result
    // P_trap * (omega_hf / 2 Delta)^2.
    bool include_d1 = true;

    void validate() const;
};

// Compensation power (W) for a beam midway between the ground hyperfine
// components of D2 whose differential shift cancels the trap's, assuming
// identical spatial modes. Throws ModelDomainError unless the trap light is
// blue of D2 by more than 10 natural linewidths.
double optimal_compensation_power(const CompensationSpec& spec, const PhysicalConstants& k = default_constants());

// Dephasing time with a residual shift fraction epsilon: tau0 / epsilon.
// Returns nullopt (unbounded) for epsilon = 0. Throws InvalidArgument unless
// 0 <= epsilon <= 1 and tau0 > 0.
std::optional<double> residual_lifetime(double tau_uncompensated, double epsilon);

// ---------------------------------------------------------------------------
// Ensemble coherence

// Per-atom positions sampled every dt, atom-major.
struct TrajectorySet {
    double dt = 0.0;
    std::size_t n_atoms = 0;
    std::size_t n_samples = 0;
    std::vector<Vec3> positions;       // [atom * n_samples + sample]
    std::vector<std::uint8_t> alive;   // same layout

    Vec3 at(std::size_t atom, std::size_t sample) const { return positions[atom * n_samples + sample]; }
    bool alive_at(std::size_t atom, std::size_t sample) const { return alive[atom * n_samples + sample] != 0; }
    double duration() const { return n_samples == 0 ? 0.0 : dt * static_cast<double>(n_samples - 1); }
};

// Records trajectories for [0, duration] sampled at every sub-step.
TrajectorySet record_trajectories(std::span<const AtomState> atoms, double duration, double dt,
                                  const TrapGeometry& trap, double gravity, const ExecutionPolicy& policy = {},
                                  const PhysicalConstants& k = default_constants());

// C(t) = |<exp(i phi_j(t))>_j| over atoms alive at t, with
// phi_j(t) = trapezoidal integral of field(r_j) from 0 to t. Each requested
// time must fall on a sample (to 1e-6 of dt). Throws InvalidArgument for an
// empty ensemble.
std::vector<double> ensemble_coherence(const TrajectorySet& trajectories, const ShiftField& field,
                                       std::span<const double> times, const ExecutionPolicy& policy = {});

struct CoherenceProbe {
    std::vector<double> times;      // s
    std::vector<double> coherence;  // C(t)
    std::optional<double> one_over_e_time;  // s; nullopt if C stays above 1/e
};

// Streaming coherence: propagates the atoms while accumulating light-shift
// phases, sampling C every `sample_interval` up to t_max. Stops early once C
// falls below 1/e when stop_at_one_over_e is set.
CoherenceProbe coherence_probe(std::vector<AtomState> atoms, const TrapGeometry& trap, double gravity,
                               const ShiftField& field, double dt, double sample_interval, double t_max,
                               bool stop_at_one_over_e = true, const ExecutionPolicy& policy = {},
                               const PhysicalConstants& k = default_constants());

// Linearly interpolated first time C(t) crosses 1/e.
std::optional<double> one_over_e_time(std::span<const double> times, std::span<const double> coherence);

// Ensemble used to evaluate the light-shift dephasing time of a ring.
struct DephasingEnsemble {
    std::size_t n_atoms = 10000;
    double temperature = 15e-6;           // K
    double gravity = 9.81;                // m/s^2
    double trap_length = 3e-3;            // m
    double trap_wavelength = 775e-9;      // m
    double epsilon = 1.0;                 // residual shift fraction
    double dt = 5e-6;                     // s, upper bound on the sub-step
    double sample_interval = 10e-6;       // s
    double t_max = 10e-3;                 // s
    std::uint64_t seed = 1;
    SpatialModel spatial = SpatialModel::thermal;
};

// 1/e time of the microscopic light-shift coherence for atoms moving in the
// soft ring (nullopt if C stays above 1/e up to t_max).
std::optional<double> dephasing_time(const RingPotential& ring, const DephasingEnsemble& ensemble,
                                     const ExecutionPolicy& policy = {},
                                     const PhysicalConstants& k = default_constants());

struct WallCalibration {
    double wall_width = 0.0;  // m
    double tau = 0.0;         // s, dephasing time at wall_width
    int evaluations = 0;
    // Coarse scan used to verify that tau decreases with the wall width.
    std::vector<double> scan_widths;
    std::vector<double> scan_taus;  // +inf where C never reached 1/e
};

// Finds the wall width in [width_lo, width_hi] whose dephasing time matches
// target_tau within `tolerance` (relative). A geometric scan from width_lo
// runs until tau drops below the target and must be monotone up to there;
// bisection then works inside the last scan interval. Throws
// CalibrationFailure if the target lies outside the bracket or tau rises
// with the width on the scanned branch.
WallCalibration calibrate_wall_width(double target_tau, const RingPotential& ring, const DephasingEnsemble& ensemble,
                                     double width_lo = 5e-6, double width_hi = 60e-6, double tolerance = 0.02,
                                     const ExecutionPolicy& policy = {},
                                     const PhysicalConstants& k = default_constants());

}  // namespace qmem
