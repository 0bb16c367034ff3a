#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qmem/constants.hpp"
#include "qmem/parallel.hpp"
#include "qmem/phys_core.hpp"
#include "qmem/trap_model.hpp"
#include "qmem/vec.hpp"

namespace qmem {

// Gaussian light mode; waist is the field 1/e^2-intensity radius w0.
struct ModeSpec {
    Vec2 center{};
    double waist = 65e-6;             // m
    double wavelength = 780.241e-9;   // m

    void validate() const;

    static ModeSpec signal(Vec2 center = {}) { return {center, 65e-6, 780.241e-9}; }
    static ModeSpec write_read(Vec2 center = {}) { return {center, 275e-6, 780.241e-9}; }
};

// Singly-excited collective state: per-atom amplitude weights (sum of
// squares = 1) and phases split into the light-shift part phi1 and the
// momentum-transfer part phi2 = delta_k . (r(t) - r(0)).
struct SpinWaveRecord {
    std::vector<double> weights;
    std::vector<double> light_phase;
    std::vector<double> motion_phase;
    std::vector<Vec3> origins;   // positions at creation
    Vec3 delta_k{};              // rad/m
    double creation_time = 0.0;  // s

    std::size_t n_atoms() const { return weights.size(); }
    double phase(std::size_t j) const { return light_phase[j] + motion_phase[j]; }
    // Excitation probability w_j^2 of every atom.
    std::vector<double> probabilities() const;
};

struct GridSpec {
    double x_min = -150e-6;
    double x_max = 150e-6;
    double y_min = -150e-6;
    double y_max = 150e-6;
    std::size_t nx = 128;
    std::size_t ny = 128;

    double dx() const { return (x_max - x_min) / static_cast<double>(nx); }
    double dy() const { return (y_max - y_min) / static_cast<double>(ny); }
    double cell_area() const { return dx() * dy(); }
    double x_center(std::size_t i) const { return x_min + (static_cast<double>(i) + 0.5) * dx(); }
    double y_center(std::size_t j) const { return y_min + (static_cast<double>(j) + 0.5) * dy(); }

    void validate() const;
    friend bool operator==(const GridSpec&, const GridSpec&) = default;

    static GridSpec square(double half_extent, std::size_t n) {
        return {-half_extent, half_extent, -half_extent, half_extent, n, n};
    }
};

// Transverse distribution U(x, y) on a grid, values in 1/m^2, row-major
// (values[iy * nx + ix]).
struct DensityGrid {
    GridSpec spec;
    std::vector<double> values;

    double cell_area() const { return spec.cell_area(); }
    double at(std::size_t ix, std::size_t iy) const { return values[iy * spec.nx + ix]; }
    double integral() const;
    // Mean and variance of x and y under U.
    Vec2 mean() const;
    Vec2 variance() const;
};

struct EfficiencyCurve {
    std::vector<double> times;      // s
    std::vector<double> overlap;    // R(t)
    std::vector<double> dephasing;  // exp(-t / tau_dephase)
    std::vector<double> loss;       // atom survival S(t)
    std::vector<double> total;      // product of the three

    std::size_t size() const { return times.size(); }
};

struct SurvivalParams {
    double fast_fraction = 0.5;
    double tau_fast = 160e-3;  // s
    double tau_slow = 580e-3;  // s

    void validate() const;
};

// ---------------------------------------------------------------------------

struct WavevectorResult {
    Vec3 delta_k;
    std::optional<double> wavelength;  // nullopt when |delta_k| == 0
};

WavevectorResult spinwave_wavevector(Vec3 write_k, Vec3 signal_k);

// Write and signal wave vectors for the collinear Raman configuration along
// +z, signal detuned from the write light by the ground hyperfine splitting.
std::pair<Vec3, Vec3> collinear_wavevectors(double write_wavelength, const PhysicalConstants& k = default_constants());

// Signal-mode field amplitude exp(-|r - center|^2 / w0^2) at r.
double raw_excitation_weight(Vec2 r, const ModeSpec& signal);

// Builds the spin wave heralded by a signal photon. The write mode is much
// wider than the signal mode and only validated; weights follow the signal
// mode. Dead atoms get zero weight. Throws EmptyModeError if every raw
// weight is below 1e-30.
SpinWaveRecord assign_excitation(std::span<const AtomState> atoms, const ModeSpec& signal, const ModeSpec& write,
                                 Vec3 delta_k = {}, double creation_time = 0.0);

// Adds the light-shift phase accumulated along recorded trajectories (from
// sample 0 to the last sample) and sets phi2 from the final positions.
SpinWaveRecord evolve_phases(const SpinWaveRecord& record, const TrajectorySet& trajectories,
                             const ShiftField& field, const ExecutionPolicy& policy = {});

// Streaming form: propagates `atoms` in place for `duration` and accumulates
// the phases on the way, without storing trajectories.
void evolve_phases_along(SpinWaveRecord& record, std::span<AtomState> atoms, double duration, double dt,
                         const TrapGeometry& trap, double gravity, const ShiftField& field,
                         const ExecutionPolicy& policy = {}, const PhysicalConstants& k = default_constants());

// |sum_j w_j^2 exp(i phi_j)| with the total phase, and with phi2 alone.
double spin_coherence(const SpinWaveRecord& record);
double motional_coherence(const SpinWaveRecord& record);

// Kernel density estimate of the excitation probability w_j^2 on the grid,
// isotropic Gaussian kernel of standard deviation `bandwidth`, each kernel
// integrated exactly over the cells. Throws GridCoverageError if more than
// 1 % of the weight falls outside the grid.
DensityGrid density_estimate(const SpinWaveRecord& record, std::span<const Vec2> positions, const GridSpec& grid,
                             double bandwidth);

// Same, from explicit per-atom masses.
DensityGrid density_from_masses(std::span<const double> masses, std::span<const Vec2> positions,
                                const GridSpec& grid, double bandwidth);

// Atoms split into fixed contiguous groups, one unnormalized mass grid per
// group. Group g holds atoms [g*n/G, (g+1)*n/G). Grids are summed in group
// order, so the result does not depend on the worker count.
struct GroupedDensity {
    GridSpec spec;
    std::vector<std::vector<double>> group_mass;  // per group, row-major
    std::vector<double> group_total;              // mass offered per group

    std::size_t groups() const { return group_mass.size(); }
    DensityGrid combined() const;
    // Normalized density without group g (delete-a-group jackknife).
    DensityGrid leave_out(std::size_t g) const;
};

GroupedDensity grouped_density(std::span<const double> masses, std::span<const Vec2> positions,
                               const GridSpec& grid, double bandwidth, std::size_t groups,
                               const ExecutionPolicy& policy = {});

// R = (sum sqrt(U0) sqrt(Ut) dA)^2. Throws InvalidArgument on grid mismatch.
double mode_overlap(const DensityGrid& u0, const DensityGrid& ut);

double atom_survival(double t, const SurvivalParams& params);

// total(t) = overlap(t) * exp(-t / tau_dephase) * S(t). Each factor is
// divided by its value at the first time point, so total(t0) = 1.
EfficiencyCurve efficiency_total(std::span<const double> times, std::span<const double> overlap,
                                 double tau_dephase, const SurvivalParams& survival);

}  // namespace qmem
