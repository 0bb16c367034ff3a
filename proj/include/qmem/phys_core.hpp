#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qmem/constants.hpp"
#include "qmem/parallel.hpp"
#include "qmem/trap_geometry.hpp"
#include "qmem/vec.hpp"

namespace qmem {

struct AtomState {
    Vec3 position;  // m
    Vec3 velocity;  // m/s
    bool alive = true;
};

enum class SpatialModel {
    thermal,  // uniform in the cylinder, barometric weighting along y
    uniform,  // uniform in the cylinder
};

// Draws n atoms: Maxwell-Boltzmann velocities at `temperature` and positions
// from the chosen spatial model. Atom i uses random stream i of `seed`.
// At temperature 0 the barometric factor is degenerate and positions fall
// back to the uniform model.
std::vector<AtomState> sample_thermal_ensemble(std::size_t n, const TrapGeometry& trap, double temperature,
                                               double gravity, std::uint64_t seed,
                                               SpatialModel spatial = SpatialModel::thermal,
                                               const ExecutionPolicy& policy = {},
                                               const PhysicalConstants& k = default_constants());

// Largest admissible sub-step for the ensemble: one tenth of the time an atom
// at 3x the rms speed needs to cross the relevant length (trap diameter for
// hard walls, wall width for soft walls). Infinite for an ensemble at rest.
double max_stable_step(std::span<const AtomState> atoms, const TrapGeometry& trap);

// Advances one atom by `dt` (one sub-step). Transverse and axial motion are
// independent: hard boundaries use exact ballistic flight with event-located
// specular bounces, soft boundaries a velocity-Verlet step in the wall force.
// Dead atoms are left untouched; atoms escaping a soft wall are marked dead.
void advance_atom(AtomState& atom, double dt, const TrapGeometry& trap, double gravity,
                  const PhysicalConstants& k = default_constants());

// Propagates every alive atom from t_start to t_end in sub-steps of dt (the
// last sub-step is shortened to land on t_end). Throws ConfigurationError if
// dt exceeds max_stable_step.
std::vector<AtomState> propagate(std::span<const AtomState> atoms, double t_start, double t_end, double dt,
                                 const TrapGeometry& trap, double gravity, const ExecutionPolicy& policy = {},
                                 const PhysicalConstants& k = default_constants());

// In-place variant of propagate.
void propagate_in_place(std::span<AtomState> atoms, double duration, double dt, const TrapGeometry& trap,
                        double gravity, const ExecutionPolicy& policy = {},
                        const PhysicalConstants& k = default_constants());

// Projects an atom at or beyond the cylinder wall / end planes back onto the
// boundary and reverses the velocity component along the outward normal.
// Throws ConsistencyError if the atom is more than max_overshoot beyond a
// boundary and InvalidArgument if it is strictly inside.
AtomState reflect_specular(const AtomState& state, const TrapGeometry& trap, double max_overshoot);

// Mechanical energy per unit mass in the transverse plane for hard walls:
// |v|^2 / 2 + g y.
inline double specific_energy(const AtomState& a, double gravity) {
    return 0.5 * norm2(a.velocity) + gravity * a.position.y;
}

}  // namespace qmem
