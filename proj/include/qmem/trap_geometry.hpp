#pragma once

namespace qmem {

// Phenomenological hollow-beam potential: a Gaussian inner flank rising to
// peak_depth at ring_radius, held flat at peak_depth outside. Depths are in
// temperature units (K); multiply by k_B for energy.
struct RingPotential {
    double ring_radius = 95e-6;   // m
    double wall_width = 20e-6;    // m, 1/e^2 half-width of the annular intensity
    double peak_depth = 45e-6;    // K
    double endcap_depth = 45e-6;  // K, light-sheet barrier at each end

    void validate() const;
};

enum class WallModel { hard, soft };

struct TrapGeometry {
    double radius = 95e-6;  // m
    double length = 3e-3;   // m
    WallModel wall = WallModel::hard;
    WallModel endcap = WallModel::hard;
    RingPotential ring{};

    double half_length() const { return 0.5 * length; }

    // Distance past the ring radius (or end plane) after which an atom in a
    // soft wall counts as lost.
    double penetration_margin() const { return wall == WallModel::soft ? ring.wall_width : 0.0; }

    bool has_soft_parts() const { return wall == WallModel::soft || endcap == WallModel::soft; }

    void validate() const;

    static TrapGeometry hard_cylinder(double radius = 95e-6, double length = 3e-3) {
        TrapGeometry t;
        t.radius = radius;
        t.length = length;
        return t;
    }

    static TrapGeometry soft_ring(const RingPotential& ring, double length = 3e-3) {
        TrapGeometry t;
        t.radius = ring.ring_radius;
        t.length = length;
        t.wall = WallModel::soft;
        t.ring = ring;
        return t;
    }
};

}  // namespace qmem
