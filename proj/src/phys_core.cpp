#include "qmem/phys_core.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qmem/errors.hpp"
#include "qmem/rng.hpp"
#include "qmem/trap_model.hpp"

namespace qmem {

void PhysicalConstants::validate() const {
    for (double v : {m_atom, k_B, hbar, c, g_earth, nu_hf, lambda_D2, lambda_D1, gamma_D2}) {
        if (!(std::isfinite(v) && v > 0.0)) throw InvalidArgument("physical constants must be finite and positive");
    }
}

void RingPotential::validate() const {
    if (!(ring_radius > 0.0) || !std::isfinite(ring_radius))
        throw ConfigurationError("ring_radius", "must be positive");
    if (!(wall_width > 0.0) || !std::isfinite(wall_width))
        throw ConfigurationError("wall_width", "must be positive");
    if (!(peak_depth >= 0.0) || !std::isfinite(peak_depth))
        throw ConfigurationError("peak_depth", "must be non-negative");
    if (!(endcap_depth >= 0.0) || !std::isfinite(endcap_depth))
        throw ConfigurationError("endcap_depth", "must be non-negative");
}

void TrapGeometry::validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigurationError("trap_radius", "must be positive");
    if (!(length > 0.0) || !std::isfinite(length)) throw ConfigurationError("trap_length", "must be positive");
    if (has_soft_parts()) ring.validate();
    if (wall == WallModel::soft && std::abs(ring.ring_radius - radius) > 1e-9 * radius)
        throw ConfigurationError("ring_radius", "soft wall requires ring_radius == trap radius");
}

namespace {

// Position in the disk of radius R with density proportional to exp(-y/H)
// (H = scale height; infinite for a uniform disk).
Vec2 sample_disk_position(CounterRng& rng, double R, double H) {
    for (;;) {
        double y;
        if (std::isinf(H)) {
            y = rng.uniform(-R, R);
        } else {
            // Truncated exponential on [-R, R], inverse CDF.
            const double u = rng.uniform();
            y = -R - H * std::log1p(u * std::expm1(-2.0 * R / H));
            y = std::min(std::max(y, -R), R);
        }
        const double half_chord = std::sqrt(std::max(0.0, R * R - y * y));
        if (rng.uniform() * R <= half_chord) {
            const double x = rng.uniform(-half_chord, half_chord);
            return {x, y};
        }
    }
}

constexpr double kInsideFactor = 1.0 - 4.0 * std::numeric_limits<double>::epsilon();

// Exact transverse flight under constant gravity inside a hard cylinder.
void advance_transverse_hard(AtomState& a, double dt, double R, double g) {
    double x = a.position.x, y = a.position.y;
    double vx = a.velocity.x, vy = a.velocity.y;
    const double R2 = R * R;

    // Entry state slightly outside (caller-supplied): put it back on the wall.
    if (x * x + y * y > R2) {
        const double r = std::hypot(x, y);
        const double nx = x / r, ny = y / r;
        x = nx * R * kInsideFactor;
        y = ny * R * kInsideFactor;
        const double vn = vx * nx + vy * ny;
        if (vn > 0.0) {
            vx -= 2.0 * vn * nx;
            vy -= 2.0 * vn * ny;
        }
    }

    double remaining = dt;
    for (int bounce = 0; bounce < 64 && remaining > 0.0; ++bounce) {
        const double x1 = x + vx * remaining;
        const double y1 = y + vy * remaining - 0.5 * g * remaining * remaining;
        if (x1 * x1 + y1 * y1 <= R2) {
            x = x1;
            y = y1;
            vy -= g * remaining;
            remaining = 0.0;
            break;
        }
        // f(0) < 0 < f(remaining): bisect for the wall crossing.
        auto f = [&](double t) {
            const double xt = x + vx * t;
            const double yt = y + vy * t - 0.5 * g * t * t;
            return xt * xt + yt * yt - R2;
        };
        double lo = 0.0, hi = remaining;
        for (int it = 0; it < 200 && hi - lo > 1e-16 * remaining; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (f(mid) <= 0.0) lo = mid;
            else hi = mid;
        }
        const double t_hit = lo;
        double xh = x + vx * t_hit;
        double yh = y + vy * t_hit - 0.5 * g * t_hit * t_hit;
        double vxh = vx, vyh = vy - g * t_hit;
        const double r = std::hypot(xh, yh);
        const double nx = xh / r, ny = yh / r;
        xh = nx * R * kInsideFactor;
        yh = ny * R * kInsideFactor;
        const double vn = vxh * nx + vyh * ny;
        if (vn > 0.0) {
            vxh -= 2.0 * vn * nx;
            vyh -= 2.0 * vn * ny;
        }
        x = xh;
        y = yh;
        vx = vxh;
        vy = vyh;
        remaining -= t_hit;
    }
    if (remaining > 0.0) {
        // Pinned against the wall (e.g. resting at the bottom): settle there.
        vy -= g * remaining;
        const double r = std::hypot(x, y);
        if (r > R) {
            x *= R * kInsideFactor / r;
            y *= R * kInsideFactor / r;
        }
    }
    a.position.x = x;
    a.position.y = y;
    a.velocity.x = vx;
    a.velocity.y = vy;
}

Vec2 soft_transverse_acceleration(Vec2 r, const RingPotential& ring, double g, const PhysicalConstants& k) {
    Vec2 acc{0.0, -g};
    const double rr = norm(r);
    if (rr > 0.0) {
        const double slope = potential_radial_slope(rr, ring);  // K/m
        if (slope != 0.0) {
            const double a_r = -k.k_B * slope / k.m_atom;
            acc += (a_r / rr) * r;
        }
    }
    return acc;
}

void advance_transverse_soft(AtomState& a, double dt, const TrapGeometry& trap, double g,
                             const PhysicalConstants& k) {
    Vec2 r = a.position.transverse();
    Vec2 v{a.velocity.x, a.velocity.y};
    const Vec2 a0 = soft_transverse_acceleration(r, trap.ring, g, k);
    v += 0.5 * dt * a0;
    r += dt * v;
    const Vec2 a1 = soft_transverse_acceleration(r, trap.ring, g, k);
    v += 0.5 * dt * a1;
    a.position.x = r.x;
    a.position.y = r.y;
    a.velocity.x = v.x;
    a.velocity.y = v.y;
    if (norm(r) > trap.ring.ring_radius + trap.penetration_margin()) a.alive = false;
}

void advance_axial_hard(AtomState& a, double dt, double half_length) {
    double z = a.position.z + a.velocity.z * dt;
    double vz = a.velocity.z;
    for (int i = 0; i < 64 && (z > half_length || z < -half_length); ++i) {
        z = (z > half_length) ? 2.0 * half_length - z : -2.0 * half_length - z;
        vz = -vz;
    }
    a.position.z = z;
    a.velocity.z = vz;
}

void advance_axial_soft(AtomState& a, double dt, const TrapGeometry& trap, const PhysicalConstants& k) {
    const double h = trap.half_length();
    const double scale = -k.k_B / k.m_atom;
    double z = a.position.z, vz = a.velocity.z;
    vz += 0.5 * dt * scale * endcap_slope(z, h, trap.ring);
    z += dt * vz;
    vz += 0.5 * dt * scale * endcap_slope(z, h, trap.ring);
    a.position.z = z;
    a.velocity.z = vz;
    if (std::abs(z) > h + trap.ring.wall_width) a.alive = false;
}

}  // namespace

std::vector<AtomState> sample_thermal_ensemble(std::size_t n, const TrapGeometry& trap, double temperature,
                                               double gravity, std::uint64_t seed, SpatialModel spatial,
                                               const ExecutionPolicy& policy, const PhysicalConstants& k) {
    if (n == 0) throw InvalidArgument("sample_thermal_ensemble: atom count must be at least 1");
    if (!std::isfinite(temperature) || temperature < 0.0)
        throw InvalidArgument("sample_thermal_ensemble: temperature must be finite and non-negative");
    if (!std::isfinite(gravity)) throw InvalidArgument("sample_thermal_ensemble: gravity must be finite");
    trap.validate();

    const double R = trap.radius;
    const double h = trap.half_length();
    double scale_height = std::numeric_limits<double>::infinity();
    if (spatial == SpatialModel::thermal && gravity != 0.0 && temperature > 0.0)
        scale_height = k.k_B * temperature / (k.m_atom * gravity);
    const double sigma_v = std::sqrt(k.k_B * temperature / k.m_atom);

    std::vector<AtomState> atoms(n);
    parallel_for(n, policy, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            CounterRng rng(seed, i);
            const Vec2 p = sample_disk_position(rng, R, scale_height);
            const double z = rng.uniform(-h, h);
            AtomState& a = atoms[i];
            a.position = {p.x, p.y, z};
            if (sigma_v > 0.0) {
                const double vx = rng.normal();
                const double vy = rng.normal();
                const double vz = rng.normal();
                a.velocity = {sigma_v * vx, sigma_v * vy, sigma_v * vz};
            }
            a.alive = true;
        }
    });
    return atoms;
}

double max_stable_step(std::span<const AtomState> atoms, const TrapGeometry& trap) {
    double sum_v2 = 0.0;
    std::size_t alive = 0;
    for (const auto& a : atoms) {
        if (!a.alive) continue;
        sum_v2 += norm2(a.velocity);
        ++alive;
    }
    if (alive == 0 || sum_v2 == 0.0) return std::numeric_limits<double>::infinity();
    const double v3 = 3.0 * std::sqrt(sum_v2 / static_cast<double>(alive));
    double crossing = 2.0 * trap.radius;
    if (trap.has_soft_parts()) crossing = std::min(crossing, trap.ring.wall_width);
    return crossing / v3 / 10.0;
}

void advance_atom(AtomState& atom, double dt, const TrapGeometry& trap, double gravity,
                  const PhysicalConstants& k) {
    if (!atom.alive || dt <= 0.0) return;
    if (trap.wall == WallModel::hard) advance_transverse_hard(atom, dt, trap.radius, gravity);
    else advance_transverse_soft(atom, dt, trap, gravity, k);
    if (trap.endcap == WallModel::hard) advance_axial_hard(atom, dt, trap.half_length());
    else advance_axial_soft(atom, dt, trap, k);
}

void propagate_in_place(std::span<AtomState> atoms, double duration, double dt, const TrapGeometry& trap,
                        double gravity, const ExecutionPolicy& policy, const PhysicalConstants& k) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("propagate: dt must be positive");
    if (!(duration >= 0.0) || !std::isfinite(duration)) throw InvalidArgument("propagate: t_end must be >= t_start");
    trap.validate();
    const double limit = max_stable_step(atoms, trap);
    if (dt > limit) {
        throw ConfigurationError("dt", "sub-step " + std::to_string(dt) + " s exceeds 1/10 of the fastest wall-crossing time (" +
                                           std::to_string(limit) + " s)");
    }
    if (duration == 0.0) return;
    // Whole sub-steps plus a final partial one; the tolerance absorbs
    // round-off in duration/dt for commensurate grids.
    const double ratio = duration / dt;
    auto full = static_cast<std::size_t>(std::floor(ratio + 1e-9));
    double tail = duration - static_cast<double>(full) * dt;
    if (tail < 1e-9 * dt) tail = 0.0;
    parallel_for(atoms.size(), policy, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            AtomState& a = atoms[i];
            for (std::size_t s = 0; s < full && a.alive; ++s) advance_atom(a, dt, trap, gravity, k);
            if (tail > 0.0) advance_atom(a, tail, trap, gravity, k);
        }
    });
}

std::vector<AtomState> propagate(std::span<const AtomState> atoms, double t_start, double t_end, double dt,
                                 const TrapGeometry& trap, double gravity, const ExecutionPolicy& policy,
                                 const PhysicalConstants& k) {
    if (!(t_end >= t_start)) throw InvalidArgument("propagate: t_end must be >= t_start");
    std::vector<AtomState> out(atoms.begin(), atoms.end());
    propagate_in_place(out, t_end - t_start, dt, trap, gravity, policy, k);
    return out;
}

AtomState reflect_specular(const AtomState& state, const TrapGeometry& trap, double max_overshoot) {
    const double R = trap.radius;
    const double h = trap.half_length();
    const double tol_r = 1e-12 * R;
    const double tol_z = 1e-12 * h;
    const Vec2 rt = state.position.transverse();
    const double r = norm(rt);
    const double radial_over = r - R;
    const double axial_over = std::abs(state.position.z) - h;

    if (radial_over < -tol_r && axial_over < -tol_z)
        throw InvalidArgument("reflect_specular: atom is strictly inside the trap");
    if (radial_over > max_overshoot || axial_over > max_overshoot)
        throw ConsistencyError("reflect_specular: atom is more than one sub-step beyond the boundary");

    AtomState out = state;
    if (radial_over >= -tol_r) {
        const Vec2 n = rt * (1.0 / r);
        out.position.x = n.x * R;
        out.position.y = n.y * R;
        const double vn = out.velocity.x * n.x + out.velocity.y * n.y;
        if (vn > 0.0) {
            out.velocity.x -= 2.0 * vn * n.x;
            out.velocity.y -= 2.0 * vn * n.y;
        }
    }
    if (axial_over >= -tol_z) {
        const double side = state.position.z > 0.0 ? 1.0 : -1.0;
        out.position.z = side * h;
        if (out.velocity.z * side > 0.0) out.velocity.z = -out.velocity.z;
    }
    return out;
}

}  // namespace qmem
