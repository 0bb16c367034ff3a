#include <doctest.h>

#include "unit/approx.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "oracles.hpp"
#include "qmem/errors.hpp"
#include "qmem/phys_core.hpp"
#include "qmem/rng.hpp"
#include "qmem/trap_model.hpp"

using namespace qmem;

namespace {

bool same_bits(const std::vector<AtomState>& a, const std::vector<AtomState>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::memcmp(&a[i].position, &b[i].position, sizeof(Vec3)) != 0) return false;
        if (std::memcmp(&a[i].velocity, &b[i].velocity, sizeof(Vec3)) != 0) return false;
        if (a[i].alive != b[i].alive) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("constants match atomic data") {
    const auto& k = default_constants();
    CHECK_NOTHROW(k.validate());
    CHECK(k.nu_hf == approx(6.834683e9).epsilon(1e-6));
    CHECK(k.lambda_D2 == approx(780.241e-9).epsilon(1e-5));
    CHECK(k.lambda_D1 == approx(794.979e-9).epsilon(1e-5));
    CHECK(k.m_atom == approx(oracle::m_rb87).epsilon(1e-6));
    PhysicalConstants bad;
    bad.hbar = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("counter rng streams are pure functions of seed, stream and index") {
    CounterRng a(42, 7), b(42, 7), c(42, 8);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        CHECK(x != c.next_u64());
    }
    CounterRng u(1, 0);
    double s = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double v = u.uniform();
        REQUIRE(v >= 0.0);
        REQUIRE(v < 1.0);
        s += v;
    }
    CHECK(s / 100000 == approx(0.5).epsilon(0.01));
}

TEST_CASE("zero temperature gives atoms at rest") {
    const auto atoms = sample_thermal_ensemble(500, TrapGeometry{}, 0.0, 9.81, 3);
    for (const auto& a : atoms) {
        CHECK(a.velocity.x == 0.0);
        CHECK(a.velocity.y == 0.0);
        CHECK(a.velocity.z == 0.0);
    }
}

TEST_CASE("sampling rejects bad arguments") {
    CHECK_THROWS_AS(sample_thermal_ensemble(0, TrapGeometry{}, 15e-6, 9.81, 1), InvalidArgument);
    CHECK_THROWS_AS(sample_thermal_ensemble(10, TrapGeometry{}, std::nan(""), 9.81, 1), InvalidArgument);
    CHECK_THROWS_AS(sample_thermal_ensemble(10, TrapGeometry{}, -1.0, 9.81, 1), InvalidArgument);
}

TEST_CASE("thermal speeds follow Maxwell-Boltzmann moments") {
    const double T = 15e-6;
    CHECK(oracle::mean_speed_closed_form(T) == approx(oracle::mean_speed_quadrature(T)).epsilon(1e-6));
    CHECK(oracle::mean_speed_closed_form(T) == approx(60.4e-3).epsilon(0.002));

    const auto atoms = sample_thermal_ensemble(100000, TrapGeometry{}, T, 9.81, 11);
    double s = 0.0, s2 = 0.0;
    for (const auto& a : atoms) {
        s += norm(a.velocity);
        s2 += norm2(a.velocity);
    }
    CHECK(s / atoms.size() == approx(oracle::mean_speed_closed_form(T)).epsilon(0.01));
    CHECK(s2 / atoms.size() == approx(oracle::mean_square_speed(T)).epsilon(0.01));
}

TEST_CASE("positions stay inside the cylinder") {
    const TrapGeometry trap;
    for (auto model : {SpatialModel::thermal, SpatialModel::uniform}) {
        const auto atoms = sample_thermal_ensemble(20000, trap, 15e-6, 9.81, 5, model);
        for (const auto& a : atoms) {
            REQUIRE(norm(a.position.transverse()) <= trap.radius);
            REQUIRE(std::abs(a.position.z) <= trap.half_length());
            REQUIRE(a.alive);
        }
    }
}

TEST_CASE("without gravity the cloud is centred vertically") {
    const auto atoms = sample_thermal_ensemble(100000, TrapGeometry{}, 15e-6, 0.0, 21);
    double s = 0.0, s2 = 0.0;
    for (const auto& a : atoms) {
        s += a.position.y;
        s2 += a.position.y * a.position.y;
    }
    const double n = static_cast<double>(atoms.size());
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("barometric density ratio across the cloud") {
    const double T = 15e-6, g = 9.81;
    const double H = oracle::scale_height(T, g);
    CHECK(H == approx(146.6e-6).epsilon(0.01));
    const auto atoms = sample_thermal_ensemble(400000, TrapGeometry{}, T, g, 8);
    double low = 0, high = 0;
    for (const auto& a : atoms) {
        if (std::abs(a.position.y + 50e-6) < 5e-6) low += 1;
        if (std::abs(a.position.y - 50e-6) < 5e-6) high += 1;
    }
    const double ratio = low / high;
    const double expected = std::exp(100e-6 / H);
    const double sigma = ratio * std::sqrt(1.0 / low + 1.0 / high);
    CHECK(std::abs(ratio - expected) < 3.0 * sigma);
}

TEST_CASE("free fall from rest at the centre") {
    std::vector<AtomState> atoms{AtomState{}};
    const auto out = propagate(atoms, 0.0, 2e-3, 5e-6, TrapGeometry{}, 9.81);
    CHECK(out[0].position.y == approx(-0.5 * 9.81 * 4e-6).epsilon(1e-9));
    CHECK(out[0].position.x == 0.0);
    CHECK(out[0].position.z == 0.0);
    CHECK(out[0].velocity.y == approx(-9.81 * 2e-3).epsilon(1e-12));
}

TEST_CASE("propagation preconditions") {
    std::vector<AtomState> atoms{AtomState{{0, 0, 0}, {0.05, 0, 0}, true}};
    CHECK_THROWS_AS(propagate(atoms, 1.0, 0.0, 5e-6, TrapGeometry{}, 9.81), InvalidArgument);
    CHECK_THROWS_AS(propagate(atoms, 0.0, 1e-3, 0.0, TrapGeometry{}, 9.81), InvalidArgument);
    // 190 um / (10 * 3 * 0.05 m/s) = 127 us
    CHECK_THROWS_AS(propagate(atoms, 0.0, 1e-3, 200e-6, TrapGeometry{}, 9.81), ConfigurationError);
    CHECK_NOTHROW(propagate(atoms, 0.0, 1e-3, 100e-6, TrapGeometry{}, 9.81));
}

TEST_CASE("dead atoms are left untouched") {
    std::vector<AtomState> atoms{AtomState{{1e-6, 2e-6, 3e-6}, {0.01, 0.02, 0.03}, false}};
    const auto out = propagate(atoms, 0.0, 1e-3, 5e-6, TrapGeometry{}, 9.81);
    CHECK(same_bits(atoms, out));
}

TEST_CASE("head-on wall hit reverses the radial velocity") {
    const TrapGeometry trap;
    AtomState a{{trap.radius, 0.0, 0.0}, {0.04, 0.0, 0.01}, true};
    const AtomState r = reflect_specular(a, trap, 1e-6);
    CHECK(r.velocity.x == -0.04);
    CHECK(r.velocity.y == 0.0);
    CHECK(r.velocity.z == 0.01);
    CHECK(norm(r.position.transverse()) <= trap.radius);

    // Through propagation with gravity off: exact reversal after the bounce.
    std::vector<AtomState> atoms{AtomState{{0.0, 0.0, 0.0}, {0.05, 0.0, 0.0}, true}};
    const auto out = propagate(atoms, 0.0, 3e-3, 5e-6, trap, 0.0);
    CHECK(out[0].velocity.x == approx(-0.05).epsilon(1e-14));
    CHECK(std::abs(out[0].velocity.y) < 1e-14);
    CHECK(out[0].position.x == approx(2 * trap.radius - 0.05 * 3e-3).epsilon(1e-9));
}

TEST_CASE("grazing incidence leaves the velocity unchanged") {
    const TrapGeometry trap;
    AtomState a{{0.0, trap.radius, 0.0}, {0.03, 0.0, -0.02}, true};
    const AtomState r = reflect_specular(a, trap, 1e-6);
    CHECK(r.velocity.x == 0.03);
    CHECK(r.velocity.y == 0.0);
    CHECK(r.velocity.z == -0.02);
}

TEST_CASE("end caps reverse the axial velocity") {
    const TrapGeometry trap;
    AtomState a{{0.0, 0.0, trap.half_length() + 1e-9}, {0.01, 0.0, 0.03}, true};
    const AtomState r = reflect_specular(a, trap, 1e-6);
    CHECK(r.velocity.z == -0.03);
    CHECK(r.velocity.x == 0.01);
    CHECK(r.position.z <= trap.half_length());
}

TEST_CASE("reflection preserves speed over random incidences") {
    const TrapGeometry trap;
    CounterRng rng(99, 0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double over = rng.uniform(0.0, 1e-7);
        AtomState a;
        a.position = {(trap.radius + over) * std::cos(phi), (trap.radius + over) * std::sin(phi), rng.uniform(-1e-3, 1e-3)};
        a.velocity = {rng.normal() * 0.05, rng.normal() * 0.05, rng.normal() * 0.05};
        const AtomState r = reflect_specular(a, trap, 1e-6);
        const double before = std::sqrt(a.velocity.x * a.velocity.x + a.velocity.y * a.velocity.y +
                                        a.velocity.z * a.velocity.z);
        const double after = std::sqrt(r.velocity.x * r.velocity.x + r.velocity.y * r.velocity.y +
                                       r.velocity.z * r.velocity.z);
        worst = std::max(worst, std::abs(after - before) / before);
    }
    CHECK(worst < 10.0 * std::numeric_limits<double>::epsilon());
}

TEST_CASE("reflection requires an atom at the boundary") {
    const TrapGeometry trap;
    AtomState inside{{10e-6, 0.0, 0.0}, {0.01, 0.0, 0.0}, true};
    CHECK_THROWS_AS(reflect_specular(inside, trap, 1e-6), InvalidArgument);
    AtomState far{{trap.radius + 5e-6, 0.0, 0.0}, {0.01, 0.0, 0.0}, true};
    CHECK_THROWS_AS(reflect_specular(far, trap, 1e-6), ConsistencyError);
}

TEST_CASE("hard walls conserve mechanical energy") {
    const TrapGeometry trap;
    const double g = 9.81;
    auto atoms = sample_thermal_ensemble(2000, trap, 15e-6, g, 4);
    std::vector<double> e0;
    for (const auto& a : atoms) e0.push_back(specific_energy(a, g));
    propagate_in_place(atoms, 50e-3, 5e-6, trap, g);
    double worst = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        REQUIRE(norm(atoms[i].position.transverse()) <= trap.radius);
        const double scale = std::abs(e0[i]) + g * trap.radius;
        worst = std::max(worst, std::abs(specific_energy(atoms[i], g) - e0[i]) / scale);
    }
    CHECK(worst < 1e-12);
}

namespace {

// Independent velocity-Verlet in the ring potential for one atom in the
// transverse plane, gravity off.
struct RefState {
    double x, y, vx, vy;
};

double ref_potential(double r, double R, double w, double peak) {
    if (r >= R) return peak;
    return peak * std::exp(-2.0 * (r - R) * (r - R) / (w * w));
}

void ref_accel(double x, double y, double R, double w, double peak, double& ax, double& ay) {
    const double r = std::hypot(x, y);
    ax = ay = 0.0;
    if (r >= R || r == 0.0) return;
    const double dUdr = peak * std::exp(-2.0 * (r - R) * (r - R) / (w * w)) * (-4.0 * (r - R) / (w * w));
    const double a = -oracle::kB * dUdr / oracle::m_rb87;
    ax = a * x / r;
    ay = a * y / r;
}

double ref_energy(const RefState& s, double R, double w, double peak) {
    return 0.5 * (s.vx * s.vx + s.vy * s.vy) + oracle::kB * ref_potential(std::hypot(s.x, s.y), R, w, peak) / oracle::m_rb87;
}

}  // namespace

TEST_CASE("soft wall flight conserves energy against a fine-step reference") {
    RingPotential ring;
    const TrapGeometry trap = TrapGeometry::soft_ring(ring);
    const double dt = 5e-6, duration = 100e-3;
    AtomState a{{5e-6, -3e-6, 0.0}, {0.055, 0.021, 0.0}, true};
    auto energy = [&](const AtomState& s) {
        return 0.5 * norm2(s.velocity) + default_constants().k_B * potential_at(s.position.transverse(), ring) /
                                             default_constants().m_atom;
    };
    const double e0 = energy(a);
    std::vector<AtomState> atoms{a};
    propagate_in_place(atoms, duration, dt, trap, 0.0);
    REQUIRE(atoms[0].alive);
    const double drift = std::abs(energy(atoms[0]) - e0) / e0;
    CHECK(drift < 1e-3);

    RefState s{a.position.x, a.position.y, a.velocity.x, a.velocity.y};
    const double h = dt / 100.0;
    double ax, ay;
    ref_accel(s.x, s.y, ring.ring_radius, ring.wall_width, ring.peak_depth, ax, ay);
    const double ref0 = ref_energy(s, ring.ring_radius, ring.wall_width, ring.peak_depth);
    const long steps = std::lround(duration / h);
    for (long i = 0; i < steps; ++i) {
        s.vx += 0.5 * h * ax;
        s.vy += 0.5 * h * ay;
        s.x += h * s.vx;
        s.y += h * s.vy;
        ref_accel(s.x, s.y, ring.ring_radius, ring.wall_width, ring.peak_depth, ax, ay);
        s.vx += 0.5 * h * ax;
        s.vy += 0.5 * h * ay;
    }
    const double ref_drift = std::abs(ref_energy(s, ring.ring_radius, ring.wall_width, ring.peak_depth) - ref0) / ref0;
    CHECK(ref_drift < 1e-6);
    CHECK(energy(atoms[0]) == approx(ref_energy(s, ring.ring_radius, ring.wall_width, ring.peak_depth)).epsilon(1e-3));
}

TEST_CASE("propagation is independent of the worker count") {
    const TrapGeometry trap;
    const auto serial = sample_thermal_ensemble(3000, trap, 15e-6, 9.81, 77, SpatialModel::thermal, ExecutionPolicy::serial());
    const auto threaded = sample_thermal_ensemble(3000, trap, 15e-6, 9.81, 77, SpatialModel::thermal, ExecutionPolicy{4, false});
    CHECK(same_bits(serial, threaded));
    const auto a = propagate(serial, 0.0, 5e-3, 5e-6, trap, 9.81, ExecutionPolicy::serial());
    const auto b = propagate(serial, 0.0, 5e-3, 5e-6, trap, 9.81, ExecutionPolicy{3, false});
    CHECK(same_bits(a, b));
    const auto other_seed = sample_thermal_ensemble(3000, trap, 15e-6, 9.81, 78);
    CHECK_FALSE(same_bits(serial, other_seed));
}
