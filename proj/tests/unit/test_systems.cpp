#include "doctest.h"

#include "mpflow/catalog.hpp"

#include <cmath>

using namespace mpflow;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

}  // namespace

TEST_CASE("energy: flat examples") {
    MPSystem flat = make_scenario("flat-disk");
    CHECK(energy(flat, v2(0.2, 0.3), v2(1, 0)) == 0.5);
    flat.fields.potential = [](const Vec& x) { return x.squaredNorm(); };
    CHECK(energy(flat, v2(0, 0), v2(0, 1)) == 0.5);
}

TEST_CASE("make_system: the level must exceed max U") {
    try {
        make_scenario("radial-potential", {{"u0", 0.6}});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BelowPotential);
    }
    CHECK_NOTHROW(make_scenario("radial-potential", {{"u0", 0.49}}));
}

TEST_CASE("hamiltonian: table identities and the flat value") {
    const MPSystem sys = make_scenario("conformal-disk", {{"u0", 0.3}, {"B", 0.4}, {"k", 0.8}});
    SplitMix64 rng(21);
    const HamiltonianChoice hat{HamiltonianKind::HHat, {}};
    const HamiltonianChoice red{HamiltonianKind::HReduced, {}};
    for (const Vec& x : sample_interior(sys.domain, 100, 2)) {
        const Vec xi = v2(rng.uniform(-2, 2), rng.uniform(-2, 2));
        const HamiltonianChoice th{HamiltonianKind::HTilde, hat_factor(sys)};
        const HamiltonianChoice tr{HamiltonianKind::HTilde, reduced_factor(sys)};
        CHECK(std::abs(hamiltonian(sys, hat, x, xi) - hamiltonian(sys, th, x, xi)) < 1e-12);
        CHECK(std::abs(hamiltonian(sys, red, x, xi) - (hamiltonian(sys, tr, x, xi) - (sys.k - 0.5))) < 1e-12);
    }
    const MPSystem flat = make_scenario("flat-disk", {{"k", 7.0}});
    CHECK(hamiltonian(flat, {}, v2(0.1, 0.1), v2(1, 0)) == 0.5);
    CHECK_THROWS_AS(hamiltonian(flat, HamiltonianChoice{HamiltonianKind::HTilde, {}}, v2(0, 0), v2(1, 0)), Error);
}

TEST_CASE("hamiltonian: level sets agree for every positive factor") {
    const MPSystem sys = make_scenario("radial-potential", {{"B", 0.5}});
    SplitMix64 rng(5);
    for (const Vec& x : sample_interior(sys.domain, 50, 8)) {
        const Vec u = v2(rng.uniform(-1, 1), rng.uniform(-1, 1));
        const Vec xi = legendre(sys, x, sphere_lift(sys, x, u));
        CHECK(std::abs(hamiltonian(sys, {}, x, xi) - sys.k) < 1e-12);
        ScalarField mu;
        mu.value = [](const Vec& y) { return 1.0 + y.squaredNorm(); };
        CHECK(std::abs(hamiltonian(sys, HamiltonianChoice{HamiltonianKind::HTilde, mu}, x, xi) - sys.k) < 1e-9 * 3);
        // off the level set both disagree with k
        const Vec xi2 = 1.1 * xi;
        CHECK(std::abs(hamiltonian(sys, HamiltonianChoice{HamiltonianKind::HTilde, mu}, x, xi2) - sys.k) > 1e-6);
    }
}

TEST_CASE("legendre: flat, shifted and round trip") {
    const MPSystem flat = make_scenario("flat-disk");
    CHECK((legendre(flat, v2(0.1, 0.2), v2(0.3, -0.4)) - v2(0.3, -0.4)).norm() == 0.0);
    MPSystem shifted = flat;
    shifted.fields.one_form = [](const Vec&) { return Vec(v2(0.5, 0)); };
    CHECK((legendre(shifted, v2(0, 0), v2(1, 0)) - v2(0.5, 0)).norm() < 1e-15);
    const MPSystem sys = make_scenario("conformal-disk", {{"B", 0.7}});
    SplitMix64 rng(1);
    for (const Vec& x : sample_interior(sys.domain, 100, 4)) {
        const Vec v = v2(rng.uniform(-1, 1), rng.uniform(-1, 1));
        CHECK((legendre_inv(sys, x, legendre(sys, x, v)) - v).norm() < 1e-12);
        CHECK(std::abs(hamiltonian(sys, {}, x, legendre(sys, x, v)) - energy(sys, x, v)) < 1e-12);
    }
}

TEST_CASE("reduce: metric 2(k - U) g, same one-form, zero potential, k = 1/2") {
    MPSystem sys = make_scenario("flat-disk", {{"k", 1.0}});
    sys.fields.potential = [](const Vec& x) { return 0.25 * x.squaredNorm(); };
    sys.fields.mode = DerivativeMode::FiniteDifference;
    const MPSystem red = reduce(sys);
    CHECK((red.fields.metric(v2(1, 0)) - 1.5 * Mat::Identity(2, 2)).norm() < 1e-15);
    CHECK(red.fields.potential(v2(0.2, 0)) == 0.0);
    CHECK(red.k == 0.5);
    const MPSystem unit = reduce(make_scenario("flat-disk"));
    CHECK((unit.fields.metric(v2(0.3, 0.3)) - Mat::Identity(2, 2)).norm() == 0.0);
    // reduced jet against finite differences
    const MPSystem rp = make_scenario("radial-potential", {{"B", 0.3}}, DerivativeMode::Analytic);
    const MPSystem rr = reduce(rp);
    for (const Vec& x : sample_interior(rp.domain, 20, 3)) CHECK(derivative_mismatch(rr.fields, x) < 1e-6);
}

TEST_CASE("reduce: elliptic companions share the reduced metric") {
    const MPSystem sys = make_scenario("conformal-disk", {{"u0", 0.2}, {"B", 0.2}});
    ScalarField mu;
    mu.value = [](const Vec& x) { return 1.3 + 0.2 * x[0]; };
    const MPSystem comp = elliptic_companion(sys, mu);
    const MPSystem r1 = reduce(sys), r2 = reduce(comp);
    for (const Vec& x : sample_interior(sys.domain, 50, 6)) {
        CHECK((r1.fields.metric(x) - r2.fields.metric(x)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("sphere_lift: speed and errors") {
    const MPSystem flat = make_scenario("flat-disk");
    CHECK((sphere_lift(flat, v2(0, 0), v2(1, 0)) - v2(1, 0)).norm() == 0.0);
    const MPSystem flat2 = make_scenario("flat-disk", {{"k", 2.0}});
    CHECK((sphere_lift(flat2, v2(0, 0), v2(1, 0)) - v2(2, 0)).norm() == 0.0);
    const MPSystem conf = make_scenario("conformal-disk", {{"u0", 0.2}});
    const Vec x = v2(0.2, -0.5);
    const Vec v = sphere_lift(conf, x, v2(0.3, 0.9));
    CHECK(std::abs(energy(conf, x, v) - conf.k) < 1e-12);
    MPSystem low = flat;
    low.fields.potential = [](const Vec&) { return 1.0; };
    CHECK_THROWS_AS(sphere_lift(low, x, v2(1, 0)), Error);
    CHECK_THROWS_AS(sphere_lift(flat, x, v2(0, 0)), Error);
}

TEST_CASE("mp_convexity_margin: disk, constant field and radial potential") {
    const MPSystem flat = make_scenario("flat-disk");
    CHECK(mp_convexity_margin(flat, v2(1, 0), v2(0, 1)) == doctest::Approx(1.0).epsilon(1e-12));
    const double B = 0.1;
    const MPSystem mag = make_scenario("constant-field", {{"B", B}});
    // Y v = B rot(v); at (1, 0) with v = (0, 1), Y v = (-B, 0) and nu = (-1, 0)
    CHECK(mp_convexity_margin(mag, v2(1, 0), v2(0, 1)) == doctest::Approx(1.0 - B).epsilon(1e-12));
    CHECK(mp_convexity_margin(mag, v2(1, 0), v2(0, -1)) == doctest::Approx(1.0 + B).epsilon(1e-12));
    const MPSystem pot = make_scenario("radial-potential", {{"u0", 0.2}}, DerivativeMode::Analytic);
    // dU(nu) = -2 u0 x . nu = 0.4 at (1, 0); the metric is flat so Lambda = |v|^2
    const Vec v = sphere_lift(pot, v2(1, 0), v2(0, 1));
    CHECK(mp_convexity_margin(pot, v2(1, 0), v) == doctest::Approx(v.squaredNorm() + 0.4).epsilon(1e-12));
}
