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

Mat fd_map_jacobian(const Diffeomorphism& f, const Vec& x) {
    const int n = f.dim();
    Mat J(n, n);
    const double h = 1e-6;
    for (int j = 0; j < n; ++j) {
        Vec e = Vec::Zero(n);
        e[j] = h;
        J.col(j) = (f.map(x + e) - f.map(x - e)) / (2 * h);
    }
    return J;
}

}  // namespace

TEST_CASE("diffeomorphisms fix the boundary and have consistent Jacobians") {
    const MPSystem sys = make_scenario("flat-disk");
    Mat A(2, 2);
    A << 0.1, -0.3, 0.25, 0.0;
    const DiffeoPtr maps[] = {swirl_map(sys.domain, 0.5, 2), swirl_map(sys.domain, 0.5, 1),
                              generator_flow(sys.domain, A, v2(0.1, -0.2), 1),
                              compose_maps(swirl_map(sys.domain, 0.3, 2), generator_flow(sys.domain, A, v2(0, 0.1), 2))};
    for (const auto& f : maps) {
        for (int i = 0; i < 16; ++i) {
            const Vec b = boundary_point(sys.domain, 2 * M_PI * i / 16);
            CHECK((f->map(b) - b).norm() < 1e-10);
        }
        for (const Vec& x : sample_interior(sys.domain, 20, 4)) {
            CHECK((f->jacobian(x) - fd_map_jacobian(*f, x)).cwiseAbs().maxCoeff() < 1e-7);
            CHECK((f->inverse()->map(f->map(x)) - x).norm() < 1e-9);
            CHECK(sys.domain.rho(f->map(x)) > 0);
        }
    }
}

TEST_CASE("swirl with p = 2 has identity differential on the boundary") {
    const MPSystem sys = make_scenario("flat-disk");
    const DiffeoPtr f = swirl_map(sys.domain, 0.7, 2);
    const Vec b = boundary_point(sys.domain, 1.3);
    CHECK((f->jacobian(b) - Mat::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("apply: identity gauge leaves the system unchanged") {
    const MPSystem sys = make_scenario("conformal-disk", {{"B", 0.3}, {"u0", 0.2}});
    const MPSystem out = apply(identity_gauge(2, sys.k), sys);
    const RelationResiduals r = system_difference(sys, out, sample_interior(sys.domain, 50, 1));
    CHECK(r.max() < 1e-15);
}

TEST_CASE("apply: exact shift only changes alpha by d phi") {
    const MPSystem sys = make_scenario("constant-field");
    const GaugeTransform G = make_gauge("exact-shift", sys);
    const MPSystem out = apply(G, sys);
    for (const Vec& x : sample_interior(sys.domain, 20, 2)) {
        CHECK((out.fields.metric(x) - sys.fields.metric(x)).norm() == 0.0);
        CHECK(out.fields.potential(x) == doctest::Approx(sys.fields.potential(x)).epsilon(1e-15));
        CHECK((out.fields.one_form(x) - sys.fields.one_form(x) - G.phi.grad(x)).norm() < 1e-15);
    }
}

TEST_CASE("apply: energy level mismatch is an error") {
    const MPSystem sys = make_scenario("flat-disk");
    try {
        apply(identity_gauge(2, 0.7), sys);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EnergyLevelMismatch);
    }
}

TEST_CASE("apply keeps k above the potential") {
    const MPSystem sys = make_scenario("radial-potential", {{"u0", 0.45}});
    const GaugeTransform G = make_gauge("elliptic", sys, {{"m", 2.0}});
    const MPSystem out = apply(G, sys);
    CHECK(estimate_max_potential(out.domain, out.fields, 101) < sys.k);
}

TEST_CASE("compose: identity law and composed factor") {
    const MPSystem sys = make_scenario("conformal-disk", {{"B", 0.4}, {"u0", 0.1}});
    SplitMix64 rng(99);
    const GaugeTransform G = random_gauge(sys, rng);
    const GaugeTransform H = random_gauge(sys, rng);
    const GaugeTransform I = identity_gauge(2, sys.k);
    const auto pts = sample_interior(sys.domain, 30, 8);
    CHECK(system_difference(apply(compose(I, G), sys), apply(G, sys), pts).max() < 1e-14);
    CHECK(system_difference(apply(compose(G, I), sys), apply(G, sys), pts).max() < 1e-14);
    const GaugeTransform GH = compose(G, H);
    for (const Vec& x : pts) CHECK(GH.mu(x) == doctest::Approx(H.mu(x) * G.mu(H.f->map(x))).epsilon(1e-14));
}

TEST_CASE("compose: sequential and composed application agree") {
    const MPSystem sys = make_scenario("radial-potential", {{"B", 0.3}});
    SplitMix64 rng(1234);
    const auto pts = sample_interior(sys.domain, 100, 77);
    for (int trial = 0; trial < 3; ++trial) {
        const GaugeTransform G1 = random_gauge(sys, rng);
        const GaugeTransform G2 = random_gauge(sys, rng);
        const RelationResiduals r = system_difference(apply(G2, apply(G1, sys)), apply(compose(G1, G2), sys), pts);
        CHECK(r.max() < 1e-9);
    }
}

TEST_CASE("inverse: G composed with its inverse is the identity") {
    const MPSystem sys = make_scenario("constant-field", {{"u0", 0.1}});
    SplitMix64 rng(5);
    const GaugeTransform G = random_gauge(sys, rng);
    const auto pts = sample_interior(sys.domain, 50, 2);
    CHECK(system_difference(apply(compose(G, inverse(G)), sys), sys, pts).max() < 1e-9);
    CHECK(system_difference(apply(compose(inverse(G), G), sys), sys, pts).max() < 1e-9);
}

TEST_CASE("validate_gauge on the catalog") {
    const MPSystem sys = make_scenario("flat-disk");
    for (const auto& e : gauge_catalog()) {
        const GaugeValidation v = validate_gauge(make_gauge(e.key, sys), sys.domain);
        CHECK(v.ok);
    }
    CHECK_THROWS_AS(make_gauge("nope", sys), Error);
    CHECK_THROWS_AS(make_gauge("swirl", sys, {{"q", 1}}), Error);
}

TEST_CASE("reduction functoriality") {
    const MPSystem sys = make_scenario("conformal-disk", {{"B", 0.2}, {"u0", 0.2}});
    const GaugeTransform G = make_gauge("boundary-compatible", sys);
    const MPSystem red_after = reduce(apply(G, sys));
    GaugeTransform magnetic = G;
    magnetic.mu = constant_scalar(1.0);
    magnetic.k = 0.5;
    const MPSystem pulled = apply(magnetic, reduce(sys));
    CHECK(system_difference(red_after, pulled, sample_interior(sys.domain, 100, 3)).max() < 1e-9);
}

TEST_CASE("reduction_correspondence recovers mu") {
    const MPSystem sys = make_scenario("radial-potential", {{"B", 0.2}});
    const GaugeTransform G = make_gauge("boundary-compatible", sys);
    const MPSystem sys2 = apply(G, sys);
    const auto pts = sample_interior(sys.domain, 60, 10);
    const Correspondence c = reduction_correspondence(sys, sys2, G.f, G.phi, pts);
    CHECK(c.certified);
    for (const Vec& x : pts) CHECK(c.mu(x) == doctest::Approx(G.mu(x)).epsilon(1e-9));
    const Correspondence same = reduction_correspondence(sys, sys, identity_map(2), constant_scalar(0), pts);
    for (const Vec& x : pts) CHECK(same.mu(x) == 1.0);
}

TEST_CASE("counterexample pair") {
    const ScenarioFields base = make_scenario("constant-field", {{"B", 0.3}}, DerivativeMode::Analytic).fields;
    const CounterexamplePair cp = counterexample_pair(base);
    const auto pts = sample_interior(cp.sys1.domain, 200, 17);
    const MPSystem r1 = reduce(cp.sys1), r2 = reduce(cp.sys2);
    for (const Vec& x : pts) {
        CHECK((r1.fields.metric(x) - base.metric(x)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((r2.fields.metric(x) - base.metric(x)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((r1.fields.one_form(x) - base.one_form(x)).norm() == 0.0);
        CHECK(cp.phi(x) < 1.5);
        CHECK(1.5 < 2 * cp.psi(x));
        CHECK(cp.phi(x) >= 1.0);
        CHECK(cp.psi(x) <= 1.0);
    }
    CHECK(relation_residuals(cp.sys1, cp.sys2, cp.gauge, pts).max() < 1e-12);
    const Correspondence c = reduction_correspondence(cp.sys1, cp.sys2, identity_map(2), constant_scalar(0), pts);
    CHECK(c.certified);
    for (const Vec& x : pts) {
        CHECK(c.mu(x) == doctest::Approx((3 - 2 * cp.psi(x)) / (3 - cp.phi(x))).epsilon(1e-14));
    }
    CHECK_THROWS_AS(counterexample_pair(base, {0.6, 0.1}), Error);
    CHECK_THROWS_AS(counterexample_pair(base, {0.2, 0.3}), Error);
    CHECK_THROWS_AS(counterexample_pair(base, {0.0, 0.1}), Error);
}

TEST_CASE("verify_equivalence: roundtrip and a perturbed control") {
    const MPSystem sys = make_scenario("constant-field", {{"B", 0.3}, {"u0", 0.1}});
    const GaugeTransform G = make_gauge("boundary-compatible", sys);
    const MPSystem sys2 = apply(G, sys);
    EquivalenceOptions o;
    o.points = sample_interior(sys.domain, 50, 4);
    o.table_size = 5;
    o.rays = 6;
    const EquivalenceReport rep = verify_equivalence(sys, sys2, G, o);
    CHECK(rep.relations.max() < 1e-8);
    CHECK(rep.boundary_metric < 1e-12);
    CHECK(rep.boundary_potential < 1e-12);
    CHECK(rep.boundary_one_form < 1e-12);
    CHECK(rep.table.max_abs < 1e-6);
    CHECK(rep.table.compared == 20);
    CHECK(rep.scattering_max() < 1e-6);
    CHECK(rep.rays_compared == 6);

    MPSystem bad = sys2;
    const ScalarFn U = sys2.fields.potential;
    const ScalarFn rho = sys.domain.rho;
    bad.fields.potential = [U, rho](const Vec& x) { return U(x) + 0.1 * rho(x) * rho(x); };
    const EquivalenceReport rb = verify_equivalence(sys, bad, G, o);
    CHECK(rb.relations.max() > 1e-3);
    CHECK(rb.table.max_abs > 1e-3);
}
