#include "doctest.h"

#include "mpflow/action.hpp"
#include "mpflow/catalog.hpp"
#include "mpflow/oracles.hpp"

#include <cmath>

using namespace mpflow;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

MPSystem constant_field(double B, double k = 0.5) {
    return make_scenario("constant-field", {{"B", B}, {"k", k}}, DerivativeMode::Analytic);
}

}  // namespace

TEST_CASE("rhs: straight lines without field or potential") {
    const MPSystem sys = make_scenario("flat-disk");
    const Formulation all[4] = {Formulation::Lagrangian, Formulation::TangentHamiltonian,
                                Formulation::TwistedCotangent, Formulation::CanonicalCotangent};
    for (Formulation f : all) {
        const PhaseState s = convert(sys, PhaseState{v2(0.2, -0.1), v2(0.6, 0.8)}, representation_of(f));
        const PhaseState d = rhs(sys, f, s);
        CHECK(d.w.norm() < 1e-9);
        CHECK((d.x - v2(0.6, 0.8)).norm() < 1e-12);
    }
}

TEST_CASE("rhs: constant field rotates the velocity") {
    const double B = 0.7;
    const MPSystem sys = constant_field(B);
    const Vec v = v2(0.6, 0.8);
    const PhaseState d = rhs(sys, Formulation::Lagrangian, PhaseState{v2(0.1, 0.2), v});
    CHECK((d.w - B * v2(-v[1], v[0])).norm() < 1e-12);
    CHECK(d.w.dot(v) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("rhs: formulations agree pointwise on a conformal metric with potential") {
    const MPSystem sys = make_scenario("conformal-disk", {{"u0", 0.2}, {"B", 0.4}}, DerivativeMode::Analytic);
    const PhaseState s{v2(0.3, -0.4), v2(0.5, 0.2)};
    const PhaseState da = rhs(sys, Formulation::Lagrangian, s);
    const PhaseState db = rhs(sys, Formulation::TangentHamiltonian, s);
    CHECK((da.x - db.x).norm() < 1e-12);
    CHECK((da.w - db.w).norm() < 1e-10);
    // d/dt of v recovered from the cotangent derivatives by the chain rule.
    for (Formulation f : {Formulation::TwistedCotangent, Formulation::CanonicalCotangent}) {
        const Representation rep = representation_of(f);
        const PhaseState c = convert(sys, s, rep);
        const PhaseState dc = rhs(sys, f, c);
        const double h = 1e-6;
        const PhaseState cp{c.x + h * dc.x, c.w + h * dc.w, rep};
        const PhaseState cm{c.x - h * dc.x, c.w - h * dc.w, rep};
        const Vec vdot = (velocity_of(sys, cp) - velocity_of(sys, cm)) / (2 * h);
        CHECK((dc.x - da.x).norm() < 1e-12);
        CHECK((vdot - da.w).norm() < 1e-7);
    }
}

TEST_CASE("rhs: representation mismatch is an error") {
    const MPSystem sys = make_scenario("flat-disk");
    PhaseState s{v2(0, 0), v2(1, 0), Representation::Velocity};
    try {
        rhs(sys, Formulation::CanonicalCotangent, s);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RepresentationMismatch);
    }
}

TEST_CASE("integrate: straight chord in the flat disk") {
    const MPSystem sys = make_scenario("flat-disk");
    const Trajectory tr = integrate(sys, Formulation::Lagrangian, PhaseState{v2(-1, 0), v2(1, 0)});
    CHECK(tr.exit.exited);
    CHECK(tr.exit.tau == doctest::Approx(2.0).epsilon(1e-12));
    for (double t : {0.3, 1.1, 1.9}) CHECK((tr.position_at(t) - v2(-1 + t, 0)).norm() < 1e-9);
    CHECK(exit_time(sys, tr) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("integrate: speed sqrt(2k) shortens the exit time") {
    const MPSystem sys = make_scenario("flat-disk", {{"k", 2.0}});
    const Vec v = sphere_lift(sys, v2(-1, 0), v2(1, 0));
    CHECK((v - v2(2, 0)).norm() < 1e-14);
    const Trajectory tr = integrate(sys, Formulation::Lagrangian, PhaseState{v2(-1, 0), v});
    CHECK(tr.exit.tau == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("integrate: Larmor circle of radius |v|/B") {
    const MPSystem sys = constant_field(1.0);
    const Vec x0 = v2(0.0, -0.5), v0 = v2(1.0, 0.0);
    IntegratorOptions o;
    o.stop_at_exit = false;
    o.check_bbox = false;
    const Trajectory tr = integrate(sys, Formulation::Lagrangian, PhaseState{x0, v0}, 5.0, o);
    const Vec c = x0 + v2(-v0[1], v0[0]);
    double worst = 0;
    for (int i = 0; i <= 100; ++i) worst = std::max(worst, std::abs((tr.position_at(0.05 * i) - c).norm() - 1.0));
    CHECK(worst < 1e-8);
    CHECK(tr.max_energy_drift(0.5) < 1e-8);
}

TEST_CASE("integrate: no exit within a short horizon") {
    const MPSystem sys = make_scenario("flat-disk");
    try {
        integrate(sys, Formulation::Lagrangian, PhaseState{v2(-1, 0), v2(1, 0)}, 0.5);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoExit);
    }
}

TEST_CASE("integrate: leaving the bounding box without exit detection") {
    const MPSystem sys = make_scenario("flat-disk");
    IntegratorOptions o;
    o.stop_at_exit = false;
    try {
        integrate(sys, Formulation::Lagrangian, PhaseState{v2(-1, 0), v2(1, 0)}, 5.0, o);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LeftDomain);
    }
}

TEST_CASE("scattering: matches the Larmor arc") {
    for (double B : {0.1, 0.5}) {
        const MPSystem sys = constant_field(B);
        for (double th : {0.3, 2.0, 4.5}) {
            const Vec p = boundary_point(sys.domain, th);
            const Vec u = direction_from_angles(sys.domain, p, std::vector<double>{0.7});
            const ScatteringRecord rec = scattering(sys, p, u);
            const oracle::ArcExit ex = oracle::larmor_exit(B, p, rec.entry_v);
            CHECK((rec.exit_x - ex.exit_x).norm() < 1e-7);
            CHECK((rec.exit_v - ex.exit_v).norm() < 1e-7);
            CHECK(std::abs(rec.tau - ex.tau) < 1e-8);
            CHECK(std::abs(rec.action - ex.action) < 1e-7);
            CHECK(std::abs(std::abs(sys.domain.rho(rec.exit_x))) < 1e-12);
        }
    }
}

TEST_CASE("scattering: flat chord keeps its direction") {
    const MPSystem sys = make_scenario("flat-disk");
    const Vec p = boundary_point(sys.domain, 1.0);
    const Vec u = direction_from_angles(sys.domain, p, std::vector<double>{-0.4});
    const ScatteringRecord rec = scattering(sys, p, u);
    CHECK((rec.exit_v - rec.entry_v).norm() < 1e-9);
    CHECK(rec.action == doctest::Approx((rec.exit_x - p).norm()).epsilon(1e-9));
    CHECK_FALSE(rec.glancing);
}

TEST_CASE("scattering: outbound directions are rejected") {
    const MPSystem sys = make_scenario("flat-disk");
    try {
        scattering(sys, v2(1, 0), v2(1, 0));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Precondition);
    }
}

TEST_CASE("compare_formulations: four base curves agree") {
    const MPSystem sys = make_scenario("conformal-disk", {{"u0", 0.2}, {"B", 0.3}});
    const Vec p = boundary_point(sys.domain, 0.4);
    const Vec v = sphere_lift(sys, p, direction_from_angles(sys.domain, p, std::vector<double>{0.5}));
    const FormulationComparison c = compare_formulations(sys, PhaseState{p, v});
    CHECK(c.max_deviation < 1e-6);
    CHECK(c.tau > 0.5);
}

TEST_CASE("H-flow on {H = k} has E(x, xdot) = k") {
    const MPSystem sys = make_scenario("radial-potential", {{"B", 0.3}}, DerivativeMode::Analytic);
    const Vec p = boundary_point(sys.domain, 2.0);
    const Vec v = sphere_lift(sys, p, direction_from_angles(sys.domain, p, std::vector<double>{0.2}));
    const PhaseState s = convert(sys, PhaseState{p, v}, Representation::CanonicalMomentum);
    const Trajectory tr = integrate(sys, Formulation::CanonicalCotangent, s);
    CHECK(tr.max_energy_drift(sys.k) < 1e-9);
}

TEST_CASE("H_tilde flow: constant factor rescales time") {
    const MPSystem sys = make_scenario("constant-field", {{"B", 0.5}});
    const Vec p = boundary_point(sys.domain, 0.0);
    const Vec v = sphere_lift(sys, p, direction_from_angles(sys.domain, p, std::vector<double>{0.3}));
    const PhaseState s = convert(sys, PhaseState{p, v}, Representation::CanonicalMomentum);
    const Trajectory h = integrate(sys, Formulation::CanonicalCotangent, s);
    const Trajectory t1 = integrate_tilde(sys, constant_scalar(1.0), s);
    const Trajectory t2 = integrate_tilde(sys, constant_scalar(2.0), s);
    CHECK(t2.exit.tau == doctest::Approx(0.5 * h.exit.tau).epsilon(1e-10));
    for (int i = 0; i <= 20; ++i) {
        const double s_ = t2.exit.tau * i / 20;
        CHECK((t2.position_at(s_) - h.position_at(2 * s_)).norm() < 1e-8);
        CHECK((t1.position_at(2 * s_) - h.position_at(2 * s_)).norm() < 1e-10);
    }
}

TEST_CASE("H_tilde flow: time change by a varying factor") {
    const MPSystem sys = make_scenario("radial-potential", {{"B", 0.4}, {"u0", 0.3}});
    const ScalarField mu = hat_factor(sys);
    const Vec p = boundary_point(sys.domain, 1.0);
    const Vec v = sphere_lift(sys, p, direction_from_angles(sys.domain, p, std::vector<double>{-0.3}));
    const PhaseState s = convert(sys, PhaseState{p, v}, Representation::CanonicalMomentum);
    const Trajectory h = integrate(sys, Formulation::CanonicalCotangent, s);
    auto tilde = std::make_shared<const Trajectory>(integrate_tilde(sys, mu, s));
    const RunningIntegral beta = time_change(tilde, mu);
    CHECK(beta.total() == doctest::Approx(h.exit.tau).epsilon(1e-8));
    for (int i = 0; i <= 40; ++i) {
        const double si = tilde->exit.tau * i / 40;
        CHECK((tilde->position_at(si) - h.position_at(beta(si))).norm() < 1e-6);
    }
}

TEST_CASE("H_tilde flow: off-level start is rejected") {
    const MPSystem sys = make_scenario("flat-disk");
    try {
        integrate_tilde(sys, constant_scalar(2.0), PhaseState{v2(-1, 0), v2(2, 0), Representation::CanonicalMomentum});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EnergyLevelMismatch);
    }
}

TEST_CASE("variational flow: affine growth in the flat case") {
    const MPSystem sys = make_scenario("flat-disk");
    const Trajectory tr = integrate(sys, Formulation::Lagrangian, PhaseState{v2(-1, 0), v2(1, 0)});
    ode::State d(4);
    d << 0.1, -0.2, 0.3, 0.05;
    const Trajectory var = variational_flow(sys, tr, d);
    for (double t : {0.5, 1.0, 1.7}) {
        const ode::State p = var.perturbation_at(t, 0);
        CHECK(std::abs(p[0] - (0.1 + 0.3 * t)) < 1e-9);
        CHECK(std::abs(p[1] - (-0.2 + 0.05 * t)) < 1e-9);
    }
}

TEST_CASE("variational flow: agrees with differenced nonlinear trajectories") {
    const MPSystem sys = make_scenario("conformal-disk", {{"B", 0.5}, {"u0", 0.1}}, DerivativeMode::Analytic);
    const Vec x0 = v2(-0.3, 0.2), v0 = v2(0.4, 0.5);
    IntegratorOptions o;
    o.stop_at_exit = false;
    const Trajectory base = integrate(sys, Formulation::Lagrangian, PhaseState{x0, v0}, 1.0, o);
    ode::State d(4);
    d << 0.2, 0.1, -0.3, 0.4;
    const Trajectory var = variational_flow(sys, base, d);
    const double h = 1e-5;
    const Trajectory tp = integrate(sys, Formulation::Lagrangian, PhaseState{x0 + h * d.head(2), v0 + h * d.tail(2)}, 1.0, o);
    const Trajectory tm = integrate(sys, Formulation::Lagrangian, PhaseState{x0 - h * d.head(2), v0 - h * d.tail(2)}, 1.0, o);
    const ode::State fd = (tp.raw_at(1.0) - tm.raw_at(1.0)) / (2 * h);
    CHECK((var.perturbation_at(1.0, 0) - fd).norm() < 1e-5);
}

TEST_CASE("conjugate monitor stays positive on simple scenarios") {
    for (const char* key : {"flat-disk", "constant-field", "conformal-disk"}) {
        const MPSystem sys = make_scenario(key, {}, DerivativeMode::Analytic);
        const Vec p = boundary_point(sys.domain, 0.9);
        const Vec v = sphere_lift(sys, p, direction_from_angles(sys.domain, p, std::vector<double>{0.4}));
        const double m = conjugate_monitor(sys, p, v);
        CHECK(m > 0);
        if (std::string(key) == "flat-disk") CHECK(m == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("reparametrization to the reduced system has unit G-speed") {
    const MPSystem sys = make_scenario("radial-potential", {{"B", 0.3}}, DerivativeMode::Analytic);
    const MPSystem red = reduce(sys);
    const Vec p = boundary_point(sys.domain, 0.5);
    const Vec v = sphere_lift(sys, p, direction_from_angles(sys.domain, p, std::vector<double>{0.6}));
    const Trajectory tr = integrate(sys, Formulation::Lagrangian, PhaseState{p, v});
    const ReducedCurve c = reparametrize_to_reduced(sys, tr);
    double worst = 0;
    for (int i = 0; i <= 50; ++i) {
        const double s = c.s_end() * i / 50;
        const Vec x = c.position(s);
        worst = std::max(worst, std::abs(g_norm(red.fields.metric(x), c.tangent(s)) - 1.0));
    }
    CHECK(worst < 1e-8);
    CHECK(magnetic_action_along(red, c) == doctest::Approx(action_along(sys, tr)).epsilon(1e-7));
}

TEST_CASE("reparametrization: U = 0 and k = 2 gives s = 4t") {
    const MPSystem sys = make_scenario("flat-disk", {{"k", 2.0}});
    const Trajectory tr = integrate(sys, Formulation::Lagrangian, PhaseState{v2(-1, 0), v2(2, 0)});
    const ReducedCurve c = reparametrize_to_reduced(sys, tr);
    CHECK(c.s_of(0.7) == doctest::Approx(2.8).epsilon(1e-12));
    CHECK(c.s_end() == doctest::Approx(4.0).epsilon(1e-12));
}
