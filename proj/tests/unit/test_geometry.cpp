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

TEST_CASE("metric_at: flat and conformal with lambda(0) = 0") {
    const MPSystem flat = make_scenario("flat-disk");
    CHECK(metric_at(flat.fields, v2(0.3, 0.1)).isApprox(Mat::Identity(2, 2)));
    const MPSystem conf = make_scenario("conformal-disk", {{"lambda0", -0.1}});
    CHECK((metric_at(conf.fields, v2(0, 0)) - Mat::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("metric_at: non positive definite metric is rejected") {
    ScenarioFields f = make_scenario("flat-disk").fields;
    f.metric = [](const Vec&) {
        Mat g(2, 2);
        g << 1, 0, 0, -1;
        return g;
    };
    try {
        metric_at(f, v2(0, 0));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateMetric);
    }
}

TEST_CASE("christoffel_at: flat metric has none") {
    const MPSystem flat = make_scenario("flat-disk");
    const MatArray G = christoffel_at(flat.fields, v2(0.2, 0.4));
    for (int i = 0; i < 2; ++i) CHECK(G[i].cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("christoffel_at: conformal closed form and symmetry") {
    const double a = 0.3;
    for (DerivativeMode mode : {DerivativeMode::Analytic, DerivativeMode::FiniteDifference}) {
        const MPSystem conf = make_scenario("conformal-disk", {{"a", a}}, mode);
        const Vec x = v2(0.35, -0.2);
        const MatArray G = christoffel_at(conf.fields, x);
        // lambda = a (1 - |x|^2): d_1 lambda = -2 a x, d_2 lambda = -2 a y
        const double l1 = -2 * a * x[0], l2 = -2 * a * x[1];
        CHECK(G[0](0, 0) == doctest::Approx(l1).epsilon(1e-9));
        CHECK(G[0](1, 1) == doctest::Approx(-l1).epsilon(1e-9));
        CHECK(G[0](0, 1) == doctest::Approx(l2).epsilon(1e-9));
        CHECK(G[1](1, 1) == doctest::Approx(l2).epsilon(1e-9));
        for (int i = 0; i < 2; ++i) CHECK(G[i](0, 1) == G[i](1, 0));
    }
}

TEST_CASE("analytic and finite-difference derivatives agree on the catalog") {
    for (const auto& e : scenario_catalog()) {
        const MPSystem sys = make_scenario(e.key, {}, DerivativeMode::Analytic);
        for (const Vec& x : sample_interior(sys.domain, 200, 11)) {
            CHECK(derivative_mismatch(sys.fields, x) < 1e-6);
        }
    }
}

TEST_CASE("lorentz_at: zero without field, rotation for constant B") {
    CHECK(lorentz_at(make_scenario("flat-disk").fields, v2(0.1, 0.1)).norm() == 0.0);
    const double B = 0.8;
    for (DerivativeMode mode : {DerivativeMode::Analytic, DerivativeMode::FiniteDifference}) {
        const MPSystem sys = make_scenario("constant-field", {{"B", B}}, mode);
        Mat Y(2, 2);
        Y << 0, -B, B, 0;
        CHECK((lorentz_at(sys.fields, v2(0.3, -0.5)) - Y).norm() < 1e-9);
        Mat Om(2, 2);
        Om << 0, B, -B, 0;
        CHECK((magnetic_form_at(sys.fields, v2(0.3, -0.5)) - Om).norm() < 1e-9);
    }
}

TEST_CASE("lorentz_at: g-antisymmetry and <Yv, v> = 0") {
    const MPSystem sys = make_scenario("conformal-disk", {{"B", 0.6}, {"a", 0.3}});
    SplitMix64 rng(3);
    for (const Vec& x : sample_interior(sys.domain, 100, 5)) {
        const Mat g = metric_at(sys.fields, x);
        const Mat Y = lorentz_at(sys.fields, x);
        CHECK(((g * Y) + (g * Y).transpose()).cwiseAbs().maxCoeff() < 1e-8);
        const Vec v = v2(rng.uniform(-1, 1), rng.uniform(-1, 1));
        CHECK(std::abs(g_inner(g, Y * v, v)) < 1e-8);
        const Mat Om = magnetic_form_at(sys.fields, x);
        CHECK((Om + Om.transpose()).norm() < 1e-14);
    }
}

TEST_CASE("inward_normal_at: disk, conformal factor and normalization") {
    const MPSystem flat = make_scenario("flat-disk");
    CHECK((inward_normal_at(flat.fields, flat.domain, v2(1, 0)) - v2(-1, 0)).norm() < 1e-14);
    const MPSystem conf = make_scenario("conformal-disk", {{"lambda0", 0.2}});
    // lambda = 0.2 on the boundary
    CHECK((inward_normal_at(conf.fields, conf.domain, v2(1, 0)) - std::exp(-0.2) * v2(-1, 0)).norm() < 1e-12);
    for (const auto& e : scenario_catalog()) {
        const MPSystem sys = make_scenario(e.key);
        for (int i = 0; i < 50; ++i) {
            const Vec x = boundary_point(sys.domain, 2 * M_PI * i / 50);
            const Vec nu = inward_normal_at(sys.fields, sys.domain, x);
            CHECK(g_norm(metric_at(sys.fields, x), nu) == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(sys.domain.grad_rho(x).dot(nu) > 0);
        }
    }
}

TEST_CASE("inward_normal_at: interior points and flat rho are errors") {
    const MPSystem flat = make_scenario("flat-disk");
    try {
        inward_normal_at(flat.fields, flat.domain, v2(0.5, 0));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Precondition);
    }
    ChartDomain d = flat.domain;
    d.rho = [](const Vec& x) { return std::pow(1 - x.squaredNorm(), 3); };
    d.rho_gradient = {};
    try {
        inward_normal_at(flat.fields, d, v2(1, 0));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateBoundary);
    }
}

TEST_CASE("second_fundamental_form_at: disk curvature 1/R") {
    const MPSystem unit = make_scenario("flat-disk");
    CHECK(second_fundamental_form_at(unit.fields, unit.domain, v2(1, 0), v2(0, 1)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(second_fundamental_form_at(unit.fields, unit.domain, v2(1, 0), v2(0, 0)) == 0.0);
    const MPSystem big = make_scenario("flat-disk", {{"R", 2.0}});
    CHECK(second_fundamental_form_at(big.fields, big.domain, v2(0, 2), v2(1, 0)) == doctest::Approx(0.5).epsilon(1e-12));
    // the normal component of v is projected away
    CHECK(second_fundamental_form_at(unit.fields, unit.domain, v2(1, 0), v2(0.7, 1)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("grad_at: raised gradient of U") {
    MPSystem flat = make_scenario("flat-disk");
    CHECK(grad_at(flat.fields, v2(0.5, 0)).norm() == 0.0);
    flat.fields.potential = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
    CHECK((grad_at(flat.fields, v2(0.5, 0)) - v2(0.5, 0)).norm() < 1e-10);
    MPSystem conf = make_scenario("conformal-disk", {{"a", 0.2}});
    conf.fields.potential = flat.fields.potential;
    conf.fields.mode = DerivativeMode::FiniteDifference;
    const Vec x = v2(0.3, 0.4);
    const double lam = 0.2 * (1 - x.squaredNorm());
    CHECK((grad_at(conf.fields, x) - std::exp(-2 * lam) * x).norm() < 1e-10);
}

TEST_CASE("boundary_point lies on the boundary in 2D and 3D") {
    const MPSystem d2 = make_scenario("dented-disk");
    for (int i = 0; i < 32; ++i) CHECK(std::abs(d2.domain.rho(boundary_point(d2.domain, 2 * M_PI * i / 32))) < 1e-12);
    const MPSystem d3 = make_scenario("flat-disk", {{"dim", 3}});
    const double p[2] = {1.0, 2.0};
    const Vec x = boundary_point(d3.domain, std::span<const double>(p, 2));
    CHECK(std::abs(d3.domain.rho(x)) < 1e-12);
    const Mat T = boundary_tangent_basis(d3.domain, x);
    CHECK(std::abs(T.col(0).dot(x)) < 1e-12);
    CHECK(std::abs(T.col(1).dot(x)) < 1e-12);
    CHECK(std::abs(T.col(0).dot(T.col(1))) < 1e-12);
}

TEST_CASE("3D constant field: Omega is closed") {
    const MPSystem sys = make_scenario("constant-field", {{"dim", 3}});
    const Vec x = sample_interior(sys.domain, 1, 9)[0];
    const double h = 1e-4;
    double dOm = 0;
    for (int a = 0; a < 3; ++a) {
        Vec e = Vec::Zero(3);
        e[a] = h;
        const Mat d = (magnetic_form_at(sys.fields, x + e) - magnetic_form_at(sys.fields, x - e)) / (2 * h);
        dOm += d(0, 0);
    }
    // d Omega = d_0 Om_12 + d_1 Om_20 + d_2 Om_01
    auto Om = [&](int c, int i, int j) {
        Vec e = Vec::Zero(3);
        e[c] = h;
        return (magnetic_form_at(sys.fields, x + e)(i, j) - magnetic_form_at(sys.fields, x - e)(i, j)) / (2 * h);
    };
    CHECK(std::abs(Om(0, 1, 2) + Om(1, 2, 0) + Om(2, 0, 1)) < 1e-6);
    CHECK(std::abs(dOm) < 1e-6);
}
