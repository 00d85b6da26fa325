#include "mpflow/gauge.hpp"

#include "mpflow/random.hpp"

#include <cmath>
#include <numbers>

namespace mpflow {

namespace {

class IdentityMap final : public Diffeomorphism {
public:
    explicit IdentityMap(int dim) : dim_(dim) {}
    int dim() const override { return dim_; }
    Vec map(const Vec& x) const override { return x; }
    Mat jacobian(const Vec&) const override { return Mat::Identity(dim_, dim_); }
    DiffeoPtr inverse() const override { return std::make_shared<IdentityMap>(dim_); }
    bool is_identity() const override { return true; }

private:
    int dim_;
};

// Rotation in the (x, y) plane, identity on the remaining axis.
Mat rotation(int n, double th) {
    Mat R = Mat::Identity(n, n);
    R(0, 0) = std::cos(th);
    R(0, 1) = -std::sin(th);
    R(1, 0) = std::sin(th);
    R(1, 1) = std::cos(th);
    return R;
}

Mat rotation_derivative(int n, double th) {
    Mat R = Mat::Zero(n, n);
    R(0, 0) = -std::sin(th);
    R(0, 1) = -std::cos(th);
    R(1, 0) = std::cos(th);
    R(1, 1) = -std::sin(th);
    return R;
}

class SwirlMap final : public Diffeomorphism {
public:
    SwirlMap(ChartDomain domain, double omega, int p) : dom_(std::move(domain)), omega_(omega), p_(p) {}
    int dim() const override { return dom_.dim; }
    Vec map(const Vec& x) const override { return rotation(dom_.dim, angle(x)) * x; }
    Mat jacobian(const Vec& x) const override {
        const int n = dom_.dim;
        const double r = dom_.rho(x);
        const double th = omega_ * std::pow(r, p_);
        const Vec dth = omega_ * p_ * std::pow(r, p_ - 1) * dom_.grad_rho(x);
        return rotation(n, th) + (rotation_derivative(n, th) * x) * dth.transpose();
    }
    DiffeoPtr inverse() const override { return std::make_shared<SwirlMap>(dom_, -omega_, p_); }

private:
    double angle(const Vec& x) const { return omega_ * std::pow(dom_.rho(x), p_); }

    ChartDomain dom_;
    double omega_;
    int p_;
};

class GeneratorFlow final : public Diffeomorphism {
public:
    GeneratorFlow(ChartDomain domain, Mat A, Vec b, int p, int steps)
        : dom_(std::move(domain)), A_(std::move(A)), b_(std::move(b)), p_(p), steps_(steps) {}
    int dim() const override { return dom_.dim; }
    Vec map(const Vec& x) const override {
        Vec fx;
        Mat J;
        evaluate(x, fx, J);
        return fx;
    }
    Mat jacobian(const Vec& x) const override {
        Vec fx;
        Mat J;
        evaluate(x, fx, J);
        return J;
    }
    void evaluate(const Vec& x, Vec& fx, Mat& J) const override {
        const int n = dom_.dim;
        ode::State z(n + n * n);
        z.head(n) = x;
        const Mat I = Mat::Identity(n, n);
        for (int c = 0; c < n; ++c) z.segment(n + c * n, n) = I.col(c);
        const auto rhs = [this, n](double, const ode::State& y, ode::State& dy) {
            const Vec p = y.head(n);
            const double r = dom_.rho(p);
            const Vec W = A_ * p + b_;
            const double s = std::pow(r, p_);
            const Mat DX = W * (p_ * std::pow(r, p_ - 1) * dom_.grad_rho(p)).transpose() + s * A_;
            dy.resize(y.size());
            dy.head(n) = s * W;
            for (int c = 0; c < n; ++c) dy.segment(n + c * n, n) = DX * Vec(y.segment(n + c * n, n));
        };
        const ode::State out = ode::integrate_fixed(rhs, 0.0, z, 1.0, steps_);
        fx = out.head(n);
        J.resize(n, n);
        for (int c = 0; c < n; ++c) J.col(c) = out.segment(n + c * n, n);
    }
    DiffeoPtr inverse() const override {
        return std::make_shared<GeneratorFlow>(dom_, Mat(-A_), Vec(-b_), p_, steps_);
    }

private:
    ChartDomain dom_;
    Mat A_;
    Vec b_;
    int p_;
    int steps_;
};

class ComposedMap final : public Diffeomorphism {
public:
    ComposedMap(DiffeoPtr f1, DiffeoPtr f2) : f1_(std::move(f1)), f2_(std::move(f2)) {}
    int dim() const override { return f2_->dim(); }
    Vec map(const Vec& x) const override { return f1_->map(f2_->map(x)); }
    Mat jacobian(const Vec& x) const override {
        Vec fx;
        Mat J;
        evaluate(x, fx, J);
        return J;
    }
    void evaluate(const Vec& x, Vec& fx, Mat& J) const override {
        Vec y, z;
        Mat J2, J1;
        f2_->evaluate(x, y, J2);
        f1_->evaluate(y, z, J1);
        fx = z;
        J = J1 * J2;
    }
    DiffeoPtr inverse() const override {
        return std::make_shared<ComposedMap>(f2_->inverse(), f1_->inverse());
    }
    bool is_identity() const override { return f1_->is_identity() && f2_->is_identity(); }

private:
    DiffeoPtr f1_;
    DiffeoPtr f2_;
};

// phi o f with the chain-rule gradient.
ScalarField pull_back(const ScalarField& phi, DiffeoPtr f) {
    if (f->is_identity()) return phi;
    ScalarField out;
    out.value = [phi, f](const Vec& x) { return phi(f->map(x)); };
    out.gradient = [phi, f](const Vec& x) {
        Vec fx;
        Mat J;
        f->evaluate(x, fx, J);
        return Vec(J.transpose() * phi.grad(fx));
    };
    return out;
}

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

DiffeoPtr identity_map(int dim) { return std::make_shared<IdentityMap>(dim); }

DiffeoPtr swirl_map(const ChartDomain& domain, double omega, int p) {
    if (p < 1) throw Error(ErrorCode::Config, "swirl exponent must be >= 1");
    return std::make_shared<SwirlMap>(domain, omega, p);
}

DiffeoPtr generator_flow(const ChartDomain& domain, Mat A, Vec b, int p, int steps) {
    if (p < 1) throw Error(ErrorCode::Config, "generator exponent must be >= 1");
    if (A.rows() != domain.dim || A.cols() != domain.dim || b.size() != domain.dim) {
        throw Error(ErrorCode::Config, "generator has the wrong dimension");
    }
    if (A.isZero(0.0) && b.isZero(0.0)) return identity_map(domain.dim);
    return std::make_shared<GeneratorFlow>(domain, std::move(A), std::move(b), p, steps);
}

DiffeoPtr compose_maps(DiffeoPtr f1, DiffeoPtr f2) {
    if (f1->is_identity()) return f2;
    if (f2->is_identity()) return f1;
    return std::make_shared<ComposedMap>(std::move(f1), std::move(f2));
}

GaugeTransform identity_gauge(int dim, double k) {
    return GaugeTransform{dim, k, identity_map(dim), constant_scalar(0.0), constant_scalar(1.0), "identity"};
}

MPSystem apply(const GaugeTransform& G, const MPSystem& sys) {
    if (G.k != sys.k) {
        throw Error(ErrorCode::EnergyLevelMismatch, "gauge and system use different energy levels");
    }
    if (G.dim != sys.dim()) throw Error(ErrorCode::Precondition, "gauge and system differ in dimension");
    const ScenarioFields base = sys.fields;
    const DiffeoPtr f = G.f;
    const ScalarField phi = G.phi;
    const ScalarField mu = G.mu;
    const double k = sys.k;

    ScenarioFields out;
    out.dim = base.dim;
    out.fd_scale = base.fd_scale;
    if (f->is_identity()) {
        out.metric = [base, mu](const Vec& x) { return Mat(base.metric(x) / mu(x)); };
        out.one_form = [base, phi](const Vec& x) { return Vec(base.one_form(x) + phi.grad(x)); };
        out.potential = [base, mu, k](const Vec& x) { return mu(x) * (base.potential(x) - k) + k; };
        const double scale = base.fd_scale;
        out.jet = [base, mu, phi, k, scale](const Vec& x, LocalFrame& fr) {
            const LocalFrame p = local_frame(base, x);
            const int n = p.dim;
            const double m = mu(x);
            const Vec dm = mu.grad(x);
            fr.g = p.g / m;
            for (int i = 0; i < n; ++i) fr.dg[i] = p.dg[i] / m - p.g * (dm[i] / (m * m));
            fr.alpha = p.alpha + phi.grad(x);
            fr.dalpha = p.dalpha + fd_jacobian([&phi](const Vec& y) { return phi.grad(y); }, x, scale);
            fr.U = m * (p.U - k) + k;
            fr.dU = dm * (p.U - k) + m * p.dU;
        };
        out.mode = DerivativeMode::Analytic;
    } else {
        out.metric = [base, f, mu](const Vec& x) {
            Vec fx;
            Mat J;
            f->evaluate(x, fx, J);
            return Mat(J.transpose() * base.metric(fx) * J / mu(x));
        };
        out.one_form = [base, f, phi](const Vec& x) {
            Vec fx;
            Mat J;
            f->evaluate(x, fx, J);
            return Vec(J.transpose() * base.one_form(fx) + phi.grad(x));
        };
        out.potential = [base, f, mu, k](const Vec& x) {
            return mu(x) * (base.potential(f->map(x)) - k) + k;
        };
        out.mode = DerivativeMode::FiniteDifference;
    }
    std::string label = sys.label + "/" + (G.label.empty() ? "gauge" : G.label);
    return MPSystem{sys.domain, std::move(out), k, std::move(label)};
}

GaugeTransform compose(const GaugeTransform& G1, const GaugeTransform& G2) {
    if (G1.k != G2.k) throw Error(ErrorCode::EnergyLevelMismatch, "composed gauges use different k");
    if (G1.dim != G2.dim) throw Error(ErrorCode::Precondition, "composed gauges differ in dimension");
    GaugeTransform out;
    out.dim = G1.dim;
    out.k = G1.k;
    out.f = compose_maps(G1.f, G2.f);
    const ScalarField phi1 = pull_back(G1.phi, G2.f);
    const ScalarField phi2 = G2.phi;
    out.phi.value = [phi1, phi2](const Vec& x) { return phi1(x) + phi2(x); };
    out.phi.gradient = [phi1, phi2](const Vec& x) { return Vec(phi1.grad(x) + phi2.grad(x)); };
    const ScalarField mu1 = pull_back(G1.mu, G2.f);
    const ScalarField mu2 = G2.mu;
    out.mu.value = [mu1, mu2](const Vec& x) { return mu2(x) * mu1(x); };
    out.mu.gradient = [mu1, mu2](const Vec& x) {
        return Vec(mu2.grad(x) * mu1(x) + mu2(x) * mu1.grad(x));
    };
    out.label = G1.label + "*" + G2.label;
    return out;
}

GaugeTransform inverse(const GaugeTransform& G) {
    GaugeTransform out;
    out.dim = G.dim;
    out.k = G.k;
    out.f = G.f->inverse();
    const ScalarField phi = pull_back(G.phi, out.f);
    const ScalarField mu = pull_back(G.mu, out.f);
    out.phi.value = [phi](const Vec& x) { return -phi(x); };
    out.phi.gradient = [phi](const Vec& x) { return Vec(-phi.grad(x)); };
    out.mu.value = [mu](const Vec& x) { return 1.0 / mu(x); };
    out.mu.gradient = [mu](const Vec& x) {
        const double m = mu(x);
        return Vec(-mu.grad(x) / (m * m));
    };
    out.label = G.label + "^-1";
    return out;
}

GaugeValidation validate_gauge(const GaugeTransform& G, const ChartDomain& domain, int samples) {
    GaugeValidation v;
    for (const auto& p : boundary_samples(domain, samples)) {
        const Vec x = boundary_point(domain, p);
        v.boundary_displacement = std::max(v.boundary_displacement, (G.f->map(x) - x).norm());
        v.boundary_phi = std::max(v.boundary_phi, std::abs(G.phi(x)));
    }
    v.min_mu = sampled_minimum(domain, G.mu, 21);
    v.ok = v.boundary_displacement <= 1e-10 && v.boundary_phi <= 1e-10 && v.min_mu > 1e-8;
    return v;
}

RelationResiduals system_difference(const MPSystem& a, const MPSystem& b,
                                    const std::vector<Vec>& points) {
    RelationResiduals r;
    for (const Vec& x : points) {
        r.metric = std::max(r.metric, max_abs(a.fields.metric(x) - b.fields.metric(x)));
        r.one_form = std::max(r.one_form, max_abs(a.fields.one_form(x) - b.fields.one_form(x)));
        r.potential = std::max(r.potential, std::abs(a.fields.potential(x) - b.fields.potential(x)));
    }
    return r;
}

RelationResiduals relation_residuals(const MPSystem& sys1, const MPSystem& sys2,
                                     const GaugeTransform& G, const std::vector<Vec>& points) {
    return system_difference(apply(G, sys1), sys2, points);
}

Correspondence reduction_correspondence(const MPSystem& sys, const MPSystem& sys2, DiffeoPtr f,
                                        ScalarField phi, const std::vector<Vec>& points) {
    if (sys.k != sys2.k) throw Error(ErrorCode::EnergyLevelMismatch, "systems use different k");
    const double k = sys.k;
    const ScalarFn U = sys.fields.potential;
    const ScalarFn U2 = sys2.fields.potential;
    Correspondence c;
    c.mu.value = [U, U2, f, k](const Vec& x) { return (k - U2(x)) / (k - U(f->map(x))); };
    GaugeTransform G{sys.dim(), k, f, std::move(phi), c.mu, "correspondence"};
    c.residuals = relation_residuals(sys, sys2, G, points);
    c.certified = c.residuals.max() <= kRelationTolerance;
    return c;
}

CounterexamplePair counterexample_pair(const ScenarioFields& base, const CounterexampleParams& p) {
    if (!(p.c1 > 0 && p.c1 <= 0.5)) throw Error(ErrorCode::Config, "c1 must lie in (0, 1/2]");
    if (!(p.c2 > 0 && p.c2 <= 0.25)) throw Error(ErrorCode::Config, "c2 must lie in (0, 1/4]");
    const int n = base.dim;
    const double k = 3.0;
    const double c1 = p.c1, c2 = p.c2;

    CounterexamplePair out;
    out.phi.value = [c1](const Vec& x) { return 1.5 - c1 * (1.0 - x.squaredNorm()); };
    out.phi.gradient = [c1](const Vec& x) { return Vec(2.0 * c1 * x); };
    out.psi.value = [c2](const Vec& x) { return 0.75 + c2 * (1.0 - x.squaredNorm()); };
    out.psi.gradient = [c2](const Vec& x) { return Vec(-2.0 * c2 * x); };

    // (g / (2(3 - V)), alpha, V) for a potential V.
    auto build = [&](ScalarField V, std::string label) {
        ScenarioFields f;
        f.dim = n;
        f.metric = [base, V, k](const Vec& x) { return Mat(base.metric(x) / (2.0 * (k - V(x)))); };
        f.one_form = base.one_form;
        f.potential = V.value;
        f.jet = [base, V, k](const Vec& x, LocalFrame& fr) {
            const LocalFrame b = local_frame(base, x);
            const double v = V(x);
            const Vec dv = V.grad(x);
            const double c = 2.0 * (k - v);
            fr.g = b.g / c;
            for (int m = 0; m < b.dim; ++m) fr.dg[m] = b.dg[m] / c + b.g * (2.0 * dv[m] / (c * c));
            fr.alpha = b.alpha;
            fr.dalpha = b.dalpha;
            fr.U = v;
            fr.dU = dv;
        };
        f.mode = DerivativeMode::Analytic;
        f.fd_scale = base.fd_scale;
        return make_system(disk_domain(n, 1.0), std::move(f), k, std::move(label), 101);
    };
    const ScalarField phi = out.phi, psi = out.psi;
    ScalarField two_psi;
    two_psi.value = [psi](const Vec& x) { return 2.0 * psi(x); };
    two_psi.gradient = [psi](const Vec& x) { return Vec(2.0 * psi.grad(x)); };
    out.sys1 = build(phi, "counterexample/phi");
    out.sys2 = build(two_psi, "counterexample/2psi");

    out.gauge.dim = n;
    out.gauge.k = k;
    out.gauge.f = identity_map(n);
    out.gauge.phi = constant_scalar(0.0);
    out.gauge.mu.value = [phi, psi](const Vec& x) { return (3.0 - 2.0 * psi(x)) / (3.0 - phi(x)); };
    out.gauge.mu.gradient = [phi, psi](const Vec& x) {
        const double a = 3.0 - 2.0 * psi(x), b = 3.0 - phi(x);
        return Vec((-2.0 * psi.grad(x) * b + a * phi.grad(x)) / (b * b));
    };
    out.gauge.label = "counterexample";
    return out;
}

std::vector<Ray> ray_fan(const ChartDomain& domain, int count) {
    std::vector<Ray> rays;
    const auto params = boundary_samples(domain, count);
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i = 0; i < count; ++i) {
        const Vec p = boundary_point(domain, params[i]);
        const double s = std::fmod(golden * (i + 1), 1.0);
        std::vector<double> a;
        if (domain.dim == 2) {
            a = {-1.2 + 2.4 * s};
        } else {
            const double t = std::fmod(golden * golden * (i + 1), 1.0);
            a = {-1.5 + 3.0 * s, -1.5 + 3.0 * t};
        }
        rays.push_back(Ray{p, direction_from_angles(domain, p, a)});
    }
    return rays;
}

EquivalenceReport verify_equivalence(const MPSystem& sys1, const MPSystem& sys2,
                                     const GaugeTransform& G, const EquivalenceOptions& opts) {
    EquivalenceReport rep;
    rep.relations = relation_residuals(sys1, sys2, G, opts.points);

    for (const auto& prm : boundary_samples(sys1.domain, opts.boundary_samples)) {
        const Vec x = boundary_point(sys1.domain, prm);
        rep.boundary_metric =
            std::max(rep.boundary_metric, max_abs(sys1.fields.metric(x) - sys2.fields.metric(x)));
        rep.boundary_potential = std::max(
            rep.boundary_potential, std::abs(sys1.fields.potential(x) - sys2.fields.potential(x)));
        const Mat T = boundary_tangent_basis(sys1.domain, x);
        const Vec da = sys1.fields.one_form(x) - sys2.fields.one_form(x);
        rep.boundary_one_form = std::max(rep.boundary_one_form, max_abs(T.transpose() * da));
    }

    if (opts.table_size > 0) {
        const ActionTable a = boundary_action_table(sys1, opts.table_size, opts.shoot);
        const ActionTable b = boundary_action_table(sys2, opts.table_size, opts.shoot);
        rep.table = compare_tables(a, b);
        rep.table_failures = a.failures + b.failures;
    }

    for (const Ray& r : ray_fan(sys1.domain, opts.rays)) {
        try {
            const ScatteringRecord s1 = scattering(sys1, r.p, r.u, opts.shoot.integrator);
            const ScatteringRecord s2 = scattering(sys2, r.p, r.u, opts.shoot.integrator);
            if (s1.glancing || s2.glancing) {
                ++rep.rays_skipped;
                continue;
            }
            rep.scattering_point = std::max(rep.scattering_point, (s1.exit_x - s2.exit_x).norm());
            rep.scattering_velocity = std::max(rep.scattering_velocity, (s1.exit_v - s2.exit_v).norm());
            rep.scattering_action = std::max(rep.scattering_action, std::abs(s1.action - s2.action));
            ++rep.rays_compared;
        } catch (const Error&) {
            ++rep.rays_skipped;
        }
    }
    return rep;
}

}  // namespace mpflow
