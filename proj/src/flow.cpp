#include "mpflow/flow.hpp"

#include "mpflow/action.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>

namespace mpflow {

namespace {

using BigMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2 * kMaxDim, 2 * kMaxDim>;
using BigVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxDim, 1>;

Vec to_velocity(const LocalFrame& F, const Vec& w, Representation rep) {
    switch (rep) {
        case Representation::Velocity:
            return w;
        case Representation::TwistedMomentum:
            return F.g_inv * w;
        case Representation::CanonicalMomentum:
            return F.g_inv * (w + F.alpha);
    }
    return w;
}

Vec from_velocity(const LocalFrame& F, const Vec& v, Representation rep) {
    switch (rep) {
        case Representation::Velocity:
            return v;
        case Representation::TwistedMomentum:
            return F.g * v;
        case Representation::CanonicalMomentum:
            return F.g * v - F.alpha;
    }
    return v;
}

// Vector field of formulation f at (x, w) given the frame at x.
void field(const LocalFrame& F, Formulation f, const Vec& w, Vec& dx, Vec& dw) {
    const int n = F.dim;
    switch (f) {
        case Formulation::Lagrangian: {
            const Vec& v = w;
            const MatArray G = christoffel_from(F);
            Vec acc = lorentz_from(F) * v - F.g_inv * F.dU;
            for (int i = 0; i < n; ++i) acc[i] -= v.dot(G[i] * v);
            dx = v;
            dw = acc;
            return;
        }
        case Formulation::TangentHamiltonian: {
            const Vec& v = w;
            // omega(A, B) = A^T W B for the twisted form pulled back to TM.
            BigMat W = BigMat::Zero(2 * n, 2 * n);
            for (int i = 0; i < n; ++i) {
                for (int l = 0; l < n; ++l) {
                    double c = 0.0;
                    for (int j = 0; j < n; ++j) c += v[j] * F.dg[l](i, j);
                    W(i, l) += c + F.omega(i, l);
                    W(l, i) -= c;
                    W(i, n + l) += F.g(i, l);
                    W(n + l, i) -= F.g(i, l);
                }
            }
            BigVec dE(2 * n);
            for (int m = 0; m < n; ++m) dE[m] = 0.5 * v.dot(F.dg[m] * v) + F.dU[m];
            dE.tail(n) = F.g * v;
            const BigVec X = W.transpose().partialPivLu().solve(dE);
            dx = X.head(n);
            dw = X.tail(n);
            return;
        }
        case Formulation::TwistedCotangent: {
            const Vec v = F.g_inv * w;
            Vec d = F.omega.transpose() * v - F.dU;
            for (int i = 0; i < n; ++i) d[i] += 0.5 * v.dot(F.dg[i] * v);
            dx = v;
            dw = d;
            return;
        }
        case Formulation::CanonicalCotangent: {
            const Vec v = F.g_inv * (w + F.alpha);
            Vec d = -(F.dalpha * v) - F.dU;
            for (int i = 0; i < n; ++i) d[i] += 0.5 * v.dot(F.dg[i] * v);
            dx = v;
            dw = d;
            return;
        }
    }
}

double knot_energy(const MPSystem& sys, const ode::State& z, Representation rep) {
    const int n = sys.dim();
    const Vec x = z.head(n);
    const Vec w = z.segment(n, n);
    const Mat g = sys.fields.metric(x);
    const Vec v = rep == Representation::Velocity ? w : velocity_of(sys, PhaseState{x, w, rep});
    return 0.5 * v.dot(g * v) + sys.fields.potential(x);
}

double rho_at(const MPSystem& sys, const ode::State& z) {
    return sys.domain.rho(Vec(z.head(sys.dim())));
}

// Last + to - sign change of rho inside the given step, sampled at 16 interior
// points. For the first step the start point (on the boundary) is skipped.
bool bracket_in_step(const MPSystem& sys, const ode::DenseSolution& sol, std::size_t step,
                     double& a, double& b) {
    constexpr int kSamples = 16;
    const double t0 = sol.times()[step], t1 = sol.times()[step + 1];
    double prev_t = t0;
    bool prev_ok = step > 0 && rho_at(sys, sol.states()[step]) > 0.0;
    for (int j = 1; j <= kSamples + 1; ++j) {
        const double t = j == kSamples + 1 ? t1 : t0 + (t1 - t0) * j / (kSamples + 1.0);
        const double r = rho_at(sys, sol.eval_in_step(step, t));
        if (r < 0.0 && prev_ok) {
            a = prev_t;
            b = t;
            return true;
        }
        prev_ok = r > 0.0;
        prev_t = t;
    }
    return false;
}

double bisect_exit(const MPSystem& sys, const ode::DenseSolution& sol, std::size_t step, double a,
                   double b) {
    double t = b;
    for (int it = 0; it < 200; ++it) {
        t = 0.5 * (a + b);
        const double r = rho_at(sys, sol.eval_in_step(step, t));
        if (std::abs(r) <= kExitTolerance) break;
        if (r > 0) a = t;
        else b = t;
        if (b - a <= 4 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(t))) break;
    }
    return t;
}

struct Driver {
    const MPSystem& sys;
    ode::Function f;
    int columns = 0;
    Representation rep = Representation::Velocity;
};

Trajectory run(const Driver& d, double t0, const ode::State& z0, double t_max,
               const IntegratorOptions& opts) {
    const MPSystem& sys = d.sys;
    const int n = sys.dim();
    if (t_max <= 0) t_max = default_horizon(sys);

    ode::Options o;
    o.atol = opts.atol;
    o.rtol = opts.rtol;
    o.max_steps = opts.max_steps;
    o.error_components = d.columns > 0 ? 2 * n : 0;

    bool exited = false;
    bool left_bbox = false;
    auto observer = [&](const ode::DenseSolution& sol) {
        const Vec x = sol.states().back().head(n);
        if (opts.stop_at_exit && sys.domain.rho(x) < 0.0) {
            exited = true;
            return ode::Control::Stop;
        }
        if (opts.check_bbox && !sys.domain.bbox.contains(x, 0.0)) {
            left_bbox = true;
            return ode::Control::Stop;
        }
        return ode::Control::Continue;
    };

    ode::Stats stats;
    Trajectory traj;
    traj.dim = n;
    traj.rep = d.rep;
    traj.columns = d.columns;
    traj.solution = ode::integrate(d.f, t0, z0, t0 + t_max, o, &stats, observer);
    traj.rejected_steps = stats.rejected;

    if (left_bbox) {
        throw Error(ErrorCode::LeftDomain, "trajectory left the bounding box at t=" +
                                               std::to_string(traj.solution.t_end()));
    }
    if (opts.stop_at_exit && !exited) {
        throw Error(ErrorCode::NoExit, "no boundary crossing before the horizon t=" +
                                           std::to_string(t0 + t_max) +
                                           " (possible trapping)");
    }

    if (exited) {
        auto& sol = traj.solution;
        const std::size_t last = sol.steps() - 1;
        double a = 0, b = 0;
        if (!bracket_in_step(sys, sol, last, a, b)) {
            throw Error(ErrorCode::Precondition, "ray leaves M immediately (not inbound)");
        }
        double tau = bisect_exit(sys, sol, last, a, b);
        ode::retake_last_step(d.f, sol, tau);
        // Newton polish of the truncated step.
        ode::State dz(z0.size());
        for (int it = 0; it < 6; ++it) {
            const ode::State& z = sol.states().back();
            const double r = rho_at(sys, z);
            if (std::abs(r) <= kExitTolerance) break;
            d.f(tau, z, dz);
            const double rate = sys.domain.grad_rho(Vec(z.head(n))).dot(Vec(dz.head(n)));
            if (!(std::abs(rate) > 0)) break;
            tau -= r / rate;
            ode::retake_last_step(d.f, sol, tau);
        }
        traj.exit.exited = true;
        traj.exit.tau = tau - t0;

        const ode::State& z = sol.states().back();
        const Vec x = z.head(n);
        if (std::abs(sys.domain.rho(x)) < kBoundaryTolerance) {
            const LocalFrame F = local_frame(sys.fields, x);
            const Vec v = to_velocity(F, Vec(z.segment(n, n)), d.rep);
            const Vec nu = inward_normal_at(sys.fields, sys.domain, x);
            traj.exit.glancing = std::abs(g_inner(F.g, v, nu)) < kGlancingThreshold * g_norm(F.g, v);
        }
    }

    traj.energies.reserve(traj.solution.states().size());
    for (const auto& z : traj.solution.states()) traj.energies.push_back(knot_energy(sys, z, d.rep));
    return traj;
}

ode::Function phase_function(const MPSystem& sys, Formulation f) {
    return [&sys, f](double, const ode::State& z, ode::State& dz) {
        const int n = sys.dim();
        const Vec x = z.head(n);
        const LocalFrame F = local_frame(sys.fields, x);
        Vec dx, dw;
        field(F, f, Vec(z.segment(n, n)), dx, dw);
        dz.resize(z.size());
        dz.head(n) = dx;
        dz.segment(n, n) = dw;
    };
}

}  // namespace

Representation representation_of(Formulation f) {
    switch (f) {
        case Formulation::Lagrangian:
        case Formulation::TangentHamiltonian:
            return Representation::Velocity;
        case Formulation::TwistedCotangent:
            return Representation::TwistedMomentum;
        case Formulation::CanonicalCotangent:
            return Representation::CanonicalMomentum;
    }
    return Representation::Velocity;
}

const char* to_string(Formulation f) {
    switch (f) {
        case Formulation::Lagrangian: return "lagrangian";
        case Formulation::TangentHamiltonian: return "tangent-hamiltonian";
        case Formulation::TwistedCotangent: return "twisted-cotangent";
        case Formulation::CanonicalCotangent: return "canonical-cotangent";
    }
    return "?";
}

PhaseState convert(const MPSystem& sys, const PhaseState& s, Representation target) {
    if (s.rep == target) return s;
    const LocalFrame F = local_frame(sys.fields, s.x);
    return PhaseState{s.x, from_velocity(F, to_velocity(F, s.w, s.rep), target), target};
}

Vec velocity_of(const MPSystem& sys, const PhaseState& s) {
    if (s.rep == Representation::Velocity) return s.w;
    const Mat g = sys.fields.metric(s.x);
    Vec w = s.w;
    if (s.rep == Representation::CanonicalMomentum) w += sys.fields.one_form(s.x);
    return g.llt().solve(w);
}

ode::State pack(const PhaseState& s) {
    const auto n = s.x.size();
    ode::State z(2 * n);
    z.head(n) = s.x;
    z.tail(n) = s.w;
    return z;
}

PhaseState unpack(const ode::State& z, int dim, Representation rep) {
    return PhaseState{z.head(dim), z.segment(dim, dim), rep};
}

PhaseState rhs(const MPSystem& sys, Formulation f, const PhaseState& s) {
    if (s.rep != representation_of(f)) {
        throw Error(ErrorCode::RepresentationMismatch,
                    std::string("state representation does not match formulation ") + to_string(f));
    }
    const LocalFrame F = local_frame(sys.fields, s.x);
    PhaseState out{Vec(), Vec(), s.rep};
    field(F, f, s.w, out.x, out.w);
    return out;
}

PhaseState rhs_tilde(const MPSystem& sys, const ScalarField& mu, const PhaseState& s) {
    if (s.rep != Representation::CanonicalMomentum) {
        throw Error(ErrorCode::RepresentationMismatch, "H_tilde flow needs canonical momenta");
    }
    const LocalFrame F = local_frame(sys.fields, s.x);
    const int n = F.dim;
    const double m = mu(s.x);
    const Vec dm = mu.grad(s.x);
    const Vec v = F.g_inv * (s.w + F.alpha);
    const double H = 0.5 * v.dot(F.g * v) + F.U;
    Vec dHdx = F.dalpha * v + F.dU;
    for (int i = 0; i < n; ++i) dHdx[i] -= 0.5 * v.dot(F.dg[i] * v);
    return PhaseState{m * v, -dm * (H - sys.k) - m * dHdx, s.rep};
}

double default_horizon(const MPSystem& sys) {
    double min_speed = std::numeric_limits<double>::infinity();
    const ChartDomain& dom = sys.domain;
    const int n = dom.dim;
    constexpr int grid = 11;
    Vec x(n);
    const int total = n == 2 ? grid * grid : grid * grid * grid;
    for (int idx = 0; idx < total; ++idx) {
        int r = idx;
        for (int a = 0; a < n; ++a) {
            x[a] = dom.bbox.lo[a] + (dom.bbox.hi[a] - dom.bbox.lo[a]) * (r % grid) / (grid - 1.0);
            r /= grid;
        }
        if (dom.rho(x) < 0) continue;
        const Mat g = sys.fields.metric(x);
        const double lmax = Eigen::SelfAdjointEigenSolver<Mat>(g, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
        const double s = std::sqrt(std::max(2.0 * (sys.k - sys.fields.potential(x)), 0.0) / lmax);
        min_speed = std::min(min_speed, s);
    }
    if (!(min_speed > 0) || !std::isfinite(min_speed)) min_speed = 1e-3;
    return 100.0 * dom.bbox.diameter() / min_speed;
}

PhaseState Trajectory::state_at(double t) const {
    return unpack(solution(t), dim, rep);
}

Vec Trajectory::position_at(double t) const {
    return solution(t).head(dim);
}

ode::State Trajectory::perturbation_at(double t, int c) const {
    if (c < 0 || c >= columns) throw Error(ErrorCode::Precondition, "no such variational column");
    return solution(t).segment(2 * dim * (1 + c), 2 * dim);
}

double Trajectory::max_energy_drift(double reference) const {
    double m = 0.0;
    for (double e : energies) m = std::max(m, std::abs(e - reference));
    return m;
}

double Trajectory::max_energy_drift() const {
    return energies.empty() ? 0.0 : max_energy_drift(energies.front());
}

Trajectory integrate(const MPSystem& sys, Formulation f, const PhaseState& s0, double t_max,
                     const IntegratorOptions& opts) {
    if (s0.rep != representation_of(f)) {
        throw Error(ErrorCode::RepresentationMismatch,
                    std::string("state representation does not match formulation ") + to_string(f));
    }
    Driver d{sys, phase_function(sys, f), 0, s0.rep};
    return run(d, 0.0, pack(s0), t_max, opts);
}

Trajectory integrate_tilde(const MPSystem& sys, const ScalarField& mu, const PhaseState& s0,
                           double s_max, const IntegratorOptions& opts) {
    if (s0.rep != Representation::CanonicalMomentum) {
        throw Error(ErrorCode::RepresentationMismatch, "H_tilde flow needs canonical momenta");
    }
    if (!(mu(s0.x) > 0) || !(sampled_minimum(sys.domain, mu, 21) > 0)) {
        throw Error(ErrorCode::Precondition, "elliptic factor is not positive on M");
    }
    const HamiltonianChoice choice{HamiltonianKind::HTilde, mu};
    const double h0 = hamiltonian(sys, choice, s0.x, s0.w);
    if (std::abs(h0 - sys.k) > 1e-10 * std::max(1.0, std::abs(sys.k))) {
        throw Error(ErrorCode::EnergyLevelMismatch, "initial state is not on {H_tilde = k}");
    }
    ode::Function f = [&sys, mu](double, const ode::State& z, ode::State& dz) {
        const int n = sys.dim();
        const PhaseState d = rhs_tilde(sys, mu, unpack(z, n, Representation::CanonicalMomentum));
        dz.resize(z.size());
        dz.head(n) = d.x;
        dz.tail(n) = d.w;
    };
    Driver d{sys, f, 0, Representation::CanonicalMomentum};
    return run(d, 0.0, pack(s0), s_max, opts);
}

RunningIntegral::RunningIntegral(std::shared_ptr<const Trajectory> traj, Integrand f)
    : traj_(std::move(traj)), f_(std::move(f)) {
    const auto& sol = traj_->solution;
    cumulative_.assign(1, 0.0);
    for (std::size_t i = 0; i < sol.steps(); ++i) {
        cumulative_.push_back(cumulative_.back() + partial(i, sol.times()[i + 1]));
    }
}

double RunningIntegral::partial(std::size_t step, double t) const {
    const auto& sol = traj_->solution;
    const double a = sol.times()[step];
    if (t == a) return 0.0;
    return boost::math::quadrature::gauss<double, 8>::integrate(
        [&](double s) { return f_(s, sol.eval_in_step(step, s)); }, a, t);
}

double RunningIntegral::operator()(double t) const {
    const auto& sol = traj_->solution;
    if (sol.steps() == 0) return 0.0;
    const std::size_t i = sol.locate(t);
    return cumulative_[i] + partial(i, t);
}

double RunningIntegral::inverse(double target) const {
    const auto& sol = traj_->solution;
    if (sol.steps() == 0) return sol.t_begin();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    i = std::min(i, sol.steps() - 1);
    const double a = sol.times()[i], b = sol.times()[i + 1];
    const double ca = cumulative_[i], cb = cumulative_[i + 1];
    double t = cb > ca ? a + (b - a) * (target - ca) / (cb - ca) : a;
    t = std::clamp(t, a, b);
    for (int it2 = 0; it2 < 50; ++it2) {
        const double F = ca + partial(i, t) - target;
        const double dF = f_(t, sol.eval_in_step(i, t));
        if (!(dF > 0)) break;
        const double step = F / dF;
        t = std::clamp(t - step, a, b);
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(t))) break;
    }
    return t;
}

RunningIntegral time_change(std::shared_ptr<const Trajectory> tilde, const ScalarField& mu) {
    const int n = tilde->dim;
    return RunningIntegral(std::move(tilde),
                           [mu, n](double, const ode::State& z) { return mu(Vec(z.head(n))); });
}

double exit_time(const MPSystem& sys, const Trajectory& traj) {
    if (traj.exit.exited) return traj.exit.tau;
    const auto& sol = traj.solution;
    for (std::size_t i = 0; i < sol.steps(); ++i) {
        double a = 0, b = 0;
        if (bracket_in_step(sys, sol, i, a, b)) return bisect_exit(sys, sol, i, a, b) - sol.t_begin();
    }
    throw Error(ErrorCode::NoExit, "trajectory does not cross the boundary");
}

ScatteringRecord scattering(const MPSystem& sys, const Vec& p, const Vec& u,
                            const IntegratorOptions& opts) {
    if (!(std::abs(sys.domain.rho(p)) < kBoundaryTolerance)) {
        throw Error(ErrorCode::Precondition, "scattering needs a boundary point");
    }
    const Vec v = sphere_lift(sys, p, u);
    const Mat g = sys.fields.metric(p);
    const Vec nu = inward_normal_at(sys.fields, sys.domain, p);
    const double vn = g_inner(g, v, nu) / g_norm(g, v);
    if (vn < -kGlancingThreshold) throw Error(ErrorCode::Precondition, "direction is outbound");

    IntegratorOptions o = opts;
    o.stop_at_exit = true;
    const Trajectory traj = integrate(sys, Formulation::Lagrangian, PhaseState{p, v}, 0.0, o);
    const PhaseState end = traj.state_at(traj.t_end());

    ScatteringRecord rec;
    rec.entry_x = p;
    rec.entry_v = v;
    rec.exit_x = end.x;
    rec.exit_v = end.w;
    rec.tau = traj.exit.tau;
    rec.action = action_along(sys, traj);
    rec.glancing = vn < kGlancingThreshold || traj.exit.glancing;
    return rec;
}

Trajectory integrate_variational(const MPSystem& sys, const PhaseState& s0,
                                 const std::vector<ode::State>& deltas, double t_max,
                                 const IntegratorOptions& opts) {
    if (s0.rep != Representation::Velocity) {
        throw Error(ErrorCode::RepresentationMismatch, "variational flow uses velocity states");
    }
    const int n = sys.dim();
    const int m = 2 * n;
    const int cols = static_cast<int>(deltas.size());
    ode::State z0(m * (1 + cols));
    z0.head(m) = pack(s0);
    for (int c = 0; c < cols; ++c) {
        if (deltas[c].size() != m) throw Error(ErrorCode::Precondition, "perturbation has wrong size");
        z0.segment(m * (1 + c), m) = deltas[c];
    }
    const ode::Function base = phase_function(sys, Formulation::Lagrangian);
    ode::Function f = [base, m, cols](double t, const ode::State& z, ode::State& dz) {
        dz.resize(z.size());
        const ode::State y = z.head(m);
        ode::State fy(m), fp(m), fm(m);
        base(t, y, fy);
        dz.head(m) = fy;
        for (int c = 0; c < cols; ++c) {
            const ode::State delta = z.segment(m * (1 + c), m);
            const double nd = delta.norm();
            if (nd == 0.0) {
                dz.segment(m * (1 + c), m).setZero();
                continue;
            }
            const double eps = kVariationalStep / nd;
            base(t, y + eps * delta, fp);
            base(t, y - eps * delta, fm);
            dz.segment(m * (1 + c), m) = (fp - fm) / (2.0 * eps);
        }
    };
    Driver d{sys, f, cols, Representation::Velocity};
    return run(d, 0.0, z0, t_max, opts);
}

Trajectory variational_flow(const MPSystem& sys, const Trajectory& traj, const ode::State& delta0) {
    if (traj.rep != Representation::Velocity) {
        throw Error(ErrorCode::RepresentationMismatch, "variational flow needs a Lagrangian trajectory");
    }
    IntegratorOptions o;
    o.stop_at_exit = false;
    o.check_bbox = false;
    const double span = traj.t_end() - traj.t_begin();
    const PhaseState s0 = traj.state_at(traj.t_begin());
    if (span <= 0) {
        Trajectory t;
        t.dim = traj.dim;
        t.columns = 1;
        ode::State z(4 * traj.dim);
        z << pack(s0), delta0;
        t.solution = ode::DenseSolution(0.0, z);
        return t;
    }
    return integrate_variational(sys, s0, {delta0}, span, o);
}

Vec direction_from_angles(const ChartDomain& domain, const Vec& x, std::span<const double> angles) {
    const Vec grad = domain.grad_rho(x);
    const Vec n_hat = grad / grad.norm();
    const Mat T = boundary_tangent_basis(domain, x);
    if (domain.dim == 2) {
        if (angles.size() != 1) throw Error(ErrorCode::Precondition, "2D direction needs one angle");
        return std::cos(angles[0]) * n_hat + std::sin(angles[0]) * Vec(T.col(0));
    }
    if (angles.size() != 2) throw Error(ErrorCode::Precondition, "3D direction needs two parameters");
    Vec u = n_hat + angles[0] * Vec(T.col(0)) + angles[1] * Vec(T.col(1));
    return u / u.norm();
}

double conjugate_monitor(const MPSystem& sys, const Vec& x, const Vec& v,
                         const IntegratorOptions& opts) {
    const int n = sys.dim();
    const Mat g = sys.fields.metric(x);
    // Directions g-orthogonal to v spanning the variation of the unit sphere.
    std::vector<ode::State> deltas;
    Mat V(n, n);
    V.col(0) = v;
    int filled = 1;
    for (int e = 0; e < n && filled < n; ++e) {
        Vec w = Vec::Unit(n, e);
        for (int c = 0; c < filled; ++c) {
            const Vec b = V.col(c);
            w -= g_inner(g, w, b) / g_inner(g, b, b) * b;
        }
        if (g_norm(g, w) < 1e-6) continue;
        w *= g_norm(g, v) / g_norm(g, w);
        V.col(filled++) = w;
        ode::State d = ode::State::Zero(2 * n);
        d.tail(n) = w;
        deltas.push_back(d);
    }
    const double det0 = V.determinant();
    IntegratorOptions o = opts;
    const Trajectory traj = integrate_variational(sys, PhaseState{x, v}, deltas, 0.0, o);

    double worst = std::numeric_limits<double>::infinity();
    const auto& times = traj.knots();
    ode::State dz;
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double t = times[i];
        const ode::State& z = traj.solution.states()[i];
        Mat D(n, n);
        D.col(0) = z.segment(n, n);
        for (int c = 0; c + 1 < n; ++c) D.col(c + 1) = z.segment(2 * n * (1 + c), n);
        const double val = D.determinant() / (std::pow(t, n - 1) * det0);
        worst = std::min(worst, val);
    }
    return worst;
}

ReducedCurve::ReducedCurve(const MPSystem& sys, std::shared_ptr<const Trajectory> traj)
    : sys_(sys), traj_(std::move(traj)) {
    const int n = traj_->dim;
    const double k = sys_.k;
    const ScalarFn U = sys_.fields.potential;
    s_of_t_ = RunningIntegral(traj_, [U, k, n](double, const ode::State& z) {
        return 2.0 * (k - U(Vec(z.head(n))));
    });
}

std::vector<double> ReducedCurve::knots() const {
    return s_of_t_.cumulative();
}

Vec ReducedCurve::position(double s) const {
    return traj_->position_at(t_of(s));
}

Vec ReducedCurve::tangent(double s) const {
    const double t = t_of(s);
    const PhaseState st = traj_->state_at(t);
    const Vec v = velocity_of(sys_, st);
    return v / (2.0 * (sys_.k - sys_.fields.potential(st.x)));
}

ReducedCurve reparametrize_to_reduced(const MPSystem& sys, const Trajectory& traj) {
    return ReducedCurve(sys, std::make_shared<const Trajectory>(traj));
}

FormulationComparison compare_formulations(const MPSystem& sys, const PhaseState& s0, int samples,
                                           const IntegratorOptions& opts) {
    const PhaseState v0 = convert(sys, s0, Representation::Velocity);
    IntegratorOptions o = opts;
    o.stop_at_exit = true;
    const Trajectory ref = integrate(sys, Formulation::Lagrangian, v0, 0.0, o);
    FormulationComparison out;
    out.tau = ref.exit.tau;
    o.stop_at_exit = false;
    o.check_bbox = false;
    const Formulation all[4] = {Formulation::Lagrangian, Formulation::TangentHamiltonian,
                                Formulation::TwistedCotangent, Formulation::CanonicalCotangent};
    for (int k = 1; k < 4; ++k) {
        const PhaseState start = convert(sys, v0, representation_of(all[k]));
        const Trajectory tr = integrate(sys, all[k], start, out.tau, o);
        double dev = 0.0;
        for (int j = 0; j <= samples; ++j) {
            const double t = out.tau * j / samples;
            const PhaseState a = ref.state_at(t);
            const PhaseState b = convert(sys, tr.state_at(t), Representation::Velocity);
            dev = std::max(dev, (a.x - b.x).norm());
        }
        out.deviation[k] = dev;
        out.max_deviation = std::max(out.max_deviation, dev);
    }
    return out;
}

}  // namespace mpflow
