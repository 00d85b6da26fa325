#include "mpflow/action.hpp"

#include "mpflow/random.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <numbers>

namespace mpflow {

namespace {

using Gauss8 = boost::math::quadrature::gauss<double, 8>;
using Gauss16 = boost::math::quadrature::gauss<double, 16>;

double lagrangian_density(const MPSystem& sys, const ode::State& z, int n, Representation rep) {
    const Vec x = z.head(n);
    const Vec v = velocity_of(sys, PhaseState{x, z.segment(n, n), rep});
    const Mat g = sys.fields.metric(x);
    return 0.5 * v.dot(g * v) + sys.k - sys.fields.one_form(x).dot(v) - sys.fields.potential(x);
}

void require_magnetic(const MPSystem& reduced) {
    if (std::abs(reduced.k - 0.5) > 1e-14) {
        throw Error(ErrorCode::EnergyLevelMismatch, "magnetic action is taken at energy 1/2");
    }
    for (const Vec& x : sample_interior(reduced.domain, 8, 1)) {
        if (reduced.fields.potential(x) != 0.0) {
            throw Error(ErrorCode::Precondition, "magnetic action needs a system without potential");
        }
    }
}

// Initial direction parameters pointing straight at y.
std::vector<double> straight_guess(const ChartDomain& dom, const Vec& x, const Vec& y) {
    const Vec grad = dom.grad_rho(x);
    const Vec n_hat = grad / grad.norm();
    const Mat T = boundary_tangent_basis(dom, x);
    const Vec d = y - x;
    if (dom.dim == 2) return {std::atan2(d.dot(Vec(T.col(0))), d.dot(n_hat))};
    const double dn = std::max(d.dot(n_hat), 1e-3 * d.norm());
    return {d.dot(Vec(T.col(0))) / dn, d.dot(Vec(T.col(1))) / dn};
}

constexpr double kAngleLimit = std::numbers::pi / 2 - 1e-6;

void clamp_params(const ChartDomain& dom, std::vector<double>& p) {
    if (dom.dim == 2) p[0] = std::clamp(p[0], -kAngleLimit, kAngleLimit);
}

struct Probe {
    bool ok = false;
    Vec v;
    Vec exit;
    Mat J;  // d exit / d params
    Trajectory traj;
};

Probe probe(const MPSystem& sys, const Vec& x, const std::vector<double>& params,
            const IntegratorOptions& io, bool with_jacobian) {
    const int n = sys.dim();
    const int p = static_cast<int>(params.size());
    Probe out;
    auto lift = [&](const std::vector<double>& q) {
        return sphere_lift(sys, x, direction_from_angles(sys.domain, x, q));
    };
    try {
        out.v = lift(params);
        std::vector<ode::State> deltas;
        if (with_jacobian) {
            constexpr double h = 1e-7;
            for (int c = 0; c < p; ++c) {
                std::vector<double> qp = params, qm = params;
                qp[c] += h;
                qm[c] -= h;
                ode::State d = ode::State::Zero(2 * n);
                d.tail(n) = (lift(qp) - lift(qm)) / (2 * h);
                deltas.push_back(d);
            }
        }
        IntegratorOptions o = io;
        o.stop_at_exit = true;
        out.traj = with_jacobian ? integrate_variational(sys, PhaseState{x, out.v}, deltas, 0.0, o)
                                 : integrate(sys, Formulation::Lagrangian, PhaseState{x, out.v}, 0.0, o);
        const ode::State& z = out.traj.solution.states().back();
        out.exit = z.head(n);
        if (with_jacobian) {
            const Vec xdot = z.segment(n, n);
            const Vec gr = sys.domain.grad_rho(out.exit);
            out.J.resize(n, p);
            for (int c = 0; c < p; ++c) {
                const Vec dx = z.segment(2 * n * (1 + c), n);
                out.J.col(c) = dx - xdot * (gr.dot(dx) / gr.dot(xdot));
            }
        }
        out.ok = true;
    } catch (const Error&) {
        out.ok = false;
    }
    return out;
}

}  // namespace

double action_along(const MPSystem& sys, const Trajectory& traj) {
    const auto& sol = traj.solution;
    const int n = traj.dim;
    double total = 0.0;
    for (std::size_t i = 0; i < sol.steps(); ++i) {
        total += Gauss8::integrate(
            [&](double t) { return lagrangian_density(sys, sol.eval_in_step(i, t), n, traj.rep); },
            sol.times()[i], sol.times()[i + 1]);
    }
    return total;
}

double magnetic_action_along(const MPSystem& reduced, const Trajectory& traj) {
    require_magnetic(reduced);
    return action_along(reduced, traj);
}

double magnetic_action_along(const MPSystem& reduced, const ReducedCurve& curve) {
    require_magnetic(reduced);
    const std::vector<double> knots = curve.knots();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        total += Gauss8::integrate(
            [&](double s) {
                const Vec x = curve.position(s);
                const Vec d = curve.tangent(s);
                const Mat G = reduced.fields.metric(x);
                return 0.5 * d.dot(G * d) + 0.5 - reduced.fields.one_form(x).dot(d);
            },
            knots[i], knots[i + 1]);
    }
    return total;
}

ShotResult shoot(const MPSystem& sys, const Vec& x, const Vec& y, const ShootOptions& opts) {
    const ChartDomain& dom = sys.domain;
    ShotResult res;
    if (!(std::abs(dom.rho(x)) < kBoundaryTolerance) || !(std::abs(dom.rho(y)) < kBoundaryTolerance)) {
        res.message = "endpoints must lie on the boundary";
        return res;
    }
    if ((x - y).norm() < 1e-12) {
        res.message = "coincident endpoints";
        return res;
    }
    std::vector<double> params = straight_guess(dom, x, y);
    clamp_params(dom, params);
    Probe cur = probe(sys, x, params, opts.integrator, true);
    if (!cur.ok) {
        res.message = "initial ray failed to exit";
        return res;
    }
    double r = (cur.exit - y).norm();
    for (int it = 0; it < opts.max_iterations; ++it) {
        res.iterations = it;
        if (r <= opts.tol) break;
        const Vec resid = cur.exit - y;
        const Vec step = cur.J.colPivHouseholderQr().solve(-resid);
        bool improved = false;
        double lambda = 1.0;
        for (int ls = 0; ls < 12; ++ls, lambda *= 0.5) {
            std::vector<double> trial = params;
            for (std::size_t c = 0; c < trial.size(); ++c) trial[c] += lambda * step[c];
            clamp_params(dom, trial);
            Probe next = probe(sys, x, trial, opts.integrator, true);
            if (!next.ok) continue;
            const double rn = (next.exit - y).norm();
            if (rn < r) {
                params = trial;
                cur = std::move(next);
                r = rn;
                improved = true;
                break;
            }
        }
        res.iterations = it + 1;
        if (!improved) break;
    }
    res.params = params;
    res.v = cur.v;
    res.residual = r;
    res.converged = r <= opts.tol;
    if (!res.converged) res.message = "shooting did not reach the tolerance";
    return res;
}

ActionValue mane_potential(const MPSystem& sys, const Vec& x, const Vec& y, const ShootOptions& opts,
                           bool keep_trajectory) {
    const ShotResult shot = shoot(sys, x, y, opts);
    ActionValue out;
    out.residual = shot.residual;
    out.v0 = shot.v;
    out.message = shot.message;
    if (!shot.converged) {
        throw Error(ErrorCode::ShootingFailure,
                    shot.message + " (residual " + std::to_string(shot.residual) + ")");
    }
    IntegratorOptions o = opts.integrator;
    o.stop_at_exit = true;
    auto traj = std::make_shared<Trajectory>(
        integrate(sys, Formulation::Lagrangian, PhaseState{x, shot.v}, 0.0, o));
    out.value = action_along(sys, *traj);
    out.T = traj->exit.tau;
    out.converged = true;
    if (keep_trajectory) out.trajectory = std::move(traj);
    return out;
}

std::vector<std::vector<double>> boundary_samples(const ChartDomain& domain, int n) {
    std::vector<std::vector<double>> out;
    if (domain.dim == 2) {
        for (int i = 0; i < n; ++i) out.push_back({2.0 * std::numbers::pi * i / n});
        return out;
    }
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        out.push_back({std::acos(z), std::fmod(golden * i, 2.0 * std::numbers::pi)});
    }
    return out;
}

ActionTable boundary_action_table(const MPSystem& sys, int n, const ShootOptions& opts) {
    if (n < 2) throw Error(ErrorCode::Precondition, "action table needs at least two samples");
    ActionTable t;
    t.params = boundary_samples(sys.domain, n);
    for (const auto& p : t.params) t.points.push_back(boundary_point(sys.domain, p));
    t.entries.assign(n, std::vector<ActionValue>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            try {
                t.entries[i][j] = mane_potential(sys, t.points[i], t.points[j], opts, false);
            } catch (const Error& e) {
                t.entries[i][j].message = e.what();
                ++t.failures;
            }
        }
    }
    return t;
}

TableDifference compare_tables(const ActionTable& a, const ActionTable& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::Precondition, "tables differ in size");
    TableDifference d;
    for (int i = 0; i < a.size(); ++i) {
        for (int j = 0; j < a.size(); ++j) {
            if (i == j) continue;
            const ActionValue& u = a.entries[i][j];
            const ActionValue& w = b.entries[i][j];
            if (!u.converged || !w.converged) {
                ++d.skipped;
                continue;
            }
            d.max_abs = std::max(d.max_abs, std::abs(u.value - w.value));
            ++d.compared;
        }
    }
    return d;
}

double table_asymmetry(const ActionTable& t) {
    double m = 0.0;
    for (int i = 0; i < t.size(); ++i) {
        for (int j = i + 1; j < t.size(); ++j) {
            const ActionValue& u = t.entries[i][j];
            const ActionValue& w = t.entries[j][i];
            if (u.converged && w.converged) m = std::max(m, std::abs(u.value - w.value));
        }
    }
    return m;
}

double curve_action(const MPSystem& sys, const std::vector<Vec>& polyline) {
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < polyline.size(); ++s) {
        const Vec a = polyline[s];
        const Vec d = polyline[s + 1] - a;
        total += Gauss16::integrate(
            [&](double t) {
                const Vec x = a + t * d;
                const Mat g = sys.fields.metric(x);
                const double U = sys.fields.potential(x);
                if (!(sys.k - U > 0)) throw Error(ErrorCode::BelowPotential, "curve enters k <= U");
                return std::sqrt(2.0 * (sys.k - U)) * g_norm(g, d) - sys.fields.one_form(x).dot(d);
            },
            0.0, 1.0);
    }
    return total;
}

}  // namespace mpflow
