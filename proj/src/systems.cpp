#include "mpflow/systems.hpp"

#include <cmath>
#include <limits>

namespace mpflow {

namespace {

// Visits grid^dim points of the bbox that lie in M.
template <typename F>
void for_each_grid_point(const ChartDomain& domain, int grid, F&& visit) {
    const int n = domain.dim;
    const Vec lo = domain.bbox.lo, hi = domain.bbox.hi;
    Vec x(n);
    auto coord = [&](int axis, int i) {
        return grid == 1 ? 0.5 * (lo[axis] + hi[axis])
                         : lo[axis] + (hi[axis] - lo[axis]) * i / (grid - 1.0);
    };
    if (n == 2) {
        for (int i = 0; i < grid; ++i) {
            for (int j = 0; j < grid; ++j) {
                x << coord(0, i), coord(1, j);
                if (domain.rho(x) >= 0) visit(x);
            }
        }
    } else {
        for (int i = 0; i < grid; ++i) {
            for (int j = 0; j < grid; ++j) {
                for (int l = 0; l < grid; ++l) {
                    x << coord(0, i), coord(1, j), coord(2, l);
                    if (domain.rho(x) >= 0) visit(x);
                }
            }
        }
    }
}

}  // namespace

double estimate_max_potential(const ChartDomain& domain, const ScenarioFields& fields, int grid) {
    double best = -std::numeric_limits<double>::infinity();
    for_each_grid_point(domain, grid, [&](const Vec& x) { best = std::max(best, fields.potential(x)); });
    return best;
}

double sampled_minimum(const ChartDomain& domain, const ScalarField& mu, int grid) {
    double best = std::numeric_limits<double>::infinity();
    for_each_grid_point(domain, grid, [&](const Vec& x) { best = std::min(best, mu(x)); });
    return best;
}

MPSystem make_system(ChartDomain domain, ScenarioFields fields, double k, std::string label,
                     int grid) {
    if (domain.dim != fields.dim) {
        throw Error(ErrorCode::Config, "domain and fields disagree on dimension");
    }
    const double max_u = estimate_max_potential(domain, fields, grid);
    if (!(k > max_u + kPotentialMargin)) {
        throw Error(ErrorCode::BelowPotential,
                    "energy level k=" + std::to_string(k) + " does not exceed max U=" +
                        std::to_string(max_u));
    }
    return MPSystem{std::move(domain), std::move(fields), k, std::move(label)};
}

double energy(const MPSystem& sys, const Vec& x, const Vec& v) {
    const Mat g = sys.fields.metric(x);
    return 0.5 * g_inner(g, v, v) + sys.fields.potential(x);
}

double hamiltonian(const MPSystem& sys, const HamiltonianChoice& choice, const Vec& x,
                   const Vec& xi) {
    const Mat g = sys.fields.metric(x);
    const Vec eta = xi + sys.fields.one_form(x);
    const double norm2 = eta.dot(g.llt().solve(eta));
    const double U = sys.fields.potential(x);
    const double k = sys.k;
    switch (choice.kind) {
        case HamiltonianKind::H:
            return 0.5 * norm2 + U;
        case HamiltonianKind::HTilde: {
            if (!choice.mu) throw Error(ErrorCode::Config, "H_tilde requires an elliptic factor");
            const double mu = (*choice.mu)(x);
            return 0.5 * mu * norm2 + mu * (U - k) + k;
        }
        case HamiltonianKind::HHat:
            return k * norm2 / (2.0 * (k - U));
        case HamiltonianKind::HReduced:
            return norm2 / (4.0 * (k - U));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

Vec legendre(const MPSystem& sys, const Vec& x, const Vec& v) {
    return sys.fields.metric(x) * v - sys.fields.one_form(x);
}

Vec legendre_inv(const MPSystem& sys, const Vec& x, const Vec& xi) {
    return sys.fields.metric(x).llt().solve(xi + sys.fields.one_form(x));
}

MPSystem reduce(const MPSystem& sys) {
    const ScenarioFields parent = sys.fields;
    const double k = sys.k;
    ScenarioFields f;
    f.dim = parent.dim;
    f.metric = [parent, k](const Vec& x) { return Mat(2.0 * (k - parent.potential(x)) * parent.metric(x)); };
    f.one_form = parent.one_form;
    f.potential = [](const Vec&) { return 0.0; };
    f.jet = [parent, k](const Vec& x, LocalFrame& fr) {
        const LocalFrame p = local_frame(parent, x);
        const int n = p.dim;
        const double c = 2.0 * (k - p.U);
        fr.g = c * p.g;
        for (int m = 0; m < n; ++m) fr.dg[m] = c * p.dg[m] - 2.0 * p.dU[m] * p.g;
        fr.alpha = p.alpha;
        fr.dalpha = p.dalpha;
        fr.U = 0.0;
        fr.dU = Vec::Zero(n);
    };
    f.mode = DerivativeMode::Analytic;
    f.fd_scale = parent.fd_scale;
    return MPSystem{sys.domain, std::move(f), 0.5, sys.label.empty() ? "reduced" : sys.label + "/reduced"};
}

MPSystem elliptic_companion(const MPSystem& sys, const ScalarField& mu) {
    const ScenarioFields parent = sys.fields;
    const double k = sys.k;
    ScenarioFields f;
    f.dim = parent.dim;
    f.metric = [parent, mu](const Vec& x) { return Mat(parent.metric(x) / mu(x)); };
    f.one_form = parent.one_form;
    f.potential = [parent, mu, k](const Vec& x) { return mu(x) * (parent.potential(x) - k) + k; };
    f.jet = [parent, mu, k](const Vec& x, LocalFrame& fr) {
        const LocalFrame p = local_frame(parent, x);
        const int n = p.dim;
        const double m = mu(x);
        const Vec dm = mu.grad(x);
        fr.g = p.g / m;
        for (int i = 0; i < n; ++i) fr.dg[i] = p.dg[i] / m - p.g * (dm[i] / (m * m));
        fr.alpha = p.alpha;
        fr.dalpha = p.dalpha;
        fr.U = m * (p.U - k) + k;
        fr.dU = dm * (p.U - k) + m * p.dU;
    };
    f.mode = DerivativeMode::Analytic;
    f.fd_scale = parent.fd_scale;
    return MPSystem{sys.domain, std::move(f), k, sys.label + "/companion"};
}

Vec sphere_lift(const MPSystem& sys, const Vec& x, const Vec& u) {
    const double U = sys.fields.potential(x);
    if (!(sys.k - U > 0)) throw Error(ErrorCode::BelowPotential, "k <= U(x) at lift point");
    const Mat g = sys.fields.metric(x);
    const double nu = g_norm(g, u);
    if (!(nu > 0)) throw Error(ErrorCode::Precondition, "zero direction");
    return std::sqrt(2.0 * (sys.k - U)) * u / nu;
}

double mp_convexity_margin(const MPSystem& sys, const Vec& x, const Vec& v) {
    const LocalFrame fr = local_frame(sys.fields, x);
    const Vec nu = inward_normal_at(sys.fields, sys.domain, x);
    const Vec w = v - g_inner(fr.g, v, nu) * nu;
    const double lambda = second_fundamental_form_at(sys.fields, sys.domain, x, w);
    const Mat Y = lorentz_from(fr);
    return lambda - g_inner(fr.g, Y * w, nu) + fr.dU.dot(nu);
}

ScalarField hat_factor(const MPSystem& sys) {
    const ScenarioFields f = sys.fields;
    const double k = sys.k;
    ScalarField mu;
    mu.value = [f, k](const Vec& x) { return k / (k - f.potential(x)); };
    mu.gradient = [f, k](const Vec& x) {
        const double d = k - f.potential(x);
        return Vec(k * potential_gradient_at(f, x) / (d * d));
    };
    return mu;
}

ScalarField reduced_factor(const MPSystem& sys) {
    const ScenarioFields f = sys.fields;
    const double k = sys.k;
    ScalarField mu;
    mu.value = [f, k](const Vec& x) { return 1.0 / (2.0 * (k - f.potential(x))); };
    mu.gradient = [f, k](const Vec& x) {
        const double d = k - f.potential(x);
        return Vec(potential_gradient_at(f, x) / (2.0 * d * d));
    };
    return mu;
}

}  // namespace mpflow
