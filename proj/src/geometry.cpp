#include "mpflow/geometry.hpp"
#include "mpflow/random.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mpflow {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DegenerateMetric: return "degenerate metric";
        case ErrorCode::DegenerateBoundary: return "degenerate boundary";
        case ErrorCode::BelowPotential: return "below potential";
        case ErrorCode::Config: return "config error";
        case ErrorCode::NoExit: return "no exit";
        case ErrorCode::ShootingFailure: return "shooting failure";
        case ErrorCode::RepresentationMismatch: return "representation mismatch";
        case ErrorCode::StepSizeUnderflow: return "step size underflow";
        case ErrorCode::LeftDomain: return "left domain";
        case ErrorCode::EnergyLevelMismatch: return "energy level mismatch";
        case ErrorCode::Precondition: return "precondition violated";
        case ErrorCode::Io: return "i/o error";
    }
    return "unknown error";
}

// ---------------------------------------------------------------------------
// Finite differences

double fd_step(const Vec& x, double scale) { return scale * (1.0 + x.norm()); }

Vec fd_gradient(const ScalarFn& f, const Vec& x, double scale) {
    const double h = fd_step(x, scale);
    Vec out(x.size());
    Vec y = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        y[i] = x[i] + 2 * h;
        const double f2p = f(y);
        y[i] = x[i] + h;
        const double f1p = f(y);
        y[i] = x[i] - h;
        const double f1m = f(y);
        y[i] = x[i] - 2 * h;
        const double f2m = f(y);
        y[i] = x[i];
        out[i] = (-f2p + 8 * f1p - 8 * f1m + f2m) / (12 * h);
    }
    return out;
}

Mat fd_jacobian(const VectorFn& f, const Vec& x, double scale) {
    const double h = fd_step(x, scale);
    const Eigen::Index n = x.size();
    Mat out(n, n);
    Vec y = x;
    for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = x[i] + 2 * h;
        const Vec f2p = f(y);
        y[i] = x[i] + h;
        const Vec f1p = f(y);
        y[i] = x[i] - h;
        const Vec f1m = f(y);
        y[i] = x[i] - 2 * h;
        const Vec f2m = f(y);
        y[i] = x[i];
        out.row(i) = ((-f2p + 8 * f1p - 8 * f1m + f2m) / (12 * h)).transpose();
    }
    return out;
}

MatArray fd_matrix_derivative(const MatrixFn& f, const Vec& x, double scale) {
    const double h = fd_step(x, scale);
    MatArray out;
    Vec y = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        y[i] = x[i] + 2 * h;
        const Mat f2p = f(y);
        y[i] = x[i] + h;
        const Mat f1p = f(y);
        y[i] = x[i] - h;
        const Mat f1m = f(y);
        y[i] = x[i] - 2 * h;
        const Mat f2m = f(y);
        y[i] = x[i];
        out[i] = (-f2p + 8 * f1p - 8 * f1m + f2m) / (12 * h);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scalar fields and domains

Vec ScalarField::grad(const Vec& x) const {
    if (gradient) return gradient(x);
    return fd_gradient(value, x);
}

ScalarField constant_scalar(double c) {
    return {[c](const Vec&) { return c; }, [](const Vec& x) { return Vec(Vec::Zero(x.size())); }};
}

bool BoundingBox::contains(const Vec& x, double slack) const {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
    }
    return true;
}

Vec ChartDomain::grad_rho(const Vec& x) const {
    if (rho_gradient) return rho_gradient(x);
    return fd_gradient(rho, x);
}

Mat ChartDomain::hess_rho(const Vec& x) const {
    if (rho_hessian) return rho_hessian(x);
    return fd_jacobian([this](const Vec& y) { return grad_rho(y); }, x, 1e-4);
}

ChartDomain disk_domain(int dim, double radius) {
    if (dim != 2 && dim != 3) throw Error(ErrorCode::Config, "dimension must be 2 or 3");
    if (!(radius > 0)) throw Error(ErrorCode::Config, "radius must be positive");
    ChartDomain d;
    d.dim = dim;
    const double r2 = radius * radius;
    d.rho = [r2](const Vec& x) { return r2 - x.squaredNorm(); };
    d.rho_gradient = [](const Vec& x) { return Vec(-2.0 * x); };
    d.rho_hessian = [dim](const Vec&) { return Mat(-2.0 * Mat::Identity(dim, dim)); };
    const double pad = 0.1 * radius;
    d.bbox = {Vec::Constant(dim, -radius - pad), Vec::Constant(dim, radius + pad)};
    d.center = Vec::Zero(dim);
    return d;
}

// ---------------------------------------------------------------------------
// Local geometry

LocalFrame local_frame(const ScenarioFields& fields, const Vec& x) {
    LocalFrame fr;
    const int n = fields.dim;
    fr.dim = n;
    const bool analytic = fields.mode == DerivativeMode::Analytic && fields.has_analytic();
    if (analytic && fields.jet) {
        fields.jet(x, fr);
        fr.dim = n;
        Eigen::LLT<Mat> llt(fr.g);
        if (llt.info() != Eigen::Success) {
            throw Error(ErrorCode::DegenerateMetric, "metric is not positive definite");
        }
        fr.g_inv = llt.solve(Mat::Identity(n, n));
        fr.omega = fr.dalpha - fr.dalpha.transpose();
        return fr;
    }
    fr.g = fields.metric(x);
    Eigen::LLT<Mat> llt(fr.g);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::DegenerateMetric, "metric is not positive definite");
    }
    fr.g_inv = llt.solve(Mat::Identity(n, n));
    fr.alpha = fields.one_form(x);
    fr.U = fields.potential(x);
    if (analytic) {
        fr.dg = fields.metric_derivative(x);
        fr.dalpha = fields.one_form_jacobian(x);
        fr.dU = fields.potential_gradient(x);
    } else {
        fr.dg = fd_matrix_derivative(fields.metric, x, fields.fd_scale);
        fr.dalpha = fd_jacobian(fields.one_form, x, fields.fd_scale);
        fr.dU = fd_gradient(fields.potential, x, fields.fd_scale);
    }
    fr.omega = fr.dalpha - fr.dalpha.transpose();
    return fr;
}

Mat metric_at(const ScenarioFields& fields, const Vec& x) {
    Mat g = fields.metric(x);
    Eigen::SelfAdjointEigenSolver<Mat> eig(g, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) {
        throw Error(ErrorCode::DegenerateMetric, "metric is not positive definite");
    }
    return g;
}

MatArray christoffel_from(const LocalFrame& fr) {
    const int n = fr.dim;
    // First-kind symbols T_l(j,k) = (d_j g_lk + d_k g_jl - d_l g_jk) / 2.
    MatArray first;
    for (int l = 0; l < n; ++l) {
        first[l].resize(n, n);
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                first[l](j, k) = 0.5 * (fr.dg[j](l, k) + fr.dg[k](j, l) - fr.dg[l](j, k));
            }
        }
    }
    MatArray gamma;
    for (int i = 0; i < n; ++i) {
        gamma[i] = Mat::Zero(n, n);
        for (int l = 0; l < n; ++l) gamma[i] += fr.g_inv(i, l) * first[l];
        // Exact symmetry in the lower indices.
        gamma[i] = 0.5 * (gamma[i] + gamma[i].transpose()).eval();
    }
    return gamma;
}

MatArray christoffel_at(const ScenarioFields& fields, const Vec& x) {
    return christoffel_from(local_frame(fields, x));
}

Mat magnetic_form_at(const ScenarioFields& fields, const Vec& x) {
    const Mat da = (fields.mode == DerivativeMode::Analytic && fields.one_form_jacobian)
                       ? fields.one_form_jacobian(x)
                       : fd_jacobian(fields.one_form, x, fields.fd_scale);
    return da - da.transpose();
}

Mat lorentz_from(const LocalFrame& fr) {
    // Y^i_j = g^{ik} Omega_{jk}
    return fr.g_inv * fr.omega.transpose();
}

Mat lorentz_at(const ScenarioFields& fields, const Vec& x) {
    return lorentz_from(local_frame(fields, x));
}

Vec potential_gradient_at(const ScenarioFields& fields, const Vec& x) {
    if (fields.mode == DerivativeMode::Analytic) {
        if (fields.potential_gradient) return fields.potential_gradient(x);
        if (fields.jet) return local_frame(fields, x).dU;
    }
    return fd_gradient(fields.potential, x, fields.fd_scale);
}

Vec grad_at(const ScenarioFields& fields, const Vec& x) {
    const LocalFrame fr = local_frame(fields, x);
    return fr.g_inv * fr.dU;
}

double g_inner(const Mat& g, const Vec& a, const Vec& b) { return a.dot(g * b); }
double g_norm(const Mat& g, const Vec& a) { return std::sqrt(g_inner(g, a, a)); }

Vec inward_normal_at(const ScenarioFields& fields, const ChartDomain& domain, const Vec& x) {
    if (std::abs(domain.rho(x)) >= kBoundaryTolerance) {
        throw Error(ErrorCode::Precondition, "point is not on the boundary");
    }
    const Vec dr = domain.grad_rho(x);
    if (dr.norm() <= 1e-8) throw Error(ErrorCode::DegenerateBoundary, "grad rho vanishes");
    const Mat g = metric_at(fields, x);
    const Vec raised = g.llt().solve(dr);
    return raised / std::sqrt(dr.dot(raised));
}

double second_fundamental_form_at(const ScenarioFields& fields, const ChartDomain& domain,
                                  const Vec& x, const Vec& v) {
    const LocalFrame fr = local_frame(fields, x);
    const Vec dr = domain.grad_rho(x);
    if (dr.norm() <= 1e-8) throw Error(ErrorCode::DegenerateBoundary, "grad rho vanishes");
    const Vec raised = fr.g_inv * dr;
    const double dr_norm = std::sqrt(dr.dot(raised));
    const Vec nu = raised / dr_norm;
    const Vec w = v - g_inner(fr.g, v, nu) * nu;
    const MatArray gamma = christoffel_from(fr);
    double hess = w.dot(domain.hess_rho(x) * w);
    for (int k = 0; k < fr.dim; ++k) hess -= dr[k] * w.dot(gamma[k] * w);
    return -hess / dr_norm;
}

double derivative_mismatch(const ScenarioFields& fields, const Vec& x) {
    if (!fields.has_analytic()) return 0.0;
    ScenarioFields analytic = fields;
    analytic.mode = DerivativeMode::Analytic;
    ScenarioFields numeric = fields;
    numeric.mode = DerivativeMode::FiniteDifference;
    const LocalFrame a = local_frame(analytic, x);
    const LocalFrame f = local_frame(numeric, x);
    double worst = 0.0;
    for (int m = 0; m < fields.dim; ++m) {
        worst = std::max(worst, (a.dg[m] - f.dg[m]).cwiseAbs().maxCoeff());
    }
    worst = std::max(worst, (a.dalpha - f.dalpha).cwiseAbs().maxCoeff());
    worst = std::max(worst, (a.dU - f.dU).cwiseAbs().maxCoeff());
    return worst;
}

// ---------------------------------------------------------------------------
// Boundary parametrization

Vec boundary_point(const ChartDomain& domain, std::span<const double> params) {
    const int n = domain.dim;
    Vec dir(n);
    if (n == 2) {
        if (params.size() != 1) throw Error(ErrorCode::Precondition, "2D boundary needs 1 angle");
        dir << std::cos(params[0]), std::sin(params[0]);
    } else {
        if (params.size() != 2) throw Error(ErrorCode::Precondition, "3D boundary needs 2 angles");
        dir << std::sin(params[0]) * std::cos(params[1]), std::sin(params[0]) * std::sin(params[1]),
            std::cos(params[0]);
    }
    const Vec c = domain.center;
    auto along = [&](double r) { return domain.rho(Vec(c + r * dir)); };
    if (!(along(0.0) > 0)) throw Error(ErrorCode::DegenerateBoundary, "center is not interior");
    double hi = domain.bbox.diameter();
    double lo = 0.0;
    if (along(hi) >= 0) throw Error(ErrorCode::DegenerateBoundary, "domain exceeds its bbox");
    // Bracket the first crossing by marching, then refine.
    const int marches = 64;
    for (int i = 1; i <= marches; ++i) {
        const double r = hi * i / marches;
        if (along(r) < 0) {
            lo = hi * (i - 1) / marches;
            hi = r;
            break;
        }
    }
    boost::math::tools::eps_tolerance<double> tol(52);
    boost::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(along, lo, hi, tol, iters);
    double r = std::abs(along(a)) < std::abs(along(b)) ? a : b;
    // Newton polish to machine precision.
    for (int it = 0; it < 3; ++it) {
        const Vec x = c + r * dir;
        const double slope = domain.grad_rho(x).dot(dir);
        if (slope == 0.0) break;
        const double step = domain.rho(x) / slope;
        if (std::abs(step) > 1e-10) break;
        r -= step;
    }
    return c + r * dir;
}

Vec boundary_point(const ChartDomain& domain, double theta) {
    const double p[1] = {theta};
    return boundary_point(domain, std::span<const double>(p, 1));
}

double boundary_angle(const ChartDomain& domain, const Vec& x) {
    const Vec d = x - domain.center;
    return std::atan2(d[1], d[0]);
}

Mat boundary_tangent_basis(const ChartDomain& domain, const Vec& x) {
    const int n = domain.dim;
    const Vec nrm = domain.grad_rho(x).normalized();
    Mat basis(n, n - 1);
    if (n == 2) {
        basis(0, 0) = nrm[1];
        basis(1, 0) = -nrm[0];
        return basis;
    }
    Eigen::Index axis;
    nrm.cwiseAbs().minCoeff(&axis);
    Vec e = Vec::Zero(n);
    e[axis] = 1.0;
    Vec t1 = (e - e.dot(nrm) * nrm).normalized();
    Vec t2(3);
    t2 << nrm[1] * t1[2] - nrm[2] * t1[1], nrm[2] * t1[0] - nrm[0] * t1[2],
        nrm[0] * t1[1] - nrm[1] * t1[0];
    basis.col(0) = t1;
    basis.col(1) = t2;
    return basis;
}

std::vector<Vec> sample_interior(const ChartDomain& domain, int count, std::uint64_t seed,
                                 double margin) {
    SplitMix64 rng(seed);
    std::vector<Vec> out;
    Vec x(domain.dim);
    long tries = 0;
    while (static_cast<int>(out.size()) < count) {
        if (++tries > 1000L * (count + 10)) {
            throw Error(ErrorCode::DegenerateBoundary, "interior sampling failed");
        }
        for (int a = 0; a < domain.dim; ++a) x[a] = rng.uniform(domain.bbox.lo[a], domain.bbox.hi[a]);
        if (domain.rho(x) > margin) out.push_back(x);
    }
    return out;
}

std::vector<Vec> sample_boundary(const ChartDomain& domain, int count, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<Vec> out;
    for (int i = 0; i < count; ++i) {
        if (domain.dim == 2) {
            out.push_back(boundary_point(domain, rng.uniform(0.0, 2.0 * std::numbers::pi)));
        } else {
            const double p[2] = {std::acos(rng.uniform(-1.0, 1.0)), rng.uniform(0.0, 2.0 * std::numbers::pi)};
            out.push_back(boundary_point(domain, std::span<const double>(p, 2)));
        }
    }
    return out;
}

}  // namespace mpflow
