#pragma once

#include "mpflow/types.hpp"

#include <functional>
#include <span>

namespace mpflow {

using ScalarFn = std::function<double(const Vec&)>;
using VectorFn = std::function<Vec(const Vec&)>;
using MatrixFn = std::function<Mat(const Vec&)>;
using MatrixDerivFn = std::function<MatArray(const Vec&)>;

// "On the boundary" means |rho| below this.
inline constexpr double kBoundaryTolerance = 1e-9;

// Default relative step of the 4th-order central differences: h = scale * (1 + |x|).
inline constexpr double kFdScale = 1e-5;

enum class DerivativeMode { Analytic, FiniteDifference };

// Scalar field with an optional closed-form gradient. Without one, grad()
// falls back to central differences.
struct ScalarField {
    ScalarFn value;
    VectorFn gradient;

    double operator()(const Vec& x) const { return value(x); }
    Vec grad(const Vec& x) const;
    explicit operator bool() const { return static_cast<bool>(value); }
};

ScalarField constant_scalar(double c);

struct BoundingBox {
    Vec lo;
    Vec hi;

    bool contains(const Vec& x, double slack = 0.0) const;
    double diameter() const { return (hi - lo).norm(); }
};

// M = closure of {rho > 0}. The boundary is assumed star-shaped about
// `center`, which is how boundary points are parametrized.
struct ChartDomain {
    int dim = 2;
    ScalarFn rho;
    VectorFn rho_gradient;  // optional
    MatrixFn rho_hessian;   // optional
    BoundingBox bbox;
    Vec center;

    Vec grad_rho(const Vec& x) const;
    Mat hess_rho(const Vec& x) const;
    bool contains(const Vec& x) const { return rho(x) >= 0.0; }
};

ChartDomain disk_domain(int dim, double radius);

struct LocalFrame;

struct ScenarioFields {
    int dim = 2;
    MatrixFn metric;
    VectorFn one_form;
    ScalarFn potential;

    // Closed-form derivatives; used when mode == Analytic.
    MatrixDerivFn metric_derivative;  // [m](i,j) = d_m g_ij
    MatrixFn one_form_jacobian;       // (i,j) = d_i alpha_j
    VectorFn potential_gradient;      // d_i U

    DerivativeMode mode = DerivativeMode::FiniteDifference;
    double fd_scale = kFdScale;

    // Optional one-shot provider of the whole jet (values and first
    // derivatives) for derived systems; takes precedence in Analytic mode.
    std::function<void(const Vec&, LocalFrame&)> jet;

    bool has_analytic() const {
        return static_cast<bool>(jet) ||
               (metric_derivative && one_form_jacobian && potential_gradient);
    }
};

// All field data the flows consume at one point.
struct LocalFrame {
    int dim = 0;
    Mat g;
    Mat g_inv;
    MatArray dg;     // [m](i,j) = d_m g_ij
    Vec alpha;
    Mat dalpha;      // (i,j) = d_i alpha_j
    Mat omega;       // (i,j) = d_i alpha_j - d_j alpha_i
    double U = 0.0;
    Vec dU;
};

// Throws Error{DegenerateMetric} if g(x) is not positive definite.
LocalFrame local_frame(const ScenarioFields& fields, const Vec& x);

// Finite-difference primitives (4th-order central).
double fd_step(const Vec& x, double scale);
Vec fd_gradient(const ScalarFn& f, const Vec& x, double scale = kFdScale);
Mat fd_jacobian(const VectorFn& f, const Vec& x, double scale = kFdScale);  // (i,j) = d_i f_j
MatArray fd_matrix_derivative(const MatrixFn& f, const Vec& x, double scale = kFdScale);

// Operations on the fields.
Mat metric_at(const ScenarioFields& fields, const Vec& x);
// Gamma[i](j,k) = Gamma^i_{jk}.
MatArray christoffel_at(const ScenarioFields& fields, const Vec& x);
MatArray christoffel_from(const LocalFrame& frame);
Mat magnetic_form_at(const ScenarioFields& fields, const Vec& x);
// Y(i,j) = Y^i_j, defined by Omega(u, w) = <Y u, w>_g.
Mat lorentz_at(const ScenarioFields& fields, const Vec& x);
Mat lorentz_from(const LocalFrame& frame);
Vec potential_gradient_at(const ScenarioFields& fields, const Vec& x);  // dU
// g-gradient of U.
Vec grad_at(const ScenarioFields& fields, const Vec& x);

Vec inward_normal_at(const ScenarioFields& fields, const ChartDomain& domain, const Vec& x);
// Positive on the Euclidean unit disk. v is projected onto T(dM) first.
double second_fundamental_form_at(const ScenarioFields& fields, const ChartDomain& domain,
                                  const Vec& x, const Vec& v);

double g_inner(const Mat& g, const Vec& a, const Vec& b);
double g_norm(const Mat& g, const Vec& a);

// Largest |analytic - FD| over metric, one-form and potential derivatives at x.
double derivative_mismatch(const ScenarioFields& fields, const Vec& x);

// Boundary parametrization: one polar angle in 2D, (polar, azimuth) in 3D.
Vec boundary_point(const ChartDomain& domain, std::span<const double> params);
Vec boundary_point(const ChartDomain& domain, double theta);
double boundary_angle(const ChartDomain& domain, const Vec& x);
// Unit Euclidean tangent basis of the boundary at x (dim-1 columns).
Mat boundary_tangent_basis(const ChartDomain& domain, const Vec& x);

}  // namespace mpflow
