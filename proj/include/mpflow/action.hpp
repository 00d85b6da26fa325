#pragma once

#include "mpflow/flow.hpp"

#include <memory>
#include <string>
#include <vector>

namespace mpflow {

// 1/2 int |v|^2 dt + kT - int (alpha(v) + U) dt over the whole trajectory.
double action_along(const MPSystem& sys, const Trajectory& traj);

// The same functional for a magnetic system (U = 0, energy 1/2). The first
// form takes a trajectory of the reduced system itself, the second a reduced
// reparametrization of an MP trajectory, integrated in the arc parameter s.
double magnetic_action_along(const MPSystem& reduced, const Trajectory& traj);
double magnetic_action_along(const MPSystem& reduced, const ReducedCurve& curve);

struct ShootOptions {
    double tol = 1e-9;
    int max_iterations = 50;
    IntegratorOptions integrator;
};

struct ShotResult {
    Vec v;                      // initial velocity in S^k_x
    std::vector<double> params; // direction parameters
    bool converged = false;
    double residual = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    std::string message;
};

// Damped Gauss-Newton on the direction parameters so that the MP-geodesic
// from x exits at y. Does not throw on non-convergence; check `converged`.
ShotResult shoot(const MPSystem& sys, const Vec& x, const Vec& y, const ShootOptions& opts = {});

struct ActionValue {
    double value = std::numeric_limits<double>::quiet_NaN();
    double T = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    double residual = std::numeric_limits<double>::quiet_NaN();
    Vec v0;
    std::shared_ptr<const Trajectory> trajectory;
    std::string message;
};

// Action of the connecting MP-geodesic. Throws ShootingFailure.
ActionValue mane_potential(const MPSystem& sys, const Vec& x, const Vec& y,
                           const ShootOptions& opts = {}, bool keep_trajectory = true);

// Boundary sample parameters: n polar angles in 2D, a Fibonacci set of
// (polar, azimuth) pairs in 3D.
std::vector<std::vector<double>> boundary_samples(const ChartDomain& domain, int n);

struct ActionTable {
    std::vector<std::vector<double>> params;
    std::vector<Vec> points;
    std::vector<std::vector<ActionValue>> entries;  // [i][j]: from point i to point j
    int failures = 0;

    int size() const { return static_cast<int>(points.size()); }
};

// Table over boundary pairs; diagonal excluded (left unconverged with NaN).
// Shooting failures are recorded in the entries.
ActionTable boundary_action_table(const MPSystem& sys, int n, const ShootOptions& opts = {});

struct TableDifference {
    double max_abs = 0.0;
    int compared = 0;
    int skipped = 0;
};
TableDifference compare_tables(const ActionTable& a, const ActionTable& b);

// max |A(x,y) - A(y,x)| over converged pairs.
double table_asymmetry(const ActionTable& t);

// Time-free action of a polygonal curve parametrized at energy k:
// int sqrt(2(k - U)) |d sigma|_g - int alpha(d sigma).
double curve_action(const MPSystem& sys, const std::vector<Vec>& polyline);

}  // namespace mpflow
