#pragma once

#include "mpflow/ode.hpp"
#include "mpflow/systems.hpp"

#include <limits>
#include <memory>
#include <vector>

namespace mpflow {

// The four equivalent descriptions of the MP-flow.
enum class Formulation {
    Lagrangian,          // (x, v), Euler-Lagrange / MP-geodesic equation
    TangentHamiltonian,  // (x, v), Hamiltonian flow of E for the twisted form on TM
    TwistedCotangent,    // (x, xi = v^flat), twisted symplectic form on T*M
    CanonicalCotangent,  // (x, xi = v^flat - alpha), canonical form, Hamiltonian H
};

enum class Representation { Velocity, TwistedMomentum, CanonicalMomentum };

Representation representation_of(Formulation f);
const char* to_string(Formulation f);

struct PhaseState {
    Vec x;
    Vec w;
    Representation rep = Representation::Velocity;
};

PhaseState convert(const MPSystem& sys, const PhaseState& s, Representation target);
Vec velocity_of(const MPSystem& sys, const PhaseState& s);

ode::State pack(const PhaseState& s);
PhaseState unpack(const ode::State& z, int dim, Representation rep);

// Time derivative of the state. Throws RepresentationMismatch if the state's
// tag does not belong to the formulation.
PhaseState rhs(const MPSystem& sys, Formulation f, const PhaseState& s);

// Right-hand side of the H_tilde flow in canonical coordinates.
PhaseState rhs_tilde(const MPSystem& sys, const ScalarField& mu, const PhaseState& s);

struct IntegratorOptions {
    double atol = 1e-10;
    double rtol = 1e-10;
    bool stop_at_exit = true;
    bool check_bbox = true;
    long max_steps = 500000;
};

// 100 * diam(M) / min speed on S^k M.
double default_horizon(const MPSystem& sys);

inline constexpr double kGlancingThreshold = 1e-6;
inline constexpr double kExitTolerance = 1e-12;

struct ExitInfo {
    bool exited = false;
    double tau = std::numeric_limits<double>::quiet_NaN();
    bool glancing = false;
};

class Trajectory {
public:
    int dim = 2;
    Representation rep = Representation::Velocity;
    int columns = 0;  // variational columns carried after the phase state
    ode::DenseSolution solution;
    std::vector<double> energies;  // E(x, v) at every knot
    long rejected_steps = 0;
    ExitInfo exit;

    double t_begin() const { return solution.t_begin(); }
    double t_end() const { return solution.t_end(); }
    const std::vector<double>& knots() const { return solution.times(); }

    ode::State raw_at(double t) const { return solution(t); }
    PhaseState state_at(double t) const;
    Vec position_at(double t) const;
    // Variational column c at time t, as (dx, dw) packed.
    ode::State perturbation_at(double t, int c) const;

    double max_energy_drift(double reference) const;
    double max_energy_drift() const;  // relative to the initial energy
};

// Integrates formulation f from s0 up to t_max (or the boundary exit when
// opts.stop_at_exit). t_max <= 0 selects default_horizon. Throws NoExit when
// stop_at_exit is set and the horizon passes without exit.
Trajectory integrate(const MPSystem& sys, Formulation f, const PhaseState& s0, double t_max = 0.0,
                     const IntegratorOptions& opts = {});

// H_tilde_{mu,k}-flow from a canonical state on {H_tilde = k}.
Trajectory integrate_tilde(const MPSystem& sys, const ScalarField& mu, const PhaseState& s0,
                           double s_max = 0.0, const IntegratorOptions& opts = {});

// Running integral of a scalar along a trajectory, exact on knots up to the
// 8-point Gauss-Legendre rule per step and evaluable between knots.
class RunningIntegral {
public:
    using Integrand = std::function<double(double t, const ode::State& z)>;

    RunningIntegral() = default;
    RunningIntegral(std::shared_ptr<const Trajectory> traj, Integrand f);

    double operator()(double t) const;
    double total() const { return cumulative_.back(); }
    // Solves value(t) = target for t (integrand must be positive).
    double inverse(double target) const;
    const std::vector<double>& cumulative() const { return cumulative_; }

private:
    double partial(std::size_t step, double t) const;

    std::shared_ptr<const Trajectory> traj_;
    Integrand f_;
    std::vector<double> cumulative_;
};

// beta(s) with beta' = mu(x_tilde(s)), beta(0) = 0, along an H_tilde trajectory.
RunningIntegral time_change(std::shared_ptr<const Trajectory> tilde, const ScalarField& mu);

// First t > t_begin with rho(x(t)) = 0. Throws NoExit.
double exit_time(const MPSystem& sys, const Trajectory& traj);

struct ScatteringRecord {
    Vec entry_x;
    Vec entry_v;
    Vec exit_x;
    Vec exit_v;
    double tau = 0.0;
    double action = 0.0;
    bool glancing = false;
};

// Inbound direction u at boundary point p, lifted to S^k M.
ScatteringRecord scattering(const MPSystem& sys, const Vec& p, const Vec& u,
                            const IntegratorOptions& opts = {});

// Augmented integration of the linearized Lagrangian flow. Each delta is a
// packed (dx, dv) perturbation; the directional derivative of the vector
// field is taken by central differences.
inline constexpr double kVariationalStep = 1e-6;

Trajectory integrate_variational(const MPSystem& sys, const PhaseState& s0,
                                 const std::vector<ode::State>& deltas, double t_max = 0.0,
                                 const IntegratorOptions& opts = {});

// Transports delta0 along the span of an existing Lagrangian trajectory.
Trajectory variational_flow(const MPSystem& sys, const Trajectory& traj, const ode::State& delta0);

// Minimum over knots of det(dx/dt, dx/dtheta_1, ...) normalized by
// t^(n-1) |v|^n for rays from (x, v); positive means no conjugate point
// before exit.
double conjugate_monitor(const MPSystem& sys, const Vec& x, const Vec& v,
                         const IntegratorOptions& opts = {});

// Derivatives of the lifted direction with respect to the shooting angles.
// angles: 1 (2D) or 2 (3D) parameters measured from the inward Euclidean normal.
Vec direction_from_angles(const ChartDomain& domain, const Vec& x, std::span<const double> angles);

// gamma(s) = sigma(t(s)) with s(t) = int_0^t 2(k - U(sigma)) dt.
class ReducedCurve {
public:
    ReducedCurve(const MPSystem& sys, std::shared_ptr<const Trajectory> traj);

    double s_end() const { return s_of_t_.total(); }
    std::vector<double> knots() const;
    double s_of(double t) const { return s_of_t_(t); }
    double t_of(double s) const { return s_of_t_.inverse(s); }
    Vec position(double s) const;
    Vec tangent(double s) const;

private:
    MPSystem sys_;
    std::shared_ptr<const Trajectory> traj_;
    RunningIntegral s_of_t_;
};

ReducedCurve reparametrize_to_reduced(const MPSystem& sys, const Trajectory& traj);

// Sup over [0, tau] of the distance between the base curves of the four
// formulations started from the same velocity state.
struct FormulationComparison {
    double tau = 0.0;
    double max_deviation = 0.0;
    double deviation[4] = {0, 0, 0, 0};
};
FormulationComparison compare_formulations(const MPSystem& sys, const PhaseState& s0,
                                           int samples = 200, const IntegratorOptions& opts = {});

}  // namespace mpflow
