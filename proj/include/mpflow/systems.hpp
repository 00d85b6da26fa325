#pragma once

#include "mpflow/geometry.hpp"

#include <optional>
#include <string>

namespace mpflow {

// An MP-system (g, alpha, U) on a chart domain at the fixed energy level k.
struct MPSystem {
    ChartDomain domain;
    ScenarioFields fields;
    double k = 0.5;
    std::string label;

    int dim() const { return domain.dim; }
};

inline constexpr double kPotentialMargin = 1e-6;

// Max of U over grid^dim points of bbox ∩ M.
double estimate_max_potential(const ChartDomain& domain, const ScenarioFields& fields,
                              int grid = 201);

// Checks the standing assumption k > max U (+ margin); throws BelowPotential.
MPSystem make_system(ChartDomain domain, ScenarioFields fields, double k, std::string label = {},
                     int grid = 201);

double energy(const MPSystem& sys, const Vec& x, const Vec& v);

enum class HamiltonianKind { H, HTilde, HHat, HReduced };

struct HamiltonianChoice {
    HamiltonianKind kind = HamiltonianKind::H;
    std::optional<ScalarField> mu;  // elliptic factor, required for HTilde
};

double hamiltonian(const MPSystem& sys, const HamiltonianChoice& choice, const Vec& x, const Vec& xi);

// xi = v^flat - alpha and its inverse.
Vec legendre(const MPSystem& sys, const Vec& x, const Vec& v);
Vec legendre_inv(const MPSystem& sys, const Vec& x, const Vec& xi);

// The reduced magnetic system (2(k-U) g, alpha, 0) at energy 1/2.
MPSystem reduce(const MPSystem& sys);

// The companion (g/mu, alpha, mu(U-k)+k) at the same k.
MPSystem elliptic_companion(const MPSystem& sys, const ScalarField& mu);

// v = sqrt(2(k-U)) u / |u|_g. Throws BelowPotential when k <= U(x).
Vec sphere_lift(const MPSystem& sys, const Vec& x, const Vec& u);

// Lambda(x,v) - <Y v, nu>_g + dU(nu) at a boundary point.
double mp_convexity_margin(const MPSystem& sys, const Vec& x, const Vec& v);

// Elliptic factors used by the Hamiltonian family.
ScalarField hat_factor(const MPSystem& sys);       // k / (k - U)
ScalarField reduced_factor(const MPSystem& sys);   // 1 / (2 (k - U))

// Minimum of mu over grid^dim points of M; mu must be positive for HTilde.
double sampled_minimum(const ChartDomain& domain, const ScalarField& mu, int grid = 41);

}  // namespace mpflow
