#pragma once

#include "mpflow/action.hpp"

#include <memory>
#include <string>
#include <vector>

namespace mpflow {

// A diffeomorphism of M fixing the boundary pointwise.
class Diffeomorphism {
public:
    virtual ~Diffeomorphism() = default;
    virtual int dim() const = 0;
    virtual Vec map(const Vec& x) const = 0;
    // J(i,j) = d f^i / d x^j.
    virtual Mat jacobian(const Vec& x) const = 0;
    virtual void evaluate(const Vec& x, Vec& fx, Mat& J) const {
        fx = map(x);
        J = jacobian(x);
    }
    virtual std::shared_ptr<const Diffeomorphism> inverse() const = 0;
    virtual bool is_identity() const { return false; }
};

using DiffeoPtr = std::shared_ptr<const Diffeomorphism>;

DiffeoPtr identity_map(int dim);

// Time-1 flow of X = omega rho^p R for a rotation-invariant rho = R^2 - |x|^2,
// with R the rotation generator in the (x, y) plane. Closed form:
// f(x) = Rot(omega rho(x)^p) x. p >= 2 makes df = id on the boundary.
DiffeoPtr swirl_map(const ChartDomain& domain, double omega, int p);

// Time-1 flow of X = rho^p (A x + b), integrated by fixed-step Dormand-Prince
// together with its variational equation, so the Jacobian is that of the
// discrete map. The inverse integrates -X.
DiffeoPtr generator_flow(const ChartDomain& domain, Mat A, Vec b, int p, int steps = 64);

// f1 o f2.
DiffeoPtr compose_maps(DiffeoPtr f1, DiffeoPtr f2);

struct GaugeTransform {
    int dim = 2;
    double k = 0.5;
    DiffeoPtr f;
    ScalarField phi;  // vanishes on the boundary
    ScalarField mu;   // positive
    std::string label;
};

GaugeTransform identity_gauge(int dim, double k);

// (g, alpha, U) -> (f*g / mu, f*alpha + d phi, mu (U o f - k) + k).
// Throws EnergyLevelMismatch when G.k != sys.k.
MPSystem apply(const GaugeTransform& G, const MPSystem& sys);

// apply(compose(G1, G2), s) == apply(G2, apply(G1, s)).
GaugeTransform compose(const GaugeTransform& G1, const GaugeTransform& G2);
GaugeTransform inverse(const GaugeTransform& G);

struct GaugeValidation {
    double boundary_displacement = 0.0;  // max |f(x) - x| on the boundary
    double boundary_phi = 0.0;           // max |phi| on the boundary
    double min_mu = 0.0;
    bool ok = false;
};
GaugeValidation validate_gauge(const GaugeTransform& G, const ChartDomain& domain, int samples = 64);

// Maxima of |g' - f*g/mu|, |alpha' - f*alpha - d phi|, |U' - mu(U o f - k) - k|.
struct RelationResiduals {
    double metric = 0.0;
    double one_form = 0.0;
    double potential = 0.0;
    double max() const { return std::max({metric, one_form, potential}); }
};
RelationResiduals relation_residuals(const MPSystem& sys1, const MPSystem& sys2,
                                     const GaugeTransform& G, const std::vector<Vec>& points);

// Largest tensor difference of two systems over the points.
RelationResiduals system_difference(const MPSystem& a, const MPSystem& b,
                                    const std::vector<Vec>& points);

// The elliptic factor relating two systems whose reductions are magnetically
// gauge related through (f, phi): mu = (k - U') / (k - U o f).
struct Correspondence {
    ScalarField mu;
    RelationResiduals residuals;
    bool certified = false;
};
inline constexpr double kRelationTolerance = 1e-8;
Correspondence reduction_correspondence(const MPSystem& sys, const MPSystem& sys2, DiffeoPtr f,
                                        ScalarField phi, const std::vector<Vec>& points);

struct CounterexampleParams {
    double c1 = 0.25;   // phi = 3/2 - c1 (1 - |x|^2), 0 < c1 <= 1/2
    double c2 = 0.125;  // psi = 3/4 + c2 (1 - |x|^2), 0 < c2 <= 1/4
};

struct CounterexamplePair {
    MPSystem sys1;  // (g / (2(3 - phi)), alpha, phi)
    MPSystem sys2;  // (g / (2(3 - 2 psi)), alpha, 2 psi)
    GaugeTransform gauge;
    ScalarField phi;
    ScalarField psi;
};

// Base fields live on the closed unit disk (or ball); k = 3.
CounterexamplePair counterexample_pair(const ScenarioFields& base, const CounterexampleParams& p = {});

struct EquivalenceOptions {
    std::vector<Vec> points;   // interior samples for the tensor relations
    int boundary_samples = 64; // for the boundary restrictions
    int table_size = 16;       // 0 skips the action tables
    int rays = 20;             // 0 skips scattering
    ShootOptions shoot;
};

struct EquivalenceReport {
    RelationResiduals relations;
    double boundary_metric = 0.0;
    double boundary_potential = 0.0;
    double boundary_one_form = 0.0;  // tangential part
    TableDifference table;
    int table_failures = 0;
    double scattering_point = 0.0;
    double scattering_velocity = 0.0;
    double scattering_action = 0.0;
    int rays_compared = 0;
    int rays_skipped = 0;

    double scattering_max() const {
        return std::max({scattering_point, scattering_velocity, scattering_action});
    }
};

EquivalenceReport verify_equivalence(const MPSystem& sys1, const MPSystem& sys2,
                                     const GaugeTransform& G, const EquivalenceOptions& opts);

// A fan of inbound rays: boundary parameters and inward angles.
struct Ray {
    Vec p;
    Vec u;
};
std::vector<Ray> ray_fan(const ChartDomain& domain, int count);

}  // namespace mpflow
