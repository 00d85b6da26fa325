#pragma once

#include "mpflow/gauge.hpp"
#include "mpflow/random.hpp"

#include <map>
#include <string>
#include <vector>

namespace mpflow {

using Params = std::map<std::string, double>;

struct CatalogEntry {
    std::string key;
    std::string description;
    Params defaults;
};

// Scenarios on rho = R^2 - |x|^2 (the dented disk perturbs rho). Fields:
//   g = exp(2 lambda) delta, lambda = lambda0 + a (1 - |x|^2 / R^2)
//   alpha = (B/2)(-y dx + x dy)
//   U = u0 (1 - |x|^2 / R^2)  (profile 0) or u0 exp(-|x|^2 / w^2)  (profile 1)
const std::vector<CatalogEntry>& scenario_catalog();
const std::vector<CatalogEntry>& gauge_catalog();

// Throws Config on an unknown key or parameter; BelowPotential when k is too low.
MPSystem make_scenario(const std::string& key, const Params& overrides = {},
                       DerivativeMode mode = DerivativeMode::FiniteDifference);

// Both systems of the counterexample family with the catalog parameters
// (dim, c1, c2, a, B; variant is ignored).
CounterexamplePair counterexample_from(const Params& overrides = {},
                                       DerivativeMode mode = DerivativeMode::Analytic);

// The conformal / constant-field / radial-potential field family with
// closed-form derivatives.
ScenarioFields radial_fields(int dim, double R, const Params& p, DerivativeMode mode);

// rho = 1 - |x|^2 - depth exp(-|x - (1, 0)|^2 / width^2).
ChartDomain dented_disk(int dim, double depth, double width);

// Gauges for a system. "boundary-compatible" combines a p = 2 swirl, a
// boundary-vanishing phi and mu = exp(m rho), so g, U and i*alpha are
// unchanged on the boundary.
GaugeTransform make_gauge(const std::string& key, const MPSystem& sys, const Params& overrides = {});

// Random generator-flow gauge (p = 1 or 2) with small coefficients.
GaugeTransform random_gauge(const MPSystem& sys, SplitMix64& rng);

// Keys of the scenarios that are expected to be simple.
std::vector<std::string> simple_scenarios();

}  // namespace mpflow
